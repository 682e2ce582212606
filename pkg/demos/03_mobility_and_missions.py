# %% [markdown]
# # Mobility and mission helpers
#
# Nodes fly in straight lines at constant speed. Positions come from a
# closed form, so any instant can be evaluated without stepping.

# %%
import numpy as np

from fleetsim import GotoCoords, MotionState, Position, SetSpeed, apply_command, position_at

state = MotionState(Position(0, 0, 0), 0.0, Position(100, 0, 0), speed=10.0)
print("t=5:", position_at(state, 5.0))
state = apply_command(state, SetSpeed(20.0), at=5.0)
print("after doubling speed at t=5, t=7:", position_at(state, 7.0))
state = apply_command(state, GotoCoords(Position(90, 40, 0)), at=7.0)
track = np.array([position_at(state, t) for t in np.linspace(7, 10, 7)])
print(track.round(2))

# %% [markdown]
# The mission helper flies a waypoint list back and forth. It runs inside a
# protocol and learns the node's position from telemetry.

# %%
from fleetsim import Protocol, Simulation
from fleetsim.plugins import LoopPolicy, MissionMobility


class Patrol(Protocol):
    def on_initialize(self):
        self.mission = MissionMobility(self.provider, LoopPolicy.REVERSE_AT_ENDS)
        self.mission.start([(0, 0, 0), (50, 0, 0), (50, 50, 0)])

    def on_telemetry(self, telemetry):
        self.mission.on_telemetry(telemetry)

    def on_message_received(self, payload):
        pass

    def on_timer_fired(self, tag):
        pass

    def on_finish(self):
        pass


sim = Simulation(telemetry_interval=0.5)
patrol = Patrol()
sim.add_node(patrol, (0, 0, 0))
sim.run(60)
print("waypoints reached in order:", patrol.mission.visited)
print("position at t=60:", sim.position(0))
