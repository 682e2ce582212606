# %% [markdown]
# # Writing a protocol
#
# A protocol reacts to callbacks and acts only through its provider. Here a
# beacon broadcasts every two seconds and a listener counts what it hears
# over a lossy radio with a 50 m range.

# %%
from fleetsim import Broadcast, MediumConfig, Protocol, Simulation


class Beacon(Protocol):
    def on_initialize(self):
        self.provider.schedule_timer("beep", self.provider.current_time() + 2.0)

    def on_timer_fired(self, tag):
        self.provider.send_command(Broadcast(b"beep"))
        self.provider.schedule_timer("beep", self.provider.current_time() + 2.0)

    def on_message_received(self, payload):
        pass

    def on_telemetry(self, telemetry):
        pass

    def on_finish(self):
        pass


class Listener(Beacon):
    def on_initialize(self):
        self.heard = 0

    def on_message_received(self, payload):
        self.heard += 1
        self.provider.record_tracked_variable("heard", self.heard)


# %%
sim = Simulation(seed=1, medium=MediumConfig(range=50.0, drop_probability=0.25))
sim.add_node(Beacon(), (0, 0, 0))
near, far = Listener(), Listener()
sim.add_node(near, (30, 0, 0))
sim.add_node(far, (80, 0, 0))
sim.run(200)
print(f"near listener heard {near.heard} of 100 beeps (about 75 expected)")
print(f"far listener heard {far.heard}, it is out of range")
print("tracked:", sim.nodes[1].record.tracked)
