"""Scripted checks of the ZigZag protocol classes under the mock environment.

Each ``check_*`` function builds its own :class:`MockEnvironment`, drives it
by hand and asserts on the outcome.  The same functions are collected by
``test_zigzag.py`` and by the acceptance suite.
"""

import math

from fleetsim.mock import MockEnvironment
from fleetsim.plugins import Direction
from fleetsim.protocol import Broadcast, Send
from fleetsim.zigzag import (
    MessageKind,
    OffsetMode,
    Role,
    ZigZagGroundStation,
    ZigZagMessage,
    ZigZagParams,
    ZigZagSensor,
    ZigZagUAV,
)

ZERO = ZigZagParams(offset_mode=OffsetMode.ZERO)
MISSION = [(0, 0, 0), (100, 0, 0), (200, 0, 0), (300, 0, 0)]


def msg(kind, sender, role=Role.UAV, count=0, progress=0.0):
    return ZigZagMessage(kind, sender, role, count, progress).encode()


def sensor_data(env, uav, n):
    for _ in range(n):
        env.deliver(uav, msg(MessageKind.SENSOR_DATA, 99, Role.SENSOR, 1))


def fly_to_progress(env, uav, progress):
    """Report positions so the UAV's mission reaches ``progress`` (forward, along MISSION)."""
    whole = int(progress)
    for i in range(whole + 1):
        env.telemetry(uav, MISSION[i])
    env.telemetry(uav, (100 * progress, 0, 0))


def sent(env, nid, kind=None):
    out = []
    for cmd in env.sent_by(nid):
        if isinstance(cmd, (Send, Broadcast)):
            m = ZigZagMessage.decode(cmd.payload)
            if kind is None or m.kind is kind:
                out.append((getattr(cmd, "target", None), m))
    return out


def uav_env(n=1, params=ZERO, seed=0):
    env = MockEnvironment(seed=seed)
    uavs = [ZigZagUAV(MISSION, params) for _ in range(n)]
    for u in uavs:
        env.add(u)
    env.initialize()
    return env, uavs


# -- sensors ------------------------------------------------------------------


def check_sensor_replies_to_uav_heartbeat():
    env = MockEnvironment()
    s = ZigZagSensor()
    env.add(s)
    env.initialize()
    env.deliver(0, msg(MessageKind.HEARTBEAT, 4))
    env.deliver(0, msg(MessageKind.HEARTBEAT, 2, Role.GROUND_STATION))
    env.deliver(0, msg(MessageKind.HEARTBEAT, 5))
    replies = sent(env, 0)
    assert [t for t, _ in replies] == [4, 5]
    assert all(m.kind is MessageKind.SENSOR_DATA and m.data_count == 1 for _, m in replies)
    assert s.responses == 2 and env.tracked[0]["responses"] == 2


# -- counting -----------------------------------------------------------------


def check_uav_counts_sensor_data():
    env, (u,) = uav_env()
    sensor_data(env, 0, 1)
    assert u.data_count == 1
    sensor_data(env, 0, 4)
    assert u.data_count == 5 and env.tracked[0]["data_count"] == 5


def check_sensor_data_counted_during_gate():
    env, (u,) = uav_env()
    env.deliver(0, msg(MessageKind.PAIR_REQUEST, 7, count=0, progress=3.0))
    assert u.ignore_until == 5.0
    sensor_data(env, 0, 3)
    assert u.data_count == 3


# -- handshake ----------------------------------------------------------------


def check_handshake_moves_data_to_homeward_uav():
    env, (a, b) = uav_env(2)
    fly_to_progress(env, 0, 2.4)
    fly_to_progress(env, 1, 2.6)
    sensor_data(env, 0, 3)
    sensor_data(env, 1, 5)
    env.clear()
    env.advance(0)  # both heartbeats fire together
    env.route()
    assert (a.data_count, a.mission.direction) == (8, Direction.REVERSE)
    assert (b.data_count, b.mission.direction) == (0, Direction.FORWARD)
    assert a.ignore_until == b.ignore_until == 5.0
    assert a.awaiting is None and b.awaiting is None
    assert a.pairings == [(0.0, 1)] and b.pairings == [(0.0, 0)]


def check_handshake_message_sequence():
    env, (u,) = uav_env()
    sensor_data(env, 0, 2)
    env.deliver(0, msg(MessageKind.HEARTBEAT, 3))
    ((target, req),) = sent(env, 0, MessageKind.PAIR_REQUEST)
    assert target == 3 and req.data_count == 2 and u.awaiting == 3
    env.deliver(0, msg(MessageKind.PAIR_CONFIRM, 3, count=4, progress=9.0))
    assert u.data_count == 6 and u.mission.direction is Direction.REVERSE
    assert u.awaiting is None


def check_request_from_other_peer_dropped_while_awaiting():
    env, (u,) = uav_env()
    env.deliver(0, msg(MessageKind.HEARTBEAT, 3))
    env.deliver(0, msg(MessageKind.PAIR_REQUEST, 4, count=7))
    assert sent(env, 0, MessageKind.PAIR_CONFIRM) == []
    assert u.data_count == 0 and u.awaiting == 3


def check_lost_confirm_times_out_without_change():
    env, (u,) = uav_env()
    sensor_data(env, 0, 4)
    fly_to_progress(env, 0, 1.5)
    before = (u.data_count, u.mission.direction, u.ignore_until, list(u.pairings))
    env.deliver(0, msg(MessageKind.HEARTBEAT, 3))
    assert u.awaiting == 3
    env.advance(0.999)
    assert u.awaiting == 3
    env.advance(1.0)
    assert u.awaiting is None
    assert (u.data_count, u.mission.direction, u.ignore_until, list(u.pairings)) == before
    # a confirm arriving after the deadline is stale
    env.deliver(0, msg(MessageKind.PAIR_CONFIRM, 3, count=9))
    assert u.data_count == 4


def check_lost_confirm_between_two_uavs():
    env, (a, b) = uav_env(2)
    sensor_data(env, 0, 2)
    sensor_data(env, 1, 3)
    env.drop = lambda s, r, p: ZigZagMessage.decode(p).kind is MessageKind.PAIR_CONFIRM
    env.deliver(1, msg(MessageKind.HEARTBEAT, 0, count=2))  # b hears a
    env.route()
    assert b.awaiting == 0 and len(a.pairings) == 1
    env.advance(0)
    env.outbox.clear()
    env.advance(1.0)
    assert b.awaiting is None
    assert b.data_count == 3 and b.pairings == []
    assert b.mission.direction is Direction.FORWARD


def check_zero_counts_still_flip_directions():
    env, (a, b) = uav_env(2)
    env.advance(0)
    env.route()
    assert {a.mission.direction, b.mission.direction} == {Direction.FORWARD, Direction.REVERSE}
    assert a.data_count == b.data_count == 0


def check_equal_progress_lower_id_goes_home():
    env, (a, b) = uav_env(2)
    fly_to_progress(env, 0, 1.5)
    fly_to_progress(env, 1, 1.5)
    sensor_data(env, 1, 6)
    env.advance(0)
    env.route()
    assert (a.data_count, a.mission.direction) == (6, Direction.REVERSE)
    assert (b.data_count, b.mission.direction) == (0, Direction.FORWARD)


# -- timeout gate -------------------------------------------------------------


def _paired_at(env, t):
    env.advance(t)
    env.deliver(0, msg(MessageKind.PAIR_REQUEST, 7, count=1))
    env.outbox.clear()


def check_gate_ignores_request_just_before_deadline():
    env, (u,) = uav_env()
    _paired_at(env, 10.0)
    assert u.ignore_until == 15.0
    env.advance(14.9)
    n = len(sent(env, 0, MessageKind.PAIR_CONFIRM))
    env.deliver(0, msg(MessageKind.PAIR_REQUEST, 8, count=2))
    assert len(sent(env, 0, MessageKind.PAIR_CONFIRM)) == n
    assert u.data_count == 1


def check_gate_handles_request_just_after_deadline():
    env, (u,) = uav_env()
    _paired_at(env, 10.0)
    env.advance(15.1)
    n = len(sent(env, 0, MessageKind.PAIR_CONFIRM))
    env.deliver(0, msg(MessageKind.PAIR_REQUEST, 8, count=2))
    assert len(sent(env, 0, MessageKind.PAIR_CONFIRM)) == n + 1
    assert u.ignore_until == 20.1


def check_gate_ignores_heartbeats_and_confirms():
    env, (u,) = uav_env()
    _paired_at(env, 1.0)
    env.deliver(0, msg(MessageKind.HEARTBEAT, 8))
    env.deliver(0, msg(MessageKind.HEARTBEAT, 9, Role.GROUND_STATION, 0, -math.inf))
    assert sent(env, 0, MessageKind.PAIR_REQUEST) == [] and u.awaiting is None


def check_without_gate_uavs_pair_again_immediately():
    params = ZigZagParams(offset_mode=OffsetMode.ZERO, interaction_timeout=0.0)
    env, (a, b) = uav_env(2, params)
    env.advance(0)
    env.route()
    env.advance(1.0)
    env.route()
    assert [t for t, _ in a.pairings] == [0.0, 1.0]


def check_heartbeats_continue_during_gate():
    env, (u,) = uav_env()
    _paired_at(env, 0.5)
    env.advance(3.5)
    beats = [s.time for s in env.log if s.sender == 0 and isinstance(s.command, Broadcast)]
    assert beats == [0.0, 1.0, 2.0, 3.0]


# -- ground station -----------------------------------------------------------


def gs_env(n_uavs=1):
    env = MockEnvironment()
    gs = ZigZagGroundStation(ZERO)
    env.add(gs)
    uavs = [ZigZagUAV(MISSION, ZERO) for _ in range(n_uavs)]
    for u in uavs:
        env.add(u)
    env.initialize()
    return env, gs, uavs


def check_ground_station_accumulates():
    env, gs, (u,) = gs_env()
    env.deliver(0, msg(MessageKind.PAIR_REQUEST, 5, count=10))
    assert gs.collected == 10
    env.outbox.clear()  # confirm addressed to the scripted UAV 5
    sensor_data(env, 1, 8)
    env.deliver(1, msg(MessageKind.HEARTBEAT, 0, Role.GROUND_STATION, 0, -math.inf))
    env.route()
    assert gs.collected == 18 and env.tracked[0]["collected"] == 18
    assert u.data_count == 0 and u.mission.direction is Direction.FORWARD
    assert u.ignore_until == 5.0


def check_ground_station_heartbeat_handshake():
    env, gs, (u,) = gs_env()
    sensor_data(env, 1, 8)
    env.deliver(0, msg(MessageKind.HEARTBEAT, 1, count=8))  # GS hears the UAV
    env.route()
    assert gs.collected == 8 and u.data_count == 0
    assert u.mission.direction is Direction.FORWARD


def check_ground_station_zero_count_uav():
    env, gs, (u,) = gs_env()
    fly_to_progress(env, 1, 2.0)
    env._call(1, u.mission.reverse)
    env.deliver(1, msg(MessageKind.HEARTBEAT, 0, Role.GROUND_STATION, 0, -math.inf))
    env.route()
    assert gs.collected == 0 and u.mission.direction is Direction.FORWARD


def check_two_uavs_at_ground_station():
    env, gs, (a, b) = gs_env(2)
    sensor_data(env, 1, 4)
    sensor_data(env, 2, 6)
    hb = msg(MessageKind.HEARTBEAT, 0, Role.GROUND_STATION, 0, -math.inf)
    env.deliver(1, hb)
    env.deliver(2, hb)
    env.route()
    assert gs.collected == 10
    assert a.data_count == b.data_count == 0
    assert [p for _, p in gs.pairings] == [1, 2]


# -- heartbeat offsets --------------------------------------------------------


def _beat_times(env, nid):
    return [s.time for s in env.log if s.sender == nid and isinstance(s.command, Broadcast)]


def check_zero_offsets_are_synchronised():
    env, _ = uav_env(2)
    env.advance(3.5)
    assert _beat_times(env, 0) == _beat_times(env, 1) == [0.0, 1.0, 2.0, 3.0]


def check_random_offsets_reproducible():
    params = ZigZagParams(offset_mode=OffsetMode.RANDOM)
    _, first = uav_env(3, params, seed=11)
    _, again = uav_env(3, params, seed=11)
    offsets = [u.heartbeat_offset for u in first]
    assert offsets == [u.heartbeat_offset for u in again]
    assert all(0 <= o < 1 for o in offsets) and len(set(offsets)) == 3


SUITE = [obj for name, obj in sorted(globals().items()) if name.startswith("check_")]
