"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The long 3600 s preset runs are shared between the conservation, growth,
timeout-spacing and wall-clock criteria through a module fixture.
"""

import csv
import io
import math
import statistics
import subprocess
import sys
import time
from contextlib import contextmanager
from dataclasses import replace

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetsim.engine import NS_PER_SECOND, Engine, to_ns
from fleetsim.harness.config import ScenarioConfig
from fleetsim.harness.experiment import run_experiment, run_single, write_run_csv
from fleetsim.harness.telemetry import FRAME_SCHEMA, TelemetryServer
from fleetsim.medium import Medium, MediumConfig, Transmission
from fleetsim.mobility import position_at
from fleetsim.protocol import Position
from fleetsim import zigzag

import zigzag_mock_suite
from oracles import max_trajectory_error, random_schedule
from test_telemetry import Collector

pytestmark = pytest.mark.slow

SEEDS = 10
FULL = 3600.0


@pytest.fixture
def criterion(capsys):
    """Context manager factory printing one PASS/FAIL line past pytest's capture."""

    @contextmanager
    def report(number, title):
        try:
            yield
        except BaseException as exc:
            first = str(exc).splitlines()[0] if str(exc) else ""
            with capsys.disabled():
                print(f"\nCRITERION {number:>2} FAIL  {title}: {type(exc).__name__}: {first}")
            raise
        with capsys.disabled():
            print(f"\nCRITERION {number:>2} PASS  {title}")

    return report


@pytest.fixture(scope="module")
def preset_runs():
    """All three presets, ten seeds each, full hour of simulated time."""
    return {
        name: run_experiment(ScenarioConfig.preset(name, runs=SEEDS, seed=0, duration=FULL))
        for name in ("small", "medium", "large")
    }


def strip_wall(text):
    rows = list(csv.reader(io.StringIO(text)))
    idx = rows[0].index("wall_time")
    return [r[:idx] + r[idx + 1:] for r in rows]


def test_criterion_01_determinism(tmp_path, criterion):
    with criterion(1, "determinism of run --preset small --runs 2 --seed 7"):
        started = time.perf_counter()
        outputs = []
        for label in ("a", "b"):
            out = tmp_path / label
            proc = subprocess.run(
                [sys.executable, "-m", "fleetsim", "run", "--preset", "small",
                 "--runs", "2", "--seed", "7", "--out", str(out)],
                capture_output=True, text=True, timeout=120,
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(out)
        elapsed = time.perf_counter() - started
        for name in ("run_0.csv", "run_1.csv"):
            a = strip_wall((outputs[0] / name).read_text())
            b = strip_wall((outputs[1] / name).read_text())
            assert len(a) == 3602 and a == b
        assert elapsed < 60, f"took {elapsed:.1f}s"


@settings(max_examples=100, deadline=None, derandomize=True)
@given(st.integers(0, 2**32 - 1))
def check_scheduler_order(seed):
    eng, expected = random_schedule(seed, 10_000)
    eng.run_until(1_000)
    assert [p for *_, p in eng.trace] == expected


def test_criterion_02_scheduler_oracle(criterion):
    with criterion(2, "10,000-event scheduler order matches sorted oracle, 100 seeds"):
        check_scheduler_order()


def test_criterion_03_kinematics(criterion):
    with criterion(3, "closed-form kinematics vs 1 ms integration, 1000 trajectories"):
        worst = max(max_trajectory_error(seed) for seed in range(1000))
        assert worst < 1e-6, f"max deviation {worst:.3e} m"


def test_criterion_04_conservation(preset_runs, criterion):
    with criterion(4, "data conservation at every tick, 3 presets x 10 seeds x 3600 s"):
        for name, result in preset_runs.items():
            assert len(result.runs) == SEEDS
            for series in result.runs:
                assert len(series.samples) == int(FULL) + 1
                assert series.conservation_violations == 0, (name, series.seed)


def test_criterion_05_collection_grows(preset_runs, criterion):
    with criterion(5, "averaged gs_collected nondecreasing and positive, every preset"):
        for name, result in preset_runs.items():
            curve = [s.gs_collected for s in result.average]
            assert all(b >= a for a, b in zip(curve, curve[1:])), name
            assert curve[-1] > 0, name


def collision_finals(offset_mode):
    cfg = ScenarioConfig.preset("small", duration=600.0, runs=SEEDS, seed=0)
    cfg = replace(cfg, medium=replace(cfg.medium, collision_model=True),
                  zigzag=replace(cfg.zigzag, offset_mode=zigzag.OffsetMode(offset_mode)))
    return [s.final_collected for s in run_experiment(cfg).runs]


def test_criterion_06_collision_failure(criterion):
    with criterion(6, "synchronised heartbeats collide; random offsets recover"):
        zero = collision_finals("zero")
        rand = collision_finals("random")
        assert zero == [0] * SEEDS, zero
        assert all(c > 0 for c in rand), rand


def min_pair_gap(series):
    """Smallest spacing between repeat pairings of the same two nodes, on the engine's ns clock."""
    gaps = [math.inf]
    for nid, pairings in series.pairings.items():
        by_peer = {}
        for t, peer in pairings:
            by_peer.setdefault(peer, []).append(to_ns(t))
        for times in by_peer.values():
            gaps.extend((b - a) / NS_PER_SECOND for a, b in zip(times, times[1:]))
    return min(gaps)


def test_criterion_07_interaction_timeout(preset_runs, criterion):
    with criterion(7, "pairings spaced >= 5 s with the timeout, loop without it"):
        for name, result in preset_runs.items():
            for series in result.runs:
                assert min_pair_gap(series) >= 5.0, (name, series.seed)
        cfg = ScenarioConfig.preset("small", duration=600.0, runs=3)
        cfg = replace(cfg, zigzag=replace(cfg.zigzag, interaction_timeout=0.0))
        loops = [min_pair_gap(s) for s in run_experiment(cfg).runs]
        assert any(g < 5.0 for g in loops), loops


def test_criterion_08_drop_rate(criterion):
    with criterion(8, "drop_probability 0.3 delivers 70% +/- 2%"):
        pos = {0: Position(0, 0), 1: Position(10, 0)}
        rates = []
        for seed in range(SEEDS):
            eng = Engine(seed=seed)
            got = []
            medium = Medium(eng, MediumConfig(drop_probability=0.3), lambda r, p: got.append(r))
            medium.register(0)
            medium.register(1)
            for _ in range(10_000):
                medium.transmit(Transmission(0, b"x", 1, 0.0), pos)
            eng.run_until(1)
            rates.append(len(got) / 10_000)
        mean = statistics.mean(rates)
        assert abs(mean - 0.70) <= 0.02, mean


def test_criterion_09_wall_clock(preset_runs, criterion):
    with criterion(9, "wall_time column monotone and total wall-clock reported"):
        for result in preset_runs.values():
            for series in result.runs:
                w = series.wall_times()
                assert (w[1:] >= w[:-1]).all()
        proc = subprocess.run(
            [sys.executable, "-m", "fleetsim", "run", "--duration", "60"],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0
        assert "wall_clock=" in proc.stdout


def test_criterion_10_environment_agnostic(preset_runs, criterion):
    with criterion(10, "same protocol classes pass the mock suite and the full engine"):
        for check in zigzag_mock_suite.SUITE:
            check()
        assert zigzag_mock_suite.ZigZagUAV is zigzag.ZigZagUAV
        assert zigzag_mock_suite.ZigZagGroundStation is zigzag.ZigZagGroundStation
        assert zigzag_mock_suite.ZigZagSensor is zigzag.ZigZagSensor
        from fleetsim.harness.scenario import build_scenario

        sc = build_scenario(ScenarioConfig.preset("small"))
        assert type(sc.ground_station) is zigzag.ZigZagGroundStation
        assert {type(u) for u in sc.uavs.values()} == {zigzag.ZigZagUAV}
        small = preset_runs["small"]
        assert all(s.final_collected > 0 and s.conservation_violations == 0 for s in small.runs)


def test_criterion_11_telemetry(preset_runs, tmp_path, criterion):
    with criterion(11, "live client frames schema-valid, exact positions, CSV unchanged"):
        cfg = ScenarioConfig.preset("small", runs=SEEDS, seed=0, duration=FULL)
        expected = {}

        def snapshot(scenario, t):
            states = scenario.simulation.mobility.states
            expected[t] = {nid: position_at(s, t) for nid, s in states.items()}

        with TelemetryServer(port=0) as server:
            client = Collector(server.port)
            assert server.wait_for_clients(1)
            live = run_single(cfg, 0, frame_sinks=[server.publish], observers=[snapshot])
            server.drain(timeout=30)
        client.join()
        assert len(client.frames) == int(FULL) + 1
        for frame in client.frames:
            jsonschema.validate(frame, FRAME_SCHEMA)
            want = expected[frame["simulation_time"]]
            for node in frame["nodes"]:
                assert math.dist(node["position"], want[node["id"]]) <= 1e-9
        write_run_csv(live, tmp_path / "live.csv")
        write_run_csv(preset_runs["small"].runs[0], tmp_path / "quiet.csv")
        assert strip_wall((tmp_path / "live.csv").read_text()) == strip_wall(
            (tmp_path / "quiet.csv").read_text()
        )
