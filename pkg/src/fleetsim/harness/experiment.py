"""Running scenarios, sampling metrics and writing CSV output."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..engine import to_ns
from ..protocol import NodeId
from .config import ScenarioConfig
from .scenario import Scenario, build_scenario
from .telemetry import build_frame

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("run", "seed", "sim_time", "gs_collected", "wall_time")
AVERAGE_COLUMNS = ("sim_time", "gs_collected", "wall_time")
REALTIME_FRAME_PERIOD = 0.1

FrameSink = Callable[[dict], None]
SampleObserver = Callable[[Scenario, float], None]


@dataclass(frozen=True)
class Sample:
    sim_time: float
    gs_collected: int
    wall_time: float


@dataclass
class MetricSeries:
    run_id: int
    seed: int
    samples: list[Sample] = field(default_factory=list)
    conservation_violations: int = 0
    wall_clock: float = 0.0
    events_processed: int = 0
    pairings: dict[NodeId, list[tuple[float, NodeId]]] = field(default_factory=dict)

    @property
    def final_collected(self) -> int:
        return self.samples[-1].gs_collected if self.samples else 0

    def sim_times(self) -> np.ndarray:
        return np.array([s.sim_time for s in self.samples])

    def collected(self) -> np.ndarray:
        return np.array([s.gs_collected for s in self.samples])

    def wall_times(self) -> np.ndarray:
        return np.array([s.wall_time for s in self.samples])


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    runs: list[MetricSeries]
    average: list[Sample]
    wall_clock: float


def run_single(
    cfg: ScenarioConfig,
    run_id: int = 0,
    seed: int | None = None,
    frame_sinks: Sequence[FrameSink] = (),
    observers: Sequence[SampleObserver] = (),
) -> MetricSeries:
    """Simulate one run and sample it every ``telemetry_interval`` seconds from t=0 to ``duration``.

    Each frame sink receives a telemetry frame per sample in fast mode, or
    every 0.1 s of simulated time in real-time mode.  Observers are called
    with the scenario at every sample.
    """
    seed = cfg.seed + run_id if seed is None else seed
    scenario = build_scenario(cfg, seed=seed)
    sim = scenario.simulation
    engine = sim.engine
    series = MetricSeries(run_id, seed)
    step = to_ns(cfg.telemetry_interval)
    end = to_ns(cfg.duration)
    wall_start = time.perf_counter()
    fast = cfg.mode == "fast"

    def sample() -> None:
        t = engine.now()
        series.samples.append(Sample(t, scenario.gs_collected, time.perf_counter() - wall_start))
        if scenario.conservation_gap() != 0:
            series.conservation_violations += 1
        for observe in observers:
            observe(scenario, t)
        if fast and frame_sinks:
            frame = build_frame(sim)
            for sink in frame_sinks:
                sink(frame)
        nxt = engine.now_ns + step
        if nxt <= end:
            engine.schedule_ns(nxt, sample, payload="sample")

    def frame_tick() -> None:
        frame = build_frame(sim)
        for sink in frame_sinks:
            sink(frame)
        nxt = engine.now_ns + to_ns(REALTIME_FRAME_PERIOD)
        if nxt <= end:
            engine.schedule_ns(nxt, frame_tick, payload="frame")

    engine.schedule_ns(0, sample, payload="sample")
    if not fast and frame_sinks:
        engine.schedule_ns(0, frame_tick, payload="frame")

    stats = sim.run(cfg.duration)
    series.wall_clock = time.perf_counter() - wall_start
    series.events_processed = stats.events_processed
    series.pairings = {nid: list(u.pairings) for nid, u in scenario.uavs.items()}
    series.pairings[scenario.ground_station_id] = list(scenario.ground_station.pairings)
    return series


def average_series(runs: Sequence[MetricSeries]) -> list[Sample]:
    """Per-sample mean across runs; samples align because they share the telemetry grid."""
    if not runs:
        return []
    n = min(len(r.samples) for r in runs)
    times = runs[0].sim_times()[:n]
    for r in runs[1:]:
        if not np.array_equal(r.sim_times()[:n], times):
            raise ValueError("runs were sampled on different time grids")
    collected = np.mean([r.collected()[:n] for r in runs], axis=0)
    wall = np.mean([r.wall_times()[:n] for r in runs], axis=0)
    return [Sample(float(t), float(c), float(w)) for t, c, w in zip(times, collected, wall)]


def write_run_csv(series: MetricSeries, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for s in series.samples:
            w.writerow((series.run_id, series.seed, repr(s.sim_time), s.gs_collected, f"{s.wall_time:.6f}"))


def write_average_csv(average: Sequence[Sample], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AVERAGE_COLUMNS)
        for s in average:
            w.writerow((repr(s.sim_time), repr(s.gs_collected), f"{s.wall_time:.6f}"))


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for series in result.runs:
        write_run_csv(series, out / f"run_{series.run_id}.csv")
    if result.runs:
        write_average_csv(result.average, out / "average.csv")
    summary = {
        "config": result.config.to_dict(),
        "wall_clock": result.wall_clock,
        "runs": [
            {
                "run": s.run_id,
                "seed": s.seed,
                "final_gs_collected": s.final_collected,
                "wall_clock": s.wall_clock,
                "events_processed": s.events_processed,
                "conservation_violations": s.conservation_violations,
            }
            for s in result.runs
        ],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))


def run_experiment(
    cfg: ScenarioConfig,
    out_dir: str | Path | None = None,
    frame_sinks: Sequence[FrameSink] = (),
    observers: Sequence[SampleObserver] = (),
) -> ExperimentResult:
    """Run ``cfg.runs`` simulations with seeds ``seed, seed+1, ...`` and average them.

    Frame sinks are attached to the first run only.  If a run raises, the
    runs completed so far are written to ``out_dir`` before re-raising.
    """
    cfg.validate()
    started = time.perf_counter()
    runs: list[MetricSeries] = []
    try:
        for i in range(cfg.runs):
            logger.info("run %d/%d (seed %d)", i + 1, cfg.runs, cfg.seed + i)
            runs.append(run_single(cfg, i, frame_sinks=frame_sinks if i == 0 else (), observers=observers))
    except BaseException:
        if out_dir is not None and runs:
            write_outputs(ExperimentResult(cfg, runs, average_series(runs), time.perf_counter() - started), out_dir)
        raise
    result = ExperimentResult(cfg, runs, average_series(runs), time.perf_counter() - started)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result
