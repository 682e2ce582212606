# %% [markdown]
# # Two ways the protocol can fail
#
# With the collision model on, receptions that overlap at a receiver are
# lost. If every node heartbeats at the same instant, nothing gets through.
# A small random offset per node fixes it.

# %%
from dataclasses import replace

from fleetsim.harness import ScenarioConfig, run_experiment
from fleetsim.zigzag import OffsetMode

base = ScenarioConfig.preset("small", duration=600.0, runs=3)
for mode in (OffsetMode.ZERO, OffsetMode.RANDOM):
    cfg = replace(base, medium=replace(base.medium, collision_model=True),
                  zigzag=replace(base.zigzag, offset_mode=mode))
    finals = [r.final_collected for r in run_experiment(cfg).runs]
    print(f"offset {mode.value:>6}: ground station totals {finals}")

# %% [markdown]
# After pairing, a UAV ignores other UAVs and the ground station for a
# while. Without that pause, two UAVs that stay in range keep re-pairing.

# %%
import numpy as np


def closest_repeat(pairings):
    """Smallest gap between two pairings of the same two nodes."""
    gaps = []
    for records in pairings.values():
        for peer in {p for _, p in records}:
            times = np.array([t for t, q in records if q == peer])
            gaps.extend(np.diff(times))
    return min(gaps)


for timeout in (5.0, 0.0):
    cfg = replace(base, runs=1, zigzag=replace(base.zigzag, interaction_timeout=timeout))
    run = run_experiment(cfg).runs[0]
    count = sum(len(p) for p in run.pairings.values())
    print(f"timeout {timeout:3.1f}s: {count} pairing records, "
          f"closest repeat of one pair {closest_repeat(run.pairings):.3f}s")
