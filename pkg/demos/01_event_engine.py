# %% [markdown]
# # The event engine
#
# Everything in a simulation happens as an event on one clock. Time is
# stored as integer nanoseconds, so two events scheduled at the same instant
# always run in the order they were scheduled.

# %%
from fleetsim import Engine

engine = Engine(seed=42)
log = []


def note(label):
    log.append((engine.now(), label))


engine.schedule(2.0, note, "second")
engine.schedule(1.0, note, "first")
engine.schedule(2.0, note, "second, scheduled later")
stats = engine.run_until(5.0)
for t, label in log:
    print(f"t={t:4.1f}  {label}")
print(f"{stats.events_processed} events, clock now at {engine.now()}")

# %% [markdown]
# Events can schedule further events. Cancelled handles never fire, and
# `engine.rng` is the one random stream every component draws from.

# %%
ticks = []


def tick():
    ticks.append(engine.now())
    engine.schedule_in(engine.rng.uniform(0.5, 1.5), tick)


engine.schedule_in(0.0, tick)
doomed = engine.schedule(7.0, note, "never printed")
engine.cancel(doomed)
engine.run_until(10.0)
print("tick times:", [round(t, 3) for t in ticks])
print("cancelled event fired:", any(label == "never printed" for _, label in log))
