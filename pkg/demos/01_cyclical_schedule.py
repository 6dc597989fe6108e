"""The sawtooth cyclical learning-rate schedule and its budget structure.

The schedule descends linearly from alpha1 to alpha2 within every cycle of c
iterations and jumps back up at the next cycle's start. Snapshots are always
taken at iterations with i % c == 0, exactly where the rate bottoms out at
alpha2. Budgets follow the divisibility chain c | P | n: the recording period
P is a multiple of the cycle length, the total budget n a multiple of P.

Run from the repository root:  python3 demos/01_cyclical_schedule.py
"""

from pathlib import Path

import numpy as np

from pfge import BudgetSpec, LrSchedule, lr_at, validate_budget
from pfge.errors import ConfigurationError

OUT = Path("demo_output/schedule")
OUT.mkdir(parents=True, exist_ok=True)

# A small example: cycles of 10 iterations, recording every 2 cycles, budget
# of 2 recording periods (the P = 2c, n = 2P case).
sched = LrSchedule(alpha1=0.05, alpha2=0.0005, cycle_len=10)
budget = validate_budget(sched, BudgetSpec(total_iters=40, record_period=20))

print("iteration | lr        | event")
for i in range(1, budget.total_iters + 1):
    lr = lr_at(sched, i)
    event = ""
    if i % sched.cycle_len == 0:
        event = "cycle end (snapshot instant, lr = alpha2)"
    if budget.record_period and i % budget.record_period == 0:
        event += " + recording instant"
    print(f"{i:>9} | {lr:.6f}  | {event}")

# The collection instants are exactly the minima of the schedule.
iters = np.arange(1, budget.total_iters + 1)
lrs = np.array([lr_at(sched, int(i)) for i in iters])
assert all(lrs[iters % sched.cycle_len == 0] == sched.alpha2)

# Budgets that break the divisibility chain are rejected with a message
# naming the failing constraint.
try:
    validate_budget(sched, BudgetSpec(total_iters=40, record_period=15))
except ConfigurationError as exc:
    print(f"\nrejected malformed budget: {exc}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 2.5))
    ax.plot(iters, lrs, drawstyle="steps-post", lw=1)
    snap = iters[iters % sched.cycle_len == 0]
    ax.plot(snap, [sched.alpha2] * len(snap), "o", ms=5, label="snapshot instants")
    rec = iters[iters % budget.record_period == 0]
    ax.plot(rec, [sched.alpha2] * len(rec), "s", ms=9, mfc="none", label="recording instants")
    ax.set_xlabel("iteration")
    ax.set_ylabel("learning rate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(OUT / "cyclical_lr.png", dpi=120)
    print(f"\nwrote {OUT / 'cyclical_lr.png'}")
except ImportError:
    print("\nmatplotlib not available; skipped the plot")
