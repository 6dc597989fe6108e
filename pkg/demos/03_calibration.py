"""Calibration metrics: NLL, expected calibration error, reliability bins.

Confidence is the maximum of the averaged softmax output. Reliability
binning partitions (0, 1] into equal-width right-closed bins; the expected
calibration error is the count-weighted mean absolute gap between per-bin
accuracy and per-bin confidence, so a reliability diagram hugging the
diagonal means a small ECE.

Run from the repository root:  python3 demos/03_calibration.py
"""

from pathlib import Path

import numpy as np

from pfge import (
    LayerSpec,
    LrSchedule,
    MomentumState,
    PredictionBatch,
    accuracy,
    apply_standardization,
    batches,
    ece,
    ensemble_predict,
    feature_stats,
    gen_two_spirals,
    init_model,
    loss_and_grad,
    nll,
    reliability,
    run_pfge,
    run_swa,
    sgd_step,
)
from pfge.training import EnsembleSet

OUT = Path("demo_output/calibration")
OUT.mkdir(parents=True, exist_ok=True)

SEED = 3
BATCH = 32

train_raw = gen_two_spirals(100, noise_sd=0.15, seed=SEED)
test_raw = gen_two_spirals(1000, noise_sd=0.15, seed=SEED + 1)
mean, std = feature_stats(train_raw)
train = apply_standardization(train_raw, mean, std)
test = apply_standardization(test_raw, mean, std)

spec = LayerSpec((2, 64, 64, 2))
epoch = batches(train, BATCH, seed=SEED).iterations_per_epoch

w0 = init_model(spec, SEED)
state = MomentumState.initial(w0)
stream = iter(batches(train, BATCH, seed=SEED))
total = 300 * epoch
for i in range(1, total + 1):
    progress = (i - 1) / total
    factor = 1.0 if progress < 0.5 else (
        1.0 - 0.99 * (progress - 0.5) / 0.4 if progress < 0.9 else 0.01
    )
    _, grad = loss_and_grad(w0, next(stream), 0.0)
    w0, state = sgd_step(w0, grad, 0.1 * factor, state)

sched = LrSchedule(0.15, 0.0005, 2 * epoch)
n, P = 40 * epoch, 10 * epoch
swa_avg, _ = run_swa(w0, sched, n, batches(train, BATCH, seed=SEED), MomentumState.initial(w0))
pfge_ens, _ = run_pfge(w0, sched, n, P, batches(train, BATCH, seed=SEED), MomentumState.initial(w0))

BINS = 15
print(f"{'model':<22} {'accuracy':>8} {'nll':>8} {'nll(%)':>8} {'ece':>8}")
predictions = {}
for name, ensemble in [
    ("swa single model", EnsembleSet((swa_avg,), (n,))),
    ("pfge 4-member", pfge_ens),
]:
    probs, _ = ensemble_predict(ensemble, test.inputs)
    p = PredictionBatch(probs, test.labels)
    predictions[name] = p
    print(f"{name:<22} {accuracy(p):>8.4f} {nll(p):>8.4f} {100 * nll(p):>8.2f} "
          f"{ece(p, BINS):>8.4f}")

# Reliability bins serialize to CSV for external plotting.
for name, p in predictions.items():
    bins = reliability(p, BINS)
    path = OUT / f"reliability_{name.split()[0]}.csv"
    bins.write_csv(path)
    print(f"\n{name}: per-bin statistics -> {path}")
    print("  bin        count  confidence  accuracy")
    for b in range(bins.n_bins):
        if bins.empty[b]:
            continue
        print(f"  ({bins.bin_edges[b]:.2f}, {bins.bin_edges[b + 1]:.2f}]"
              f" {bins.counts[b]:>6}  {bins.confidences[b]:>10.4f}  {bins.accuracies[b]:>8.4f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, len(predictions), figsize=(9, 3.2), sharey=True)
    for ax, (name, p) in zip(np.atleast_1d(axes), predictions.items()):
        bins = reliability(p, BINS)
        centers = 0.5 * (bins.bin_edges[:-1] + bins.bin_edges[1:])
        keep = ~bins.empty
        ax.bar(centers[keep], bins.accuracies[keep], width=1.0 / BINS * 0.9, edgecolor="k")
        ax.plot([0, 1], [0, 1], "k--", lw=1)
        ax.set_title(f"{name} (ece={ece(p, BINS):.3f})", fontsize=9)
        ax.set_xlabel("confidence")
        ax.set_xlim(0.45, 1.0)
    np.atleast_1d(axes)[0].set_ylabel("accuracy")
    fig.tight_layout()
    fig.savefig(OUT / "reliability.png", dpi=120)
    print(f"\nwrote {OUT / 'reliability.png'}")
except ImportError:
    print("\nmatplotlib not available; skipped the diagram")
