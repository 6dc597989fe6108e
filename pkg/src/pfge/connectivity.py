"""Bezier curves between weight vectors, curve-loss training, and the
mode-connectivity gap.

A curve with ``k+1`` control points is the Bernstein combination
``gamma(t) = sum_j C(k,j) (1-t)^(k-j) t^j w_j`` for ``t`` in [0, 1], with the
endpoint controls pinned to the two models being connected and only the
interior controls trainable. Training minimizes the expected loss along the
curve by sampling ``t`` uniformly, one draw per mini-batch.

The mode-connectivity value of a trained curve is
``0.5 * (L(w) + L(w')) - L(gamma(t*))`` where ``t*`` maximizes the absolute
deviation of the curve loss from the endpoint average. The value is signed:
negative means the curve rises above the endpoint average at its most
deviant point.
"""

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, InvalidArgumentError, NumericError, ShapeError
from .nn import Batch, ModelWeights, forward, linear_combine, loss_and_grad, mean_loss
from .rng import STREAM_CURVE, stream_rng

LossFn = Callable[[ModelWeights], float]


@dataclass(frozen=True)
class CurveSpec:
    """k+1 control points; ``controls[0]`` and ``controls[-1]`` are the endpoints."""

    controls: tuple

    def __post_init__(self):
        controls = tuple(self.controls)
        if len(controls) < 2:
            raise InvalidArgumentError("a curve needs at least 2 control points")
        spec = controls[0].spec
        if any(c.spec != spec for c in controls):
            raise ShapeError("all control points must share one layer spec")
        object.__setattr__(self, "controls", controls)

    @property
    def k(self) -> int:
        return len(self.controls) - 1

    @property
    def spec(self):
        return self.controls[0].spec


@dataclass(frozen=True)
class CurveProfile:
    """Losses and errors along the curve plus their max/min/mean summaries."""

    grid: np.ndarray
    train_loss: np.ndarray
    test_error: np.ndarray
    train_loss_summary: dict
    test_error_summary: dict

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "train_loss", "test_error"])
            for t, loss, err in zip(self.grid, self.train_loss, self.test_error):
                writer.writerow([repr(float(t)), repr(float(loss)), repr(float(err))])


def bernstein(k: int, t: float) -> np.ndarray:
    """The k+1 Bernstein coefficients C(k,j) (1-t)^(k-j) t^j at ``t``."""
    if not (0.0 <= t <= 1.0):
        raise InvalidArgumentError(f"t must lie in [0, 1], got {t}")
    if k < 0:
        raise InvalidArgumentError(f"k must be nonnegative, got {k}")
    j = np.arange(k + 1)
    combs = np.array([math.comb(k, int(m)) for m in j], dtype=np.float64)
    return combs * (1.0 - t) ** (k - j) * t**j


def curve_point(curve: CurveSpec, t: float) -> ModelWeights:
    """Evaluate the curve; the endpoints return their control points untouched."""
    if not (0.0 <= t <= 1.0):
        raise InvalidArgumentError(f"t must lie in [0, 1], got {t}")
    if t == 0.0:
        return curve.controls[0]
    if t == 1.0:
        return curve.controls[-1]
    coeffs = bernstein(curve.k, t)
    anchor = curve.controls[0].values
    # Difference form anchored at the first control: constant curves stay
    # exactly constant instead of accumulating coefficient roundoff.
    values = anchor.copy()
    for coeff, control in zip(coeffs[1:], curve.controls[1:]):
        values += coeff * (control.values - anchor)
    return ModelWeights(curve.spec, values)


def initial_curve(w: ModelWeights, w_end: ModelWeights, k: int) -> CurveSpec:
    """Controls spaced evenly on the straight segment from ``w`` to ``w_end``."""
    if w.spec != w_end.spec:
        raise ShapeError("curve endpoints must share one layer spec")
    interior = [
        linear_combine(1.0 - j / k, w, j / k, w_end) for j in range(1, k)
    ]
    return CurveSpec((w, *interior, w_end))


def train_curve(
    w: ModelWeights,
    w_end: ModelWeights,
    k: int,
    iters: int,
    stream: Iterable[Batch],
    lr: float,
    seed: int,
    loss_grad_fn=None,
    l2_coeff: float = 0.0,
) -> CurveSpec:
    """Fit the interior control points to minimize expected loss along the curve.

    Per iteration: draw ``t`` uniformly (seeded curve stream), take one
    mini-batch, evaluate the loss gradient at ``gamma(t)``, and update each
    interior control ``j`` by plain SGD with the chain-rule factor
    ``bernstein_j(t)``. Endpoints are never touched.
    """
    if k < 2:
        raise ConfigurationError(f"curve training needs k >= 2, got k={k}")
    if iters < 1:
        raise InvalidArgumentError(f"iters must be >= 1, got {iters}")
    if loss_grad_fn is None:
        loss_grad_fn = lambda weights, batch: loss_and_grad(weights, batch, l2_coeff)
    start = initial_curve(w, w_end, k)
    interior = [c.values.copy() for c in start.controls[1:-1]]
    rng = stream_rng(seed, STREAM_CURVE)
    batch_iter = iter(stream)
    for i in range(1, iters + 1):
        t = float(rng.uniform())
        batch = next(batch_iter)
        coeffs = bernstein(k, t)
        # Same difference-form accumulation order as curve_point.
        point = w.values.copy()
        for coeff, control in zip(coeffs[1:-1], interior):
            point += coeff * (control - w.values)
        point += coeffs[-1] * (w_end.values - w.values)
        loss, grad = loss_grad_fn(ModelWeights(w.spec, point), batch)
        if not np.isfinite(loss.total):
            raise NumericError(f"non-finite curve loss at iteration {i}")
        for j, control in enumerate(interior):
            control -= lr * coeffs[j + 1] * grad
        if any(not np.all(np.isfinite(c)) for c in interior):
            raise NumericError(f"non-finite control point at iteration {i}")
    trained = [ModelWeights(w.spec, c) for c in interior]
    return CurveSpec((w, *trained, w_end))


def profile_curve(
    curve: CurveSpec,
    grid_size: int,
    train: Dataset,
    test: Dataset,
    l2_coeff: float = 0.0,
) -> CurveProfile:
    """Full-dataset train loss and test error at ``grid_size`` uniform t values."""
    if grid_size < 2:
        raise InvalidArgumentError(f"grid_size must be >= 2, got {grid_size}")
    grid = np.linspace(0.0, 1.0, grid_size)
    train_loss = np.empty(grid_size)
    test_error = np.empty(grid_size)
    for idx, t in enumerate(grid):
        point = curve_point(curve, float(t))
        train_loss[idx] = mean_loss(point, train.inputs, train.labels, l2_coeff).total
        preds = np.argmax(forward(point, test.inputs), axis=1)
        test_error[idx] = float(np.mean(preds != test.labels))
    return CurveProfile(
        grid=grid,
        train_loss=train_loss,
        test_error=test_error,
        train_loss_summary=_series_summary(train_loss),
        test_error_summary=_series_summary(test_error),
    )


def _series_summary(series: np.ndarray) -> dict:
    return {
        "max": float(series.max()),
        "min": float(series.min()),
        "mean": float(series.mean()),
    }


def mc_value(
    curve: CurveSpec,
    grid_size: int,
    train: Optional[Dataset] = None,
    loss_fn: Optional[LossFn] = None,
    l2_coeff: float = 0.0,
):
    """Mode-connectivity gap of the curve and the grid point attaining it.

    The loss defaults to the full training loss; ``loss_fn`` overrides it.
    ``t*`` is found by exhaustive search over the uniform grid, ties resolved
    to the smallest t. Returns the signed ``(mc, t_star)``.
    """
    if grid_size < 3:
        raise InvalidArgumentError(f"grid_size must be >= 3, got {grid_size}")
    if loss_fn is None:
        if train is None:
            raise InvalidArgumentError("mc_value needs a training dataset or a loss_fn")
        loss_fn = lambda w: mean_loss(w, train.inputs, train.labels, l2_coeff).total
    grid = np.linspace(0.0, 1.0, grid_size)
    losses = np.array([loss_fn(curve_point(curve, float(t))) for t in grid])
    endpoint_avg = 0.5 * (losses[0] + losses[-1])
    deviation = np.abs(endpoint_avg - losses)
    star = int(np.argmax(deviation))
    return float(endpoint_avg - losses[star]), float(grid[star])
