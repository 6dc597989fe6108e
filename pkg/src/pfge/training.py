"""SGD stepping and the three snapshot-ensemble training drivers.

All three drivers run the same loop: at iteration ``i`` (1-based) the
learning rate comes from the cyclical schedule, one mini-batch gradient step
is taken, and then the driver-specific collection rule fires at the
bottom-of-cycle instants ``i % c == 0``:

* ``run_swa``    folds the iterate into a running weight average and returns
  that single averaged model;
* ``run_fge``    stores the raw iterate itself as an ensemble member;
* ``run_pfge``   runs consecutive weight-averaging procedures, each seeded
  from the previous one's average, and stores one averaged model per
  recording period of ``P`` iterations.

Drivers are deterministic given (initial weights, schedule, batch stream,
optimizer state): rerunning with the same inputs reproduces every iterate
bit-for-bit.
"""

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import InvalidArgumentError, NumericError, ShapeError
from .nn import Batch, LossValue, ModelWeights, forward, loss_and_grad, softmax
from .schedule import BudgetSpec, LrSchedule, lr_at, validate_budget

LossGradFn = Callable[[ModelWeights, Batch], tuple]


@dataclass(frozen=True)
class MomentumState:
    """Velocity buffer plus the momentum and weight-decay coefficients."""

    velocity: np.ndarray
    momentum: float = 0.9
    weight_decay: float = 0.0

    def __post_init__(self):
        velocity = np.asarray(self.velocity, dtype=np.float64)
        if velocity.ndim != 1:
            raise ShapeError(f"velocity must be a flat vector, got shape {velocity.shape}")
        if not (0.0 <= self.momentum < 1.0):
            raise InvalidArgumentError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0.0:
            raise InvalidArgumentError(f"weight_decay must be nonnegative, got {self.weight_decay}")
        velocity = velocity.copy()
        velocity.flags.writeable = False
        object.__setattr__(self, "velocity", velocity)

    @classmethod
    def initial(cls, w: ModelWeights, momentum: float = 0.9, weight_decay: float = 5e-4):
        """Zero velocity sized for ``w``."""
        return cls(np.zeros(w.values.size), momentum, weight_decay)


@dataclass(frozen=True)
class EnsembleSet:
    """Ordered snapshot collection with the iterations they were recorded at."""

    members: tuple
    recorded_at: tuple

    def __post_init__(self):
        members = tuple(self.members)
        recorded_at = tuple(int(i) for i in self.recorded_at)
        if not members:
            raise InvalidArgumentError("ensemble must contain at least one member")
        if len(members) != len(recorded_at):
            raise InvalidArgumentError("members and recorded_at lengths differ")
        if any(b <= a for a, b in zip(recorded_at, recorded_at[1:])):
            raise InvalidArgumentError("recorded_at must be strictly increasing")
        spec = members[0].spec
        if any(m.spec != spec for m in members):
            raise ShapeError("all ensemble members must share one layer spec")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "recorded_at", recorded_at)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def spec(self):
        return self.members[0].spec


@dataclass(frozen=True)
class RunTrace:
    """Per-iteration log plus the raw bottom-of-cycle iterates.

    ``cycle_end_weights[k]`` is the weight vector immediately after the SGD
    update of iteration ``cycle_end_iters[k]``, before any averaging or
    re-initialization touched it. This is enough to replay every collection
    decision a driver made.
    """

    iterations: np.ndarray
    lrs: np.ndarray
    losses: np.ndarray
    cycle_end_iters: tuple
    cycle_end_weights: tuple


def sgd_step(w: ModelWeights, grad: np.ndarray, alpha: float, state: MomentumState):
    """One heavy-ball SGD update.

    ``velocity <- momentum * velocity + (grad + weight_decay * w)`` followed by
    ``w <- w - alpha * velocity``. With zero momentum and decay this is plain
    ``w - alpha * grad``.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != w.values.shape or state.velocity.shape != w.values.shape:
        raise ShapeError(
            f"gradient/velocity shape {grad.shape}/{state.velocity.shape} does not "
            f"match weights {w.values.shape}"
        )
    with np.errstate(over="ignore", invalid="ignore"):
        velocity = state.momentum * state.velocity + (grad + state.weight_decay * w.values)
        values = w.values - alpha * velocity
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite weights after SGD update")
    return (
        ModelWeights(w.spec, values),
        MomentumState(velocity, state.momentum, state.weight_decay),
    )


def running_average_update(w_avg: ModelWeights, n_models: int, w: ModelWeights) -> ModelWeights:
    """Fold one more model into a running mean over ``n_models`` models."""
    if w_avg.spec != w.spec:
        raise ShapeError("spec mismatch in running average")
    if n_models < 1:
        raise InvalidArgumentError(f"n_models must be >= 1, got {n_models}")
    return ModelWeights(w.spec, (w_avg.values * n_models + w.values) / (n_models + 1))


def _default_loss_grad(l2_coeff: float) -> LossGradFn:
    return lambda w, batch: loss_and_grad(w, batch, l2_coeff)


class _Loop:
    """Shared per-iteration bookkeeping for the three drivers."""

    def __init__(self, n_iters: int):
        self.lrs = np.empty(n_iters)
        self.losses = np.empty(n_iters)
        self.cycle_end_iters = []
        self.cycle_end_weights = []

    def log(self, i: int, alpha: float, loss: LossValue):
        if not np.isfinite(loss.total):
            raise NumericError(f"non-finite loss at iteration {i}")
        self.lrs[i - 1] = alpha
        self.losses[i - 1] = loss.total

    def snapshot(self, i: int, w: ModelWeights):
        self.cycle_end_iters.append(i)
        self.cycle_end_weights.append(w.values)

    def trace(self) -> RunTrace:
        n = self.lrs.size
        return RunTrace(
            iterations=np.arange(1, n + 1),
            lrs=self.lrs,
            losses=self.losses,
            cycle_end_iters=tuple(self.cycle_end_iters),
            cycle_end_weights=tuple(self.cycle_end_weights),
        )


def _step(w, state, batch, sched, i, loss_grad_fn, loop):
    alpha = lr_at(sched, i)
    loss, grad = loss_grad_fn(w, batch)
    loop.log(i, alpha, loss)
    try:
        return sgd_step(w, grad, alpha, state)
    except NumericError as exc:
        raise NumericError(f"{exc} (iteration {i})") from None


def run_swa(
    w0: ModelWeights,
    sched: LrSchedule,
    n_iters: int,
    stream: Iterable[Batch],
    opt: MomentumState,
    loss_grad_fn: Optional[LossGradFn] = None,
    l2_coeff: float = 0.0,
):
    """Train with the cyclical schedule, maintaining a running weight average.

    The average starts at ``w0`` and folds in the iterate at every
    bottom-of-cycle instant, so the result is the arithmetic mean of ``w0``
    and the ``n_iters / c`` cycle-end iterates. Returns ``(w_avg, trace)``.
    """
    validate_budget(sched, BudgetSpec(n_iters))
    loss_grad_fn = loss_grad_fn or _default_loss_grad(l2_coeff)
    c = sched.cycle_len
    loop = _Loop(n_iters)
    w, state, avg = w0, opt, w0
    batch_iter = iter(stream)
    for i in range(1, n_iters + 1):
        w, state = _step(w, state, next(batch_iter), sched, i, loss_grad_fn, loop)
        if i % c == 0:
            loop.snapshot(i, w)
            avg = running_average_update(avg, i // c, w)
    return avg, loop.trace()


def run_fge(
    w0: ModelWeights,
    sched: LrSchedule,
    n_iters: int,
    stream: Iterable[Batch],
    opt: MomentumState,
    loss_grad_fn: Optional[LossGradFn] = None,
    l2_coeff: float = 0.0,
):
    """Train with the cyclical schedule, collecting every cycle-end iterate.

    Returns ``(EnsembleSet, trace)`` with exactly ``n_iters / c`` members,
    recorded at iterations ``c, 2c, ..., n_iters``.
    """
    validate_budget(sched, BudgetSpec(n_iters))
    loss_grad_fn = loss_grad_fn or _default_loss_grad(l2_coeff)
    c = sched.cycle_len
    loop = _Loop(n_iters)
    w, state = w0, opt
    members, recorded_at = [], []
    batch_iter = iter(stream)
    for i in range(1, n_iters + 1):
        w, state = _step(w, state, next(batch_iter), sched, i, loss_grad_fn, loop)
        if i % c == 0:
            loop.snapshot(i, w)
            members.append(w)
            recorded_at.append(i)
    return EnsembleSet(tuple(members), tuple(recorded_at)), loop.trace()


def run_pfge(
    w0: ModelWeights,
    sched: LrSchedule,
    n_iters: int,
    record_period: int,
    stream: Iterable[Batch],
    opt: MomentumState,
    loss_grad_fn: Optional[LossGradFn] = None,
    l2_coeff: float = 0.0,
):
    """Train consecutive weight-averaging procedures and ensemble their outputs.

    Each recording period of ``record_period`` iterations runs one averaging
    procedure (re-indexed by ``j``, the offset into the current period); at
    the period's end the current average becomes an ensemble member and also
    re-initializes the weights for the next period. The momentum state
    carries across period boundaries untouched. Returns ``(EnsembleSet,
    trace)`` with exactly ``n_iters / record_period`` members.
    """
    validate_budget(sched, BudgetSpec(n_iters, record_period))
    loss_grad_fn = loss_grad_fn or _default_loss_grad(l2_coeff)
    c = sched.cycle_len
    P = record_period
    loop = _Loop(n_iters)
    w, state, avg = w0, opt, w0
    n_recorded = 0
    members, recorded_at = [], []
    batch_iter = iter(stream)
    for i in range(1, n_iters + 1):
        w, state = _step(w, state, next(batch_iter), sched, i, loss_grad_fn, loop)
        j = i - n_recorded * P
        if j % c == 0:
            loop.snapshot(i, w)
            avg = running_average_update(avg, j // c, w)
        if i % P == 0:
            members.append(avg)
            recorded_at.append(i)
            w = avg
            n_recorded = i // P
    return EnsembleSet(tuple(members), tuple(recorded_at)), loop.trace()


def ensemble_predict(ensemble: EnsembleSet, inputs: np.ndarray, last_k: Optional[int] = None):
    """Average the members' softmax outputs and take the per-row argmax.

    ``last_k`` restricts the average to the most recently recorded models.
    Ties in the argmax resolve to the lowest class index. Returns
    ``(avg_probs, labels)``.
    """
    if last_k is not None:
        if not (1 <= last_k <= len(ensemble)):
            raise InvalidArgumentError(
                f"last_k must be in [1, {len(ensemble)}], got {last_k}"
            )
        members = ensemble.members[-last_k:]
    else:
        members = ensemble.members
    total = None
    for member in members:
        probs = softmax(forward(member, inputs))
        total = probs if total is None else total + probs
    avg_probs = total / len(members)
    return avg_probs, np.argmax(avg_probs, axis=1)
