"""Minimal dense feed-forward network with exact analytic gradients.

Weights live in a single flat float64 vector so that every algorithm in this
package (running averages, snapshot collection, Bezier combinations) is plain
vector arithmetic. The flat layout is, per layer ``l``: the weight matrix
``W_l`` of shape (sizes[l], sizes[l+1]) in row-major order, followed by the
bias ``b_l`` of length sizes[l+1]. Hidden layers apply the configured
activation; the output layer is linear and produces logits.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidArgumentError, ShapeError
from .rng import STREAM_INIT, stream_rng

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class LayerSpec:
    """Architecture descriptor: layer widths plus the hidden activation."""

    sizes: tuple
    activation: str = "relu"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) < 2:
            raise ConfigurationError("LayerSpec needs at least input and output sizes")
        if any(s < 1 for s in sizes):
            raise ConfigurationError(f"layer sizes must be >= 1, got {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(
                f"unknown activation {self.activation!r}, expected one of {ACTIVATIONS}"
            )

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    @property
    def param_count(self) -> int:
        return sum((fi + 1) * fo for fi, fo in zip(self.sizes[:-1], self.sizes[1:]))

    @property
    def n_classes(self) -> int:
        return self.sizes[-1]


@dataclass(frozen=True)
class ModelWeights:
    """A flat parameter vector tied to its architecture.

    The array is frozen after construction; all operations return new vectors.
    """

    spec: LayerSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size != self.spec.param_count:
            raise ShapeError(
                f"expected {self.spec.param_count} parameters for {self.spec.sizes}, "
                f"got array of shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("weights contain non-finite values")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class Batch:
    """A mini-batch of inputs with integer class labels."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if inputs.ndim != 2:
            raise ShapeError(f"batch inputs must be 2-D, got shape {inputs.shape}")
        if labels.ndim != 1 or labels.shape[0] != inputs.shape[0]:
            raise ShapeError(
                f"label count {labels.shape} does not match input rows {inputs.shape[0]}"
            )
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class LossValue:
    """Mean cross-entropy plus the L2 penalty, kept separately."""

    data_loss: float
    l2_penalty: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.data_loss + self.l2_penalty)


def init_model(spec: LayerSpec, seed: int) -> ModelWeights:
    """Initialize weights uniformly in +-1/sqrt(fan_in); biases start at zero.

    Deterministic in (spec, seed): draws come from the dedicated init stream,
    layer by layer.
    """
    rng = stream_rng(seed, STREAM_INIT)
    chunks = []
    for fan_in, fan_out in zip(spec.sizes[:-1], spec.sizes[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-scale, scale, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return ModelWeights(spec, np.concatenate(chunks))


def unpack(w: ModelWeights) -> list:
    """Split the flat vector into per-layer (W, b) views."""
    layers = []
    offset = 0
    for fan_in, fan_out in zip(w.spec.sizes[:-1], w.spec.sizes[1:]):
        W = w.values[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = w.values[offset : offset + fan_out]
        offset += fan_out
        layers.append((W, b))
    return layers


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def forward(w: ModelWeights, inputs: np.ndarray) -> np.ndarray:
    """Compute logits, shape (batch, classes)."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != w.spec.sizes[0]:
        raise ShapeError(
            f"inputs of shape {x.shape} do not match input width {w.spec.sizes[0]}"
        )
    layers = unpack(w)
    h = x
    for W, b in layers[:-1]:
        h = _activate(h @ W + b, w.spec.activation)
    W, b = layers[-1]
    return h @ W + b


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting each row's maximum."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grad(w: ModelWeights, batch: Batch, l2_coeff: float = 0.0):
    """Mean cross-entropy with optional L2 penalty, plus its exact gradient.

    The L2 term is ``l2_coeff/2 * sum(W**2)`` over weight matrices only;
    biases are excluded. Returns ``(LossValue, grad)`` with ``grad`` a flat
    vector matching the weight layout.
    """
    if len(batch) == 0:
        raise InvalidArgumentError("empty batch")
    if l2_coeff < 0:
        raise InvalidArgumentError("l2_coeff must be nonnegative")
    x, labels = batch.inputs, batch.labels
    if x.shape[1] != w.spec.sizes[0]:
        raise ShapeError(
            f"batch width {x.shape[1]} does not match input width {w.spec.sizes[0]}"
        )
    n_classes = w.spec.n_classes
    if labels.min() < 0 or labels.max() >= n_classes:
        raise InvalidArgumentError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )

    layers = unpack(w)
    n = x.shape[0]

    # Forward pass, keeping post-activation values for the backward pass.
    acts = [x]
    h = x
    for W, b in layers[:-1]:
        h = _activate(h @ W + b, w.spec.activation)
        acts.append(h)
    W_out, b_out = layers[-1]
    logits = h @ W_out + b_out

    # Stable log-softmax cross-entropy.
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    data_loss = float(np.mean(log_norm - shifted[np.arange(n), labels]))

    probs = softmax(logits)
    delta = probs
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    grads = [None] * len(layers)
    for idx in range(len(layers) - 1, -1, -1):
        W, _ = layers[idx]
        a_in = acts[idx]
        dW = a_in.T @ delta
        db = delta.sum(axis=0)
        if l2_coeff > 0.0:
            dW = dW + l2_coeff * W
        grads[idx] = (dW, db)
        if idx > 0:
            delta = delta @ W.T
            if w.spec.activation == "relu":
                delta = delta * (acts[idx] > 0.0)
            else:
                delta = delta * (1.0 - acts[idx] ** 2)

    grad = np.concatenate([np.concatenate([dW.ravel(), db]) for dW, db in grads])
    l2_penalty = 0.0
    if l2_coeff > 0.0:
        l2_penalty = 0.5 * l2_coeff * sum(float(np.sum(W**2)) for W, _ in layers)
    return LossValue(data_loss, l2_penalty), grad


def mean_loss(w: ModelWeights, inputs: np.ndarray, labels: np.ndarray, l2_coeff: float = 0.0) -> LossValue:
    """Loss over a full input matrix without computing gradients."""
    labels = np.asarray(labels, dtype=np.int64)
    logits = forward(w, inputs)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    data_loss = float(np.mean(log_norm - shifted[np.arange(len(labels)), labels]))
    l2_penalty = 0.0
    if l2_coeff > 0.0:
        l2_penalty = 0.5 * l2_coeff * sum(float(np.sum(W**2)) for W, _ in unpack(w))
    return LossValue(data_loss, l2_penalty)


def linear_combine(a: float, w_a: ModelWeights, b: float, w_b: ModelWeights) -> ModelWeights:
    """Elementwise ``a*w_a + b*w_b``. Specs must match."""
    if w_a.spec != w_b.spec:
        raise ShapeError(f"spec mismatch: {w_a.spec.sizes} vs {w_b.spec.sizes}")
    return ModelWeights(w_a.spec, a * w_a.values + b * w_b.values)
