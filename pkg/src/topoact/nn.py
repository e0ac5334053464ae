"""Dense feed-forward networks with hand-written backpropagation.

Matrices are plain 2-D float64 numpy arrays. Weights are stored
``(fan_out, fan_in)`` and a batch is ``(n_samples, n_features)``, so a layer
computes ``z = x @ W.T + b``.

The network is ``hidden_depth`` layers using the candidate activation,
followed by an output layer of two ReLU units, one per class. The logit of
label 1 is ``relu(z1) - relu(z0)``, so the sigmoid of it equals a two-class
softmax over the ReLU outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .activations import (
    ActivationKind,
    ActivationState,
    activation_backward,
    activation_forward,
    branch_boundaries,
    init_activation,
)

PROB_EPS = 1e-12
OUTPUT_UNITS = 2


def xavier_normal(fan_out: int, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    std = math.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, std, size=(fan_out, fan_in))


def xavier_uniform(fan_out: int, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class DenseLayer:
    weights: np.ndarray
    bias: np.ndarray
    activation: ActivationState

    def __post_init__(self):
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match {self.weights.shape[0]} outputs"
            )

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    hidden_width: int
    hidden_depth: int
    activation: ActivationKind
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_width < 1 or self.hidden_depth < 1:
            raise ValueError(f"invalid network dimensions in {self}")


@dataclass
class Network:
    layers: list[DenseLayer]
    logit_offset: float = 0.0

    @property
    def input_dim(self) -> int:
        return self.layers[0].fan_in

    def copy(self) -> "Network":
        return Network(
            [DenseLayer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers],
            self.logit_offset,
        )


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation_params: list[np.ndarray]
    logit_offset: float

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(
            [g * factor for g in self.weights],
            [g * factor for g in self.biases],
            [g * factor for g in self.activation_params],
            self.logit_offset * factor,
        )


@dataclass
class Cache:
    inputs: list[np.ndarray]  # input to each layer
    pre_activations: list[np.ndarray]
    logits: np.ndarray


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: float = float("nan")

    @property
    def final_val_loss(self) -> float:
        return self.val_loss[-1]


def build_network(spec: NetworkSpec, rng: np.random.Generator) -> Network:
    # ReLU networks get uniform Xavier weights, everything else normal
    init = xavier_uniform if spec.activation is ActivationKind.RELU else xavier_normal
    layers = []
    fan_in = spec.input_dim
    for _ in range(spec.hidden_depth):
        w = init(spec.hidden_width, fan_in, rng)
        act = init_activation(spec.activation, rng)
        layers.append(DenseLayer(w, np.zeros(spec.hidden_width), act))
        fan_in = spec.hidden_width
    out = init(OUTPUT_UNITS, fan_in, rng)
    layers.append(DenseLayer(out, np.zeros(OUTPUT_UNITS), ActivationState(ActivationKind.RELU)))
    return Network(layers)


def sigmoid(z):
    # split by sign so exp never overflows
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _readout(a):
    if a.shape[1] == 1:
        return a[:, 0]
    return a[:, 1] - a[:, 0]


def _readout_grad(delta, units):
    if units == 1:
        return delta[:, None]
    return np.column_stack([-delta, delta])


def forward(net: Network, batch) -> tuple[np.ndarray, Cache]:
    """Return per-sample probabilities of label 1 and the cache for :func:`backward`."""
    a = np.asarray(batch, dtype=float)
    if a.ndim != 2 or a.shape[1] != net.input_dim:
        raise ValueError(f"batch shape {a.shape} incompatible with input_dim {net.input_dim}")
    inputs, pre = [], []
    for layer in net.layers:
        inputs.append(a)
        z = a @ layer.weights.T + layer.bias
        pre.append(z)
        a = activation_forward(layer.activation, z)
    logits = _readout(a) + net.logit_offset
    return sigmoid(logits), Cache(inputs, pre, logits)


def bce_loss(probabilities, labels) -> float:
    p = np.asarray(probabilities, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def backward(net: Network, cache: Cache, labels, scale: float = 1.0) -> Gradients:
    """Gradients of ``scale * mean BCE`` with respect to every parameter."""
    y = np.asarray(labels, dtype=float)
    n = y.shape[0]
    delta = (sigmoid(cache.logits) - y) * (scale / n)
    upstream = _readout_grad(delta, net.layers[-1].fan_out)

    n_layers = len(net.layers)
    gw: list = [None] * n_layers
    gb: list = [None] * n_layers
    gp: list = [None] * n_layers
    for i in reversed(range(n_layers)):
        layer = net.layers[i]
        g = activation_backward(layer.activation, cache.pre_activations[i], upstream)
        dz = g.d_input
        gw[i] = dz.T @ cache.inputs[i]
        gb[i] = dz.sum(axis=0)
        gp[i] = g.d_params
        upstream = dz @ layer.weights
    return Gradients(gw, gb, gp, float(delta.sum()))


def sgd_step(
    net: Network, grads: Gradients, lr: float, clip: Optional[float] = None
) -> Network:
    """Plain gradient descent update; returns a new network."""
    if lr < 0:
        raise ValueError("learning rate must be non-negative")

    def clipped(g):
        return g if clip is None else np.clip(g, -clip, clip)

    layers = []
    for layer, w, b, p in zip(net.layers, grads.weights, grads.biases, grads.activation_params):
        params = np.asarray(layer.activation.params) - lr * clipped(p)
        if not np.all(np.isfinite(params)):
            raise FloatingPointError(f"{layer.activation.kind.value} parameters became non-finite")
        layers.append(
            DenseLayer(
                layer.weights - lr * clipped(w),
                layer.bias - lr * clipped(b),
                layer.activation.with_params(params),
            )
        )
    offset = net.logit_offset - lr * float(clipped(np.float64(grads.logit_offset)))
    return Network(layers, offset)


def evaluate(net: Network, features, labels) -> tuple[float, float]:
    """BCE loss and accuracy (predict 1 when p >= 0.5)."""
    p, _ = forward(net, features)
    y = np.asarray(labels)
    accuracy = float(np.mean((p >= 0.5).astype(int) == y))
    return bce_loss(p, y), accuracy


def _check_finite(net: Network, epoch: int):
    for i, layer in enumerate(net.layers):
        if not (np.all(np.isfinite(layer.weights)) and np.all(np.isfinite(layer.bias))):
            raise FloatingPointError(f"layer {i} parameters became non-finite in epoch {epoch}")


def train(
    spec: NetworkSpec,
    data,
    epochs: int = 100,
    lr: float = 0.05,
    batch_size: int = 32,
    rng: Optional[np.random.Generator] = None,
    clip: Optional[float] = None,
) -> tuple[Network, TrainReport]:
    """Mini-batch SGD with a reshuffle every epoch.

    ``data`` is a :class:`topoact.data.SplitDataset`. Losses on the full
    training and test sets are recorded after every epoch.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    x_train, y_train = data.train.features, data.train.labels
    x_val, y_val = data.test.features, data.test.labels
    if len(y_train) == 0 or len(y_val) == 0:
        raise ValueError("empty dataset")
    if rng is None:
        rng = np.random.default_rng(spec.seed)

    net = build_network(spec, rng)
    report = TrainReport()
    n = len(y_train)
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            order = rng.permutation(n)
            for start in range(0, n, batch_size):
                idx = order[start : start + batch_size]
                _, cache = forward(net, x_train[idx])
                grads = backward(net, cache, y_train[idx])
                net = sgd_step(net, grads, lr, clip)
            _check_finite(net, epoch)
            report.train_loss.append(evaluate(net, x_train, y_train)[0])
            val_loss, val_acc = evaluate(net, x_val, y_val)
            report.val_loss.append(val_loss)
            report.val_accuracy = val_acc
    return net, report


# -- whole-network gradient check ---------------------------------------------------


def _flatten(net: Network) -> list[tuple[str, int, tuple]]:
    """Addresses of every scalar parameter: (group, layer, index)."""
    out = []
    for i, layer in enumerate(net.layers):
        out += [("w", i, idx) for idx in np.ndindex(layer.weights.shape)]
        out += [("b", i, (j,)) for j in range(layer.fan_out)]
        out += [("p", i, (j,)) for j in range(layer.activation.kind.arity)]
    out.append(("o", -1, ()))
    return out


def _perturbed(net: Network, address, delta: float) -> Network:
    group, i, idx = address
    new = net.copy()
    if group == "w":
        new.layers[i].weights[idx] += delta
    elif group == "b":
        new.layers[i].bias[idx] += delta
    elif group == "p":
        params = list(new.layers[i].activation.params)
        params[idx[0]] += delta
        new.layers[i].activation = new.layers[i].activation.with_params(params)
    else:
        new.logit_offset += delta
    return new


def _lookup(grads: Gradients, address) -> float:
    group, i, idx = address
    if group == "w":
        return float(grads.weights[i][idx])
    if group == "b":
        return float(grads.biases[i][idx])
    if group == "p":
        return float(grads.activation_params[i][idx[0]])
    return grads.logit_offset


def min_boundary_distance(net: Network, batch) -> float:
    """Smallest distance from any pre-activation to a kink of its layer's activation."""
    _, cache = forward(net, batch)
    best = math.inf
    for layer, z in zip(net.layers, cache.pre_activations):
        for boundary in branch_boundaries(layer.activation):
            best = min(best, float(np.min(np.abs(z - boundary))))
    return best


def network_gradcheck(net: Network, features, labels, h: float = 1e-5) -> float:
    """Max relative error of :func:`backward` against central differences of the loss."""
    _, cache = forward(net, features)
    grads = backward(net, cache, labels)
    worst = 0.0
    for address in _flatten(net):
        plus = bce_loss(forward(_perturbed(net, address, h), features)[0], labels)
        minus = bce_loss(forward(_perturbed(net, address, -h), features)[0], labels)
        numeric = (plus - minus) / (2 * h)
        analytic = _lookup(grads, address)
        worst = max(worst, abs(analytic - numeric) / max(1.0, abs(analytic)))
    return worst


def random_admissible_case(
    kind: ActivationKind,
    rng: np.random.Generator,
    max_depth: int = 2,
    max_width: int = 4,
    max_batch: int = 8,
    margin: float = 1e-3,
    max_tries: int = 1000,
):
    """Random small network and batch whose pre-activations all avoid kinks.

    The output units are biased positive so their ReLUs are active for the
    whole batch; otherwise every gradient below them is identically zero.
    """
    for _ in range(max_tries):
        depth = int(rng.integers(1, max_depth + 1))
        width = int(rng.integers(1, max_width + 1))
        input_dim = int(rng.integers(1, 4))
        n = int(rng.integers(1, max_batch + 1))
        spec = NetworkSpec(input_dim, width, depth, kind, seed=int(rng.integers(2**31)))
        net = build_network(spec, rng)
        if kind is ActivationKind.PARAMETRICSPLIT:
            # cover both the three-piece and the gapped two-piece regimes
            for layer in net.layers[:-1]:
                a = float(rng.choice([rng.uniform(0.05, 1.5), rng.uniform(1.65, 3.0)]))
                layer.activation = layer.activation.with_params([a, rng.uniform(0.1, 1.0)])
        net.layers[-1].bias[:] = rng.uniform(2.0, 4.0, size=net.layers[-1].fan_out)
        net.logit_offset = float(rng.normal(0.0, 1.0))
        x = rng.normal(0.0, 1.0, size=(n, input_dim))
        y = rng.integers(0, 2, size=n)
        if min_boundary_distance(net, x) > margin:
            return net, x, y
    raise RuntimeError(f"could not draw an admissible {kind.value} case")
