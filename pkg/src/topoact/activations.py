"""Elementwise activations with learnable scalar parameters.

Every function here works on numpy arrays of any shape. Learnable
parameters are shared by all units of a layer, so each activation state
carries a short tuple of scalars.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ActivationKind",
    "ActivationState",
    "ActivationGrads",
    "BoundaryError",
    "init_activation",
    "make_state",
    "relu",
    "signsplit_eval",
    "smoothsplit_eval",
    "parametricsplit_eval",
    "activation_forward",
    "activation_backward",
    "branch_boundaries",
    "finite_diff_check",
]

# cos(a) below this is treated as zero: the middle parametricsplit piece is skipped
COS_EPS = 1e-12
PRELU_INIT = 0.25


class ActivationKind(enum.Enum):
    RELU = "relu"
    TANH = "tanh"
    PRELU = "prelu"
    SIGNSPLIT = "signsplit"
    SMOOTHSPLIT = "smoothsplit"
    PARAMETRICSPLIT = "parametricsplit"

    @property
    def param_names(self) -> tuple[str, ...]:
        return _PARAM_NAMES[self]

    @property
    def arity(self) -> int:
        return len(_PARAM_NAMES[self])

    @classmethod
    def parse(cls, name: str) -> "ActivationKind":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown activation {name!r}; expected one of {valid}") from None


_PARAM_NAMES = {
    ActivationKind.RELU: (),
    ActivationKind.TANH: (),
    ActivationKind.PRELU: ("slope",),
    ActivationKind.SIGNSPLIT: ("c",),
    ActivationKind.SMOOTHSPLIT: ("c", "alpha"),
    ActivationKind.PARAMETRICSPLIT: ("a", "b"),
}


@dataclass(frozen=True)
class ActivationState:
    """An activation kind together with its current parameter values."""

    kind: ActivationKind
    params: tuple[float, ...] = ()

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        if len(params) != self.kind.arity:
            raise ValueError(
                f"{self.kind.value} takes {self.kind.arity} parameter(s), got {len(params)}"
            )
        if not all(math.isfinite(p) for p in params):
            raise ValueError(f"non-finite activation parameters {params}")
        object.__setattr__(self, "params", params)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.kind.param_names, self.params))

    def with_params(self, params: Sequence[float]) -> "ActivationState":
        return ActivationState(self.kind, tuple(params))


@dataclass(frozen=True)
class ActivationGrads:
    d_input: np.ndarray
    d_params: np.ndarray


class BoundaryError(ValueError):
    """Raised when a gradient check is requested too close to a kink."""


def make_state(kind: ActivationKind | str, **params: float) -> ActivationState:
    """Build a state from keyword parameters, e.g. ``make_state("smoothsplit", c=0.2, alpha=40)``."""
    if isinstance(kind, str):
        kind = ActivationKind.parse(kind)
    missing = set(kind.param_names) - set(params)
    extra = set(params) - set(kind.param_names)
    if missing or extra:
        raise ValueError(
            f"{kind.value} expects parameters {kind.param_names}; "
            f"missing {sorted(missing)}, unexpected {sorted(extra)}"
        )
    return ActivationState(kind, tuple(params[name] for name in kind.param_names))


def init_activation(kind: ActivationKind, rng: np.random.Generator) -> ActivationState:
    if kind is ActivationKind.PRELU:
        return ActivationState(kind, (PRELU_INIT,))
    if kind is ActivationKind.SIGNSPLIT:
        return ActivationState(kind, (rng.uniform(0.0, 1.0),))
    if kind is ActivationKind.SMOOTHSPLIT:
        c = rng.uniform(0.0, 1.0)
        alpha = rng.uniform(0.0, 1.0)
        return ActivationState(kind, (c, alpha))
    if kind is ActivationKind.PARAMETRICSPLIT:
        a = rng.uniform(0.0, math.pi / 2)
        b = rng.uniform(0.0, 1.0)
        return ActivationState(kind, (a, b))
    return ActivationState(kind, ())


# -- scalar maps -------------------------------------------------------------


def relu(x):
    return np.maximum(x, 0.0)


def signsplit_eval(x, c):
    return x + np.sign(x) * c


def smoothsplit_eval(x, c, alpha):
    return x + np.tanh(alpha * x) * c


def _parametricsplit_branches(x, a):
    """Branch index (0, 1, 2) per element under first-match ordering."""
    cos_a = math.cos(a)
    x = np.asarray(x, dtype=float)
    first = x <= -cos_a
    if cos_a > COS_EPS:
        middle = ~first & (x <= cos_a)
    else:
        middle = np.zeros_like(first)
    return np.where(first, 0, np.where(middle, 1, 2))


def parametricsplit_eval(x, a, b):
    """Three-piece map: slope ``b`` on the left, ``tan a`` in the middle, 1 on the right.

    Conditions are tested left piece first, so when ``cos a <= 0`` the middle
    piece disappears and the map jumps across a gap instead.
    """
    x_arr = np.asarray(x, dtype=float)
    cos_a, sin_a = math.cos(a), math.sin(a)
    branch = _parametricsplit_branches(x_arr, a)
    left = b * x_arr + b * cos_a - sin_a
    right = x_arr + sin_a - cos_a
    if cos_a > COS_EPS:
        mid = x_arr * math.tan(a)
    else:
        mid = np.zeros_like(x_arr)
    out = np.where(branch == 0, left, np.where(branch == 1, mid, right))
    return out if out.ndim else float(out)


# -- derivatives ---------------------------------------------------------------
# Each entry maps (x, params) to (dy/dx, [dy/dparam_j ...]) with arrays shaped like x.


def _d_relu(x, params):
    return (x > 0).astype(float), []


def _d_tanh(x, params):
    t = np.tanh(x)
    return 1.0 - t * t, []


def _d_prelu(x, params):
    (slope,) = params
    neg = x < 0
    return np.where(neg, slope, 1.0), [np.where(neg, x, 0.0)]


def _d_signsplit(x, params):
    return np.ones_like(x), [np.sign(x)]


def _d_smoothsplit(x, params):
    c, alpha = params
    t = np.tanh(alpha * x)
    sech2 = 1.0 - t * t
    return 1.0 + c * alpha * sech2, [t, c * x * sech2]


def _d_parametricsplit(x, params):
    a, b = params
    cos_a, sin_a = math.cos(a), math.sin(a)
    branch = _parametricsplit_branches(x, a)
    if cos_a > COS_EPS:
        tan_a, sec2_a = math.tan(a), 1.0 / (cos_a * cos_a)
    else:
        tan_a = sec2_a = 0.0
    dx = np.choose(branch, [np.full_like(x, b), np.full_like(x, tan_a), np.ones_like(x)])
    da = np.choose(
        branch,
        [np.full_like(x, -b * sin_a - cos_a), x * sec2_a, np.full_like(x, cos_a + sin_a)],
    )
    db = np.where(branch == 0, x + cos_a, 0.0)
    return dx, [da, db]


DERIVATIVES: dict[ActivationKind, Callable] = {
    ActivationKind.RELU: _d_relu,
    ActivationKind.TANH: _d_tanh,
    ActivationKind.PRELU: _d_prelu,
    ActivationKind.SIGNSPLIT: _d_signsplit,
    ActivationKind.SMOOTHSPLIT: _d_smoothsplit,
    ActivationKind.PARAMETRICSPLIT: _d_parametricsplit,
}


def activation_forward(state: ActivationState, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    kind, p = state.kind, state.params
    if kind is ActivationKind.RELU:
        return relu(x)
    if kind is ActivationKind.TANH:
        return np.tanh(x)
    if kind is ActivationKind.PRELU:
        return np.where(x < 0, p[0] * x, x)
    if kind is ActivationKind.SIGNSPLIT:
        return signsplit_eval(x, p[0])
    if kind is ActivationKind.SMOOTHSPLIT:
        return smoothsplit_eval(x, p[0], p[1])
    return np.asarray(parametricsplit_eval(x, p[0], p[1]))


def activation_backward(state: ActivationState, x, upstream) -> ActivationGrads:
    """Chain ``upstream`` through the activation.

    Parameter gradients are summed over every element because parameters are
    shared by the whole layer.
    """
    x = np.asarray(x, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    if x.shape != upstream.shape:
        raise ValueError(f"shape mismatch: x {x.shape} vs upstream {upstream.shape}")
    dx, dparams = DERIVATIVES[state.kind](x, state.params)
    d_params = np.array([float(np.sum(upstream * dp)) for dp in dparams])
    return ActivationGrads(d_input=upstream * dx, d_params=d_params)


# -- verification --------------------------------------------------------------


def branch_boundaries(state: ActivationState) -> list[float]:
    """Input locations where the activation has a kink or a jump."""
    kind = state.kind
    if kind in (ActivationKind.RELU, ActivationKind.PRELU, ActivationKind.SIGNSPLIT):
        return [0.0]
    if kind is ActivationKind.PARAMETRICSPLIT:
        cos_a = math.cos(state.params[0])
        if cos_a > COS_EPS:
            return [-cos_a, cos_a]
        return [-cos_a]
    return []


def finite_diff_check(state: ActivationState, x, h: float = 1e-5, margin: float = 1e-3) -> float:
    """Largest relative error between analytic and central-difference partials.

    Relative error is ``|analytic - numeric| / max(1, |analytic|)`` taken over
    every input partial and every parameter partial. Points closer than
    ``margin`` to a kink are rejected with :class:`BoundaryError`.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float).ravel()
    for boundary in branch_boundaries(state):
        close = np.abs(x - boundary) <= margin
        if np.any(close):
            raise BoundaryError(
                f"{int(close.sum())} point(s) within {margin} of the "
                f"{state.kind.value} boundary at {boundary:.6g}"
            )

    errors = []
    # input partials: unit upstream per element isolates dy_i/dx_i
    grads = activation_backward(state, x, np.ones_like(x))
    numeric_dx = (activation_forward(state, x + h) - activation_forward(state, x - h)) / (2 * h)
    errors.append(np.abs(grads.d_input - numeric_dx) / np.maximum(1.0, np.abs(grads.d_input)))

    # parameter partials, pointwise
    dx_unused, dparams = DERIVATIVES[state.kind](x, state.params)
    for j, analytic in enumerate(dparams):
        plus = list(state.params)
        minus = list(state.params)
        plus[j] += h
        minus[j] -= h
        numeric = (
            activation_forward(state.with_params(plus), x)
            - activation_forward(state.with_params(minus), x)
        ) / (2 * h)
        errors.append(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic)))
    return float(max(np.max(e) for e in errors))
