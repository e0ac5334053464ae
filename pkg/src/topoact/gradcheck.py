"""Randomised finite-difference checks for every activation and for whole networks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .activations import ActivationKind, ActivationState, branch_boundaries, finite_diff_check
from .nn import network_gradcheck, random_admissible_case

ACTIVATION_TOL = 1e-6
NETWORK_TOL = 1e-5


@dataclass
class CheckResult:
    name: str
    max_error: float
    tolerance: float
    cases: int

    @property
    def passed(self) -> bool:
        return math.isfinite(self.max_error) and self.max_error <= self.tolerance


def random_params(kind: ActivationKind, rng: np.random.Generator) -> ActivationState:
    if kind is ActivationKind.PRELU:
        params = (rng.uniform(0.0, 1.0),)
    elif kind is ActivationKind.SIGNSPLIT:
        params = (rng.uniform(0.0, 1.0),)
    elif kind is ActivationKind.SMOOTHSPLIT:
        params = (rng.uniform(0.0, 1.0), rng.uniform(0.0, 3.0))
    elif kind is ActivationKind.PARAMETRICSPLIT:
        # both sides of pi/2: three-piece and gapped two-piece shapes
        a = rng.uniform(0.05, 1.5) if rng.random() < 0.5 else rng.uniform(1.65, 3.0)
        params = (a, rng.uniform(0.0, 1.0))
    else:
        params = ()
    return ActivationState(kind, params)


def admissible_points(
    state: ActivationState, n: int, rng: np.random.Generator, low=-3.0, high=3.0, margin=1e-3
) -> np.ndarray:
    """``n`` uniform points that keep more than ``margin`` away from every kink."""
    bounds = np.asarray(branch_boundaries(state))
    out = np.empty(0)
    while out.size < n:
        x = rng.uniform(low, high, size=2 * n)
        if bounds.size:
            x = x[np.min(np.abs(x[:, None] - bounds[None, :]), axis=1) > 2 * margin]
        out = np.concatenate([out, x])
    return out[:n]


def check_activation(
    kind: ActivationKind, trials: int = 20, points: int = 100, seed: int = 0, h: float = 1e-5
) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        state = random_params(kind, rng)
        x = admissible_points(state, points, rng)
        worst = max(worst, finite_diff_check(state, x, h))
    return CheckResult(kind.value, worst, ACTIVATION_TOL, trials)


def check_network(kind: ActivationKind, trials: int = 20, seed: int = 0, h: float = 1e-5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        net, x, y = random_admissible_case(kind, rng)
        worst = max(worst, network_gradcheck(net, x, y, h))
    return CheckResult(f"network[{kind.value}]", worst, NETWORK_TOL, trials)


def run_all(trials: int = 20, points: int = 100, seed: int = 0) -> list[CheckResult]:
    if trials < 1 or points < 1:
        raise ValueError("trials and points must be >= 1")
    results = []
    for i, kind in enumerate(ActivationKind):
        results.append(check_activation(kind, trials, points, seed + i))
    for i, kind in enumerate(ActivationKind):
        results.append(check_network(kind, trials, seed + 100 + i))
    return results
