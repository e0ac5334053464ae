import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topoact.activations import (
    ActivationKind,
    ActivationState,
    BoundaryError,
    activation_backward,
    activation_forward,
    finite_diff_check,
    init_activation,
    make_state,
    parametricsplit_eval,
    relu,
    signsplit_eval,
    smoothsplit_eval,
)

K = ActivationKind
GRID = np.round(np.arange(-5.0, 5.0 + 1e-9, 1e-3), 10)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def _pieces(x, a, b):
    """The three formulas of parametricsplit, without any branch selection."""
    return (
        b * x + b * math.cos(a) - math.sin(a),
        x * math.tan(a),
        x + math.sin(a) - math.cos(a),
    )


# -- state and init ------------------------------------------------------------------


def test_arity_per_kind():
    assert [k.arity for k in K] == [0, 0, 1, 1, 2, 2]


def test_state_rejects_wrong_arity_and_nonfinite():
    with pytest.raises(ValueError):
        ActivationState(K.SMOOTHSPLIT, (0.2,))
    with pytest.raises(ValueError):
        ActivationState(K.SIGNSPLIT, (math.inf,))


def test_make_state_by_name():
    s = make_state("smoothsplit", alpha=40, c=0.2)
    assert s.params == (0.2, 40.0)
    with pytest.raises(ValueError):
        make_state("parametricsplit", a=1.0)
    with pytest.raises(ValueError):
        make_state("cube")


def test_init_signsplit_in_unit_interval():
    s = init_activation(K.SIGNSPLIT, np.random.default_rng(7))
    assert 0.0 <= s.params[0] < 1.0


@pytest.mark.parametrize("kind", [K.RELU, K.TANH])
def test_init_parameterless(kind):
    assert init_activation(kind, np.random.default_rng(3)).params == ()


def test_init_is_deterministic():
    a = init_activation(K.PARAMETRICSPLIT, np.random.default_rng(7))
    b = init_activation(K.PARAMETRICSPLIT, np.random.default_rng(7))
    assert a == b


def test_init_ranges():
    rng = np.random.default_rng(0)
    for _ in range(200):
        c, alpha = init_activation(K.SMOOTHSPLIT, rng).params
        a, b = init_activation(K.PARAMETRICSPLIT, rng).params
        assert 0 <= c < 1 and 0 <= alpha < 1
        assert 0 <= a < math.pi / 2 and 0 <= b < 1
    assert init_activation(K.PRELU, rng).params == (0.25,)


# -- scalar maps ----------------------------------------------------------------------


def test_signsplit_examples():
    assert signsplit_eval(0.5, 0.2) == pytest.approx(0.7)
    assert signsplit_eval(0.0, 0.9) == 0.0
    assert signsplit_eval(-0.5, 0.2) == pytest.approx(-0.7)


def test_smoothsplit_examples():
    assert smoothsplit_eval(0.0, 0.7, 3.0) == 0.0
    assert abs(smoothsplit_eval(1.0, 0.2, 40.0) - 1.2) <= 1e-12


def test_parametricsplit_examples():
    assert parametricsplit_eval(2.0, 0.0, 0.0) == pytest.approx(1.0)
    assert parametricsplit_eval(0.5, math.pi / 2, 1.0) == pytest.approx(1.5)
    assert parametricsplit_eval(1.0, 3 * math.pi / 4, 1.0) == pytest.approx(1 + math.sqrt(2), abs=1e-12)
    assert parametricsplit_eval(0.5, 0.0, 0.0) == 0.0


def test_parametricsplit_matches_pieces_in_three_piece_regime():
    # for cos a > 0 the displayed case conditions are disjoint up to endpoints
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b = rng.uniform(0.01, 1.55), rng.uniform(-1, 2)
        cos_a = math.cos(a)
        for x in rng.uniform(-4, 4, size=40):
            left, mid, right = _pieces(x, a, b)
            expected = left if x <= -cos_a else (mid if x <= cos_a else right)
            assert parametricsplit_eval(x, a, b) == pytest.approx(expected, abs=1e-12)


def test_parametricsplit_tan_singularity_skips_middle():
    a = math.acos(5e-13)
    assert 0 < math.cos(a) < 1e-12
    y = parametricsplit_eval(np.array([-1.0, 0.0, 1e-13, 1.0]), a, 1.0)
    assert np.all(np.isfinite(y))
    assert y[-1] == pytest.approx(1.0 + math.sin(a) - math.cos(a))


@pytest.mark.parametrize(
    "kind,params,x,expected",
    [
        (K.RELU, (), [-2.0, 0.0, 3.0], [0.0, 0.0, 3.0]),
        (K.TANH, (), [0.0], [0.0]),
        (K.SIGNSPLIT, (0.2,), [0.5, -0.5], [0.7, -0.7]),
        (K.PRELU, (0.25,), [-4.0, 2.0], [-1.0, 2.0]),
    ],
)
def test_forward_examples(kind, params, x, expected):
    np.testing.assert_allclose(activation_forward(ActivationState(kind, params), x), expected)


# -- invariants ---------------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    kind=st.sampled_from(list(K)),
    xs=st.lists(finite, min_size=0, max_size=20),
    seed=st.integers(0, 2**16),
)
def test_shape_preservation(kind, xs, seed):
    state = init_activation(kind, np.random.default_rng(seed))
    x = np.array(xs, dtype=float)
    assert activation_forward(state, x).shape == x.shape
    assert activation_forward(state, x.reshape(-1, 1)).shape == (len(xs), 1)


def test_continuity_at_both_boundaries():
    for a in np.linspace(0.01, 1.55, 200):
        b = 0.37
        for x in (-math.cos(a), math.cos(a)):
            left, mid, right = _pieces(x, a, b)
            if x < 0:
                assert abs(left - mid) <= 1e-12
            else:
                assert abs(mid - right) <= 1e-12


def test_special_case_relu_shift():
    err = np.max(np.abs(parametricsplit_eval(GRID, 0.0, 0.0) - relu(GRID - 1)))
    assert err <= 1e-12


def test_special_case_signsplit():
    keep = np.abs(GRID) >= 1e-6
    y = parametricsplit_eval(GRID[keep], math.pi / 2, 1.0)
    assert np.max(np.abs(y - signsplit_eval(GRID[keep], 1.0))) <= 1e-12


def test_special_case_signsplit_disagrees_only_at_origin():
    # sign(0) = 0 pins signsplit's origin; parametricsplit lands on a jump edge.
    # In floats cos(pi/2) ~ 6e-17 > 0, so x = 0 takes the right piece.
    assert parametricsplit_eval(0.0, math.pi / 2, 1.0) == pytest.approx(1.0)
    assert signsplit_eval(0.0, 1.0) == 0.0


@pytest.mark.parametrize("c", [0.2, 1.0])
def test_large_alpha_limit(c):
    x = GRID[np.abs(GRID) >= 0.01]
    assert np.max(np.abs(smoothsplit_eval(x, c, 1e6) - signsplit_eval(x, c))) <= 1e-9


def test_smoothsplit_large_alpha_example():
    x = np.array([-2.0, -0.01, 0.01, 0.5, 3.0])
    np.testing.assert_allclose(smoothsplit_eval(x, 0.2, 1e6), signsplit_eval(x, 0.2), atol=1e-9, rtol=0)


@settings(max_examples=100, deadline=None)
@given(
    c=st.floats(0, 5),
    alpha=st.floats(0, 50),
    xs=st.lists(st.floats(-20, 20), min_size=2, max_size=30, unique=True),
)
def test_smoothsplit_strictly_increasing(c, alpha, xs):
    x = np.sort(np.array(xs))
    y = smoothsplit_eval(x, c, alpha)
    assert np.all(np.diff(y) > 0)


def test_splitting_gap():
    a = 3 * math.pi / 4
    x = np.linspace(-10, 10, 200_001)
    y = parametricsplit_eval(x, a, 1.0)
    lo, hi = math.sqrt(2) / 2 - math.sqrt(2), math.sqrt(2) / 2 + math.sqrt(2)
    assert not np.any((y > lo) & (y < hi))
    # both edges of the gap are approached
    assert np.max(y[y <= lo]) == pytest.approx(lo, abs=1e-4)
    assert np.min(y[y >= hi]) == pytest.approx(hi, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.01, 1.55), b=st.floats(-2, 2), x=st.floats(-10, 10))
def test_parametricsplit_is_continuous_for_acute_angles(a, b, x):
    h = 1e-9
    assert abs(parametricsplit_eval(x + h, a, b) - parametricsplit_eval(x, a, b)) <= 1e-7 * max(1, abs(math.tan(a)))


# -- backward -------------------------------------------------------------------------------


def test_backward_smoothsplit_at_origin():
    g = activation_backward(make_state("smoothsplit", c=0.2, alpha=40), [0.0], [1.0])
    np.testing.assert_allclose(g.d_input, [9.0])
    np.testing.assert_allclose(g.d_params, [0.0, 0.0])


def test_backward_parametricsplit_right_branch():
    state = make_state("parametricsplit", a=0.0, b=0.0)
    g = activation_backward(state, [2.0], [1.0])
    np.testing.assert_allclose(g.d_input, [1.0])
    np.testing.assert_allclose(g.d_params, [1.0, 0.0])
    # independent check by central differences on a
    h = 1e-6
    numeric = (parametricsplit_eval(2.0, h, 0.0) - parametricsplit_eval(2.0, -h, 0.0)) / (2 * h)
    assert numeric == pytest.approx(1.0, abs=1e-8)


def test_backward_relu():
    g = activation_backward(ActivationState(K.RELU), [-1.0, 2.0], [5.0, 5.0])
    np.testing.assert_allclose(g.d_input, [0.0, 5.0])
    assert g.d_params.shape == (0,)


def test_backward_shapes_match():
    state = make_state("parametricsplit", a=0.9, b=0.4)
    x = np.random.default_rng(0).normal(size=(5, 3))
    g = activation_backward(state, x, np.ones_like(x))
    assert g.d_input.shape == x.shape and g.d_params.shape == (2,)
    with pytest.raises(ValueError):
        activation_backward(state, x, np.ones(3))


def test_boundary_uses_forward_branch():
    # at x = -cos a the forward rule picks the left piece, so the slope is b
    a, b = 0.8, 0.3
    g = activation_backward(make_state("parametricsplit", a=a, b=b), [-math.cos(a)], [1.0])
    assert g.d_input[0] == pytest.approx(b)


# -- finite-difference check ---------------------------------------------------------------


def test_fd_smoothsplit():
    x = np.random.default_rng(0).uniform(-3, 3, 100)
    assert finite_diff_check(make_state("smoothsplit", c=0.3, alpha=0.7), x, 1e-5) <= 1e-6


def test_fd_parametricsplit():
    a = 0.9
    x = np.random.default_rng(1).uniform(-3, 3, 300)
    x = x[np.minimum(np.abs(x - math.cos(a)), np.abs(x + math.cos(a))) > 1e-2]
    assert finite_diff_check(make_state("parametricsplit", a=a, b=0.4), x, 1e-5) <= 1e-6


def test_fd_relu_exact():
    assert finite_diff_check(ActivationState(K.RELU), [1.0, -1.0], 1e-5) <= 1e-9


def test_fd_rejects_points_near_kinks():
    with pytest.raises(BoundaryError):
        finite_diff_check(ActivationState(K.RELU), [1.0, 5e-4])
    with pytest.raises(BoundaryError):
        finite_diff_check(make_state("parametricsplit", a=0.9, b=0.4), [math.cos(0.9) + 1e-4])


def test_fd_detects_wrong_derivative(monkeypatch):
    from topoact import activations

    def wrong(x, params):
        c, alpha = params
        t = np.tanh(alpha * x)
        return 1.0 + c * alpha * (1 - t * t), [t, 2 * c * x * (1 - t * t)]

    monkeypatch.setitem(activations.DERIVATIVES, K.SMOOTHSPLIT, wrong)
    x = np.linspace(-2, 2, 50)
    assert finite_diff_check(make_state("smoothsplit", c=0.3, alpha=0.7), x) > 1e-2
