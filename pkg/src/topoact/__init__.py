"""Topology-aware activation functions and a small numpy training harness."""

from .activations import (
    ActivationKind,
    ActivationState,
    activation_backward,
    activation_forward,
    finite_diff_check,
    init_activation,
    make_state,
    parametricsplit_eval,
    signsplit_eval,
    smoothsplit_eval,
)

__version__ = "0.1.0"
