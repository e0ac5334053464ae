# Compare every analytic derivative against central differences.
import numpy as np

from topoact import ActivationKind, make_state
from topoact.activations import finite_diff_check
from topoact.gradcheck import run_all
from topoact.nn import network_gradcheck, random_admissible_case

state = make_state("smoothsplit", c=0.4, alpha=2.0)
x = np.linspace(-3, 3, 101)
print("smoothsplit max rel err:", finite_diff_check(state, x))

# kinks are off limits: x = 0 is a boundary of signsplit
try:
    finite_diff_check(make_state("signsplit", c=0.5), np.array([0.0]))
except ValueError as exc:
    print("rejected:", exc)

rng = np.random.default_rng(1)
net, xb, yb = random_admissible_case(ActivationKind.PARAMETRICSPLIT, rng)
print("whole network, parametricsplit:", network_gradcheck(net, xb, yb))

for r in run_all(trials=5, points=50):
    print(f"{r.name:28s} {r.max_error:.2e}  {'ok' if r.passed else 'FAILED'}")
