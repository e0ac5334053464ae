# Tour of the split activations and what they do to a point cloud.
# Run: python demos/01_activation_shapes.py
import math

import numpy as np

from topoact import make_state, activation_forward, parametricsplit_eval
from topoact.data import gen_circles, transform_pointcloud

x = np.linspace(-2, 2, 9)
print("x               ", np.round(x, 2))

for kind, params in [
    ("relu", {}),
    ("tanh", {}),
    ("signsplit", {"c": 0.5}),
    ("smoothsplit", {"c": 0.5, "alpha": 3.0}),
    ("parametricsplit", {"a": 0.6, "b": 0.2}),
    ("parametricsplit", {"a": 3 * math.pi / 4, "b": 1.0}),
]:
    y = activation_forward(make_state(kind, **params), x)
    print(f"{kind:16s}", np.round(y, 3), params)

# a = 0, b = 0 collapses everything left of 1 onto zero, like relu(x - 1)
print(parametricsplit_eval(x, 0.0, 0.0) - np.maximum(x - 1, 0))

# past a = pi/2 the middle piece vanishes and the line is cut in two
circles = gen_circles(1000, 0.0, rng=np.random.default_rng(0))
cut = transform_pointcloud(circles, make_state("parametricsplit", a=3 * math.pi / 4, b=1.0))
coords = cut.features.ravel()
print("largest coordinate below the gap:", coords[coords < 0].max())
print("smallest coordinate above the gap:", coords[coords > 0].min())

# each coordinate jumps the gap on its own, so the circle breaks into pieces;
# no point of the unit disc has both coordinates above cos(pi/4)
quadrant = (cut.features[:, 0] > 0).astype(int) * 2 + (cut.features[:, 1] > 0)
print("points per quadrant:", np.bincount(quadrant, minlength=4))
