# Raw (unstandardized) WDBC features saturate tanh units, and training
# settles on the class prior. Standardizing removes the collapse.
import math

import numpy as np

from topoact.activations import ActivationKind
from topoact.data import load_wdbc, split, standardize
from topoact.nn import NetworkSpec, bce_loss, train

d = load_wdbc()
q = d.labels.mean()
print(f"malignant fraction {q:.4f}, prior entropy {bce_loss(np.full(len(d), q), d.labels):.6f}")
print("largest raw feature:", d.features.max())

for label, data in [("raw", d), ("standardized", standardize(d)[0])]:
    losses = []
    for seed in range(3):
        rng = np.random.default_rng(seed)
        sp = split(data, 0.7, rng)
        _, rep = train(NetworkSpec(d.dim, 30, 1, ActivationKind.TANH, seed), sp, rng=rng)
        losses.append(rep.final_val_loss)
    print(f"{label:13s} tanh test loss per seed:", np.round(losses, 3))

print("ln 2 for reference:", round(math.log(2), 3))
