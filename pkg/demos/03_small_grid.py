"""A quick slice of the comparison grid on Circles.

Three seeds instead of ten and two widths, so it finishes in a few seconds.
"""
import logging

from topoact.experiments import DatasetSpec, GridConfig, aggregate, markdown_table, run_grid

logging.basicConfig(level=logging.WARNING)

cfg = GridConfig(
    datasets=(DatasetSpec("circles", (3, 4)),),
    activations=("tanh", "relu", "prelu", "smoothsplit", "parametricsplit"),
    depths=(1,),
    runs=3,
)
result = run_grid(cfg, parallelism=1)
print(markdown_table(aggregate(result.records)))

# same config, same numbers
again = run_grid(cfg)
print("reproducible:", [r.val_loss for r in again.records] == [r.val_loss for r in result.records])
