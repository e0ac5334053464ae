"""Seeded experiment grids over datasets, activations, depths and widths.

A grid expands into one :class:`RunSpec` per (dataset, activation, depth,
width, run). Every run derives its seeds from the base seed and its own key,
so results do not depend on execution order or on which other cells exist.
Within a run index, all cells of a dataset share the same sample and split,
which makes activation comparisons paired.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import data as data_mod
from .activations import ActivationKind
from .nn import NetworkSpec, train

log = logging.getLogger(__name__)

DATASET_TITLES = {"circles": "Circles", "torus": "CurvesOnTorus", "wdbc": "BreastCancer"}
GRID_WIDTHS = {"circles": (2, 3, 4), "torus": (3, 4, 5, 6, 7), "wdbc": (30, 40, 80, 100)}
GRID_ACTIVATIONS = ("tanh", "relu", "prelu", "smoothsplit", "parametricsplit")

RECORD_FIELDS = ("dataset", "activation", "depth", "width", "run", "seed", "val_loss", "val_accuracy")
AGGREGATE_FIELDS = ("dataset", "activation", "depth", "width", "mean_loss", "std_loss", "runs")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    """Which dataset to build and the layer widths to try on it.

    ``options`` are passed to the generator (``n``, ``noise_sigma``, ...);
    for ``wdbc`` they may hold ``path`` and ``positive``.
    """

    name: str
    widths: tuple[int, ...]
    options: tuple[tuple[str, Any], ...] = ()
    standardize: bool = False

    def __post_init__(self):
        if self.name not in DATASET_TITLES:
            raise ConfigError(f"unknown dataset {self.name!r}; expected one of {sorted(DATASET_TITLES)}")
        if not self.widths or any(int(w) < 1 for w in self.widths):
            raise ConfigError(f"{self.name}: widths must be positive integers")

    @property
    def title(self) -> str:
        return DATASET_TITLES[self.name]

    def build(self, rng: np.random.Generator) -> data_mod.Dataset:
        opts = dict(self.options)
        if self.name == "circles":
            d = data_mod.gen_circles(rng=rng, **opts)
        elif self.name == "torus":
            d = data_mod.gen_curves_on_torus(rng=rng, **opts)
        else:
            d = data_mod.load_wdbc(**opts)
        if self.standardize:
            d = data_mod.standardize(d)[0]
        return d


@dataclass(frozen=True)
class GridConfig:
    datasets: tuple[DatasetSpec, ...]
    activations: tuple[str, ...] = GRID_ACTIVATIONS
    depths: tuple[int, ...] = (1, 2, 3)
    runs: int = 10
    epochs: int = 100
    lr: float = 0.05
    batch_size: int = 32
    base_seed: int = 0
    ratio: float = 0.7
    clip: Optional[float] = None
    fixed_data: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if self.lr < 0:
            raise ConfigError("lr must be non-negative")
        if not 0 < self.ratio < 1:
            raise ConfigError("ratio must lie in (0, 1)")
        if any(d < 1 for d in self.depths):
            raise ConfigError("depths must be >= 1")
        for name in self.activations:
            try:
                ActivationKind.parse(name)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    @classmethod
    def standard(cls, datasets: Sequence[str] = ("circles", "torus", "wdbc"), **overrides) -> "GridConfig":
        specs = tuple(DatasetSpec(name, GRID_WIDTHS[name]) for name in datasets)
        return cls(datasets=specs, **overrides)

    @classmethod
    def from_dict(cls, raw: dict) -> "GridConfig":
        raw = dict(raw)
        known = {f.name for f in fields(cls)} | {"standardize"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        standardize = bool(raw.pop("standardize", False))
        entries = raw.pop("datasets", None)
        if not entries:
            raise ConfigError("config needs a non-empty 'datasets' list")
        specs = []
        for entry in entries:
            if isinstance(entry, str):
                entry = {"name": entry}
            entry = dict(entry)
            name = entry.pop("name", None)
            if name not in DATASET_TITLES:
                raise ConfigError(f"unknown dataset {name!r}; expected one of {sorted(DATASET_TITLES)}")
            widths = tuple(int(w) for w in entry.pop("widths", GRID_WIDTHS[name]))
            std = bool(entry.pop("standardize", standardize))
            specs.append(DatasetSpec(name, widths, tuple(sorted(entry.items())), std))
        for key in ("activations", "depths"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(datasets=tuple(specs), **raw)

    @classmethod
    def load(cls, path) -> "GridConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["datasets"] = [
            {"name": d.name, "widths": list(d.widths), "standardize": d.standardize, **dict(d.options)}
            for d in self.datasets
        ]
        out["activations"] = list(self.activations)
        out["depths"] = list(self.depths)
        return out


@dataclass(frozen=True)
class RunSpec:
    dataset: DatasetSpec
    activation: str
    depth: int
    width: int
    run: int
    seed: int
    data_seed: int
    epochs: int = 100
    lr: float = 0.05
    batch_size: int = 32
    ratio: float = 0.7
    clip: Optional[float] = None

    @property
    def cell(self) -> tuple[str, str, int, int]:
        return (self.dataset.name, self.activation, self.depth, self.width)


@dataclass(frozen=True)
class RunRecord:
    dataset: str
    activation: str
    depth: int
    width: int
    run: int
    seed: int
    val_loss: float
    val_accuracy: float
    wall_time: float = field(default=0.0, compare=False)

    @property
    def cell(self) -> tuple[str, str, int, int]:
        return (self.dataset, self.activation, self.depth, self.width)


@dataclass(frozen=True)
class AggregateRecord:
    dataset: str
    activation: str
    depth: int
    width: int
    mean_loss: float
    std_loss: float
    runs: int

    @property
    def cell(self) -> tuple[str, str, int, int]:
        return (self.dataset, self.activation, self.depth, self.width)


@dataclass
class GridResult:
    records: list[RunRecord]
    failures: list[tuple[RunSpec, str]]


def derive_seed(base_seed: int, *key) -> int:
    """63-bit seed from a base seed and a key tuple (stable across Python runs)."""
    text = "|".join(str(k) for k in (base_seed, *key))
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def expand_grid(cfg: GridConfig) -> list[RunSpec]:
    specs = []
    for ds in cfg.datasets:
        for act in cfg.activations:
            act = ActivationKind.parse(act).value
            for depth in cfg.depths:
                for width in ds.widths:
                    for run in range(cfg.runs):
                        seed = derive_seed(cfg.base_seed, ds.name, act, depth, width, run)
                        data_key = ("data", ds.name) if cfg.fixed_data else ("data", ds.name, run)
                        specs.append(
                            RunSpec(
                                ds, act, int(depth), int(width), run, seed,
                                derive_seed(cfg.base_seed, *data_key),
                                cfg.epochs, cfg.lr, cfg.batch_size, cfg.ratio, cfg.clip,
                            )
                        )
    return specs


def prepare_data(spec: RunSpec) -> data_mod.SplitDataset:
    rng = np.random.default_rng(spec.data_seed)
    d = spec.dataset.build(rng)
    return data_mod.split(d, spec.ratio, rng)


def run_one(spec: RunSpec) -> RunRecord:
    start = time.perf_counter()
    splitted = prepare_data(spec)
    net_spec = NetworkSpec(
        splitted.train.dim, spec.width, spec.depth, ActivationKind.parse(spec.activation), spec.seed
    )
    rng = np.random.default_rng(spec.seed)
    _, report = train(net_spec, splitted, spec.epochs, spec.lr, spec.batch_size, rng, spec.clip)
    return RunRecord(
        spec.dataset.name, spec.activation, spec.depth, spec.width, spec.run, spec.seed,
        report.final_val_loss, report.val_accuracy, time.perf_counter() - start,
    )


def _guarded(spec: RunSpec):
    try:
        return run_one(spec)
    except Exception as exc:  # isolated per run, reported by run_grid
        return f"{type(exc).__name__}: {exc}"


def run_grid(cfg: GridConfig, parallelism: int = 1) -> GridResult:
    """Run every spec; failures are collected instead of aborting the grid."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    specs = expand_grid(cfg)
    if parallelism == 1:
        outcomes = [_guarded(s) for s in specs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(_guarded, specs, chunksize=max(1, len(specs) // (4 * parallelism))))
    records, failures = [], []
    for spec, outcome in zip(specs, outcomes):
        if isinstance(outcome, RunRecord):
            log.info("%s run %d: val loss %.4f", spec.cell, spec.run, outcome.val_loss)
            records.append(outcome)
        else:
            log.warning("run failed %s run %d: %s", spec.cell, spec.run, outcome)
            failures.append((spec, outcome))
    return GridResult(records, failures)


def aggregate(records: Iterable[RunRecord]) -> list[AggregateRecord]:
    """Mean and sample standard deviation per cell, in first-seen cell order."""
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault(r.cell, []).append(r.val_loss)
    out = []
    for (dataset, act, depth, width), losses in groups.items():
        arr = np.asarray(losses, dtype=float)
        std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        out.append(AggregateRecord(dataset, act, depth, width, float(arr.mean()), std, len(arr)))
    return out


# -- serialisation -----------------------------------------------------------------


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])
    return buf.getvalue()


def read_records_csv(path) -> list[RunRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(RECORD_FIELDS) <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {', '.join(RECORD_FIELDS)}")
        rows = list(reader)
    return [
        RunRecord(
            r["dataset"], r["activation"], int(r["depth"]), int(r["width"]), int(r["run"]),
            int(r["seed"]), float(r["val_loss"]), float(r["val_accuracy"]),
        )
        for r in rows
    ]


def aggregates_to_csv(aggregates: Iterable[AggregateRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_FIELDS)
    for a in aggregates:
        w.writerow([_fmt(getattr(a, f)) for f in AGGREGATE_FIELDS])
    return buf.getvalue()


def format_cell(mean: float, std: float) -> str:
    return f"{mean:.3f} (±{std:.3f})"


def markdown_table(aggregates: Sequence[AggregateRecord]) -> str:
    """One results table per dataset.

    Rows are grouped by depth, columns are widths. Within each depth block the
    lowest mean of every column is bold; ties are all bold.
    """
    by_cell = {a.cell: a for a in aggregates}
    datasets = list(dict.fromkeys(a.dataset for a in aggregates))
    blocks = []
    for ds in datasets:
        rows = [a for a in aggregates if a.dataset == ds]
        widths = sorted({a.width for a in rows})
        depths = sorted({a.depth for a in rows})
        acts = list(dict.fromkeys(a.activation for a in rows))
        title = DATASET_TITLES.get(ds, ds)
        lines = [
            f"**{title}**",
            "",
            "| # of layers | Activation | " + " | ".join(str(w) for w in widths) + " |",
            "|---|---|" + "---|" * len(widths),
        ]
        for depth in depths:
            best = {}
            for w in widths:
                means = [
                    round(by_cell[(ds, act, depth, w)].mean_loss, 3)
                    for act in acts
                    if (ds, act, depth, w) in by_cell
                ]
                best[w] = min(means) if means else None
            for i, act in enumerate(acts):
                cells = []
                for w in widths:
                    agg = by_cell.get((ds, act, depth, w))
                    if agg is None:
                        cells.append("")
                        continue
                    text = format_cell(agg.mean_loss, agg.std_loss)
                    if round(agg.mean_loss, 3) == best[w]:
                        text = f"**{text}**"
                    cells.append(text)
                label = str(depth) if i == 0 else ""
                lines.append(f"| {label} | {act} | " + " | ".join(cells) + " |")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def write_report(aggregates: Sequence[AggregateRecord], path, fmt: str = "csv") -> Path:
    if fmt == "csv":
        text = aggregates_to_csv(aggregates)
    elif fmt in ("markdown", "markdown-table", "md"):
        text = markdown_table(aggregates)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def write_timings(records: Iterable[RunRecord], path) -> Path:
    """Wall times live apart from the records so record files stay reproducible."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("dataset", "activation", "depth", "width", "run", "wall_time"))
        for r in records:
            w.writerow((r.dataset, r.activation, r.depth, r.width, r.run, f"{r.wall_time:.4f}"))
    return path


def cell_mean(records: Iterable[RunRecord], dataset: str, activation: str, depth: int, width: int) -> float:
    losses = [r.val_loss for r in records if r.cell == (dataset, activation, depth, width)]
    if not losses:
        raise KeyError((dataset, activation, depth, width))
    return float(np.mean(losses))
