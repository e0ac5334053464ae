"""Datasets: synthetic manifolds, the Wisconsin breast cancer table, and splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .activations import ActivationState, activation_forward

PathLike = Union[str, Path]

WDBC_N_FEATURES = 30


@dataclass
class Dataset:
    name: str
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"features {self.features.shape} and labels {self.labels.shape} disagree"
            )
        if not np.all(np.isin(self.labels, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite values")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.name, self.features[idx], self.labels[idx])


@dataclass
class SplitDataset:
    train: Dataset
    test: Dataset
    ratio: float
    train_indices: Optional[np.ndarray] = None
    test_indices: Optional[np.ndarray] = None


class WdbcFormatError(ValueError):
    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.line = line


def _class_sizes(n: int) -> tuple[int, int]:
    return (n + 1) // 2, n // 2


def gen_circles(
    n: int = 1000,
    noise_sigma: float = 0.05,
    radius_ratio: float = 0.8,
    rng: Optional[np.random.Generator] = None,
) -> Dataset:
    """Two concentric noisy circles: unit radius (label 0) and ``radius_ratio`` (label 1)."""
    if n < 4:
        raise ValueError("n must be at least 4")
    if not 0 < radius_ratio < 1:
        raise ValueError("radius_ratio must lie in (0, 1)")
    rng = np.random.default_rng() if rng is None else rng
    n_outer, n_inner = _class_sizes(n)
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    radius = np.concatenate([np.ones(n_outer), np.full(n_inner, radius_ratio)])
    x = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    if noise_sigma > 0:
        x = x + rng.normal(0.0, noise_sigma, size=x.shape)
    labels = np.concatenate([np.zeros(n_outer, int), np.ones(n_inner, int)])
    return Dataset("circles", x, labels)


def gen_curves_on_torus(
    n: int = 4000,
    major_R: float = 2.0,
    minor_r: float = 1.0,
    phase: float = math.pi,
    noise_sigma: float = 0.05,
    rng: Optional[np.random.Generator] = None,
) -> Dataset:
    """Two phase-shifted (1,1) curves on a torus in R^3, one per class."""
    if not major_R > minor_r > 0:
        raise ValueError("need major_R > minor_r > 0")
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng() if rng is None else rng
    n0, n1 = _class_sizes(n)
    labels = np.concatenate([np.zeros(n0, int), np.ones(n1, int)])
    t = rng.uniform(0.0, 2 * math.pi, size=n)
    psi = t + labels * phase
    ring = major_R + minor_r * np.cos(psi)
    x = np.column_stack([ring * np.cos(t), ring * np.sin(t), minor_r * np.sin(psi)])
    if noise_sigma > 0:
        x = x + rng.normal(0.0, noise_sigma, size=x.shape)
    return Dataset("torus", x, labels)


def bundled_wdbc_path() -> Path:
    return Path(str(resources.files("topoact") / "datasets" / "wdbc.data"))


def load_wdbc(path: Optional[PathLike] = None, positive: str = "M") -> Dataset:
    """Read ``id,diagnosis,30 features`` rows. ``positive`` picks the diagnosis labelled 1.

    Without a path the copy shipped with the package is used.
    """
    if positive not in ("M", "B"):
        raise ValueError("positive must be 'M' or 'B'")
    path = bundled_wdbc_path() if path is None else Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"WDBC file not found: {path}")
    feats, labels = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != WDBC_N_FEATURES + 2:
                raise WdbcFormatError(
                    path, lineno, f"expected {WDBC_N_FEATURES + 2} fields, got {len(row)}"
                )
            diagnosis = row[1].strip()
            if diagnosis not in ("M", "B"):
                raise WdbcFormatError(path, lineno, f"unknown diagnosis {diagnosis!r}")
            try:
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise WdbcFormatError(path, lineno, str(exc)) from None
            if not all(math.isfinite(v) for v in values):
                raise WdbcFormatError(path, lineno, "non-finite feature value")
            feats.append(values)
            labels.append(1 if diagnosis == positive else 0)
    if not feats:
        raise WdbcFormatError(path, 0, "no data rows")
    return Dataset("wdbc", np.array(feats), np.array(labels))


def standardize(d: Dataset) -> tuple[Dataset, np.ndarray, np.ndarray]:
    """Zero-mean, unit-variance features (population std). Constant columns become 0."""
    mean = d.features.mean(axis=0)
    std = d.features.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    x = np.where(std > 0, (d.features - mean) / safe, 0.0)
    return Dataset(d.name, x, d.labels.copy()), mean, std


def split(d: Dataset, ratio: float = 0.7, rng: Optional[np.random.Generator] = None) -> SplitDataset:
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    n = len(d)
    n_train = int(math.floor(ratio * n + 0.5))
    if n_train == 0 or n_train == n:
        raise ValueError(f"ratio {ratio} leaves an empty side for n={n}")
    rng = np.random.default_rng() if rng is None else rng
    order = rng.permutation(n)
    train_idx, test_idx = order[:n_train], order[n_train:]
    return SplitDataset(d.subset(train_idx), d.subset(test_idx), ratio, train_idx, test_idx)


def transform_pointcloud(d: Dataset, state: ActivationState) -> Dataset:
    """Apply an activation to every coordinate of every point."""
    return Dataset(d.name, activation_forward(state, d.features), d.labels.copy())


def write_csv(d: Dataset, path: PathLike) -> None:
    header = [f"x{i}" for i in range(d.dim)] + ["label"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row, label in zip(d.features, d.labels):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


def read_csv(path: PathLike, name: Optional[str] = None) -> Dataset:
    """Inverse of :func:`write_csv`."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: expected a header ending in 'label'")
        rows = [r for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)
    return Dataset(name or path.stem, table[:, :-1], table[:, -1].astype(int))
