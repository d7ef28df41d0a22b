"""Synthetic biased dataset generator and class partitioning.

The generative recipe produces records (x, a, y, y_c) in which the features
mix an informative part with a spurious one:

1. y_c ~ Uniform([0,1] x [0,1])            (continuous 2D response)
2. y   = 1{y_c2 > 1 - y_c1}                (its binary discretization)
3. a   = b*y + (1-b)*(1-y),  b ~ Bernoulli(bias)   (sensitive attribute;
   a equals y with probability ``bias``)
4. x_core = [y_c tiled core_dim/2 times] + N(0, core_var * I)
   x_sp   = [a   tiled sp_dim   times]   + N(0, sp_var * I)
5. x = [x_core, x_sp]

With ``bias`` close to 1 the spurious block makes the sensitive attribute an
easy shortcut for predicting y, which is the failure mode the fairness
penalties are meant to correct.  Generation is single-pass with a fixed draw
order, so a config plus seed reproduces the dataset bit for bit.

Datasets persist as a CSV of records plus a JSON sidecar carrying the
generation config and the realized class sizes (public metadata under the
fixed-class-sizes neighboring relation).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "GenerationConfig",
    "BiasedDataset",
    "ClassPartition",
    "generate_biased",
    "partition",
    "centered_targets",
    "save_dataset",
    "load_dataset",
]


@dataclass(frozen=True)
class GenerationConfig:
    n: int
    bias: float
    core_dim: int = 8
    sp_dim: int = 8
    core_var: float = 0.2
    sp_var: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.bias <= 1.0:
            raise ValueError("bias must lie in [0, 1]")
        if self.core_dim < 2 or self.core_dim % 2 != 0:
            raise ValueError("core_dim must be a positive even number")
        if self.sp_dim < 1:
            raise ValueError("sp_dim must be >= 1")
        if self.core_var < 0 or self.sp_var < 0:
            raise ValueError("variances must be >= 0")


@dataclass
class BiasedDataset:
    x: np.ndarray        # (n, core_dim + sp_dim)
    a: np.ndarray        # (n,) in {0, 1}
    y: np.ndarray        # (n,) in {0, 1}
    yc: np.ndarray       # (n, 2) in [0, 1]^2
    config: GenerationConfig

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


def generate_biased(config: GenerationConfig) -> BiasedDataset:
    """Run the generative recipe; deterministic given the config seed."""
    rng = np.random.default_rng(config.seed)
    n = config.n
    yc = rng.uniform(0.0, 1.0, size=(n, 2))
    y = (yc[:, 1] > 1.0 - yc[:, 0]).astype(np.int64)
    b = (rng.uniform(0.0, 1.0, size=n) < config.bias).astype(np.int64)
    a = b * y + (1 - b) * (1 - y)
    x_core = (np.tile(yc, (1, config.core_dim // 2))
              + rng.normal(0.0, np.sqrt(config.core_var),
                           size=(n, config.core_dim)))
    x_sp = (np.tile(a[:, None].astype(np.float64), (1, config.sp_dim))
            + rng.normal(0.0, np.sqrt(config.sp_var),
                         size=(n, config.sp_dim)))
    x = np.concatenate([x_core, x_sp], axis=1)
    return BiasedDataset(x=x, a=a, y=y, yc=yc, config=config)


@dataclass
class ClassPartition:
    """Disjoint index sets per class key: ``a`` values or ``(a, y)`` pairs."""

    mode: str            # "by_a" or "by_a_and_y"
    indices: dict        # key -> index array

    @property
    def sizes(self) -> dict:
        return {k: v.size for k, v in self.indices.items()}

    @property
    def keys(self) -> list:
        return list(self.indices.keys())

    def empty_classes(self) -> list:
        return [k for k, v in self.indices.items() if v.size == 0]


def partition(ds: BiasedDataset, mode: str) -> ClassPartition:
    """Split record indices by sensitive class (and label, for EO)."""
    if ds.n == 0:
        raise ValueError("dataset must be non-empty")
    if mode == "by_a":
        indices = {j: np.flatnonzero(ds.a == j) for j in (0, 1)}
    elif mode == "by_a_and_y":
        indices = {(j, k): np.flatnonzero((ds.a == j) & (ds.y == k))
                   for j in (0, 1) for k in (0, 1)}
    else:
        raise ValueError(f"unknown partition mode {mode!r}")
    return ClassPartition(mode=mode, indices=indices)


def centered_targets(ds: BiasedDataset) -> np.ndarray:
    """Continuous targets recentered to [-1/2, 1/2]^2 (regression tasks)."""
    return ds.yc - 0.5


def _sizes_doc(ds: BiasedDataset) -> dict:
    by_a = partition(ds, "by_a").sizes
    by_ay = partition(ds, "by_a_and_y").sizes
    return {"by_a": {str(k): int(v) for k, v in by_a.items()},
            "by_a_and_y": {f"{j},{k}": int(v)
                           for (j, k), v in by_ay.items()}}


def save_dataset(ds: BiasedDataset, csv_path, sidecar_path) -> None:
    """Write records as CSV (17 significant digits) plus the JSON sidecar."""
    d = ds.dim
    header = [f"x_{i + 1}" for i in range(d)] + ["a", "y", "yc_1", "yc_2"]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            row = [f"{v:.17g}" for v in ds.x[i]]
            row += [str(int(ds.a[i])), str(int(ds.y[i]))]
            row += [f"{v:.17g}" for v in ds.yc[i]]
            writer.writerow(row)
    doc = {"config": asdict(ds.config), "n": ds.n,
           "class_sizes": _sizes_doc(ds)}
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(csv_path, sidecar_path) -> BiasedDataset:
    """Read a dataset back and re-validate its invariants."""
    with open(sidecar_path, encoding="utf-8") as fh:
        doc = json.load(fh)
    config = GenerationConfig(**doc["config"])
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    d = config.core_dim + config.sp_dim
    if len(header) != d + 4:
        raise ValueError(f"CSV has {len(header)} columns, expected {d + 4}")
    data = np.asarray(rows, dtype=np.float64)
    if data.shape[0] != doc["n"]:
        raise ValueError("CSV row count disagrees with sidecar")
    ds = BiasedDataset(x=data[:, :d],
                       a=data[:, d].astype(np.int64),
                       y=data[:, d + 1].astype(np.int64),
                       yc=data[:, d + 2:d + 4],
                       config=config)
    _validate(ds)
    return ds


def _validate(ds: BiasedDataset) -> None:
    if not np.all(np.isfinite(ds.x)) or not np.all(np.isfinite(ds.yc)):
        raise ValueError("dataset contains non-finite values")
    if np.any((ds.yc < 0.0) | (ds.yc > 1.0)):
        raise ValueError("continuous response must lie in the unit square")
    if not np.all((ds.a == 0) | (ds.a == 1)):
        raise ValueError("sensitive attribute must be binary")
    if not np.all((ds.y == 0) | (ds.y == 1)):
        raise ValueError("label must be binary")
    expected = (ds.yc[:, 1] > 1.0 - ds.yc[:, 0]).astype(np.int64)
    if not np.array_equal(expected, ds.y):
        raise ValueError("label is inconsistent with the continuous response")
