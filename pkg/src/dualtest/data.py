"""Synthetic dataset generators and the train/test split.

BLOB: 2-d mixture of nine unit-covariance Gaussians on the 3x3 grid
{0, 5, 10}^2. Under the alternative the y-sample keeps the centers but uses
per-mode covariance [[1, r], [r, 1]] with checkerboard sign r = rho *
(-1)^(i+j). The independence generator applies a linear perturbation
y_j = a * x_j + noise * eps_j on the first k dimensions under the
alternative.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._rng import as_rng
from .kernels import IndepData, TwoSampleData

TWO_SAMPLE = "two-sample"
INDEPENDENCE = "independence"
NULL = "null"
ALT = "alt"

_BLOB_CENTERS = np.array([(i * 5.0, j * 5.0)
                          for i in range(3) for j in range(3)])
_BLOB_SIGNS = np.array([(-1.0) ** (i + j)
                        for i in range(3) for j in range(3)])


@dataclass(frozen=True)
class DatasetSpec:
    """What to generate: problem, hypothesis, per-split size and parameters."""

    problem: str = TWO_SAMPLE
    hypothesis: str = NULL
    n: int = 100
    dim: int = 2
    rho: float = 0.5
    slope: float = 0.5
    noise: float = 1.0
    k_perturb: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.problem not in (TWO_SAMPLE, INDEPENDENCE):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.hypothesis not in (NULL, ALT):
            raise ValueError(f"unknown hypothesis {self.hypothesis!r}")
        if self.n < 4:
            raise ValueError("n must be >= 4 so both splits have >= 2")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if abs(self.rho) >= 1.0:
            raise ValueError("rho must satisfy |rho| < 1")
        k = self.k_perturb
        if k is not None and not 0 <= k <= self.dim:
            raise ValueError("k_perturb must be in [0, dim]")


def _sample_blob(rng, n: int, rho: float) -> np.ndarray:
    modes = rng.integers(0, 9, size=n)
    z = rng.standard_normal((n, 2))
    if rho != 0.0:
        # per-mode Cholesky of [[1, r], [r, 1]]
        r = rho * _BLOB_SIGNS[modes]
        z = np.column_stack([z[:, 0], r * z[:, 0] + np.sqrt(1 - r ** 2) * z[:, 1]])
    return _BLOB_CENTERS[modes] + z


def gen_blob(spec: DatasetSpec, rng=None) -> TwoSampleData:
    """2n pairs (x_i, y_i): enough for one train and one test split."""
    if spec.dim != 2:
        raise ValueError("the blob generator is 2-dimensional")
    rng = as_rng(spec.seed) if rng is None else as_rng(rng)
    m = 2 * spec.n
    x = _sample_blob(rng, m, 0.0)
    rho = spec.rho if spec.hypothesis == ALT else 0.0
    y = _sample_blob(rng, m, rho)
    return TwoSampleData(x, y)


def gen_indep(spec: DatasetSpec, rng=None):
    """2n quadruples plus the raw (x, y) stream they were paired from."""
    rng = as_rng(spec.seed) if rng is None else as_rng(rng)
    m = 4 * spec.n
    d = spec.dim
    x = rng.standard_normal((m, d))
    y = rng.standard_normal((m, d)) * spec.noise
    if spec.hypothesis == ALT:
        k = min(3, d) if spec.k_perturb is None else spec.k_perturb
        y[:, :k] += spec.slope * x[:, :k]
    return IndepData.from_pairs(x, y), x, y


def generate(spec: DatasetSpec, rng=None):
    """Dispatch on the problem; returns TwoSampleData or IndepData."""
    if spec.problem == TWO_SAMPLE:
        return gen_blob(spec, rng)
    return gen_indep(spec, rng)[0]


def split_train_test(data, rng=0):
    """Disjoint equal halves of a sample, split by a seeded permutation."""
    n = data.n
    if n < 4 or n % 2 != 0:
        raise ValueError("need an even sample of size >= 4 to split")
    perm = as_rng(rng).permutation(n)
    half = n // 2
    return data.subset(np.sort(perm[:half])), data.subset(np.sort(perm[half:]))


def export_csv(data, path) -> None:
    """Write one observation per row with named columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if isinstance(data, TwoSampleData):
            header = ([f"x{j}" for j in range(data.dim)]
                      + [f"y{j}" for j in range(data.dim)])
            writer.writerow(header)
            for xi, yi in zip(data.x, data.y):
                writer.writerow([repr(float(v)) for v in np.concatenate([xi, yi])])
        elif isinstance(data, IndepData):
            header = ([f"x1_{j}" for j in range(data.dim_x)]
                      + [f"x2_{j}" for j in range(data.dim_x)]
                      + [f"y1_{j}" for j in range(data.dim_y)]
                      + [f"y2_{j}" for j in range(data.dim_y)])
            writer.writerow(header)
            for row in zip(data.x1, data.x2, data.y1, data.y2):
                writer.writerow([repr(float(v)) for v in np.concatenate(row)])
        else:
            raise TypeError(f"unsupported data type {type(data).__name__}")
