"""U-statistics, the null covariance estimator and the aggregated statistic.

The aggregated statistic studentizes the vector of per-kernel U-statistics
by the inverse symmetric square root of a regularized null covariance
estimate, so kernels on different scales contribute comparably and
correlated (redundant) kernels are down-weighted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from ._rng import as_rng
from .kernels import HStack, IndepData, TwoSampleData


@dataclass(frozen=True)
class MultiU:
    """Per-kernel second-order U-statistics and the sample count behind them."""

    values: np.ndarray
    n: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("U-statistic values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def c(self) -> int:
        return self.values.shape[0]


def u_stat(h_matrix: np.ndarray) -> float:
    """Mean of the core function over all unordered pairs i < j."""
    h = np.asarray(h_matrix, dtype=float)
    n = h.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations")
    # symmetric with zero diagonal, so the full sum is twice the i<j sum
    return float(h.sum() / 2.0 / comb(n, 2))


def multi_u(stack: HStack) -> MultiU:
    n = stack.n
    if n < 2:
        raise ValueError("need at least 2 observations")
    values = stack.mats.sum(axis=(1, 2)) / 2.0 / comb(n, 2)
    return MultiU(values, n)


def null_resample(data, rng):
    """Resample the observed data with replacement so H0 holds by construction.

    Two-sample: all 2n observations are pooled and each new pair draws its x
    and y independently from the pool, making both marginals identical.
    Independence: the x-halves and y-halves of the quadruples are drawn by
    two independent with-replacement index draws, breaking any x-y coupling.
    """
    rng = as_rng(rng)
    if data.n < 1:
        raise ValueError("empty sample")
    n = data.n
    if isinstance(data, TwoSampleData):
        pool = np.vstack([data.x, data.y])
        ix = rng.integers(0, 2 * n, size=n)
        iy = rng.integers(0, 2 * n, size=n)
        return TwoSampleData(pool[ix], pool[iy])
    if isinstance(data, IndepData):
        ix = rng.integers(0, n, size=n)
        iy = rng.integers(0, n, size=n)
        return IndepData(data.x1[ix], data.x2[ix], data.y1[iy], data.y2[iy])
    raise TypeError(f"unsupported data type {type(data).__name__}")


def default_lambda(sigma: np.ndarray) -> float:
    """Scale-aware ridge: 1e-6 x mean diagonal of the raw covariance."""
    c = sigma.shape[0]
    return max(1e-6 * float(np.trace(sigma)) / c, 1e-12)


@dataclass(frozen=True)
class NullCov:
    """Regularized estimate of the covariance of n * U under H0."""

    sigma: np.ndarray = field(repr=False)
    lam: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("sigma must be square")
        if not np.allclose(s, s.T, atol=1e-12):
            raise ValueError("sigma must be symmetric")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        object.__setattr__(self, "sigma", s)

    @property
    def c(self) -> int:
        return self.sigma.shape[0]

    @property
    def regularized(self) -> np.ndarray:
        return self.sigma + self.lam * np.eye(self.c)


def estimate_null_cov(stack_h0: HStack, lam: float | None = None) -> NullCov:
    """Second-order (co)variance estimator on a null-resampled sample.

    Entry (a, b) is n^2 * binom(n,2)^-2 * sum_{i<j} h_a[i,j] * h_b[i,j],
    then the ridge ``lam`` (default :func:`default_lambda`) is added to the
    diagonal. Raises if the regularized matrix is not numerically PD.
    """
    n = stack_h0.n
    if n < 2:
        raise ValueError("need at least 2 observations")
    h = stack_h0.mats
    scale = n ** 2 / comb(n, 2) ** 2
    # each matrix is symmetric with zero diagonal: full Frobenius inner
    # product is twice the i<j sum
    sigma = scale * 0.5 * np.einsum("aij,bij->ab", h, h)
    sigma = 0.5 * (sigma + sigma.T)
    if lam is None:
        lam = default_lambda(sigma)
    cov = NullCov(sigma, float(lam))
    smallest = float(np.linalg.eigvalsh(cov.regularized)[0])
    if smallest <= 0.0:
        raise np.linalg.LinAlgError(
            f"regularized null covariance is not positive-definite "
            f"(smallest eigenvalue {smallest:.3e}); increase lambda")
    return cov


@dataclass(frozen=True)
class SqrtInv:
    """Inverse of the symmetric PD square root of a regularized NullCov."""

    linv: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.linv, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("linv must be square")
        object.__setattr__(self, "linv", m)

    @property
    def c(self) -> int:
        return self.linv.shape[0]

    @classmethod
    def identity(cls, c: int) -> "SqrtInv":
        return cls(np.eye(c))


def sqrt_inv(cov: NullCov) -> SqrtInv:
    """L^-1 with L the unique symmetric PD square root of sigma + lambda*I.

    For symmetric PD matrices the Schur form coincides with the spectral
    form, so the symmetric eigendecomposition gives the same square root.
    """
    w, v = np.linalg.eigh(cov.regularized)
    if w[0] <= 0.0:
        raise np.linalg.LinAlgError(
            "covariance has a non-positive eigenvalue; increase lambda")
    linv = (v / np.sqrt(w)) @ v.T
    return SqrtInv(0.5 * (linv + linv.T))


def aggregated_stat(u: MultiU, linv: SqrtInv) -> float:
    """Mahalanobis-type aggregation T = n^2 * ||L^-1 u||_2^2."""
    if u.c != linv.c:
        raise ValueError(f"dimension mismatch: {u.c} vs {linv.c}")
    z = linv.linv @ u.values
    return float(u.n ** 2 * z @ z)


def relative_diversity(u_samples_a, u_samples_b) -> float:
    """Relative diversity of kernel b w.r.t. kernel a from U-statistic series.

    (1 + |Cor(U_a, U_b)| * sqrt(Var(U_a) / Var(U_b)))^-1, in (0, 1].
    """
    a = np.asarray(u_samples_a, dtype=float).ravel()
    b = np.asarray(u_samples_b, dtype=float).ravel()
    if a.size < 2 or b.size < 2 or a.size != b.size:
        raise ValueError("need two series of equal length >= 2")
    var_a = float(np.var(a, ddof=1))
    var_b = float(np.var(b, ddof=1))
    if var_b <= 0.0 or var_a <= 0.0:
        raise ValueError("degenerate series")
    cor = float(np.corrcoef(a, b)[0, 1])
    return 1.0 / (1.0 + abs(cor) * np.sqrt(var_a / var_b))
