"""Kernel evaluation, MMD/HSIC core functions and pairwise h-value matrices.

The expensive object here is :class:`HStack`: one symmetric, zero-diagonal
n x n matrix of pairwise core-function values per kernel. Every statistic
downstream (U-statistics, null covariance, wild bootstrap) is a cheap
reduction over these matrices, so they are built once per sample and reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GAUSSIAN = "gaussian"
LAPLACIAN = "laplacian"
MAHALANOBIS = "mahalanobis"
FAMILIES = (GAUSSIAN, LAPLACIAN, MAHALANOBIS)


def _check_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


@dataclass
class KernelSpec:
    """A parameterized positive-definite kernel.

    Gaussian and Laplacian kernels carry a log-bandwidth, which keeps the
    bandwidth positive under unconstrained gradient updates. Mahalanobis
    kernels carry a lower-triangular factor ``M`` with strictly positive
    diagonal; the precision matrix is ``M @ M.T``, positive-definite by
    construction.

    For independence testing a spec stores a second, independent parameter
    set (``log_sigma_y`` / ``factor_y``) for the kernel acting on the
    y-marginal; the pair is used as a product kernel.
    """

    family: str
    log_sigma: float | None = None
    factor: np.ndarray | None = None
    log_sigma_y: float | None = None
    factor_y: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        for attr in ("log_sigma", "log_sigma_y"):
            v = getattr(self, attr)
            if v is not None:
                v = float(v)
                if not np.isfinite(v):
                    raise ValueError(f"{attr} must be finite")
                setattr(self, attr, v)
        for attr in ("factor", "factor_y"):
            m = getattr(self, attr)
            if m is not None:
                m = _check_matrix(m, attr)
                if m.ndim != 2 or m.shape[0] != m.shape[1]:
                    raise ValueError(f"{attr} must be square")
                if not np.allclose(m, np.tril(m)):
                    raise ValueError(f"{attr} must be lower triangular")
                if np.any(np.diag(m) <= 0):
                    raise ValueError(f"{attr} must have positive diagonal")
                setattr(self, attr, m)
        if self.family == MAHALANOBIS:
            if self.factor is None:
                raise ValueError("mahalanobis kernel requires a factor")
        elif self.log_sigma is None:
            raise ValueError(f"{self.family} kernel requires log_sigma")

    @property
    def sigma(self) -> float:
        return float(np.exp(self.log_sigma))

    def _params(self, part: str):
        if part == "x":
            return self.log_sigma, self.factor
        if part == "y":
            ls = self.log_sigma_y if self.log_sigma_y is not None else self.log_sigma
            fac = self.factor_y if self.factor_y is not None else self.factor
            return ls, fac
        raise ValueError(f"unknown kernel part {part!r}")


def gaussian(sigma: float) -> KernelSpec:
    return KernelSpec(GAUSSIAN, log_sigma=float(np.log(sigma)))


def laplacian(sigma: float) -> KernelSpec:
    return KernelSpec(LAPLACIAN, log_sigma=float(np.log(sigma)))


def mahalanobis(factor: np.ndarray) -> KernelSpec:
    return KernelSpec(MAHALANOBIS, factor=np.asarray(factor, dtype=float))


# ---------------------------------------------------------------------------
# data containers

@dataclass(frozen=True)
class TwoSampleData:
    """Paired two-sample observations w_i = (x_i, y_i), x from P and y from Q."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _check_matrix(self.x, "x")
        y = _check_matrix(self.y, "y")
        x = np.atleast_2d(x)
        y = np.atleast_2d(y)
        if x.shape != y.shape:
            raise ValueError(f"x and y shapes differ: {x.shape} vs {y.shape}")
        if x.shape[1] < 1:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "TwoSampleData":
        return TwoSampleData(self.x[idx], self.y[idx])


@dataclass(frozen=True)
class IndepData:
    """Quadruples w_i = (x1_i, x2_i, y1_i, y2_i) for second-order HSIC."""

    x1: np.ndarray
    x2: np.ndarray
    y1: np.ndarray
    y2: np.ndarray

    def __post_init__(self):
        arrs = {}
        for name in ("x1", "x2", "y1", "y2"):
            arrs[name] = np.atleast_2d(_check_matrix(getattr(self, name), name))
        if arrs["x1"].shape != arrs["x2"].shape:
            raise ValueError("x1 and x2 shapes differ")
        if arrs["y1"].shape != arrs["y2"].shape:
            raise ValueError("y1 and y2 shapes differ")
        if arrs["x1"].shape[0] != arrs["y1"].shape[0]:
            raise ValueError("x and y halves have different sample counts")
        for name, a in arrs.items():
            object.__setattr__(self, name, a)

    @classmethod
    def from_pairs(cls, x: np.ndarray, y: np.ndarray) -> "IndepData":
        """Pair m joint observations into floor(m/2) quadruples.

        Quadruple i is (x_i, x_{i+n}, y_i, y_{i+n}) with n = floor(m/2); the
        last observation is dropped when m is odd.
        """
        x = np.atleast_2d(_check_matrix(x, "x"))
        y = np.atleast_2d(_check_matrix(y, "y"))
        if x.shape[0] != y.shape[0]:
            raise ValueError("x and y must have the same number of rows")
        n = x.shape[0] // 2
        if n < 1:
            raise ValueError("need at least 2 joint observations")
        return cls(x[:n], x[n:2 * n], y[:n], y[n:2 * n])

    @property
    def n(self) -> int:
        return self.x1.shape[0]

    @property
    def dim_x(self) -> int:
        return self.x1.shape[1]

    @property
    def dim_y(self) -> int:
        return self.y1.shape[1]

    def subset(self, idx) -> "IndepData":
        return IndepData(self.x1[idx], self.x2[idx], self.y1[idx], self.y2[idx])


# ---------------------------------------------------------------------------
# pointwise kernel / core evaluation

def eval_kernel(spec: KernelSpec, u, v, part: str = "x") -> float:
    """Evaluate the kernel at a single pair of points. Value in (0, 1]."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise ValueError("non-finite input")
    log_sigma, factor = spec._params(part)
    delta = u - v
    if spec.family == GAUSSIAN:
        return float(np.exp(-delta @ delta / np.exp(log_sigma) ** 2))
    if spec.family == LAPLACIAN:
        return float(np.exp(-np.sqrt(delta @ delta) / np.exp(log_sigma)))
    if factor.shape[0] != delta.shape[0]:
        raise ValueError("input dimension does not match mahalanobis factor")
    z = delta @ factor
    return float(np.exp(-z @ z))


def h_mmd(spec: KernelSpec, w, w2, part: str = "x") -> float:
    """MMD core h((x,y),(x',y')) = k(x,x') + k(y,y') - k(x,y') - k(y,x')."""
    x, y = w
    x2, y2 = w2
    return (eval_kernel(spec, x, x2, part) + eval_kernel(spec, y, y2, part)
            - eval_kernel(spec, x, y2, part) - eval_kernel(spec, y, x2, part))


def h_hsic(gamma: KernelSpec, ell: KernelSpec, q, q2) -> float:
    """HSIC core: one quarter of the product of two MMD cores.

    The first factor applies ``gamma`` to the x-halves of the quadruples,
    the second applies ``ell`` to the y-halves.
    """
    x1, x2, y1, y2 = q
    u1, u2, v1, v2 = q2
    hx = h_mmd(gamma, (x1, x2), (u1, u2))
    hy = h_mmd(ell, (y1, y2), (v1, v2))
    return 0.25 * hx * hy


# ---------------------------------------------------------------------------
# vectorized matrix construction

def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa = np.sum(a * a, axis=1)[:, None]
    bb = np.sum(b * b, axis=1)[None, :]
    d2 = aa + bb - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0)


def _kernel_matrix(family: str, log_sigma, factor, a: np.ndarray,
                   b: np.ndarray) -> np.ndarray:
    if family == GAUSSIAN:
        return np.exp(-_sq_dists(a, b) / np.exp(log_sigma) ** 2)
    if family == LAPLACIAN:
        return np.exp(-np.sqrt(_sq_dists(a, b)) / np.exp(log_sigma))
    if factor.shape[0] != a.shape[1]:
        raise ValueError("input dimension does not match mahalanobis factor")
    return np.exp(-_sq_dists(a @ factor, b @ factor))


def _h_mmd_matrix_parts(spec: KernelSpec, part: str, a1, a2) -> np.ndarray:
    """Matrix of MMD cores over pairs (a1_i, a2_i); entry (i,j) uses pairs i, j."""
    log_sigma, factor = spec._params(part)
    if np.array_equal(a1, a2):
        # the four kernel terms cancel pairwise; return the exact zero rather
        # than BLAS round-off noise
        return np.zeros((a1.shape[0], a1.shape[0]))
    k11 = _kernel_matrix(spec.family, log_sigma, factor, a1, a1)
    k22 = _kernel_matrix(spec.family, log_sigma, factor, a2, a2)
    k12 = _kernel_matrix(spec.family, log_sigma, factor, a1, a2)
    h = k11 + k22 - k12 - k12.T
    # matmul-based distances are not bit-symmetric; enforce exact symmetry
    return 0.5 * (h + h.T)


def h_mmd_matrix(spec: KernelSpec, data: TwoSampleData) -> np.ndarray:
    h = _h_mmd_matrix_parts(spec, "x", data.x, data.y)
    np.fill_diagonal(h, 0.0)
    return h


def h_hsic_matrix(spec: KernelSpec, data: IndepData) -> np.ndarray:
    hx = _h_mmd_matrix_parts(spec, "x", data.x1, data.x2)
    hy = _h_mmd_matrix_parts(spec, "y", data.y1, data.y2)
    h = 0.25 * hx * hy
    np.fill_diagonal(h, 0.0)
    return h


@dataclass(frozen=True)
class HStack:
    """c symmetric n x n matrices of pairwise core values, zero diagonal."""

    mats: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _check_matrix(self.mats, "mats")
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise ValueError("mats must have shape (c, n, n)")
        object.__setattr__(self, "mats", m)

    @property
    def c(self) -> int:
        return self.mats.shape[0]

    @property
    def n(self) -> int:
        return self.mats.shape[1]


def build_h_stack(pool, data) -> HStack:
    """Build the pairwise h-value matrices for every kernel in the pool.

    ``data`` is either :class:`TwoSampleData` (MMD cores) or
    :class:`IndepData` (HSIC cores with each spec's (x, y) parameter pair
    acting as a product kernel).
    """
    if len(pool) < 1:
        raise ValueError("kernel pool is empty")
    if data.n < 2:
        raise ValueError("need at least 2 observations")
    if isinstance(data, TwoSampleData):
        mats = [h_mmd_matrix(spec, data) for spec in pool]
    elif isinstance(data, IndepData):
        mats = [h_hsic_matrix(spec, data) for spec in pool]
    else:
        raise TypeError(f"unsupported data type {type(data).__name__}")
    return HStack(np.stack(mats))
