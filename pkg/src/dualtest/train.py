"""Kernel pool initialization and gradient ascent on the aggregated statistic.

Training maximizes the covariance-studentized statistic of the training
split with Adam, differentiating through both the per-kernel U-statistics
and the null covariance estimate (autograd via torch). The null resample
feeding the covariance is frozen once per run so the objective is a
deterministic function of the kernel parameters.

Only this module depends on torch; the testing path is pure numpy.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
import torch

from ._rng import as_rng, derive_rng
from .kernels import (GAUSSIAN, LAPLACIAN, MAHALANOBIS, IndepData, KernelSpec,
                      TwoSampleData, build_h_stack)
from .selection import signum
from .ustats import (SqrtInv, estimate_null_cov, multi_u, null_resample,
                     sqrt_inv)

logger = logging.getLogger(__name__)

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class TrainConfig:
    """Configuration of the kernel-learning phase."""

    c: int = 6
    families: tuple = (GAUSSIAN, MAHALANOBIS)
    epochs: int = 200
    learning_rate: float = 5e-4
    lam: float | None = None
    resample_seed: int = 0
    use_diversity: bool = True

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("c must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        for fam in self.families:
            if fam not in (GAUSSIAN, LAPLACIAN, MAHALANOBIS):
                raise ValueError(f"unknown kernel family {fam!r}")


@dataclass(frozen=True)
class TrainedPool:
    pool: list
    f_tr: np.ndarray
    objective_trace: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# median-heuristic initialization

def _bandwidth_grid(points: np.ndarray, c: int) -> np.ndarray:
    """c bandwidths log-uniform between the 0.05/0.95 distance quantiles."""
    n = points.shape[0]
    iu = np.triu_indices(n, k=1)
    d2 = np.maximum(
        np.sum(points ** 2, axis=1)[:, None]
        + np.sum(points ** 2, axis=1)[None, :] - 2.0 * points @ points.T, 0.0)
    dists = np.sqrt(d2[iu])
    if not np.any(dists > 0):
        raise ValueError("degenerate data: all pairwise distances are zero")
    lo, hi = np.quantile(dists, [0.05, 0.95])
    if lo <= 0.0:
        lo = float(np.min(dists[dists > 0]))
    if hi <= lo:
        hi = lo
    if c == 1:
        return np.array([np.exp(0.5 * (np.log(lo) + np.log(hi)))])
    return np.exp(np.linspace(np.log(lo), np.log(hi), c))


def _spec_for(family: str, sigma: float, dim: int,
              sigma_y: float | None = None,
              dim_y: int | None = None) -> KernelSpec:
    if family == MAHALANOBIS:
        fac = np.eye(dim) / sigma
        fac_y = None if sigma_y is None else np.eye(dim_y) / sigma_y
        return KernelSpec(MAHALANOBIS, factor=fac, factor_y=fac_y)
    ls_y = None if sigma_y is None else float(np.log(sigma_y))
    return KernelSpec(family, log_sigma=float(np.log(sigma)), log_sigma_y=ls_y)


def init_pool_median(data, cfg: TrainConfig) -> list:
    """Deterministic pool from quantiles of pairwise Euclidean distances.

    Two-sample data pools the x and y observations; independence data uses
    the x-parts and y-parts separately for the two factors of the product
    kernel. Mahalanobis kernels start from the isotropic precision matching
    the grid bandwidth.
    """
    if data.n < 2:
        raise ValueError("need at least 2 observations")
    families = [cfg.families[i % len(cfg.families)] for i in range(cfg.c)]
    if isinstance(data, TwoSampleData):
        grid = _bandwidth_grid(np.vstack([data.x, data.y]), cfg.c)
        return [_spec_for(fam, s, data.dim)
                for fam, s in zip(families, grid)]
    if isinstance(data, IndepData):
        grid_x = _bandwidth_grid(np.vstack([data.x1, data.x2]), cfg.c)
        grid_y = _bandwidth_grid(np.vstack([data.y1, data.y2]), cfg.c)
        return [_spec_for(fam, sx, data.dim_x, sy, data.dim_y)
                for fam, sx, sy in zip(families, grid_x, grid_y)]
    raise TypeError(f"unsupported data type {type(data).__name__}")


# ---------------------------------------------------------------------------
# parameter packing (shared layout between numpy pools and torch tensors)

def _factor_to_raw(factor: np.ndarray) -> np.ndarray:
    """Unconstrained representation: log on the diagonal, identity elsewhere."""
    raw = np.array(factor, dtype=float)
    np.fill_diagonal(raw, np.log(np.diag(factor)))
    return raw


def _raw_to_factor(raw: np.ndarray) -> np.ndarray:
    fac = np.tril(np.array(raw, dtype=float), k=-1)
    np.fill_diagonal(fac, np.exp(np.diag(raw)))
    return fac


def _spec_param_blocks(spec: KernelSpec):
    """Per-spec list of (name, array) blocks in packing order."""
    blocks = []
    if spec.family == MAHALANOBIS:
        blocks.append(("factor", _factor_to_raw(spec.factor)))
        if spec.factor_y is not None:
            blocks.append(("factor_y", _factor_to_raw(spec.factor_y)))
    else:
        blocks.append(("log_sigma", np.array([spec.log_sigma])))
        if spec.log_sigma_y is not None:
            blocks.append(("log_sigma_y", np.array([spec.log_sigma_y])))
    return blocks


def pack_parameters(pool) -> np.ndarray:
    """Flatten all trainable parameters into one unconstrained vector.

    Mahalanobis factors contribute their lower triangle with the diagonal in
    log scale; bandwidths contribute their logs.
    """
    out = []
    for spec in pool:
        for name, arr in _spec_param_blocks(spec):
            if name.startswith("factor"):
                out.append(arr[np.tril_indices(arr.shape[0])])
            else:
                out.append(arr)
    return np.concatenate(out)


def unpack_parameters(vector: np.ndarray, template_pool) -> list:
    """Rebuild a kernel pool from a packed parameter vector."""
    vector = np.asarray(vector, dtype=float).ravel()
    pos = 0
    pool = []
    for spec in template_pool:
        kwargs = {"family": spec.family}
        for name, arr in _spec_param_blocks(spec):
            if name.startswith("factor"):
                d = arr.shape[0]
                k = d * (d + 1) // 2
                raw = np.zeros((d, d))
                raw[np.tril_indices(d)] = vector[pos:pos + k]
                kwargs[name] = _raw_to_factor(raw)
                pos += k
            else:
                kwargs[name] = float(vector[pos])
                pos += 1
        pool.append(KernelSpec(**kwargs))
    if pos != vector.size:
        raise ValueError("parameter vector length does not match pool")
    return pool


# ---------------------------------------------------------------------------
# torch objective

def _t(a: np.ndarray) -> torch.Tensor:
    return torch.as_tensor(np.asarray(a, dtype=float), dtype=torch.float64)


def _torch_params(pool):
    """Leaf tensors for every kernel, mirroring the packing layout."""
    params = []
    for spec in pool:
        tensors = {}
        for name, arr in _spec_param_blocks(spec):
            tensors[name] = torch.tensor(arr, dtype=torch.float64,
                                         requires_grad=True)
        params.append(tensors)
    return params


def _torch_pool(params, template_pool) -> list:
    pool = []
    for spec, tensors in zip(template_pool, params):
        kwargs = {"family": spec.family}
        for name, t in tensors.items():
            if name.startswith("factor"):
                kwargs[name] = _raw_to_factor(t.detach().numpy())
            else:
                kwargs[name] = float(t.detach().numpy()[0])
        pool.append(KernelSpec(**kwargs))
    return pool


def _torch_sq_dists(a, b):
    d2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return torch.clamp(d2, min=0.0)


def _torch_kernel_matrix(family, tensors, part, a, b):
    if family == MAHALANOBIS:
        raw = tensors["factor" if part == "x" else "factor_y"]
        fac = torch.tril(raw, diagonal=-1) + torch.diag(
            torch.exp(torch.diagonal(raw)))
        return torch.exp(-_torch_sq_dists(a @ fac, b @ fac))
    ls = tensors["log_sigma" if part == "x" else "log_sigma_y"][0]
    sigma = torch.exp(ls)
    d2 = _torch_sq_dists(a, b)
    if family == GAUSSIAN:
        return torch.exp(-d2 / sigma ** 2)
    # clamp keeps sqrt differentiable where points coincide
    return torch.exp(-torch.sqrt(torch.clamp(d2, min=1e-24)) / sigma)


def _torch_h_matrix(family, tensors, part, a1, a2):
    k11 = _torch_kernel_matrix(family, tensors, part, a1, a1)
    k22 = _torch_kernel_matrix(family, tensors, part, a2, a2)
    k12 = _torch_kernel_matrix(family, tensors, part, a1, a2)
    return k11 + k22 - k12 - k12.T


def _prepare_blocks(data):
    if isinstance(data, TwoSampleData):
        return {"kind": "two-sample", "x": _t(data.x), "y": _t(data.y),
                "n": data.n}
    if isinstance(data, IndepData):
        return {"kind": "independence", "x1": _t(data.x1), "x2": _t(data.x2),
                "y1": _t(data.y1), "y2": _t(data.y2), "n": data.n}
    raise TypeError(f"unsupported data type {type(data).__name__}")


def _torch_h_stack(params, template_pool, blocks):
    n = blocks["n"]
    off_diag = 1.0 - torch.eye(n, dtype=torch.float64)
    mats = []
    for spec, tensors in zip(template_pool, params):
        if blocks["kind"] == "two-sample":
            h = _torch_h_matrix(spec.family, tensors, "x",
                                blocks["x"], blocks["y"])
        else:
            hx = _torch_h_matrix(spec.family, tensors, "x",
                                 blocks["x1"], blocks["x2"])
            hy = _torch_h_matrix(spec.family, tensors, "y",
                                 blocks["y1"], blocks["y2"])
            h = 0.25 * hx * hy
        mats.append(h * off_diag)
    return torch.stack(mats)


def _torch_objective(params, template_pool, blocks_tr, blocks_h0,
                     lam: float | None, use_diversity: bool) -> torch.Tensor:
    n = blocks_tr["n"]
    pairs = comb(n, 2)
    mats = _torch_h_stack(params, template_pool, blocks_tr)
    u = mats.sum(dim=(1, 2)) / 2.0 / pairs
    if not use_diversity:
        return n ** 2 * (u @ u)
    mats0 = _torch_h_stack(params, template_pool, blocks_h0)
    flat0 = mats0.reshape(len(template_pool), -1)
    sigma = (n ** 2 / pairs ** 2) * 0.5 * (flat0 @ flat0.T)
    c = sigma.shape[0]
    if lam is None:
        lam_t = torch.clamp(1e-6 * torch.diagonal(sigma).sum() / c,
                            min=1e-12)
    else:
        lam_t = torch.tensor(float(lam), dtype=torch.float64)
    eye = torch.eye(c, dtype=torch.float64)
    with torch.no_grad():
        w = torch.linalg.eigvalsh(sigma + lam_t * eye)
        if w[0] <= 0 or w[-1] / torch.clamp(w[0], min=1e-300) > _COND_LIMIT:
            logger.debug("ill-conditioned covariance during training; "
                         "raising lambda 10x for this evaluation")
            lam_t = torch.clamp(lam_t, min=1e-12) * 10.0
    a = sigma + lam_t * eye
    sol = torch.linalg.solve(a, u)
    return n ** 2 * (u @ sol)


def _objective_tensor(pool, data_tr, resampled, lam, use_diversity):
    params = _torch_params(pool)
    blocks_tr = _prepare_blocks(data_tr)
    blocks_h0 = _prepare_blocks(resampled) if use_diversity else None
    value = _torch_objective(params, pool, blocks_tr, blocks_h0, lam,
                             use_diversity)
    return value, params


def objective(pool, data_tr, lam=None, rng=0, use_diversity=True) -> float:
    """Aggregated statistic of the training split as a function of the pool.

    The null resample behind the covariance estimate is drawn once from
    ``rng`` (an int seed or Generator), so repeated calls with the same seed
    evaluate the same deterministic function.
    """
    resampled = null_resample(data_tr, as_rng(rng)) if use_diversity else None
    with torch.no_grad():
        value, _ = _objective_tensor(pool, data_tr, resampled, lam,
                                     use_diversity)
    return float(value)


def grad_objective(pool, data_tr, lam=None, rng=0,
                   use_diversity=True) -> np.ndarray:
    """Gradient of :func:`objective` w.r.t. the packed parameter vector."""
    resampled = null_resample(data_tr, as_rng(rng)) if use_diversity else None
    value, params = _objective_tensor(pool, data_tr, resampled, lam,
                                      use_diversity)
    if not torch.isfinite(value):
        raise FloatingPointError("objective is non-finite")
    value.backward()
    out = []
    for spec, tensors in zip(pool, params):
        for name, _ in _spec_param_blocks(spec):
            g = tensors[name].grad
            g = torch.zeros_like(tensors[name]) if g is None else g
            g = g.numpy()
            if name.startswith("factor"):
                out.append(g[np.tril_indices(g.shape[0])])
            else:
                out.append(g.ravel())
    grad = np.concatenate(out)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient")
    return grad


# ---------------------------------------------------------------------------
# training loop

def compute_f_tr(pool, data_tr, resampled, lam=None,
                 use_diversity: bool = True) -> np.ndarray:
    """Training signum vector sgn(L^-1 U) from the numpy testing-path code."""
    stack = build_h_stack(pool, data_tr)
    if use_diversity:
        stack_h0 = build_h_stack(pool, resampled)
        linv = sqrt_inv(estimate_null_cov(stack_h0, lam))
    else:
        linv = SqrtInv.identity(stack.c)
    u = multi_u(stack)
    return signum(linv.linv @ u.values)


def learn_kernels(data_tr, cfg: TrainConfig) -> TrainedPool:
    """Median-heuristic init followed by Adam ascent on the objective.

    Returns the trained pool, the training signum vector and the objective
    trace (length epochs + 1). Training never sees the testing split.
    """
    pool0 = init_pool_median(data_tr, cfg)
    resampled = null_resample(data_tr, derive_rng(cfg.resample_seed))
    blocks_tr = _prepare_blocks(data_tr)
    blocks_h0 = _prepare_blocks(resampled) if cfg.use_diversity else None

    params = _torch_params(pool0)
    tensors = [t for group in params for t in group.values()]
    opt = torch.optim.Adam(tensors, lr=cfg.learning_rate,
                           betas=(0.9, 0.999), eps=1e-8)

    trace = []
    best_value = -np.inf
    best_state = [t.detach().clone() for t in tensors]
    halted = False
    for _ in range(cfg.epochs):
        opt.zero_grad()
        value = _torch_objective(params, pool0, blocks_tr, blocks_h0,
                                 cfg.lam, cfg.use_diversity)
        if not torch.isfinite(value):
            warnings.warn("non-finite objective during training; "
                          "returning best pool seen so far", RuntimeWarning)
            halted = True
            break
        current = float(value.detach())
        trace.append(current)
        if current > best_value:
            best_value = current
            best_state = [t.detach().clone() for t in tensors]
        (-value).backward()
        opt.step()
    if halted:
        with torch.no_grad():
            for t, s in zip(tensors, best_state):
                t.copy_(s)
    else:
        with torch.no_grad():
            value = _torch_objective(params, pool0, blocks_tr, blocks_h0,
                                     cfg.lam, cfg.use_diversity)
        trace.append(float(value))

    pool = _torch_pool(params, pool0)
    f_tr = compute_f_tr(pool, data_tr, resampled, cfg.lam, cfg.use_diversity)
    return TrainedPool(pool=pool, f_tr=f_tr,
                       objective_trace=np.asarray(trace))
