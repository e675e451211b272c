"""Wild bootstrap with Rademacher weights, threshold estimation and the test.

Bootstrap replicates reuse the HStack built once on the testing split, so
each iteration costs O(c n^2). Selection (sign-alignment against the
training signum vector) is re-applied inside every replicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, comb

import numpy as np

from ._rng import as_rng
from .kernels import HStack, build_h_stack
from .selection import alignment, selected_stat, signum
from .ustats import (MultiU, SqrtInv, aggregated_stat, estimate_null_cov,
                     multi_u, null_resample, sqrt_inv)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this as a test class

    statistic: float
    threshold: float
    p_value: float
    reject: bool
    mask: np.ndarray
    boot_stats: np.ndarray = field(repr=False)
    n: int = 0
    alpha: float = 0.05
    n_boot: int = 0


def draw_rademacher(n: int, rng) -> np.ndarray:
    """n i.i.d. signs with Pr(+1) = Pr(-1) = 1/2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_rng(rng)
    return rng.integers(0, 2, size=n) * 2.0 - 1.0


def bootstrap_multi_u(stack: HStack, eps: np.ndarray) -> MultiU:
    """Per-kernel binom(n,2)^-1 * sum_{i<j} eps_i eps_j h[i,j].

    Uses (eps^T H eps) / 2, valid because the diagonal of H is zero.
    """
    eps = np.asarray(eps, dtype=float).ravel()
    n = stack.n
    if eps.shape[0] != n:
        raise ValueError(f"length mismatch: {eps.shape[0]} vs n={n}")
    values = np.einsum("kij,i,j->k", stack.mats, eps, eps) / 2.0 / comb(n, 2)
    return MultiU(values, n)


def bootstrap_stat(stack: HStack, linv: SqrtInv, f_tr: np.ndarray,
                   eps: np.ndarray) -> float:
    """One wild-bootstrap replicate of the selected statistic."""
    u_b = bootstrap_multi_u(stack, eps)
    f_te = signum(linv.linv @ u_b.values)
    mask = alignment(f_tr, f_te)
    return selected_stat(u_b, linv, mask)


def threshold(all_stats, alpha: float) -> float:
    """(1-alpha)-quantile of the bootstrap distribution.

    ``all_stats`` holds the B bootstrap statistics plus the observed one;
    the threshold is the ceil((1-alpha) * (B+1))-th order statistic.
    """
    stats = np.asarray(all_stats, dtype=float).ravel()
    if stats.size == 0:
        raise ValueError("empty statistic list")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    k = ceil((1.0 - alpha) * stats.size)
    return float(np.sort(stats)[k - 1])


def _batched_bootstrap_values(stack: HStack, eps_mat: np.ndarray) -> np.ndarray:
    """(B, c) matrix of bootstrap multivariate U-statistics."""
    n = stack.n
    quad = np.einsum("bi,kij,bj->bk", eps_mat, stack.mats, eps_mat,
                     optimize=True)
    return quad / 2.0 / comb(n, 2)


def run_test(data_te, pool, f_tr, alpha: float = 0.05, n_boot: int = 300,
             lam: float | None = None, rng=0, use_diversity: bool = True,
             use_selection: bool = True) -> TestResult:
    """Full testing phase on the held-out split.

    Builds the h-matrices once, estimates the null covariance from a
    with-replacement resample of the testing split, computes the observed
    (selected) statistic and ``n_boot`` wild-bootstrap replicates, and
    rejects when the statistic strictly exceeds the estimated threshold.

    ``use_diversity=False`` replaces the studentizer by the identity;
    ``use_selection=False`` uses the all-ones mask everywhere.
    """
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    rng = as_rng(rng)
    f_tr = np.asarray(f_tr, dtype=float).ravel()
    if f_tr.shape[0] != len(pool):
        raise ValueError("f_tr length does not match kernel pool size")

    stack = build_h_stack(pool, data_te)
    n = stack.n
    if use_diversity:
        w_h0 = null_resample(data_te, rng)
        stack_h0 = build_h_stack(pool, w_h0)
        linv = sqrt_inv(estimate_null_cov(stack_h0, lam))
    else:
        linv = SqrtInv.identity(stack.c)

    u = multi_u(stack)
    z = linv.linv @ u.values
    if use_selection:
        mask = alignment(f_tr, signum(z))
    else:
        mask = np.ones(stack.c)
    statistic = selected_stat(u, linv, mask)

    eps_mat = rng.integers(0, 2, size=(n_boot, n)) * 2.0 - 1.0
    u_boot = _batched_bootstrap_values(stack, eps_mat)
    z_boot = u_boot @ linv.linv.T
    if use_selection:
        masks_b = np.where(z_boot < 0.0, -1.0, 1.0) == f_tr[None, :]
        z_boot = z_boot * masks_b
    boot_stats = n ** 2 * np.einsum("bk,bk->b", z_boot, z_boot)

    tau = threshold(np.append(boot_stats, statistic), alpha)
    p_value = (1.0 + float(np.sum(boot_stats >= statistic))) / (n_boot + 1.0)
    return TestResult(statistic=statistic, threshold=tau, p_value=p_value,
                      reject=bool(statistic > tau), mask=mask,
                      boot_stats=boot_stats, n=n, alpha=alpha, n_boot=n_boot)
