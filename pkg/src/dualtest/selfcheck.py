"""Brute-force oracle implementations and the self-check suite.

Every oracle here is a deliberately naive double loop, independent of the
vectorized code paths it validates. The CLI ``selfcheck`` command runs the
whole suite and fails on any mismatch beyond 1e-12 relative error.
"""

from __future__ import annotations

from math import comb

import numpy as np

from ._rng import derive_rng
from .bootstrap import bootstrap_multi_u
from .kernels import (IndepData, TwoSampleData, build_h_stack, eval_kernel,
                      gaussian, h_mmd, laplacian, mahalanobis)
from .selection import selected_stat
from .ustats import aggregated_stat, estimate_null_cov, multi_u, sqrt_inv, u_stat

REL_TOL = 1e-12


def oracle_h_mmd(spec, w, w2) -> float:
    x, y = w
    x2, y2 = w2
    return (eval_kernel(spec, x, x2) + eval_kernel(spec, y, y2)
            - eval_kernel(spec, x, y2) - eval_kernel(spec, y, x2))


def oracle_h_stack(pool, data) -> np.ndarray:
    n = data.n
    mats = np.zeros((len(pool), n, n))
    for k, spec in enumerate(pool):
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if isinstance(data, TwoSampleData):
                    mats[k, i, j] = h_mmd(spec, (data.x[i], data.y[i]),
                                          (data.x[j], data.y[j]))
                else:
                    hx = h_mmd(spec, (data.x1[i], data.x2[i]),
                               (data.x1[j], data.x2[j]), part="x")
                    hy = h_mmd(spec, (data.y1[i], data.y2[i]),
                               (data.y1[j], data.y2[j]), part="y")
                    mats[k, i, j] = 0.25 * hx * hy
    return mats


def oracle_u_stat(h: np.ndarray) -> float:
    n = h.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += h[i, j]
    return total / comb(n, 2)


def oracle_null_cov(mats: np.ndarray) -> np.ndarray:
    c, n, _ = mats.shape
    sigma = np.zeros((c, c))
    for a in range(c):
        for b in range(c):
            s = 0.0
            for i in range(n):
                for j in range(i + 1, n):
                    s += mats[a, i, j] * mats[b, i, j]
            sigma[a, b] = n ** 2 / comb(n, 2) ** 2 * s
    return sigma


def oracle_aggregated(u_values: np.ndarray, cov_reg: np.ndarray,
                      n: int) -> float:
    return float(n ** 2 * u_values @ np.linalg.solve(cov_reg, u_values))


def oracle_bootstrap_u(mats: np.ndarray, eps: np.ndarray) -> np.ndarray:
    c, n, _ = mats.shape
    out = np.zeros(c)
    for k in range(c):
        s = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                s += eps[i] * eps[j] * mats[k, i, j]
        out[k] = s / comb(n, 2)
    return out


def oracle_selected(u_values: np.ndarray, linv: np.ndarray,
                    mask: np.ndarray, n: int) -> float:
    z = linv @ u_values
    total = 0.0
    for i in range(len(z)):
        if mask[i] == 1:
            total += z[i] ** 2
    return float(n ** 2 * total)


def _rel_err(got: float, want: float) -> float:
    scale = max(abs(want), 1e-30)
    return abs(got - want) / scale


def _random_instance(rng):
    n = int(rng.integers(3, 9))
    c = int(rng.integers(1, 4))
    two_sample = bool(rng.integers(0, 2))
    pool = []
    for _ in range(c):
        kind = int(rng.integers(0, 3))
        sigma = float(np.exp(rng.normal(0.0, 0.5)))
        if kind == 0:
            spec = gaussian(sigma)
        elif kind == 1:
            spec = laplacian(sigma)
        else:
            fac = np.tril(rng.normal(0.0, 0.3, size=(2, 2)))
            np.fill_diagonal(fac, np.exp(rng.normal(0.0, 0.3, size=2)))
            spec = mahalanobis(fac)
        if not two_sample:
            spec.log_sigma_y = float(np.log(sigma * 1.3))
            if spec.factor is not None:
                spec.factor_y = spec.factor * 0.7
        pool.append(spec)
    if two_sample:
        data = TwoSampleData(rng.normal(size=(n, 2)), rng.normal(size=(n, 2)))
    else:
        data = IndepData(*(rng.normal(size=(n, 2)) for _ in range(4)))
    return pool, data


def check_instance(rng) -> list:
    """Compare every math-core operation against its loop oracle."""
    pool, data = _random_instance(rng)
    n, c = data.n, len(pool)
    failures = []

    stack = build_h_stack(pool, data)
    err = float(np.max(np.abs(stack.mats - oracle_h_stack(pool, data))))
    if err > REL_TOL:
        failures.append(("h_stack", err))

    u = multi_u(stack)
    for k in range(c):
        e = _rel_err(u_stat(stack.mats[k]), oracle_u_stat(stack.mats[k]))
        if e > REL_TOL:
            failures.append(("u_stat", e))
    e = max(_rel_err(a, b) for a, b in zip(u.values, oracle_h_stack_u(stack)))
    if e > REL_TOL:
        failures.append(("multi_u", e))

    lam = 1e-4
    cov = estimate_null_cov(stack, lam)
    want_sigma = oracle_null_cov(stack.mats)
    scale = max(float(np.max(np.abs(want_sigma))), 1e-30)
    e = float(np.max(np.abs(cov.sigma - want_sigma))) / scale
    if e > REL_TOL:
        failures.append(("null_cov", e))

    linv = sqrt_inv(cov)
    got = aggregated_stat(u, linv)
    want = oracle_aggregated(u.values, cov.regularized, n)
    if _rel_err(got, want) > REL_TOL:
        failures.append(("aggregated_stat", _rel_err(got, want)))

    eps = derive_rng(int(rng.integers(2 ** 32))).integers(0, 2, n) * 2.0 - 1.0
    got_b = bootstrap_multi_u(stack, eps).values
    want_b = oracle_bootstrap_u(stack.mats, eps)
    scale = max(float(np.max(np.abs(want_b))), 1e-30)
    e = float(np.max(np.abs(got_b - want_b))) / scale
    if e > REL_TOL:
        failures.append(("bootstrap_multi_u", e))

    mask = (rng.integers(0, 2, c)).astype(float)
    got_s = selected_stat(u, linv, mask)
    want_s = oracle_selected(u.values, linv.linv, mask, n)
    if _rel_err(got_s, want_s) > REL_TOL:
        failures.append(("selected_stat", _rel_err(got_s, want_s)))
    return failures


def oracle_h_stack_u(stack) -> np.ndarray:
    return np.array([oracle_u_stat(stack.mats[k]) for k in range(stack.c)])


def run_selfcheck(instances: int = 50, seed: int = 20240817,
                  verbose: bool = False) -> bool:
    """Run the oracle suite on random small instances; True iff all match."""
    rng = derive_rng(seed)
    all_ok = True
    for i in range(instances):
        failures = check_instance(rng)
        if failures:
            all_ok = False
            for name, err in failures:
                print(f"selfcheck instance {i}: {name} mismatch ({err:.3e})")
        elif verbose:
            print(f"selfcheck instance {i}: ok")
    return all_ok
