"""Signum vectors, alignment masks and the selected test statistic.

The training split contributes only the signs of its studentized statistic
vector; at test time a coordinate enters the statistic only when its sign on
the held-out split agrees with the training sign. The same masking is applied
inside every wild-bootstrap replicate, which preserves exchangeability and
hence Type-I control.
"""

from __future__ import annotations

import numpy as np

from .ustats import MultiU, SqrtInv


def signum(v) -> np.ndarray:
    """Coordinate-wise sign with the convention sgn(0) = +1."""
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entry in signum input")
    return np.where(v < 0.0, -1.0, 1.0)


def alignment(f_tr: np.ndarray, f_te: np.ndarray) -> np.ndarray:
    """0/1 mask with 1 where training and testing signs agree."""
    f_tr = np.asarray(f_tr, dtype=float).ravel()
    f_te = np.asarray(f_te, dtype=float).ravel()
    if f_tr.shape != f_te.shape:
        raise ValueError(f"length mismatch: {f_tr.shape} vs {f_te.shape}")
    return (f_tr == f_te).astype(float)


def selected_stat(u: MultiU, linv: SqrtInv, mask: np.ndarray) -> float:
    """T = n^2 * ||mask * (L^-1 u)||_2^2; all-ones mask gives Eq.-(4) exactly."""
    mask = np.asarray(mask, dtype=float).ravel()
    if u.c != linv.c or mask.shape[0] != u.c:
        raise ValueError("dimension mismatch between u, linv and mask")
    z = mask * (linv.linv @ u.values)
    return float(u.n ** 2 * z @ z)
