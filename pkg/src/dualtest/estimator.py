"""Scikit-learn style front ends for the two testing problems.

``MMDDualTest`` compares two samples; ``HSICDualTest`` tests independence of
paired observations. ``fit`` learns the kernel pool and training signum
vector, ``test`` runs the held-out testing phase, and ``fit_test`` splits a
single dataset internally and does both.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._rng import derive_rng
from .bootstrap import TestResult, run_test
from .data import split_train_test
from .kernels import IndepData, TwoSampleData
from .train import TrainConfig, learn_kernels


class _BaseDualTest(BaseEstimator):

    def __init__(self, c=6, families=("gaussian", "mahalanobis"), epochs=200,
                 learning_rate=5e-4, lam=None, alpha=0.05, n_boot=300,
                 use_diversity=True, use_selection=True, random_state=0):
        self.c = c
        self.families = families
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.lam = lam
        self.alpha = alpha
        self.n_boot = n_boot
        self.use_diversity = use_diversity
        self.use_selection = use_selection
        self.random_state = random_state

    def _make_data(self, X, Y):
        raise NotImplementedError

    def _validated(self, X, Y):
        X = check_array(X, ensure_2d=False, dtype=float)
        Y = check_array(Y, ensure_2d=False, dtype=float)
        X = X.reshape(-1, 1) if X.ndim == 1 else X
        Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
        return self._make_data(X, Y)

    def fit(self, X, Y):
        """Learn the kernel pool and the training signum vector."""
        data = self._validated(X, Y)
        cfg = TrainConfig(
            c=self.c, families=tuple(self.families), epochs=self.epochs,
            learning_rate=self.learning_rate, lam=self.lam,
            resample_seed=int(derive_rng(self.random_state, 0).integers(2 ** 62)),
            use_diversity=self.use_diversity)
        trained = learn_kernels(data, cfg)
        self.pool_ = trained.pool
        self.f_tr_ = trained.f_tr
        self.objective_trace_ = trained.objective_trace
        return self

    def test(self, X, Y) -> TestResult:
        """Run the wild-bootstrap test on held-out data."""
        check_is_fitted(self, "pool_")
        data = self._validated(X, Y)
        result = run_test(
            data, self.pool_, self.f_tr_, alpha=self.alpha,
            n_boot=self.n_boot, lam=self.lam,
            rng=derive_rng(self.random_state, 1),
            use_diversity=self.use_diversity,
            use_selection=self.use_selection)
        self.statistic_ = result.statistic
        self.threshold_ = result.threshold
        self.p_value_ = result.p_value
        self.reject_ = result.reject
        self.mask_ = result.mask
        return result

    def fit_test(self, X, Y) -> TestResult:
        """Split (X, Y) into disjoint halves, train on one, test on the other."""
        data = self._validated(X, Y)
        data_tr, data_te = split_train_test(
            data, derive_rng(self.random_state, 2))
        self.fit(*self._unmake(data_tr))
        return self.test(*self._unmake(data_te))


class MMDDualTest(_BaseDualTest):
    """Two-sample test: are X and Y drawn from the same distribution?"""

    def _make_data(self, X, Y):
        return TwoSampleData(X, Y)

    @staticmethod
    def _unmake(data):
        return data.x, data.y


class HSICDualTest(_BaseDualTest):
    """Independence test on paired rows of X and Y.

    Rows are paired into quadruples internally (dropping one row when the
    count is odd), following the second-order HSIC estimate.
    """

    def _make_data(self, X, Y):
        if isinstance(X, IndepData):
            return X
        return IndepData.from_pairs(X, Y)

    @staticmethod
    def _unmake(data):
        return data, None

    def _validated(self, X, Y):
        if isinstance(X, IndepData):
            return X
        X = check_array(X, ensure_2d=False, dtype=float)
        Y = check_array(Y, ensure_2d=False, dtype=float)
        X = X.reshape(-1, 1) if X.ndim == 1 else X
        Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
        return IndepData.from_pairs(X, Y)
