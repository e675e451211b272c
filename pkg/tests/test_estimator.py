"""Tests for the scikit-learn style estimator front ends."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dualtest.estimator import HSICDualTest, MMDDualTest

rng = np.random.default_rng(51)


def _fast(cls, **kw):
    return cls(c=2, epochs=2, n_boot=20, random_state=0, **kw)


def test_get_params_round_trip():
    est = _fast(MMDDualTest)
    params = est.get_params()
    assert params["c"] == 2
    assert params["alpha"] == 0.05
    est2 = MMDDualTest(**params)
    assert est2.get_params() == params


def test_clone_compatible():
    est = _fast(MMDDualTest, alpha=0.01)
    cl = clone(est)
    assert cl.alpha == 0.01
    assert cl is not est


def test_set_params():
    est = _fast(HSICDualTest)
    est.set_params(n_boot=50)
    assert est.n_boot == 50


def test_test_before_fit_raises():
    est = _fast(MMDDualTest)
    with pytest.raises(NotFittedError):
        est.test(rng.normal(size=(10, 2)), rng.normal(size=(10, 2)))


def test_mmd_fit_sets_attributes():
    est = _fast(MMDDualTest)
    est.fit(rng.normal(size=(20, 2)), rng.normal(size=(20, 2)))
    assert len(est.pool_) == 2
    assert est.f_tr_.shape == (2,)
    assert np.all(np.isfinite(est.objective_trace_))


def test_mmd_fit_test_pipeline():
    x = rng.normal(size=(40, 2))
    y = rng.normal(size=(40, 2)) + 3.0
    est = _fast(MMDDualTest)
    res = est.fit_test(x, y)
    assert res.reject == est.reject_
    assert est.statistic_ == res.statistic
    assert 0.0 < est.p_value_ <= 1.0


def test_mmd_detects_mean_shift():
    x = rng.normal(size=(120, 2))
    y = rng.normal(size=(120, 2)) + 2.0
    est = MMDDualTest(c=3, epochs=10, n_boot=100, random_state=1)
    res = est.fit_test(x, y)
    assert res.reject


def test_hsic_detects_dependence():
    x = rng.normal(size=(200, 2))
    y = 0.9 * x + rng.normal(size=(200, 2))
    est = HSICDualTest(c=3, epochs=10, n_boot=100, random_state=2)
    res = est.fit_test(x, y)
    assert res.reject


def test_hsic_null_usually_accepts():
    x = rng.normal(size=(200, 2))
    y = rng.normal(size=(200, 2))
    est = HSICDualTest(c=3, epochs=5, n_boot=100, random_state=3)
    res = est.fit_test(x, y)
    assert res.p_value > 0.01


def test_estimator_deterministic():
    x = rng.normal(size=(40, 2))
    y = rng.normal(size=(40, 2))
    a = _fast(MMDDualTest).fit_test(x, y)
    b = _fast(MMDDualTest).fit_test(x, y)
    assert a.statistic == b.statistic
    assert a.p_value == b.p_value


def test_one_dimensional_input_reshaped():
    x = rng.normal(size=60)
    y = rng.normal(size=60)
    est = _fast(MMDDualTest)
    res = est.fit_test(x, y)
    assert res.n == 30
