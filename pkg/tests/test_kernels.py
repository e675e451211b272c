"""Tests for kernel evaluation and the pairwise h-value matrices."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from hypothesis import given, settings
from hypothesis import strategies as st

from dualtest.kernels import (GAUSSIAN, IndepData, KernelSpec, TwoSampleData,
                              build_h_stack, eval_kernel, gaussian, h_hsic,
                              h_hsic_matrix, h_mmd, h_mmd_matrix, laplacian,
                              mahalanobis)

rng = np.random.default_rng(7)


# ---------------------------------------------------------------------------
# eval_kernel

def test_gaussian_identity_point():
    u = np.array([0.3, -1.2])
    assert eval_kernel(gaussian(1.0), u, u) == 1.0


def test_laplacian_identity_point():
    u = np.array([2.0, 5.0, -1.0])
    assert eval_kernel(laplacian(0.7), u, u) == 1.0


def test_mahalanobis_identity_point():
    u = np.array([1.0, 2.0])
    assert eval_kernel(mahalanobis(np.eye(2)), u, u) == 1.0


def test_gaussian_unit_distance():
    # exp(-||u-v||^2 / sigma^2) with sigma=1, ||u-v||^2 = 1
    got = eval_kernel(gaussian(1.0), np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    assert_allclose(got, np.exp(-1.0), rtol=1e-15)
    assert_allclose(got, 0.367879, rtol=1e-5)


def test_mahalanobis_identity_factor():
    # M = I2, u - v = (1, 1) -> exp(-2)
    got = eval_kernel(mahalanobis(np.eye(2)), np.array([1.0, 1.0]),
                      np.array([0.0, 0.0]))
    assert_allclose(got, np.exp(-2.0), rtol=1e-15)


def test_laplacian_closed_form():
    # sigma = 2, ||u-v|| = 4 -> exp(-2)
    got = eval_kernel(laplacian(2.0), np.array([4.0]), np.array([0.0]))
    assert_allclose(got, np.exp(-2.0), rtol=1e-15)


def test_eval_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_kernel(gaussian(1.0), np.zeros(2), np.zeros(3))


def test_eval_kernel_rejects_nonfinite():
    with pytest.raises(ValueError):
        eval_kernel(gaussian(1.0), np.array([np.nan]), np.array([0.0]))


def test_mahalanobis_dimension_check():
    with pytest.raises(ValueError):
        eval_kernel(mahalanobis(np.eye(2)), np.zeros(3), np.ones(3))


@given(st.floats(0.1, 10.0), st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=30, deadline=None)
def test_kernel_values_in_unit_interval(sigma, d, seed):
    r = np.random.default_rng(seed)
    u, v = r.normal(size=d), r.normal(size=d)
    for spec in (gaussian(sigma), laplacian(sigma)):
        val = eval_kernel(spec, u, v)
        # exp(-d/sigma) can underflow to exactly 0 for far points
        assert 0.0 <= val <= 1.0


# ---------------------------------------------------------------------------
# KernelSpec validation

def test_kernel_spec_rejects_unknown_family():
    with pytest.raises(ValueError):
        KernelSpec(family="cubic", log_sigma=0.0)


def test_mahalanobis_requires_lower_triangular():
    bad = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        mahalanobis(bad)


def test_mahalanobis_requires_positive_diagonal():
    bad = np.array([[1.0, 0.0], [0.3, -2.0]])
    with pytest.raises(ValueError):
        mahalanobis(bad)


# ---------------------------------------------------------------------------
# h_mmd

def test_h_mmd_cancels_when_y_equals_x():
    # w = (x, x), w' = (x', x'): the four kernel terms cancel pairwise
    x, x2 = rng.normal(size=2), rng.normal(size=2)
    assert h_mmd(gaussian(1.3), (x, x), (x2, x2)) == 0.0


def test_h_mmd_identical_pairs():
    # w = w' = ((0),(1)), Gaussian sigma=1 -> 2(1 - exp(-1))
    w = (np.array([0.0]), np.array([1.0]))
    got = h_mmd(gaussian(1.0), w, w)
    assert_allclose(got, 2.0 * (1.0 - np.exp(-1.0)), rtol=1e-15)


def test_h_mmd_matches_four_call_expansion():
    spec = gaussian(1.0)
    for _ in range(10):
        x, y = rng.normal(size=2), rng.normal(size=2)
        x2, y2 = rng.normal(size=2), rng.normal(size=2)
        want = (eval_kernel(spec, x, x2) + eval_kernel(spec, y, y2)
                - eval_kernel(spec, x, y2) - eval_kernel(spec, y, x2))
        assert_allclose(h_mmd(spec, (x, y), (x2, y2)), want, rtol=1e-14)


def test_h_mmd_symmetric_in_arguments():
    spec = laplacian(0.8)
    w = (rng.normal(size=3), rng.normal(size=3))
    w2 = (rng.normal(size=3), rng.normal(size=3))
    assert h_mmd(spec, w, w2) == h_mmd(spec, w2, w)


def test_h_mmd_bounded_by_two():
    for _ in range(50):
        spec = gaussian(float(np.exp(rng.normal())))
        w = (rng.normal(size=2) * 3, rng.normal(size=2) * 3)
        w2 = (rng.normal(size=2) * 3, rng.normal(size=2) * 3)
        assert abs(h_mmd(spec, w, w2)) <= 2.0


# ---------------------------------------------------------------------------
# h_hsic

def _random_quad(d=2):
    return tuple(rng.normal(size=d) for _ in range(4))


def test_h_hsic_zero_when_x_halves_equal():
    g, l = gaussian(1.0), gaussian(2.0)
    x = rng.normal(size=2)
    u = rng.normal(size=2)
    q = (x, x, rng.normal(size=2), rng.normal(size=2))
    q2 = (u, u, rng.normal(size=2), rng.normal(size=2))
    assert h_hsic(g, l, q, q2) == 0.0


def test_h_hsic_zero_when_y_halves_equal():
    g, l = gaussian(1.0), gaussian(2.0)
    y, v = rng.normal(size=2), rng.normal(size=2)
    q = (rng.normal(size=2), rng.normal(size=2), y, y)
    q2 = (rng.normal(size=2), rng.normal(size=2), v, v)
    assert h_hsic(g, l, q, q2) == 0.0


def test_h_hsic_factorizes():
    g, l = gaussian(0.9), laplacian(1.7)
    for _ in range(10):
        q, q2 = _random_quad(), _random_quad()
        want = 0.25 * h_mmd(g, q[:2], q2[:2]) * h_mmd(l, q[2:], q2[2:])
        assert_allclose(h_hsic(g, l, q, q2), want, rtol=1e-14)


def test_h_hsic_bounded_by_one():
    g, l = gaussian(1.0), gaussian(1.0)
    for _ in range(50):
        assert abs(h_hsic(g, l, _random_quad(), _random_quad())) <= 1.0


# ---------------------------------------------------------------------------
# h-stack construction

def test_stack_n2_single_kernel():
    data = TwoSampleData(rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))
    spec = gaussian(1.0)
    stack = build_h_stack([spec], data)
    want = h_mmd(spec, (data.x[0], data.y[0]), (data.x[1], data.y[1]))
    assert stack.mats.shape == (1, 2, 2)
    assert_allclose(stack.mats[0, 0, 1], want, rtol=1e-12)
    assert stack.mats[0, 0, 1] == stack.mats[0, 1, 0]
    assert stack.mats[0, 0, 0] == 0.0


def test_stack_duplicate_kernels_identical():
    data = TwoSampleData(rng.normal(size=(6, 2)), rng.normal(size=(6, 2)))
    stack = build_h_stack([gaussian(1.5)] * 3, data)
    assert_allclose(stack.mats[1], stack.mats[0], rtol=0)
    assert_allclose(stack.mats[2], stack.mats[0], rtol=0)


def test_stack_matches_loop_oracle():
    data = TwoSampleData(rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))
    pool = [gaussian(1.0), laplacian(2.0)]
    stack = build_h_stack(pool, data)
    for k, spec in enumerate(pool):
        for i in range(5):
            for j in range(5):
                want = 0.0 if i == j else h_mmd(
                    spec, (data.x[i], data.y[i]), (data.x[j], data.y[j]))
                assert_allclose(stack.mats[k, i, j], want, atol=1e-13)


def test_stack_symmetry_and_finiteness():
    data = IndepData(*(rng.normal(size=(7, 2)) for _ in range(4)))
    stack = build_h_stack([gaussian(1.0), mahalanobis(np.eye(2))], data)
    assert np.all(np.isfinite(stack.mats))
    assert_allclose(stack.mats, np.swapaxes(stack.mats, 1, 2), rtol=0)


def test_stack_degeneracy_witness():
    # x_i = y_i for every i: every h_mmd entry is exactly zero
    x = rng.normal(size=(6, 2))
    stack = build_h_stack([gaussian(1.0), laplacian(0.5)], TwoSampleData(x, x))
    assert np.all(stack.mats == 0.0)


def test_h_mmd_matrix_agrees_with_stack():
    data = TwoSampleData(rng.normal(size=(4, 2)), rng.normal(size=(4, 2)))
    spec = gaussian(2.0)
    assert_allclose(build_h_stack([spec], data).mats[0],
                    h_mmd_matrix(spec, data), rtol=0)


def test_h_hsic_matrix_uses_y_part_parameters():
    data = IndepData(*(rng.normal(size=(5, 2)) for _ in range(4)))
    spec = gaussian(1.0)
    spec.log_sigma_y = np.log(3.0)
    got = h_hsic_matrix(spec, data)
    for i in range(5):
        for j in range(i + 1, 5):
            hx = h_mmd(spec, (data.x1[i], data.x2[i]),
                       (data.x1[j], data.x2[j]), part="x")
            hy = h_mmd(spec, (data.y1[i], data.y2[i]),
                       (data.y1[j], data.y2[j]), part="y")
            assert_allclose(got[i, j], 0.25 * hx * hy, atol=1e-13)


def test_stack_rejects_tiny_samples():
    data = TwoSampleData(rng.normal(size=(1, 2)), rng.normal(size=(1, 2)))
    with pytest.raises(ValueError):
        build_h_stack([gaussian(1.0)], data)


# ---------------------------------------------------------------------------
# data containers

def test_two_sample_dimension_check():
    with pytest.raises(ValueError):
        TwoSampleData(rng.normal(size=(5, 2)), rng.normal(size=(5, 3)))


def test_indep_from_pairs_floor_rule():
    # m = 7 observations -> 3 quadruples, one sample dropped
    x, y = rng.normal(size=(7, 2)), rng.normal(size=(7, 2))
    data = IndepData.from_pairs(x, y)
    assert data.n == 3
    assert_allclose(data.x1, x[:3], rtol=0)
    assert_allclose(data.x2, x[3:6], rtol=0)


def test_subset_preserves_pairing():
    x, y = rng.normal(size=(8, 2)), rng.normal(size=(8, 2))
    data = TwoSampleData(x, y)
    sub = data.subset(np.array([1, 4, 6]))
    assert_allclose(sub.x, x[[1, 4, 6]], rtol=0)
    assert_allclose(sub.y, y[[1, 4, 6]], rtol=0)
