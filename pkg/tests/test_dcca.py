import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvdcca.dcca import (DccaError, DccaProjection, cca_oracle, compute_projections,
                         dcca_gradient, project, total_correlation)
from mvdcca.gradcheck import check_dcca


def correlated_views(rng, n=200, d_c=6, d_a=5, shared=3, noise=1.0):
    z = rng.standard_normal((n, shared))
    m_c = np.hstack([z, rng.standard_normal((n, d_c - shared))]) @ rng.standard_normal((d_c, d_c))
    m_a = np.hstack([z + noise * rng.standard_normal((n, shared)),
                     rng.standard_normal((n, d_a - shared))]) @ rng.standard_normal((d_a, d_a))
    return m_c, m_a


def test_identical_views_give_L(rng):
    m = rng.standard_normal((50, 5))
    assert total_correlation(m, m, 0.0, 0.0, L=4) == pytest.approx(4.0, abs=1e-10)


def test_independent_views_small(rng):
    x, y = rng.standard_normal((1000, 5)), rng.standard_normal((1000, 5))
    assert total_correlation(x, y, L=5) < 0.35


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5))
def test_matches_oracle(seed, L):
    m_c, m_a = correlated_views(np.random.default_rng(seed), n=60)
    ref = np.sum(cca_oracle(m_c, m_a, 1e-4)[:L])
    assert abs(total_correlation(m_c, m_a, 1e-4, 1e-4, L) - ref) <= 1e-8


def test_oracle_examples(rng):
    x = rng.standard_normal((40, 4))
    np.testing.assert_allclose(cca_oracle(x, x), 1.0, atol=1e-10)
    a = rng.standard_normal((4, 4)) + 3 * np.eye(4)
    np.testing.assert_allclose(cca_oracle(x, x @ a), 1.0, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_canonical_correlations_bounded_and_sorted(seed):
    m_c, m_a = correlated_views(np.random.default_rng(seed), n=40)
    rho = cca_oracle(m_c, m_a)
    assert np.all(rho >= -1e-12) and np.all(rho <= 1 + 1e-10)
    assert np.all(np.diff(rho) <= 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_affine_invariance(seed):
    rng = np.random.default_rng(seed)
    m_c, m_a = correlated_views(rng, n=80)
    base = total_correlation(m_c, m_a, 0.0, 0.0, L=3)
    a = rng.standard_normal((6, 6)) + 4 * np.eye(6)
    moved = total_correlation(m_c @ a + rng.standard_normal(6), m_a, 0.0, 0.0, L=3)
    assert abs(base - moved) < 1e-8


def test_monotone_in_L_and_shrinks_with_r(rng):
    m_c, m_a = correlated_views(rng, n=100)
    vals = [total_correlation(m_c, m_a, L=L) for L in range(1, 6)]
    assert np.all(np.diff(vals) >= 0)
    grid = [0.0, 1e-3, 1e-2, 1e-1, 1.0]
    for other in (0.0, 0.1):
        by_c = [total_correlation(m_c, m_a, r, other, L=3) for r in grid]
        by_a = [total_correlation(m_c, m_a, other, r, L=3) for r in grid]
        assert np.all(np.diff(by_c) <= 1e-12) and np.all(np.diff(by_a) <= 1e-12)


def test_gradient_grad_check():
    assert check_dcca(0) <= 1e-4
    assert check_dcca(1) <= 1e-4


def test_gradient_translation_invariant(rng):
    m_c, m_a = correlated_views(rng, n=40)
    _, g_c, g_a = dcca_gradient(m_c, m_a, L=3)
    c = rng.standard_normal(5)
    assert abs(np.sum(g_a @ c)) < 1e-12
    _, g_c2, g_a2 = dcca_gradient(m_c, m_a + c, L=3)
    np.testing.assert_allclose(g_a2, g_a, atol=1e-10)


def test_gradient_row_duplication(rng):
    m_c, m_a = correlated_views(rng, n=40)
    _, g_c, g_a = dcca_gradient(m_c, m_a, L=3)
    _, d_c, d_a = dcca_gradient(np.vstack([m_c, m_c]), np.vstack([m_a, m_a]), L=3)
    # each original row's gradient is shared between its two copies
    np.testing.assert_allclose(d_c[:40] + d_c[40:], g_c, atol=1e-10)
    np.testing.assert_allclose(d_a[:40] + d_a[40:], g_a, atol=1e-10)


def test_gradient_degenerate_gap_raises(rng):
    m = rng.standard_normal((30, 4))
    # identical views with r=0: every singular value is 1, no gap at L
    with pytest.raises(DccaError, match="non-differentiable top-L boundary"):
        dcca_gradient(m, m, 0.0, 0.0, L=2)


def test_input_errors(rng):
    with pytest.raises(DccaError):
        total_correlation(np.ones((1, 3)), np.ones((1, 3)), L=1)
    with pytest.raises(DccaError):
        total_correlation(rng.standard_normal((5, 3)), rng.standard_normal((4, 3)), L=1)
    with pytest.raises(DccaError):
        total_correlation(rng.standard_normal((5, 3)), rng.standard_normal((5, 2)), L=3)
    with pytest.raises(ValueError):
        total_correlation(np.full((5, 2), np.nan), rng.standard_normal((5, 2)), L=1)


def test_projection_constraints(rng):
    m_c, m_a = correlated_views(rng, n=500, d_c=32, d_a=32, shared=10)
    proj = compute_projections(m_c, m_a, L=20)
    xc, xa = m_c - proj.mean_c, m_a - proj.mean_a
    s_cc = xc.T @ xc / 500 + 1e-4 * np.eye(32)
    s_aa = xa.T @ xa / 500 + 1e-4 * np.eye(32)
    assert np.max(np.abs(proj.U.T @ s_cc @ proj.U - np.eye(20))) <= 1e-6
    assert np.max(np.abs(proj.V.T @ s_aa @ proj.V - np.eye(20))) <= 1e-6
    cross = proj.U.T @ (xc.T @ xa / 500) @ proj.V
    assert np.max(np.abs(cross - np.diag(np.diag(cross)))) <= 1e-6
    np.testing.assert_allclose(np.diag(cross), proj.correlations, atol=1e-10)
    # projecting the training batch reproduces the same variates
    np.testing.assert_allclose(project(m_c, proj, "code"), xc @ proj.U, atol=1e-12)


def test_projection_identical_views(rng):
    m = rng.standard_normal((60, 4))
    proj = compute_projections(m, m, 0.0, 0.0, L=4)
    assert np.max(np.abs(project(m, proj, "code") - project(m, proj, "text"))) <= 1e-8


def test_projection_rank_error(rng):
    z = rng.standard_normal((50, 1))
    with pytest.raises(DccaError, match="rank"):
        compute_projections(np.hstack([z, z]), np.hstack([z, -z]), 0.0, 0.0, L=2)


def test_project_examples(rng):
    u = np.eye(5)[:, :3]
    proj = DccaProjection(u, u, 0.0, 0.0, 3, np.zeros(5), np.zeros(5), np.ones(3))
    x = rng.standard_normal(5)
    np.testing.assert_array_equal(project(x, proj, "code"), x[:3])
    m_c, m_a = correlated_views(rng)
    proj = compute_projections(m_c, m_a, L=3)
    x, y, alpha = m_c[0], m_c[1], 0.3
    np.testing.assert_allclose(project(alpha * x + (1 - alpha) * y, proj, "code"),
                               alpha * project(x, proj, "code")
                               + (1 - alpha) * project(y, proj, "code"), atol=1e-12)
    with pytest.raises(DccaError):
        project(np.ones(4), proj, "code")
    with pytest.raises(DccaError):
        project(x, proj, "image")


def test_projection_round_trip(tmp_path, rng):
    m_c, m_a = correlated_views(rng)
    proj = compute_projections(m_c, m_a, L=3)
    proj.save(tmp_path / "p.bin")
    back = DccaProjection.load(tmp_path / "p.bin")
    for k in ("U", "V", "mean_c", "mean_a", "correlations"):
        assert np.array_equal(getattr(back, k), getattr(proj, k))
    assert (back.L, back.r_c, back.r_a) == (proj.L, proj.r_c, proj.r_a)


def test_uncentered_mode_differs(rng):
    m_c, m_a = correlated_views(rng)
    m_c = m_c + 5.0
    assert total_correlation(m_c, m_a, L=3, center=False) != pytest.approx(
        total_correlation(m_c, m_a, L=3))


def test_minibatch_consistency():
    rng = np.random.default_rng(7)
    pop_c, pop_a = correlated_views(rng, n=60_000, d_c=4, d_a=4, shared=2, noise=0.7)
    pop = np.sum(cca_oracle(pop_c, pop_a, 1e-4)[:2])
    est = []
    for _ in range(30):
        idx = rng.choice(60_000, 1024, replace=False)
        est.append(total_correlation(pop_c[idx], pop_a[idx], L=2))
    sd = np.std(est)
    assert np.all(np.abs(np.array(est) - pop) <= 3 * sd + 1e-12)
