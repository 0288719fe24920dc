import numpy as np
import pytest
from conftest import inconsistent_instance
from hypothesis import given, settings
from hypothesis import strategies as st

from extkacz.linalg import MatrixHandle
from extkacz.sampling import Partition, make_partition, make_scheme
from extkacz.theory import (
    BoundsConfig,
    c_constant,
    check_exactness_sufficient,
    compute_H_matrices,
    compute_rates,
    compute_reabk_rates,
    d_constant,
    eval_g_f,
    gamma_bound,
)

A3 = np.array([[1.0, 0.0], [0.0, 2.0], [2.0, 2.0]])


def singles(dim):
    return Partition(tuple(np.array([i]) for i in range(dim)), 1)


def schemes_for(A, p_rows, p_cols=None, seed=0):
    H = MatrixHandle(A)
    rng = np.random.default_rng(seed)
    rows = make_scheme(H, make_partition(H.m, p_rows, rng), "row")
    cols = make_scheme(H, make_partition(H.n, p_cols or p_rows, rng), "column")
    return H, rows, cols


def selector(dim, idx, scale):
    T = np.zeros((dim, len(idx)))
    T[idx, np.arange(len(idx))] = 1.0 / scale
    return T


def brute_force_H(A, scheme, axis):
    """Sum of prob * S S^T / ||A^T S||_2^2 with explicit selector matrices."""
    dim = A.shape[0] if axis == "row" else A.shape[1]
    out = np.zeros((dim, dim))
    for i, idx in enumerate(scheme.partition.blocks):
        if scheme.probabilities[i] == 0:
            continue
        S = selector(dim, idx, np.sqrt(scheme.block_fro_norms_sq[i]))
        AS = A.T @ S if axis == "row" else A @ S
        out += scheme.probabilities[i] * S @ S.T / np.linalg.norm(AS, 2) ** 2
    return out


def smallest_nonzero_eig(M):
    w = np.linalg.eigvalsh(M)
    return w[w > max(M.shape) * np.finfo(float).eps * w.max()].min()


def test_H_examples():
    n = 4
    I = MatrixHandle(np.eye(n))
    rows = make_scheme(I, singles(n), "row")
    cols = make_scheme(I, singles(n), "column")
    H, Hb, M, Mb = compute_H_matrices(I, rows, cols)
    np.testing.assert_allclose(H, np.eye(n) / n, rtol=1e-15)
    np.testing.assert_allclose(Hb, np.eye(n) / n, rtol=1e-15)

    H, Hb, M, Mb = compute_H_matrices(MatrixHandle(A3), make_scheme(MatrixHandle(A3), singles(3), "row"),
                                      make_scheme(MatrixHandle(A3), singles(2), "column"))
    np.testing.assert_allclose(np.diag(H), [1 / 13] * 3, rtol=1e-15)
    np.testing.assert_allclose(M, np.eye(3) / 13, rtol=1e-15)
    np.testing.assert_allclose(Mb, np.eye(2) / 13, rtol=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5), st.integers(1, 4))
def test_H_matches_explicit_selectors(seed, pr, pc):
    A = np.random.default_rng(seed).standard_normal((9, 5))
    H_, rows, cols = schemes_for(A, pr, pc, seed)
    H, Hb, M, Mb = compute_H_matrices(H_, rows, cols)
    np.testing.assert_allclose(H, brute_force_H(A, rows, "row"), rtol=1e-12)
    np.testing.assert_allclose(Hb, brute_force_H(A, cols, "column"), rtol=1e-12)
    fro = np.sum(A * A)
    np.testing.assert_allclose(M, np.eye(9) / fro, rtol=1e-12)
    np.testing.assert_allclose(Mb, np.eye(5) / fro, rtol=1e-12)
    assert np.allclose(H, H.T) and np.linalg.eigvalsh(H).min() >= -1e-12 * np.trace(H)


def test_identity_rates():
    n = 5
    I = MatrixHandle(np.eye(n))
    tb = compute_rates(I, make_scheme(I, singles(n), "row"), make_scheme(I, singles(n), "column"))
    assert abs(tb.rho_z - (1 - 1 / n)) <= 1e-14
    assert abs(tb.rho_x - (1 - 1 / n)) <= 1e-14
    assert tb.Lambda_min == pytest.approx(1.0, abs=1e-14)
    assert tb.gamma == pytest.approx(1 / n + 1, rel=1e-14)


def test_rek_setting_rate():
    system, oracle = inconsistent_instance(15, 6, 6, 4.0, 1)
    A = system.A
    tb = compute_rates(A, make_scheme(A, singles(15), "row"), make_scheme(A, singles(6), "column"))
    s = np.linalg.svd(A.data, compute_uv=False)
    expected = 1 - s.min() ** 2 / np.sum(s**2)
    assert tb.rho == pytest.approx(expected, abs=1e-10)


def test_rates_match_eigen_oracle():
    A = np.random.default_rng(12).standard_normal((12, 5))
    H_, rows, cols = schemes_for(A, 3, 3, seed=1)
    tb = compute_rates(H_, rows, cols, BoundsConfig(eta=0.7, zeta=1.4, eps=0.5))
    Hb = brute_force_H(A, cols, "column")
    H = brute_force_H(A, rows, "row")
    sb = smallest_nonzero_eig(A @ Hb @ A.T)
    sx = smallest_nonzero_eig(A.T @ H @ A)
    assert tb.rho_z == pytest.approx(1 - 0.7 * 1.3 * sb, abs=1e-10)
    assert tb.rho_x == pytest.approx(1 - c_constant(1.4, 0.5) * sx, abs=1e-10)
    assert tb.rho == max(tb.rho_z, tb.rho_x)
    assert 0 <= tb.rho < 1


def test_lambda_min_matches_block_eigs():
    A = np.random.default_rng(3).standard_normal((10, 4))
    H_, rows, cols = schemes_for(A, 3, 2, seed=5)
    tb = compute_rates(H_, rows, cols)
    vals = []
    for i, idx in enumerate(rows.partition.blocks):
        S = selector(10, idx, np.sqrt(rows.block_fro_norms_sq[i]))
        AS = A.T @ S
        vals.append(smallest_nonzero_eig(AS @ AS.T / np.linalg.norm(AS, 2) ** 2))
    assert tb.Lambda_min == pytest.approx(min(vals), rel=1e-10)


def test_constants():
    assert c_constant(1.0, 0.3) == 1.0 and d_constant(1.0, 0.3) == 1.0
    assert c_constant(0.5, 0.5) == pytest.approx(1.5 * (1 - 1.5 * 0.5))
    assert d_constant(1.5, 0.5) == pytest.approx(0.5 * (1 + 1 * 0.5))
    for zeta in np.linspace(0.05, 1.95, 39):
        eps = min(1.0, 0.99 * zeta / (1 - zeta)) if zeta <= 0.5 else 1.0
        assert 0 < c_constant(zeta, eps) <= d_constant(zeta, eps)


def test_inadmissible_pairs():
    with pytest.raises(ValueError, match="zeta"):
        BoundsConfig(zeta=0.25, eps=0.5)
    with pytest.raises(ValueError):
        BoundsConfig(eps=0.0)
    with pytest.raises(ValueError):
        BoundsConfig(eta=2.0)
    BoundsConfig(zeta=0.25, eps=0.3)
    BoundsConfig(zeta=0.6, eps=1.0)


def test_unit_relaxation_closure():
    A = np.random.default_rng(4).standard_normal((14, 6))
    H_, rows, cols = schemes_for(A, 4, 2, seed=2)
    tb = compute_rates(H_, rows, cols)
    expected = 1 - min(tb.sigma_min_sq_HbarAt, tb.sigma_min_sq_HA)
    assert tb.rho == pytest.approx(expected, abs=1e-15)
    assert tb.rho == tb.rho_hat
    k = 37
    assert tb.theorem_bound(k, 2.0, 3.0) == pytest.approx(tb.corollary_bound(k, 2.0, 3.0), rel=1e-12)
    assert np.isfinite(tb.momentum_bound(k, 2.0, 3.0)) and tb.momentum_bound(k, 2.0, 3.0) > 0
    with pytest.raises(ValueError):
        tb.theorem_bound(0, 1.0, 1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6), st.floats(0.01, 100.0))
def test_scale_invariance_and_dominance(seed, p, c):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((16, 7))
    p = min(p, 7)
    part_r, part_c = make_partition(16, p, rng), make_partition(7, p, rng)
    out = []
    for M in (A, c * A):
        H = MatrixHandle(M)
        out.append(compute_rates(H, make_scheme(H, part_r, "row"), make_scheme(H, part_c, "column")))
    assert out[0].rho_z == pytest.approx(out[1].rho_z, abs=1e-12)
    assert out[0].rho_x == pytest.approx(out[1].rho_x, abs=1e-12)
    assert out[0].rho <= out[0].rho3
    assert out[0].rho3 == max(out[0].rho1, out[0].rho2)
    assert out[0].Lambda_min > 0
    # Lambda_min is scale free; H carries 1/sigma_max^2 so both terms of gamma scale like 1/c^2
    assert out[0].Lambda_min == pytest.approx(out[1].Lambda_min, rel=1e-10)
    t0 = out[0].lambda_max_H / out[0].Lambda_min
    t1 = out[1].lambda_max_H / out[1].Lambda_min
    assert t1 == pytest.approx(t0 / c**2, rel=1e-10)
    assert out[1].gamma - t1 == pytest.approx((out[0].gamma - t0) / c**2, rel=1e-10)


def test_gamma_examples():
    n = 6
    I = MatrixHandle(np.eye(n))
    assert gamma_bound(I, make_scheme(I, singles(n), "row")) == pytest.approx(1 / n + 1, rel=1e-14)
    A = np.random.default_rng(12).standard_normal((12, 5))
    H_, rows, cols = schemes_for(A, 3)
    H = brute_force_H(A, rows, "row")
    tb = compute_rates(H_, rows, cols)
    s = np.linalg.svd(A, compute_uv=False)
    expect = np.linalg.eigvalsh(H).max() / tb.Lambda_min + 1 / s.min() ** 2
    assert gamma_bound(H_, rows) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(ValueError):
        gamma_bound(MatrixHandle(np.zeros((3, 2))), make_scheme(I, singles(n), "row"))


def test_reabk_rates_examples():
    n = 4
    I = np.eye(n)
    r = compute_reabk_rates(I, Partition((np.arange(n),), n), Partition((np.arange(n),), n))
    assert r.Gamma_max_I == pytest.approx(1 / n) and r.Gamma_min_I == pytest.approx(1 / n)
    assert r.Gamma_max_J == pytest.approx(1 / n)
    assert r.rho1 == pytest.approx(0.0, abs=1e-15) and r.rho2 == pytest.approx(0.0, abs=1e-15)
    # unit-norm rows, singletons
    rng = np.random.default_rng(0)
    A = rng.standard_normal((10, 4))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    r = compute_reabk_rates(A, singles(10), singles(4))
    s = np.linalg.svd(A, compute_uv=False)
    assert r.Gamma_max_I == pytest.approx(1.0)
    assert r.rho1 == pytest.approx(1 - s.min() ** 2 / 10, abs=1e-12)
    assert r.psi_max == pytest.approx(1.0)


def test_exactness_check():
    A = np.random.default_rng(1).standard_normal((6, 3))
    H_, rows, cols = schemes_for(A, 2)
    ok, lm, lmb = check_exactness_sufficient(rows, cols)
    assert ok
    assert lm == pytest.approx(1 / np.sum(A * A)) and lmb == pytest.approx(1 / np.sum(A * A))
    single = make_scheme(H_, Partition((np.arange(6),), 6), "row")
    assert check_exactness_sufficient(single, make_scheme(H_, Partition((np.arange(3),), 3), "column"))[0]
    B = A.copy()
    B[2] = 0.0  # one coordinate is never sampled
    HB = MatrixHandle(B)
    rows_b = make_scheme(HB, singles(6), "row")
    ok, lm, _ = check_exactness_sufficient(rows_b, make_scheme(HB, singles(3), "column"))
    assert not ok and lm == 0.0


def test_g_f_examples():
    system, oracle = inconsistent_instance(18, 6, 4, 5.0, 21)
    A, b = system.A, system.b
    rng = np.random.default_rng(2)
    rows = make_scheme(A, make_partition(18, 4, rng), "row")
    cols = make_scheme(A, make_partition(6, 4, rng), "column")
    g, f = eval_g_f(A, b, rows, cols, oracle.x_star, oracle.b_perp)
    nb = b @ b
    assert g / nb <= 1e-18 and f / nb <= 1e-18
    g, _ = eval_g_f(A, b, rows, cols, rng.standard_normal(6), np.zeros(18))
    assert g == 0.0
    _, _, M, Mb = compute_H_matrices(A, rows, cols)
    Ad = A.data
    for _ in range(5):
        x, z = rng.standard_normal(6), rng.standard_normal(18)
        g, f = eval_g_f(A, b, rows, cols, x, z)
        r = Ad @ x - b + z
        assert g == pytest.approx(0.5 * z @ Ad @ Mb @ Ad.T @ z, rel=1e-12)
        assert f == pytest.approx(0.5 * r @ M @ r, rel=1e-12)
        assert g > 0 and f > 0


def test_dimension_cap():
    A = MatrixHandle(np.ones((7, 2)))
    rows = make_scheme(A, singles(7), "row")
    cols = make_scheme(A, singles(2), "column")
    with pytest.raises(ValueError, match="cap"):
        compute_rates(A, rows, cols, max_dim=5)


def test_report_is_flat_key_value():
    A = np.random.default_rng(8).standard_normal((8, 3))
    H_, rows, cols = schemes_for(A, 2)
    text = compute_rates(H_, rows, cols).to_report()
    keys = dict(line.split("=", 1) for line in text.splitlines())
    for key in ("rho", "rho_z", "rho_x", "rho3", "Lambda_min", "gamma", "psi_max", "Gamma_min_I"):
        float(keys[key])
    assert "H" not in keys
