"""Test-problem generators and convergence metrics."""

from __future__ import annotations

import numpy as np

from .linalg import LinearSystem, MatrixHandle, OracleSolution, min_norm_lsq_oracle
from .sampling import as_generator
from .solvers import RunRecord, relative_solution_error


def gen_gaussian_udv(m: int, n: int, r: int, kappa: float, rng=None) -> MatrixHandle:
    """Dense ``U D V^T`` with orthonormal Gaussian factors.

    ``U`` (m x r) and ``V`` (n x r) come from QR factorizations of standard
    Gaussian matrices; ``D`` has entries drawn uniformly from ``[1, kappa]``.
    The result has rank ``r`` and condition number at most ``kappa``.
    """
    if not 1 <= r <= min(m, n):
        raise ValueError(f"rank r={r} must satisfy 1 <= r <= min(m, n) = {min(m, n)}")
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    rng = as_generator(rng)
    U, _ = np.linalg.qr(rng.standard_normal((m, r)))
    V, _ = np.linalg.qr(rng.standard_normal((n, r)))
    d = 1.0 + (kappa - 1.0) * rng.random(r)
    return MatrixHandle((U * d) @ V.T)


def gen_consistent_rhs(A: MatrixHandle, rng=None) -> np.ndarray:
    """``b = A x`` for a standard Gaussian ``x``."""
    rng = as_generator(rng)
    return A.matvec(rng.standard_normal(A.n))


def gen_inconsistent_rhs(A: MatrixHandle, rng=None, oracle: OracleSolution | None = None) -> np.ndarray:
    """``b = A x + b_e`` with a nonzero ``b_e`` in ``Null(A^T)``.

    ``b_e`` is a Gaussian vector with its ``Range(A)`` component removed;
    it is redrawn (at most 10 times) if it comes out numerically zero.
    """
    rng = as_generator(rng)
    if oracle is None:
        oracle = min_norm_lsq_oracle(LinearSystem(A, np.zeros(A.m)))
    if oracle.rank >= A.m:
        raise ValueError("cannot construct inconsistency: Null(A^T) trivial")
    x = rng.standard_normal(A.n)
    for _ in range(10):
        w = rng.standard_normal(A.m)
        b_e = w - oracle.project_range(w)
        if np.linalg.norm(b_e) > 1e-8 * np.linalg.norm(w):
            return A.matvec(x) + b_e
    raise ValueError("cannot construct inconsistency: null-space component vanished in 10 draws")


def rse(x: np.ndarray, oracle: OracleSolution, x0: np.ndarray) -> float:
    """Relative solution error ``||x - A^+ b||^2 / ||x0 - A^+ b||^2``."""
    return relative_solution_error(x, oracle.x_star, x0)


def actual_convergence_factor(record: RunRecord, K: int | None = None) -> float:
    """Empirical per-step contraction ``RSE_K ** (1/K)``.

    ``K`` defaults to the final recorded iteration.
    """
    if K is None:
        K = record.iterations
    if K <= 0:
        raise ValueError("K must be positive")
    hits = np.flatnonzero(record.iters == K)
    if hits.size == 0:
        raise ValueError(f"record has no row for iteration {K}")
    value = float(record.rse[hits[0]])
    if np.isnan(value):
        raise ValueError("record carries no RSE (run without an oracle)")
    return value ** (1.0 / K)


def full_iterations(iterations: int, p: int, m: int) -> float:
    """Iteration count normalized to passes over the rows, ``k p / m``."""
    return iterations * p / m
