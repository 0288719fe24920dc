"""Convergence-rate certificates for the extended block methods.

All quantities are computed densely and are meant for desk-scale problems.
For partition schemes the weighting matrices are diagonal:

* ``H``  has ``prob_i / sigma_max(A_I)^2`` on the rows of block ``I``,
* ``M``  has ``prob_i / ||A_I||_F^2`` (``= 1/||A||_F^2`` when no block is zero),

and ``H_bar``, ``M_bar`` are the column analogues. "Smallest" singular
values and eigenvalues always mean the smallest *nonzero* ones, with the
same rank cut as :func:`extkacz.linalg.rank_cut`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from .linalg import MatrixHandle, rank_cut
from .sampling import Partition, SamplingScheme

DEFAULT_MAX_DIM = 5000


@dataclass(frozen=True)
class BoundsConfig:
    """Relaxation parameters and the free constant ``eps`` of the x-rate.

    ``zeta`` in ``(0, 1/2]`` needs ``eps < zeta / (1 - zeta)`` so that the
    x-contraction constant stays positive; larger ``zeta`` allows any
    ``eps`` in ``(0, 1]``.
    """

    eta: float = 1.0
    zeta: float = 1.0
    eps: float = 1.0

    def __post_init__(self):
        if not (0 < self.eta < 2 and 0 < self.zeta < 2):
            raise ValueError("eta and zeta must lie in (0, 2)")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        if self.zeta <= 0.5 and not self.eps < self.zeta / (1 - self.zeta):
            raise ValueError(
                f"inadmissible (zeta, eps) = ({self.zeta}, {self.eps}): for zeta in (0, 1/2] "
                "the rate certificate requires eps < zeta/(1-zeta); for zeta in (1/2, 2) any eps in (0, 1]"
            )


class ReabkRates(NamedTuple):
    rho1: float
    rho2: float
    rho3: float
    Gamma_min_I: float
    Gamma_max_I: float
    Gamma_max_J: float
    psi_max: float


@dataclass(frozen=True)
class TheoryBounds:
    H: np.ndarray = field(repr=False)
    H_bar: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    M_bar: np.ndarray = field(repr=False)
    Lambda_min: float
    rho_z: float
    rho_x: float
    rho: float
    c_zeta_eps: float
    d_zeta_eps: float
    gamma: float
    rho1: float
    rho2: float
    rho3: float
    Gamma_min_I: float
    Gamma_max_I: float
    Gamma_max_J: float
    psi_max: float
    sigma_min_sq_HbarAt: float
    sigma_min_sq_HA: float
    sigma_min_sq_A: float
    fro_sq_A: float
    lambda_max_H: float
    rho_hat_z: float
    rho_hat_x: float
    rho_hat: float
    eta: float
    zeta: float
    eps: float

    def to_report(self) -> str:
        """Flat ``key=value`` lines for every scalar field."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                continue
            lines.append(f"{f.name}={float(v)!r}")
        return "\n".join(lines) + "\n"

    def theorem_bound(self, k: int, err_x0_sq: float, err_z0_sq: float) -> float:
        """Expected ``||x^k - A^+ b||^2`` bound for the adaptive method."""
        k = _check_k(k)
        denom = max(abs(1 - self.rho_x / self.rho_z), 1 / k) if self.rho_z > 0 else 1 / k
        coef = self.d_zeta_eps * self.lambda_max_H / (self.Lambda_min * denom)
        return self.rho**k * (err_x0_sq + coef * err_z0_sq)

    def corollary_bound(self, k: int, err_x0_sq: float, err_z0_sq: float) -> float:
        """Unit-relaxation form with the gap written through singular values."""
        k = _check_k(k)
        sb, s = self.sigma_min_sq_HbarAt, self.sigma_min_sq_HA
        gap = abs(sb - s) / (1 - sb) if sb < 1 else np.inf
        Gk = max(gap, 1 / k)
        rho = max(self.rho_hat_z, self.rho_hat_x)
        return rho**k * (err_x0_sq + self.lambda_max_H / (self.Lambda_min * Gk) * err_z0_sq)

    def momentum_bound(self, k: int, err_x0_sq: float, err_z0_sq: float) -> float:
        """Bound for the adaptive momentum method (unit relaxation rates and ``gamma``)."""
        k = _check_k(k)
        denom = max(abs(1 - self.rho_hat_x / self.rho_hat_z), 1 / k) if self.rho_hat_z > 0 else 1 / k
        return self.rho_hat**k * (err_x0_sq + self.gamma / denom * err_z0_sq)


def _check_k(k: int) -> int:
    if k < 1:
        raise ValueError("iteration count k must be at least 1")
    return int(k)


def c_constant(zeta: float, eps: float) -> float:
    if zeta < 1:
        return (2 - zeta) * (1 - (1 + eps) * (1 - zeta))
    return (2 - zeta) * (1 + (1 - eps) * (zeta - 1))


def d_constant(zeta: float, eps: float) -> float:
    if zeta < 1:
        return (2 - zeta) * (1 + (1 / eps + 1) * (1 - zeta))
    return (2 - zeta) * (1 + (1 / eps - 1) * (zeta - 1))


def _dense(A, max_dim: int) -> np.ndarray:
    if not isinstance(A, MatrixHandle):
        A = MatrixHandle(A)
    if max(A.shape) > max_dim:
        raise ValueError(f"matrix dimension {max(A.shape)} exceeds the dense theory cap {max_dim}")
    return A.to_dense()


def nonzero_singular_values(B: np.ndarray) -> np.ndarray:
    """Singular values above the numerical-rank cut, in decreasing order."""
    if B.size == 0:
        return np.zeros(0)
    s = np.linalg.svd(B, compute_uv=False)
    return s[s > rank_cut(s, B.shape)] if s.size and s[0] > 0 else np.zeros(0)


def _sigma_min_sq(B: np.ndarray) -> float:
    s = nonzero_singular_values(B)
    return float(s[-1] ** 2) if s.size else 0.0


def _take(Ad: np.ndarray, idx, axis: str) -> np.ndarray:
    return Ad[idx, :] if axis == "row" else Ad[:, idx]


def _weights(Ad: np.ndarray, scheme: SamplingScheme, spectral: bool) -> np.ndarray:
    """Diagonal of ``sum_i prob_i I_I / w_i`` with ``w_i`` the block's squared norm."""
    dim = scheme.partition.dim
    diag = np.zeros(dim)
    for i, idx in enumerate(scheme.partition.blocks):
        prob = scheme.probabilities[i]
        if prob == 0:
            continue
        if spectral:
            w = float(np.linalg.norm(_take(Ad, idx, scheme.axis), 2) ** 2)
        else:
            w = float(scheme.block_fro_norms_sq[i])
        diag[idx] += prob / w
    return diag


def compute_H_matrices(A, row_scheme: SamplingScheme, col_scheme: SamplingScheme, max_dim: int = DEFAULT_MAX_DIM):
    """Return the dense matrices ``(H, H_bar, M, M_bar)``."""
    Ad = _dense(A, max_dim)
    if not np.any(Ad):
        raise ValueError("degenerate sampling space: A is zero")
    H = np.diag(_weights(Ad, row_scheme, True))
    H_bar = np.diag(_weights(Ad, col_scheme, True))
    M = np.diag(_weights(Ad, row_scheme, False))
    M_bar = np.diag(_weights(Ad, col_scheme, False))
    return H, H_bar, M, M_bar


def lambda_min_blocks(A, row_scheme: SamplingScheme, max_dim: int = DEFAULT_MAX_DIM) -> float:
    """Minimum over nonzero row blocks of ``sigma_min(A_I)^2 / sigma_max(A_I)^2``."""
    Ad = _dense(A, max_dim)
    best = np.inf
    for i, idx in enumerate(row_scheme.partition.blocks):
        s = nonzero_singular_values(Ad[idx, :])
        if s.size == 0:
            continue
        best = min(best, float((s[-1] / s[0]) ** 2))
    if not np.isfinite(best):
        raise ValueError("degenerate sampling space: every row block annihilates A")
    return best


def gamma_bound(A, row_scheme: SamplingScheme, max_dim: int = DEFAULT_MAX_DIM) -> float:
    """``lambda_max(H) / Lambda_min + 1 / sigma_min(A)^2``."""
    Ad = _dense(A, max_dim)
    if not np.any(Ad):
        raise ValueError("degenerate sampling space: A is zero")
    h = _weights(Ad, row_scheme, True)
    return float(h.max()) / lambda_min_blocks(Ad, row_scheme, max_dim) + 1.0 / _sigma_min_sq(Ad)


def compute_reabk_rates(A, row_partition: Partition, col_partition: Partition, max_dim: int = DEFAULT_MAX_DIM) -> ReabkRates:
    """Constant-step comparison rates built from per-block singular values."""
    Ad = _dense(A, max_dim)
    fro_sq = float(np.sum(Ad * Ad))
    smin_sq = _sigma_min_sq(Ad)
    g_min_I, g_max_I, g_max_J, psi = np.inf, 0.0, 0.0, 0.0
    for idx in row_partition.blocks:
        B = Ad[idx, :]
        bf = float(np.sum(B * B))
        if bf == 0:
            continue
        s = nonzero_singular_values(B)
        g_max_I = max(g_max_I, s[0] ** 2 / bf)
        g_min_I = min(g_min_I, s[-1] ** 2 / bf)
        psi = max(psi, bf / s[0] ** 2)
    for idx in col_partition.blocks:
        B = Ad[:, idx]
        bf = float(np.sum(B * B))
        if bf == 0:
            continue
        g_max_J = max(g_max_J, np.linalg.norm(B, 2) ** 2 / bf)
    if g_max_I == 0 or g_max_J == 0:
        raise ValueError("degenerate sampling space: A is zero")
    rho1 = 1 - smin_sq / (g_max_I * fro_sq)
    rho2 = 1 - smin_sq / (g_max_J * fro_sq)
    return ReabkRates(
        float(rho1), float(rho2), float(max(rho1, rho2)), float(g_min_I), float(g_max_I), float(g_max_J), float(psi)
    )


def compute_rates(
    A,
    row_scheme: SamplingScheme,
    col_scheme: SamplingScheme,
    cfg: BoundsConfig | None = None,
    max_dim: int = DEFAULT_MAX_DIM,
) -> TheoryBounds:
    """Assemble every rate and certificate quantity for the given schemes."""
    cfg = cfg or BoundsConfig()
    Ad = _dense(A, max_dim)
    H, H_bar, M, M_bar = compute_H_matrices(Ad, row_scheme, col_scheme, max_dim)
    h, hb = np.diag(H), np.diag(H_bar)
    s_bar = _sigma_min_sq(np.sqrt(hb)[:, None] * Ad.T)
    s_x = _sigma_min_sq(np.sqrt(h)[:, None] * Ad)
    c = c_constant(cfg.zeta, cfg.eps)
    d = d_constant(cfg.zeta, cfg.eps)
    rho_z = 1 - cfg.eta * (2 - cfg.eta) * s_bar
    rho_x = 1 - c * s_x
    lam = lambda_min_blocks(Ad, row_scheme, max_dim)
    smin_A = _sigma_min_sq(Ad)
    lam_H = float(h.max())
    reabk = compute_reabk_rates(Ad, row_scheme.partition, col_scheme.partition, max_dim)
    return TheoryBounds(
        H=H,
        H_bar=H_bar,
        M=M,
        M_bar=M_bar,
        Lambda_min=lam,
        rho_z=float(rho_z),
        rho_x=float(rho_x),
        rho=float(max(rho_z, rho_x)),
        c_zeta_eps=float(c),
        d_zeta_eps=float(d),
        gamma=lam_H / lam + 1.0 / smin_A,
        **reabk._asdict(),
        sigma_min_sq_HbarAt=s_bar,
        sigma_min_sq_HA=s_x,
        sigma_min_sq_A=smin_A,
        fro_sq_A=float(np.sum(Ad * Ad)),
        lambda_max_H=lam_H,
        rho_hat_z=float(1 - s_bar),
        rho_hat_x=float(1 - s_x),
        rho_hat=float(max(1 - s_bar, 1 - s_x)),
        eta=float(cfg.eta),
        zeta=float(cfg.zeta),
        eps=float(cfg.eps),
    )


def _expectation_matrix_diag(scheme: SamplingScheme) -> np.ndarray:
    diag = np.zeros(scheme.partition.dim)
    for i, idx in enumerate(scheme.partition.blocks):
        if scheme.probabilities[i] > 0:
            diag[idx] += scheme.probabilities[i] / scheme.block_fro_norms_sq[i]
    return diag


def check_exactness_sufficient(row_scheme: SamplingScheme, col_scheme: SamplingScheme):
    """Check positive definiteness of the expected sampling outer products.

    Returns ``(ok, lambda_min(M), lambda_min(M_bar))``; ``ok`` holds when
    both eigenvalues exceed ``1e-12`` times the trace of their matrix.
    """
    lams = []
    ok = True
    for scheme in (row_scheme, col_scheme):
        diag = _expectation_matrix_diag(scheme)
        lam = float(diag.min())
        lams.append(lam)
        ok = ok and lam > 1e-12 * float(diag.sum())
    return ok, lams[0], lams[1]


def eval_g_f(A, b, row_scheme: SamplingScheme, col_scheme: SamplingScheme, x, z) -> tuple[float, float]:
    """Expected sampled objectives ``g(z)`` and ``f(x, z)``.

    ``g`` measures how far ``z`` is from ``Null(A^T)`` and ``f`` how far
    ``x`` is from solving ``Ax = b - z``, each as the probability-weighted
    average of ``(1/2)||sampled block||^2 / ||A_block||_F^2``.
    """
    if not isinstance(A, MatrixHandle):
        A = MatrixHandle(A)
    Atz = A.rmatvec(np.asarray(z, dtype=np.float64))
    r = A.matvec(np.asarray(x, dtype=np.float64)) - np.asarray(b, dtype=np.float64) + z
    g = 0.0
    for j, idx in enumerate(col_scheme.partition.blocks):
        if col_scheme.probabilities[j] > 0:
            t = Atz[idx]
            g += col_scheme.probabilities[j] * 0.5 * float(t @ t) / col_scheme.block_fro_norms_sq[j]
    f = 0.0
    for i, idx in enumerate(row_scheme.partition.blocks):
        if row_scheme.probabilities[i] > 0:
            u = r[idx]
            f += row_scheme.probabilities[i] * 0.5 * float(u @ u) / row_scheme.block_fro_norms_sq[i]
    return g, f
