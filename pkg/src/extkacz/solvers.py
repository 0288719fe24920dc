"""Randomized extended block Kaczmarz solvers and SVRG.

The extended methods run two coupled sequences: ``z`` drives ``b - z``
towards the projection of ``b`` onto ``Range(A)`` and ``x`` solves the
consistent system ``Ax = b - z``. Starting from ``z0 = b`` and ``x0 = 0``
the ``x`` iterates converge to the minimum-norm least-squares solution.

Methods
-------
REK, REABK_CONST
    Constant step ``alpha`` (``1`` for REK) scaled by the block Frobenius norm.
AREABK
    Exact line-search step sizes relaxed by ``eta`` and ``zeta``.
AMREABK
    Heavy-ball momentum where step size and momentum weight are chosen each
    iteration by projecting onto a two-dimensional affine set.
SVRG
    Variance-reduced SGD on ``(1/2m)||Ax - b||^2`` (last inner iterate kept).
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable

import numpy as np

from .linalg import (
    EPS,
    LinearSystem,
    MatrixHandle,
    OracleSolution,
    block_col_apply,
    block_col_transpose_apply,
    block_row_apply,
    block_row_transpose_apply,
)
from .sampling import BlockDraw, SamplingScheme, as_generator

TAU_ZERO = 1e2 * EPS
TAU_PAR = 1e-12

METHODS = ("REK", "REABK_CONST", "AREABK", "AMREABK", "SVRG")

CSV_HEADER = "trial,iter,rse,normal_residual,mu,omega,alpha,beta,z_branch,x_branch,elapsed_s"


class Branch(IntEnum):
    MOMENTUM = 0
    ADAPTIVE_FALLBACK = 1
    FROZEN = 2


class NumericalOverflow(FloatingPointError):
    """Raised when an iterate or step parameter stops being finite."""


@dataclass
class SolverConfig:
    method: str = "AREABK"
    eta: float = 1.0
    zeta: float = 1.0
    alpha_const: float | None = None
    svrg_alpha: float | None = None
    svrg_inner_N: int | None = None
    max_iters: int = 100_000
    rse_tol: float = 1e-12
    residual_tol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.method = self.method.upper()
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not (0 < self.eta < 2 and 0 < self.zeta < 2):
            raise ValueError("relaxation parameters eta and zeta must lie in (0, 2)")
        if self.rse_tol < 0 or self.residual_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.alpha_const is not None and self.alpha_const < 0:
            raise ValueError("alpha_const must be non-negative")


@dataclass
class SolverState:
    """Current and previous iterates plus the auxiliary vector ``h``.

    ``dx`` and ``dz`` hold the last steps ``x - x_prev`` and ``z - z_prev``
    as produced by the update formulas. Carrying them avoids recomputing a
    small difference of two large vectors, whose cancellation error would
    otherwise be amplified by large momentum weights.
    """

    x: np.ndarray
    x_prev: np.ndarray
    z: np.ndarray
    z_prev: np.ndarray
    h: np.ndarray
    k: int = 0
    dx: np.ndarray | None = None
    dz: np.ndarray | None = None

    def x_step(self) -> np.ndarray:
        return self.x - self.x_prev if self.dx is None else self.dx

    def z_step(self) -> np.ndarray:
        return self.z - self.z_prev if self.dz is None else self.dz


@dataclass(frozen=True)
class StepDiagnostics:
    mu: float = 0.0
    omega: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    z_branch: Branch = Branch.FROZEN
    x_branch: Branch = Branch.FROZEN


@dataclass
class RunRecord:
    """Per-iteration trace of a solver run.

    Row ``j`` describes the iterate after ``iters[j]`` steps; row 0 is the
    starting point. ``normal_residual`` is ``||A^T(Ax - b)||`` and is only
    evaluated every step when a residual stopping rule needs it (otherwise
    NaN except on the final row). ``rse`` is NaN without an oracle.
    """

    method: str
    iters: np.ndarray
    rse: np.ndarray
    normal_residual: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    z_branch: np.ndarray
    x_branch: np.ndarray
    elapsed_s: np.ndarray
    status: str
    x: np.ndarray
    z: np.ndarray | None = None
    col_blocks: np.ndarray | None = None
    row_blocks: np.ndarray | None = None
    epoch_variance: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return int(self.iters[-1])

    @property
    def final_rse(self) -> float:
        return float(self.rse[-1])

    @property
    def converged(self) -> bool:
        return self.status.startswith("converged")

    def to_csv(self, trial: int = 0, timing: bool = True, stride: int = 1, header: bool = True) -> str:
        """Render the trace with the fixed CSV header.

        ``timing=False`` writes ``nan`` for the elapsed column so that the
        output is a pure function of the inputs. ``stride`` thins the rows;
        the final row is always kept.
        """
        buf = io.StringIO()
        if header:
            buf.write(CSV_HEADER + "\n")
        nrows = self.iters.size
        keep = list(range(0, nrows, max(1, int(stride))))
        if keep[-1] != nrows - 1:
            keep.append(nrows - 1)
        for j in keep:
            el = _fmt(self.elapsed_s[j]) if timing else "nan"
            buf.write(
                f"{trial},{int(self.iters[j])},{_fmt(self.rse[j])},{_fmt(self.normal_residual[j])},"
                f"{_fmt(self.mu[j])},{_fmt(self.omega[j])},{_fmt(self.alpha[j])},{_fmt(self.beta[j])},"
                f"{int(self.z_branch[j])},{int(self.x_branch[j])},{el}\n"
            )
        return buf.getvalue()


def _fmt(v: float) -> str:
    return repr(float(v))


def _check_finite(*arrays_or_scalars):
    for v in arrays_or_scalars:
        if not np.all(np.isfinite(v)):
            raise NumericalOverflow("numerical overflow: non-finite intermediate in solver step")


# block products, using the scheme's cached block when available


def _col_t(A: MatrixHandle, draw: BlockDraw, z):
    if draw.sub is not None:
        return draw.sub.T @ z
    return block_col_transpose_apply(A, draw.indices, z)


def _col(A: MatrixHandle, draw: BlockDraw, t):
    if draw.sub is not None:
        return draw.sub @ t
    return block_col_apply(A, draw.indices, t)


def _row(A: MatrixHandle, draw: BlockDraw, x):
    if draw.sub is not None:
        return draw.sub @ x
    return block_row_apply(A, draw.indices, x)


def _row_t(A: MatrixHandle, draw: BlockDraw, u):
    if draw.sub is not None:
        return draw.sub.T @ u
    return block_row_transpose_apply(A, draw.indices, u)


def _is_zero(v_norm: float, A: MatrixHandle, ref_norm: float) -> bool:
    if not (np.isfinite(v_norm) and np.isfinite(ref_norm)):
        raise NumericalOverflow("numerical overflow: non-finite intermediate in solver step")
    return v_norm <= TAU_ZERO * A.fro_norm * max(1.0, ref_norm)


def _z_direction(A, z, draw_T):
    """Return ``(||T^T A^T z||^2, A T T^T A^T z)`` or ``None`` if the first is zero."""
    if draw_T.fro_norm_sq <= 0:
        return None
    scale = 1.0 / np.sqrt(draw_T.fro_norm_sq)
    t = _col_t(A, draw_T, z) * scale
    tt = float(t @ t)
    if _is_zero(np.sqrt(tt), A, float(np.linalg.norm(z))):
        return None
    p = _col(A, draw_T, t) * scale
    return tt, p


def _x_direction(A, x, residual_block, draw_S):
    """Return ``(u, q, scale)`` with ``u = S^T(Ax - (b - z))`` or ``None`` if ``u`` is zero."""
    if draw_S.fro_norm_sq <= 0:
        return None
    scale = 1.0 / np.sqrt(draw_S.fro_norm_sq)
    u = residual_block * scale
    if _is_zero(float(np.linalg.norm(u)), A, float(np.linalg.norm(x))):
        return None
    q = _row_t(A, draw_S, u) * scale
    return u, q, scale


def adaptive_z_step(A: MatrixHandle, z: np.ndarray, draw_T: BlockDraw, eta: float = 1.0):
    """Relaxed exact line-search step on ``(1/2)||T^T A^T z||^2``.

    Returns ``(z_next, mu)``; ``mu = 0`` and ``z`` unchanged when
    ``T^T A^T z`` vanishes.
    """
    z_next, mu, _ = _adaptive_z(A, z, draw_T, eta)
    return z_next, mu


def _adaptive_z(A, z, draw_T, eta):
    found = _z_direction(A, z, draw_T)
    if found is None:
        return z.copy(), 0.0, Branch.FROZEN
    tt, p = found
    mu = (2.0 - eta) * tt / float(p @ p)
    z_next = z - mu * p
    _check_finite(mu, z_next)
    return z_next, mu, Branch.ADAPTIVE_FALLBACK


def adaptive_x_step(A: MatrixHandle, x: np.ndarray, b_minus_znext: np.ndarray, draw_S: BlockDraw, zeta: float = 1.0):
    """Relaxed exact line-search step for ``Ax = b - z_next`` on the sampled rows.

    Returns ``(x_next, alpha)``.
    """
    resid = _row(A, draw_S, x) - b_minus_znext[draw_S.indices]
    x_next, alpha, _, _ = _adaptive_x(A, x, resid, draw_S, zeta)
    return x_next, alpha


def _adaptive_x(A, x, resid, draw_S, zeta):
    found = _x_direction(A, x, resid, draw_S)
    if found is None:
        return x.copy(), 0.0, Branch.FROZEN, None
    u, q, scale = found
    alpha = (2.0 - zeta) * float(u @ u) / float(q @ q)
    x_next = x - alpha * q
    _check_finite(alpha, x_next)
    return x_next, alpha, Branch.ADAPTIVE_FALLBACK, u * scale


def momentum_z_step(A: MatrixHandle, z: np.ndarray, z_prev: np.ndarray, draw_T: BlockDraw, d: np.ndarray | None = None):
    """Step size and momentum weight minimizing ``||z_next - b_perp||``.

    Falls back to the plain line-search step (``omega = 0``) when the
    gradient and the previous displacement ``d = z - z_prev`` are
    numerically parallel. ``d`` may be passed directly to avoid forming the
    difference. Returns ``(z_next, mu, omega, branch)``.
    """
    z_next, _, mu, omega, branch = _momentum_z(A, z, z - z_prev if d is None else d, draw_T)
    return z_next, mu, omega, branch


def _momentum_z(A, z, d, draw_T):
    found = _z_direction(A, z, draw_T)
    if found is None:
        return z.copy(), np.zeros_like(z), 0.0, 0.0, Branch.FROZEN
    tt, p = found
    pp, dd, pd = float(p @ p), float(d @ d), float(p @ d)
    gram = pp * dd - pd * pd
    if gram <= TAU_PAR * pp * dd:
        mu, omega = tt / pp, 0.0
        step = -mu * p
        branch = Branch.ADAPTIVE_FALLBACK
    else:
        mu = dd * tt / gram
        omega = pd * tt / gram
        step = omega * d - mu * p
        branch = Branch.MOMENTUM
    z_next = z + step
    _check_finite(mu, omega, z_next)
    return z_next, step, mu, omega, branch


def momentum_x_step(
    A: MatrixHandle,
    state: SolverState,
    b: np.ndarray,
    z_next: np.ndarray,
    z_curr: np.ndarray,
    draw_S: BlockDraw,
):
    """Project ``A^+(b - z_next)`` onto ``x + span{q, x - x_prev}``.

    The inner product with the unknown ``A^+(b - z_next)`` is recovered from
    the auxiliary vector ``h`` (``x - x_prev = A^T h``) as
    ``<h, z_next - z_curr>``. Returns ``(x_next, h_next, alpha, beta, branch)``.
    """
    x_next, _, h_next, alpha, beta, branch = _momentum_x(A, state, b, z_next, z_next - z_curr, draw_S)
    return x_next, h_next, alpha, beta, branch


def _momentum_x(A, state, b, z_next, z_step, draw_S):
    x = state.x
    I = draw_S.indices
    m = b.shape[0]
    resid = _row(A, draw_S, x) - b[I] + z_next[I]
    found = _x_direction(A, x, resid, draw_S)
    if found is None:
        return x.copy(), np.zeros_like(x), np.zeros(m), 0.0, 0.0, Branch.FROZEN
    u, q, scale = found
    d = state.x_step()
    uu = float(u @ u)
    qq, dd, qd = float(q @ q), float(d @ d), float(q @ d)
    gram = qq * dd - qd * qd
    if gram <= TAU_PAR * qq * dd:
        alpha, beta = uu / qq, 0.0
        step = -alpha * q
        h_next = np.zeros(m)
        branch = Branch.ADAPTIVE_FALLBACK
    else:
        c = float(state.h @ z_step)
        alpha = (uu * dd - qd * c) / gram
        beta = (uu * qd - qq * c) / gram
        step = beta * d - alpha * q
        h_next = beta * state.h
        branch = Branch.MOMENTUM
    h_next[I] -= alpha * scale * u
    x_next = x + step
    _check_finite(alpha, beta, x_next, h_next)
    return x_next, step, h_next, alpha, beta, branch


def reabk_const_step(
    A: MatrixHandle,
    state: SolverState,
    b: np.ndarray,
    draw_T: BlockDraw,
    draw_S: BlockDraw,
    alpha_const: float,
):
    """One constant-step extended average block Kaczmarz step.

    Returns ``(z_next, x_next)``.
    """
    z, x = state.z, state.x
    z_next = z
    if draw_T.fro_norm_sq > 0:
        z_next = z - (alpha_const / draw_T.fro_norm_sq) * _col(A, draw_T, _col_t(A, draw_T, z))
    x_next = x
    if draw_S.fro_norm_sq > 0:
        I = draw_S.indices
        r = _row(A, draw_S, x) - b[I] + z_next[I]
        x_next = x - (alpha_const / draw_S.fro_norm_sq) * _row_t(A, draw_S, r)
    _check_finite(z_next, x_next)
    return z_next, x_next


def relative_solution_error(x: np.ndarray, x_star: np.ndarray, x0: np.ndarray) -> float:
    """``||x - x*||^2 / ||x0 - x*||^2``, with ``0/0`` taken as 0."""
    num = float(np.sum((x - x_star) ** 2))
    den = float(np.sum((x0 - x_star) ** 2))
    if den == 0.0:
        if num == 0.0:
            return 0.0
        raise ZeroDivisionError("relative solution error undefined: x0 equals the solution but x does not")
    return num / den


class _Trace:
    def __init__(self):
        self.rows = []
        self.t0 = time.perf_counter()

    def add(self, k, rse, res, diag: StepDiagnostics):
        self.rows.append(
            (k, rse, res, diag.mu, diag.omega, diag.alpha, diag.beta, int(diag.z_branch), int(diag.x_branch),
             time.perf_counter() - self.t0)
        )

    def finish(self, method, status, x, z=None, **extra) -> RunRecord:
        cols = list(zip(*self.rows))
        f = lambda j: np.array(cols[j], dtype=np.float64)  # noqa: E731
        return RunRecord(
            method=method,
            iters=np.array(cols[0], dtype=np.int64),
            rse=f(1),
            normal_residual=f(2),
            mu=f(3),
            omega=f(4),
            alpha=f(5),
            beta=f(6),
            z_branch=np.array(cols[7], dtype=np.int8),
            x_branch=np.array(cols[8], dtype=np.int8),
            elapsed_s=f(9),
            status=status,
            x=x,
            z=z,
            **extra,
        )


def normal_residual(A: MatrixHandle, b: np.ndarray, x: np.ndarray) -> float:
    return float(np.linalg.norm(A.rmatvec(A.matvec(x) - b)))


class _Stopper:
    """Shared stopping rules: RSE below ``rse_tol`` or relative normal residual."""

    def __init__(self, system: LinearSystem, cfg: SolverConfig, oracle, x0):
        if oracle is None and cfg.residual_tol == 0 and cfg.rse_tol > 0:
            raise ValueError(
                "configuration error: RSE stopping requested without an oracle solution; "
                "supply an oracle or set residual_tol > 0"
            )
        self.system, self.cfg, self.oracle = system, cfg, oracle
        self.x0 = x0
        self.use_rse = oracle is not None and cfg.rse_tol > 0
        self.need_res = cfg.residual_tol > 0
        self.res_ref = normal_residual(system.A, system.b, np.zeros(system.n)) if self.need_res else 1.0
        if self.res_ref == 0.0:
            self.res_ref = 1.0

    def measure(self, x, final=False):
        rse = relative_solution_error(x, self.oracle.x_star, self.x0) if self.oracle is not None else np.nan
        res = normal_residual(self.system.A, self.system.b, x) if (self.need_res or final) else np.nan
        return rse, res

    def status(self, rse, res):
        if self.use_rse and rse < self.cfg.rse_tol:
            return "converged_rse"
        if self.need_res and res <= self.cfg.residual_tol * self.res_ref:
            return "converged_residual"
        return None


def _check_start(system, oracle, x0, z0):
    if oracle is None:
        return
    scale_x = max(1.0, float(np.linalg.norm(x0)))
    if np.linalg.norm(x0 - oracle.project_row_space(x0)) > 1e-8 * scale_x:
        raise ValueError("initial x0 must lie in Range(A^T)")
    dz = z0 - system.b
    if np.linalg.norm(dz - oracle.project_range(dz)) > 1e-8 * max(1.0, float(np.linalg.norm(system.b))):
        raise ValueError("initial z0 must lie in b + Range(A)")


def run_solver(
    system: LinearSystem,
    row_scheme: SamplingScheme | None,
    col_scheme: SamplingScheme | None,
    cfg: SolverConfig,
    oracle: OracleSolution | None = None,
    rng=None,
    x0: np.ndarray | None = None,
    z0: np.ndarray | None = None,
    callback: Callable[[SolverState, StepDiagnostics], None] | None = None,
) -> RunRecord:
    """Run one of the extended block methods (or SVRG) to a stopping rule.

    ``rng`` defaults to a generator seeded with ``cfg.seed``. Each iteration
    draws the column block first and then the row block. ``callback`` is
    called after every step with the new state and the step diagnostics.
    """
    rng = as_generator(cfg.seed if rng is None else rng)
    if cfg.method == "SVRG":
        return svrg_run(system, cfg, rng, oracle=oracle, x0=x0)
    if row_scheme is None or col_scheme is None:
        raise ValueError(f"{cfg.method} needs both a row and a column sampling scheme")
    if row_scheme.axis != "row" or col_scheme.axis != "column":
        raise ValueError("row_scheme must sample rows and col_scheme columns")

    A, b = system.A, system.b
    m, n = system.m, system.n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    z = b.copy() if z0 is None else np.array(z0, dtype=np.float64)
    _check_start(system, oracle, x, z)
    state = SolverState(x=x, x_prev=x.copy(), z=z, z_prev=z.copy(), h=np.zeros(m))

    stop = _Stopper(system, cfg, oracle, x)
    trace = _Trace()
    rse, res = stop.measure(x, final=True)
    trace.add(0, rse, res, StepDiagnostics())
    col_ids, row_ids = [], []
    status = stop.status(rse, res)

    method = cfg.method
    alpha_const = 1.0 if method == "REK" else cfg.alpha_const
    if method == "REABK_CONST" and alpha_const is None:
        raise ValueError("REABK_CONST needs alpha_const")

    k = 0
    while status is None and k < cfg.max_iters:
        dT = col_scheme.draw(rng)
        dS = row_scheme.draw(rng)
        col_ids.append(dT.block_id)
        row_ids.append(dS.block_id)
        z, x = state.z, state.x
        if method in ("REK", "REABK_CONST"):
            z_next, x_next = reabk_const_step(A, state, b, dT, dS, alpha_const)
            diag = StepDiagnostics(
                mu=alpha_const, alpha=alpha_const, z_branch=Branch.ADAPTIVE_FALLBACK, x_branch=Branch.ADAPTIVE_FALLBACK
            )
            h_next, dz, dx = state.h, None, None
        elif method == "AREABK" or k == 0:
            eta, zeta = (cfg.eta, cfg.zeta) if method == "AREABK" else (1.0, 1.0)
            z_next, mu, zb = _adaptive_z(A, z, dT, eta)
            I = dS.indices
            resid = _row(A, dS, x) - b[I] + z_next[I]
            x_next, alpha, xb, su = _adaptive_x(A, x, resid, dS, zeta)
            h_next = np.zeros(m)
            if su is not None:
                h_next[I] = -alpha * su
            dz, dx = z_next - z, x_next - x
            diag = StepDiagnostics(mu=mu, alpha=alpha, z_branch=zb, x_branch=xb)
        else:
            z_next, dz, mu, omega, zb = _momentum_z(A, z, state.z_step(), dT)
            x_next, dx, h_next, alpha, beta, xb = _momentum_x(A, state, b, z_next, dz, dS)
            diag = StepDiagnostics(mu=mu, omega=omega, alpha=alpha, beta=beta, z_branch=zb, x_branch=xb)
        k += 1
        state = SolverState(x=x_next, x_prev=x, z=z_next, z_prev=z, h=h_next, k=k, dx=dx, dz=dz)
        rse, res = stop.measure(x_next)
        status = stop.status(rse, res)
        trace.add(k, rse, res, diag)
        if callback is not None:
            callback(state, diag)

    if np.isnan(trace.rows[-1][2]):
        last = list(trace.rows[-1])
        last[2] = normal_residual(A, b, state.x)
        trace.rows[-1] = tuple(last)
    return trace.finish(
        method,
        status or "max_iters",
        state.x,
        state.z,
        col_blocks=np.array(col_ids, dtype=np.int64),
        row_blocks=np.array(row_ids, dtype=np.int64),
    )


def svrg_full_gradient(system: LinearSystem, x: np.ndarray) -> np.ndarray:
    """Gradient of ``(1/2m)||Ax - b||^2``."""
    A = system.A
    return A.rmatvec(A.matvec(x) - system.b) / system.m


def svrg_defaults(system: LinearSystem) -> tuple[float, int]:
    """Step ``0.1 / max_i ||A_i||^2`` and inner length ``2m``."""
    A = system.A
    if A.is_sparse:
        row_sq = np.asarray(A.data.multiply(A.data).sum(axis=1)).ravel()
    else:
        row_sq = np.einsum("ij,ij->i", A.data, A.data)
    return 0.1 / float(row_sq.max()), 2 * system.m


def svrg_run(
    system: LinearSystem,
    cfg: SolverConfig,
    rng=None,
    oracle: OracleSolution | None = None,
    x0: np.ndarray | None = None,
    track_variance: bool = False,
) -> RunRecord:
    """SVRG with uniform row sampling, keeping the last inner iterate.

    One row of the trace corresponds to one outer iteration. With
    ``track_variance`` the mean of ``||g_t - grad f(x_t)||`` over each
    epoch is stored in ``epoch_variance`` (costs a full gradient per inner
    step).
    """
    rng = as_generator(cfg.seed if rng is None else rng)
    default_alpha, default_N = svrg_defaults(system)
    alpha = default_alpha if cfg.svrg_alpha is None else cfg.svrg_alpha
    N = default_N if cfg.svrg_inner_N is None else int(cfg.svrg_inner_N)
    A, b, m = system.A, system.b, system.m
    rows = A.data if not A.is_sparse else None

    x = np.zeros(system.n) if x0 is None else np.array(x0, dtype=np.float64)
    _check_start(system, oracle, x, b)
    stop = _Stopper(system, cfg, oracle, x)
    trace = _Trace()
    rse, res = stop.measure(x, final=True)
    diag = StepDiagnostics(alpha=alpha, z_branch=Branch.FROZEN, x_branch=Branch.ADAPTIVE_FALLBACK)
    trace.add(0, rse, res, StepDiagnostics())
    status = stop.status(rse, res)
    variances = []
    k = 0
    while status is None and k < cfg.max_iters:
        x_anchor = x
        u_anchor = svrg_full_gradient(system, x_anchor)
        xt = x_anchor.copy()
        picks = rng.integers(0, m, size=N)
        vsum = 0.0
        for i in picks:
            a = rows[i] if rows is not None else A.data[[i], :].toarray().ravel()
            g = float(a @ (xt - x_anchor)) * a + u_anchor
            if track_variance:
                vsum += float(np.linalg.norm(g - svrg_full_gradient(system, xt)))
            xt = xt - alpha * g
        _check_finite(xt)
        if track_variance:
            variances.append(vsum / N)
        x = xt
        k += 1
        rse, res = stop.measure(x)
        status = stop.status(rse, res)
        trace.add(k, rse, res, diag)

    if np.isnan(trace.rows[-1][2]):
        last = list(trace.rows[-1])
        last[2] = normal_residual(A, b, x)
        trace.rows[-1] = tuple(last)
    rec = trace.finish("SVRG", status or "max_iters", x, None)
    if track_variance:
        rec.epoch_variance = np.array(variances)
    rec.notes.append(f"svrg alpha={alpha!r} inner_N={N}")
    return rec
