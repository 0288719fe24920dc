"""Matrix storage, block products and the SVD-based minimum-norm oracle.

Everything here works in float64. A :class:`MatrixHandle` wraps either a
dense C-ordered array or a ``scipy.sparse`` CSR array and is never mutated
after construction, so it can be shared freely between trials.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

EPS = np.finfo(np.float64).eps


class MatrixHandle:
    """Immutable dense or CSR matrix with the products the solvers need.

    Parameters
    ----------
    data : array_like or scipy.sparse matrix
        Dense input is copied into a C-contiguous float64 array. Sparse input
        is converted to CSR with canonical (sorted, deduplicated) indices.
    """

    __slots__ = ("_data", "_sparse", "_fro_sq", "m", "n")

    def __init__(self, data):
        if sp.issparse(data):
            mat = sp.csr_array(data, dtype=np.float64, copy=True)
            mat.sum_duplicates()
            mat.sort_indices()
            values = mat.data
            self._sparse = True
        else:
            mat = np.array(data, dtype=np.float64, order="C", copy=True)
            if mat.ndim == 1:
                mat = mat.reshape(-1, 1)
            if mat.ndim != 2:
                raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
            values = mat
            self._sparse = False
        m, n = mat.shape
        if m < 1 or n < 1:
            raise ValueError(f"matrix must have at least one row and column, got {mat.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix contains non-finite entries")
        if not self._sparse:
            mat.setflags(write=False)
        self._data = mat
        self.m, self.n = int(m), int(n)
        self._fro_sq = float(np.dot(values.ravel(), values.ravel()))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def is_sparse(self) -> bool:
        return self._sparse

    @property
    def data(self):
        """The underlying ndarray or CSR array (treat as read-only)."""
        return self._data

    @property
    def fro_norm_sq(self) -> float:
        return self._fro_sq

    @property
    def fro_norm(self) -> float:
        return float(np.sqrt(self._fro_sq))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._data @ x, dtype=np.float64)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(self._data.T @ y, dtype=np.float64)

    def to_dense(self) -> np.ndarray:
        if self._sparse:
            return self._data.toarray()
        return np.array(self._data)

    def row_block(self, rows):
        """Materialized copy of ``A[rows, :]`` (same storage kind)."""
        rows = _check_index(rows, self.m, "row")
        return self._data[rows, :]

    def col_block(self, cols):
        """Materialized copy of ``A[:, cols]`` (same storage kind)."""
        cols = _check_index(cols, self.n, "column")
        if self._sparse:
            return self._data[:, cols]
        return np.ascontiguousarray(self._data[:, cols])

    def __repr__(self) -> str:
        kind = "csr" if self._sparse else "dense"
        return f"MatrixHandle({kind}, shape=({self.m}, {self.n}))"


@dataclass(frozen=True)
class LinearSystem:
    """The pair ``(A, b)`` of a possibly inconsistent system ``Ax = b``."""

    A: MatrixHandle
    b: np.ndarray

    def __post_init__(self):
        if not isinstance(self.A, MatrixHandle):
            object.__setattr__(self, "A", MatrixHandle(self.A))
        b = np.array(self.b, dtype=np.float64).ravel()
        if b.shape[0] != self.A.m:
            raise ValueError(f"b has length {b.shape[0]} but A has {self.A.m} rows")
        if not np.all(np.isfinite(b)):
            raise ValueError("right-hand side contains non-finite entries")
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.A.m

    @property
    def n(self) -> int:
        return self.A.n


@dataclass(frozen=True)
class OracleSolution:
    """Direct reference solution from a truncated SVD.

    ``x_star`` is ``A^+ b`` and ``b_perp`` the component of ``b`` orthogonal
    to ``Range(A)``. The retained singular triplets are kept so that tests
    can apply ``A^+`` and the range projectors to other vectors.
    """

    x_star: np.ndarray
    b_perp: np.ndarray
    rank: int
    sigma_min: float
    sigma_max: float
    U: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    Vt: np.ndarray = field(repr=False)

    def pinv_apply(self, y: np.ndarray) -> np.ndarray:
        """Return ``A^+ y``."""
        return self.Vt.T @ ((self.U.T @ y) / self.s)

    def project_range(self, y: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto ``Range(A)``."""
        return self.U @ (self.U.T @ y)

    def project_row_space(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto ``Range(A^T)``."""
        return self.Vt.T @ (self.Vt @ x)


def frobenius_norm_sq(M) -> float:
    """Sum of squares of all entries of a matrix, handle or block."""
    if isinstance(M, MatrixHandle):
        return M.fro_norm_sq
    if sp.issparse(M):
        vals = M.data
    else:
        vals = np.asarray(M, dtype=np.float64).ravel()
    return float(np.dot(vals, vals))


def rank_cut(s: np.ndarray, shape: tuple[int, int]) -> float:
    """Threshold below which singular values count as zero."""
    if s.size == 0:
        return 0.0
    return max(shape) * EPS * float(s.max())


def min_norm_lsq_oracle(system: LinearSystem) -> OracleSolution:
    """Minimum-norm least-squares solution by full SVD.

    Intended for desk-scale problems; sparse matrices are densified.
    """
    A = system.A.to_dense()
    b = system.b
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rank_cut(s, A.shape)
    U, s, Vt = U[:, keep], s[keep], Vt[keep, :]
    r = int(s.size)
    coeff = U.T @ b
    x_star = Vt.T @ (coeff / s) if r else np.zeros(system.n)
    if r == system.m:
        b_perp = np.zeros(system.m)  # Range(A) is everything
    else:
        b_perp = b - U @ coeff if r else b.copy()
    return OracleSolution(
        x_star=x_star,
        b_perp=b_perp,
        rank=r,
        sigma_min=float(s.min()) if r else 0.0,
        sigma_max=float(s.max()) if r else 0.0,
        U=U,
        s=s,
        Vt=Vt,
    )


def _check_index(idx, dim: int, what: str) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.intp).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= dim):
        raise IndexError(f"{what} index out of range [0, {dim})")
    return idx


def block_row_apply(A: MatrixHandle, rows, x: np.ndarray) -> np.ndarray:
    """``A[rows, :] @ x`` computed row by row from the stored matrix."""
    rows = _check_index(rows, A.m, "row")
    if rows.size == 0:
        return np.zeros(0)
    data = A.data
    if A.is_sparse:
        ptr, ind, val = data.indptr, data.indices, data.data
        out = np.empty(rows.size)
        for k, i in enumerate(rows):
            lo, hi = ptr[i], ptr[i + 1]
            out[k] = np.dot(val[lo:hi], x[ind[lo:hi]])
        return out
    return np.dot(data[rows], x)


def block_row_transpose_apply(A: MatrixHandle, rows, u: np.ndarray) -> np.ndarray:
    """``A[rows, :].T @ u`` as a length-``n`` vector."""
    rows = _check_index(rows, A.m, "row")
    out = np.zeros(A.n)
    if rows.size == 0:
        return out
    data = A.data
    if A.is_sparse:
        ptr, ind, val = data.indptr, data.indices, data.data
        for k, i in enumerate(rows):
            lo, hi = ptr[i], ptr[i + 1]
            np.add.at(out, ind[lo:hi], u[k] * val[lo:hi])
        return out
    return np.dot(u, data[rows])


def block_col_apply(A: MatrixHandle, cols, t: np.ndarray) -> np.ndarray:
    """``A[:, cols] @ t`` as a length-``m`` vector."""
    cols = _check_index(cols, A.n, "column")
    if cols.size == 0:
        return np.zeros(A.m)
    if A.is_sparse:
        full = np.zeros(A.n)
        np.add.at(full, cols, t)
        return A.matvec(full)
    return np.dot(A.data[:, cols], t)


def block_col_transpose_apply(A: MatrixHandle, cols, z: np.ndarray) -> np.ndarray:
    """``A[:, cols].T @ z``."""
    cols = _check_index(cols, A.n, "column")
    if cols.size == 0:
        return np.zeros(0)
    if A.is_sparse:
        return A.rmatvec(z)[cols]
    return np.dot(z, A.data[:, cols])
