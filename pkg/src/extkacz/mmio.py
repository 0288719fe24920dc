"""Matrix Market and plain-text vector I/O.

Parsing is delegated to :mod:`scipy.io`; this module only restricts the
accepted header qualifiers and converts to :class:`MatrixHandle`.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io as sio
import scipy.sparse as sp

from .linalg import MatrixHandle

SUPPORTED_FIELDS = ("real", "integer", "pattern")
SUPPORTED_SYMMETRY = ("general", "symmetric", "skew-symmetric")


def load_matrix_market(path) -> MatrixHandle:
    """Read a real Matrix Market file.

    Coordinate files become CSR with duplicate entries summed (pattern
    entries count as 1.0); array files become dense. Complex and hermitian
    files are rejected with an error naming the qualifier.
    """
    path = Path(path)
    _, _, _, fmt, fld, sym = sio.mminfo(path)
    if fld not in SUPPORTED_FIELDS:
        raise ValueError(f"unsupported Matrix Market field qualifier {fld!r} in {path}")
    if sym not in SUPPORTED_SYMMETRY:
        raise ValueError(f"unsupported Matrix Market symmetry qualifier {sym!r} in {path}")
    data = sio.mmread(path)
    if fmt == "coordinate":
        return MatrixHandle(sp.csr_array(data, dtype=np.float64))
    return MatrixHandle(np.asarray(data, dtype=np.float64))


def save_matrix_market(path, A: MatrixHandle) -> None:
    """Write ``A`` with 17 significant digits (array format when dense)."""
    data = A.data if A.is_sparse else np.asarray(A.data)
    if A.is_sparse:
        data = sp.coo_array(data)
    sio.mmwrite(str(path), data, precision=17)


def load_vector(path) -> np.ndarray:
    """Read one decimal value per line; blank lines are ignored."""
    text = Path(path).read_text()
    values = [float(tok) for tok in text.split()]
    return np.array(values, dtype=np.float64)


def save_vector(path, v: np.ndarray) -> None:
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in np.asarray(v).ravel()))
