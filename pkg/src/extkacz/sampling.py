"""Partition-based block sampling schemes.

A scheme selects block ``i`` of a row (or column) partition with
probability ``||A_block||_F^2 / ||A||_F^2``. The sampling matrices are
never formed; a drawn block is described by its indices and squared
Frobenius norm, and the solvers apply the ``1/||A_block||_F`` scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .linalg import MatrixHandle, frobenius_norm_sq

Axis = Literal["row", "column"]


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class Partition:
    """Ordered disjoint blocks (0-based) covering ``range(dim)``."""

    blocks: tuple[np.ndarray, ...]
    block_size_p: int
    permutation_seed: int | None = None

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=np.intp).ravel() for b in self.blocks)
        if not blocks:
            raise ValueError("partition needs at least one block")
        for b in blocks:
            b.setflags(write=False)
        allidx = np.concatenate(blocks)
        dim = allidx.size
        if not np.array_equal(np.sort(allidx), np.arange(dim)):
            raise ValueError("blocks must be disjoint and cover 0..dim-1")
        sizes = [b.size for b in blocks]
        p = self.block_size_p
        if any(s != p for s in sizes[:-1]) or not 0 < sizes[-1] <= p:
            raise ValueError(f"block sizes {sizes} inconsistent with p={p}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return int(sum(b.size for b in self.blocks))

    def __len__(self) -> int:
        return len(self.blocks)

    def to_text(self) -> str:
        """One block per line, 1-based indices separated by spaces."""
        return "".join(" ".join(str(i + 1) for i in b) + "\n" for b in self.blocks)

    @classmethod
    def from_text(cls, text: str, permutation_seed: int | None = None) -> "Partition":
        blocks = [
            np.array([int(tok) - 1 for tok in line.split()], dtype=np.intp)
            for line in text.splitlines()
            if line.strip()
        ]
        return cls(tuple(blocks), max(b.size for b in blocks), permutation_seed)


def make_partition(dim: int, p: int, rng=None) -> Partition:
    """Split a uniform random permutation of ``range(dim)`` into blocks of ``p``.

    ``rng`` may be a Generator or an integer seed; with an integer seed the
    seed is recorded on the partition.
    """
    if not 1 <= p <= dim:
        raise ValueError(f"block size p={p} must satisfy 1 <= p <= dim={dim}")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    perm = as_generator(rng).permutation(dim)
    blocks = tuple(perm[i : i + p] for i in range(0, dim, p))
    return Partition(blocks, p, seed)


@dataclass(frozen=True)
class BlockDraw:
    block_id: int
    indices: np.ndarray
    fro_norm_sq: float
    sub: object = field(default=None, repr=False)
    """Cached copy of the block of ``A`` (rows or columns), if the scheme keeps one."""


@dataclass(frozen=True)
class SamplingScheme:
    partition: Partition
    axis: Axis
    probabilities: np.ndarray
    block_fro_norms_sq: np.ndarray
    total_fro_sq: float
    cumulative: np.ndarray = field(repr=False)
    subs: tuple | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.partition)

    def block(self, i: int) -> BlockDraw:
        return BlockDraw(
            block_id=int(i),
            indices=self.partition.blocks[i],
            fro_norm_sq=float(self.block_fro_norms_sq[i]),
            sub=None if self.subs is None else self.subs[i],
        )

    def draw(self, rng: np.random.Generator) -> BlockDraw:
        return self.block(self.index_of(rng.random()))

    def index_of(self, u: float) -> int:
        """Inverse-CDF lookup of a uniform variate ``u`` in ``[0, 1)``."""
        return int(np.searchsorted(self.cumulative, u, side="right"))


def make_scheme(A: MatrixHandle, partition: Partition, axis: Axis, cache: bool = True) -> SamplingScheme:
    """Frobenius-norm-proportional sampling over the blocks of ``partition``.

    With ``cache=True`` each block of ``A`` is copied once so that solver
    steps avoid repeated gathers.
    """
    if axis not in ("row", "column"):
        raise ValueError(f"axis must be 'row' or 'column', got {axis!r}")
    dim = A.m if axis == "row" else A.n
    if partition.dim != dim:
        raise ValueError(f"partition covers {partition.dim} indices, A has {dim} {axis}s")
    take = A.row_block if axis == "row" else A.col_block
    subs = [take(b) for b in partition.blocks]
    norms = np.array([frobenius_norm_sq(s) for s in subs])
    total = float(norms.sum())
    if not total > 0:
        raise ValueError("degenerate sampling space: every block has zero norm")
    if not np.isfinite(total):
        raise FloatingPointError("numerical overflow: block norms are not finite")
    probs = norms / total
    cum = np.cumsum(probs)
    # the last nonzero block must absorb u arbitrarily close to 1
    last = int(np.flatnonzero(probs > 0)[-1])
    cum[last:] = 1.0
    for arr in (probs, norms, cum):
        arr.setflags(write=False)
    return SamplingScheme(
        partition=partition,
        axis=axis,
        probabilities=probs,
        block_fro_norms_sq=norms,
        total_fro_sq=total,
        cumulative=cum,
        subs=tuple(subs) if cache else None,
    )


def draw(scheme: SamplingScheme, rng: np.random.Generator) -> BlockDraw:
    """Draw one block with the scheme's probabilities."""
    return scheme.draw(rng)
