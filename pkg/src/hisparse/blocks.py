"""Block-partitioned complex vectors, hierarchical sparsity budgets and the
hierarchical thresholding (best hi-sparse approximation) operator.

A signal of total dimension sum(n_i) is split into N contiguous blocks of
lengths n_1..n_N.  A vector is (s, sigma)-sparse when at most s blocks hold
nonzero entries and block i holds at most sigma_i of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class BlockStructure:
    """Partition of a flat coefficient buffer into contiguous blocks.

    block_sizes holds (n_1, ..., n_N); block i occupies the half-open index
    range [offset(i), offset(i) + n_i) of the flat buffer.
    """

    block_sizes: tuple[int, ...]
    _offsets: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.block_sizes)
        if not sizes:
            raise ValueError("a block structure needs at least one block")
        if any(n < 1 for n in sizes):
            raise ValueError(f"block sizes must be >= 1, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)
        offs = [0]
        for n in sizes:
            offs.append(offs[-1] + n)
        object.__setattr__(self, "_offsets", tuple(offs))

    @classmethod
    def uniform(cls, num_blocks: int, block_len: int) -> "BlockStructure":
        return cls((block_len,) * num_blocks)

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def total_dim(self) -> int:
        return self._offsets[-1]

    def offset(self, i: int) -> int:
        return self._offsets[i]

    def block_slice(self, i: int) -> slice:
        return slice(self._offsets[i], self._offsets[i + 1])


@dataclass(frozen=True)
class HiSparsity:
    """Sparsity budget pair: s active blocks, sigma_i nonzeros inside block i."""

    s: int
    sigma: tuple[int, ...]

    def __post_init__(self):
        sig = tuple(int(v) for v in self.sigma)
        object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "s", int(self.s))
        if not 1 <= self.s <= len(sig):
            raise ValueError(f"need 1 <= s <= N, got s={self.s}, N={len(sig)}")
        if any(v < 0 for v in sig):
            raise ValueError(f"within-block budgets must be >= 0, got {sig}")

    @classmethod
    def uniform(cls, s: int, sigma: int, num_blocks: int) -> "HiSparsity":
        return cls(s, (sigma,) * num_blocks)

    @property
    def num_blocks(self) -> int:
        return len(self.sigma)

    def validate_for(self, structure: BlockStructure) -> None:
        if len(self.sigma) != structure.num_blocks:
            raise DimensionError(
                f"sparsity has {len(self.sigma)} blocks, structure has "
                f"{structure.num_blocks}"
            )
        for i, (sig, n) in enumerate(zip(self.sigma, structure.block_sizes)):
            if sig > n:
                raise ValueError(f"sigma_{i}={sig} exceeds block size {n}")


@dataclass
class BlockVector:
    """A complex coefficient vector carrying its block structure.

    The coefficient buffer is one flat complex128 array; blocks are views
    into it.  The buffer is owned by the vector: callers that need an
    independent copy use .copy().
    """

    structure: BlockStructure
    coeffs: np.ndarray

    def __post_init__(self):
        buf = np.asarray(self.coeffs, dtype=np.complex128)
        if buf.ndim != 1:
            buf = buf.reshape(-1)
        if buf.shape[0] != self.structure.total_dim:
            raise DimensionError(
                f"coefficient buffer has length {buf.shape[0]}, structure "
                f"expects {self.structure.total_dim}"
            )
        self.coeffs = buf

    @classmethod
    def zeros(cls, structure: BlockStructure) -> "BlockVector":
        return cls(structure, np.zeros(structure.total_dim, dtype=np.complex128))

    def block(self, i: int) -> np.ndarray:
        """View of block i (no copy)."""
        return self.coeffs[self.structure.block_slice(i)]

    def copy(self) -> "BlockVector":
        return BlockVector(self.structure, self.coeffs.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __len__(self) -> int:
        return self.structure.total_dim


@dataclass(frozen=True)
class HiSupport:
    """A hierarchical support pattern: which blocks, and which coordinates
    inside each of them.

    active_blocks is sorted; entries maps each active block to its sorted
    within-block coordinate tuple.  Coordinates are listed even when the
    vector value there is exactly zero, so the support cardinality produced
    by thresholding is deterministic.
    """

    active_blocks: tuple[int, ...]
    entries: dict[int, tuple[int, ...]]

    def __post_init__(self):
        blocks = tuple(sorted(int(b) for b in self.active_blocks))
        ents = {int(b): tuple(sorted(int(c) for c in cols))
                for b, cols in self.entries.items()}
        if set(ents) != set(blocks):
            raise ValueError("entries must have a key exactly for each active block")
        if len(blocks) != len(set(blocks)):
            raise ValueError("duplicate active block index")
        object.__setattr__(self, "active_blocks", blocks)
        object.__setattr__(self, "entries", ents)

    @classmethod
    def empty(cls) -> "HiSupport":
        return cls((), {})

    @classmethod
    def full(cls, structure: BlockStructure) -> "HiSupport":
        return cls(
            tuple(range(structure.num_blocks)),
            {i: tuple(range(n)) for i, n in enumerate(structure.block_sizes)},
        )

    @classmethod
    def of_nonzeros(cls, x: BlockVector) -> "HiSupport":
        entries = {}
        for i in range(x.structure.num_blocks):
            nz = np.flatnonzero(x.block(i) != 0)
            if nz.size:
                entries[i] = tuple(int(c) for c in nz)
        return cls(tuple(entries), entries)

    @property
    def num_entries(self) -> int:
        return sum(len(cols) for cols in self.entries.values())

    def validate_for(self, structure: BlockStructure) -> None:
        for b, cols in self.entries.items():
            if not 0 <= b < structure.num_blocks:
                raise IndexError(f"block index {b} out of range")
            n = structure.block_sizes[b]
            for c in cols:
                if not 0 <= c < n:
                    raise IndexError(f"coordinate {c} out of range for block {b} (size {n})")

    def column_indices(self, structure: BlockStructure) -> np.ndarray:
        """Sorted global coordinate indices covered by this support."""
        self.validate_for(structure)
        idx = []
        for b in self.active_blocks:
            off = structure.offset(b)
            idx.extend(off + c for c in self.entries[b])
        return np.asarray(idx, dtype=np.intp)


def hi_threshold(x: BlockVector, k: HiSparsity) -> tuple[BlockVector, HiSupport]:
    """Best (s, sigma)-sparse approximation of x in the 2-norm.

    Inside block i the sigma_i entries of largest magnitude are kept
    provisionally; blocks are scored by the squared 2-norm of their kept
    entries; the s top-scoring blocks survive and everything else is zeroed.
    Ties (equal magnitudes or equal scores) keep the lower index.
    """
    st = x.structure
    k.validate_for(st)
    kept: list[np.ndarray] = []
    scores = np.zeros(st.num_blocks)
    for i in range(st.num_blocks):
        b = x.block(i)
        sig = k.sigma[i]
        if sig == 0:
            kept.append(np.empty(0, dtype=np.intp))
            continue
        order = np.argsort(-np.abs(b), kind="stable")
        local = np.sort(order[:sig])
        kept.append(local)
        scores[i] = float(np.sum(np.abs(b[local]) ** 2))
    winners = np.sort(np.argsort(-scores, kind="stable")[: k.s])

    out = BlockVector.zeros(st)
    entries: dict[int, tuple[int, ...]] = {}
    for i in winners:
        i = int(i)
        out.block(i)[kept[i]] = x.block(i)[kept[i]]
        entries[i] = tuple(int(c) for c in kept[i])
    return out, HiSupport(tuple(int(i) for i in winners), entries)


def is_hi_sparse(x: BlockVector, k: HiSparsity) -> bool:
    """True iff at most s blocks are nonzero and block i has <= sigma_i nonzeros."""
    k.validate_for(x.structure)
    active = 0
    for i in range(x.structure.num_blocks):
        nnz = int(np.count_nonzero(x.block(i)))
        if nnz == 0:
            continue
        active += 1
        if nnz > k.sigma[i]:
            return False
    return active <= k.s


def restrict(x: BlockVector, support: HiSupport) -> BlockVector:
    """Copy of x with every coordinate outside the support zeroed."""
    support.validate_for(x.structure)
    out = BlockVector.zeros(x.structure)
    for b in support.active_blocks:
        cols = np.asarray(support.entries[b], dtype=np.intp)
        if cols.size:
            out.block(b)[cols] = x.block(b)[cols]
    return out


def block_norms(x: BlockVector) -> np.ndarray:
    """Per-block 2-norms as a float array of length N."""
    return np.asarray(
        [float(np.linalg.norm(x.block(i))) for i in range(x.structure.num_blocks)]
    )
