"""Hierarchical measurement operators.

An operator is defined by a mixing matrix A (M x N) and per-block matrices
B_i (m x n_i); it maps a block vector x = (x_1, ..., x_N) to the length M*m
measurement

    y[j*m : (j+1)*m] = sum_i A[j, i] * (B_i @ x_i),    j = 0..M-1,

i.e. the antenna index j is the outer (slow) index of the output.  Dense
matrices are plain complex128 numpy arrays throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockStructure, BlockVector
from .errors import BudgetError, DimensionError

# assemble_dense refuses to materialize more complex entries than this
# (50e6 entries ~ 800 MB at complex128) unless the caller raises the cap.
DENSE_ENTRY_BUDGET = 50_000_000

_MAGIC = b"HIOPv1\n"


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


@dataclass
class HierarchicalOperator:
    """The pair (A, {B_i}) with action H(x) = sum_i a_i kron (B_i x_i)."""

    A: np.ndarray
    Bs: tuple[np.ndarray, ...]
    _structure: BlockStructure = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.A = _as_matrix(self.A)
        self.Bs = tuple(_as_matrix(B) for B in self.Bs)
        if len(self.Bs) != self.A.shape[1]:
            raise DimensionError(
                f"A has {self.A.shape[1]} columns but {len(self.Bs)} block "
                "matrices were given"
            )
        rows = {B.shape[0] for B in self.Bs}
        if len(rows) != 1:
            raise DimensionError(f"all B_i must share one row count, got {sorted(rows)}")
        self._structure = BlockStructure(tuple(B.shape[1] for B in self.Bs))

    @property
    def num_antennas(self) -> int:  # M
        return self.A.shape[0]

    @property
    def num_blocks(self) -> int:  # N
        return self.A.shape[1]

    @property
    def inner_rows(self) -> int:  # m
        return self.Bs[0].shape[0]

    @property
    def structure(self) -> BlockStructure:
        return self._structure

    @property
    def out_dim(self) -> int:
        return self.num_antennas * self.inner_rows

    @property
    def total_dim(self) -> int:
        return self._structure.total_dim

    def apply(self, x: BlockVector) -> np.ndarray:
        """Forward measurement; returns a length M*m complex vector."""
        if x.structure != self._structure:
            raise DimensionError("input block structure does not match the operator")
        m, n_blocks = self.inner_rows, self.num_blocks
        z = np.empty((n_blocks, m), dtype=np.complex128)
        for i in range(n_blocks):
            z[i] = self.Bs[i] @ x.block(i)
        return (self.A @ z).reshape(-1)

    def adjoint_apply(self, y: np.ndarray) -> BlockVector:
        """Adjoint H* y; block i is sum_j conj(A[j,i]) * (B_i^* y_j)."""
        y = np.asarray(y, dtype=np.complex128).reshape(-1)
        if y.shape[0] != self.out_dim:
            raise DimensionError(
                f"measurement has length {y.shape[0]}, operator expects {self.out_dim}"
            )
        ym = y.reshape(self.num_antennas, self.inner_rows)
        w = self.A.conj().T @ ym  # (N, m); row i mixes the antennas for block i
        out = BlockVector.zeros(self._structure)
        for i in range(self.num_blocks):
            out.block(i)[:] = self.Bs[i].conj().T @ w[i]
        return out

    def assemble_dense(self, max_entries: int = DENSE_ENTRY_BUDGET) -> np.ndarray:
        """Dense (M*m) x total_dim matrix with the same action as apply.

        Column block i equals kron(a_i, B_i).  Refuses to allocate past
        max_entries complex values.
        """
        n_entries = self.out_dim * self.total_dim
        if n_entries > max_entries:
            raise BudgetError(
                f"dense assembly needs {n_entries} entries, budget is {max_entries}"
            )
        cols = [np.kron(self.A[:, i : i + 1], self.Bs[i]) for i in range(self.num_blocks)]
        return np.hstack(cols)


def kronecker_operator(A, B) -> HierarchicalOperator:
    """The constant-block special case: every B_i is the same matrix B,
    so the dense action is the Kronecker product A kron B."""
    A = _as_matrix(A)
    B = _as_matrix(B)
    return HierarchicalOperator(A, (B,) * A.shape[1])


def save_operator(H: HierarchicalOperator, path) -> None:
    """Write an operator to the HIOPv1 container.

    Layout: magic b"HIOPv1\\n"; one JSON header line with M, N, m and
    block_sizes; then the entries of A followed by B_0..B_{N-1}, each
    row-major with every complex value stored as two little-endian float64
    (real then imaginary).
    """
    header = {
        "M": H.num_antennas,
        "N": H.num_blocks,
        "m": H.inner_rows,
        "block_sizes": list(H.structure.block_sizes),
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(H.A, dtype="<c16").tobytes())
        for B in H.Bs:
            fh.write(np.ascontiguousarray(B, dtype="<c16").tobytes())


def load_operator(path) -> HierarchicalOperator:
    """Read an operator written by save_operator."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"not a HIOPv1 container: bad magic {magic!r}")
        header = json.loads(fh.readline().decode("utf-8"))
        M, N, m = header["M"], header["N"], header["m"]
        sizes = header["block_sizes"]
        if len(sizes) != N:
            raise ValueError("header block_sizes length does not match N")

        def read_mat(rows, cols):
            raw = fh.read(rows * cols * 16)
            if len(raw) != rows * cols * 16:
                raise ValueError("container truncated")
            return np.frombuffer(raw, dtype="<c16").reshape(rows, cols).astype(np.complex128)

        A = read_mat(M, N)
        Bs = tuple(read_mat(m, n) for n in sizes)
        if fh.read(1):
            raise ValueError("trailing bytes after operator payload")
    return HierarchicalOperator(A, Bs)
