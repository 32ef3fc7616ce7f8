"""Independent brute-force oracles used by the tests.

These deliberately avoid the library's own code paths: the dense assembler
walks entries with explicit loops, the best-approximation oracle enumerates
every hierarchical support pattern, and the small eigenvalue problems use
closed forms where possible.
"""

import itertools

import numpy as np

from hisparse.blocks import BlockStructure, BlockVector, HiSparsity


def dense_by_entries(A, Bs):
    """Entry-by-entry dense assembly of sum_i a_i kron (B_i x_i)."""
    A = np.asarray(A, dtype=np.complex128)
    M, N = A.shape
    m = Bs[0].shape[0]
    sizes = [B.shape[1] for B in Bs]
    D = np.zeros((M * m, sum(sizes)), dtype=np.complex128)
    col = 0
    for i in range(N):
        B = np.asarray(Bs[i], dtype=np.complex128)
        for c in range(sizes[i]):
            for j in range(M):
                for r in range(m):
                    D[j * m + r, col] = A[j, i] * B[r, c]
            col += 1
    return D


def enumerate_hi_patterns(structure: BlockStructure, k: HiSparsity):
    """Every maximal (s, sigma)-support as {block: cols} dicts."""
    per_block = [
        list(itertools.combinations(range(n), sig))
        for n, sig in zip(structure.block_sizes, k.sigma)
    ]
    for blocks in itertools.combinations(range(structure.num_blocks), k.s):
        for choice in itertools.product(*(per_block[b] for b in blocks)):
            yield dict(zip(blocks, choice))


def best_hi_approx_residual(x: BlockVector, k: HiSparsity) -> float:
    """Exhaustive minimum of ||x - z|| over (s, sigma)-sparse z.

    For a fixed support the optimal z is x restricted to it, so the
    residual is ||x||^2 minus the kept energy; every support pattern is
    evaluated.
    """
    total = float(np.vdot(x.coeffs, x.coeffs).real)
    best_kept = 0.0
    for pattern in enumerate_hi_patterns(x.structure, k):
        kept = 0.0
        for b, cols in pattern.items():
            blk = x.block(b)
            for c in cols:
                kept += abs(blk[c]) ** 2
        best_kept = max(best_kept, kept)
    return float(np.sqrt(max(total - best_kept, 0.0)))


def pair_gram_deviation(B, i, j):
    """Closed-form spectral norm of the 2-column Gram deviation for
    columns i and j of B."""
    a = float(np.vdot(B[:, i], B[:, i]).real)
    d = float(np.vdot(B[:, j], B[:, j]).real)
    b = complex(np.vdot(B[:, i], B[:, j]))
    # eigenvalues of [[a, b], [conj(b), d]]
    mid = (a + d) / 2.0
    rad = np.sqrt(((a - d) / 2.0) ** 2 + abs(b) ** 2)
    return max(abs(mid + rad - 1.0), abs(mid - rad - 1.0))


def random_operator(rng, M, N, m, sizes):
    """Unnormalized complex Gaussian A and B_i (generic, not isometric)."""
    A = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
    Bs = tuple(
        rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        for n in sizes
    )
    return A, Bs


def random_hi_sparse(rng, structure: BlockStructure, k: HiSparsity) -> BlockVector:
    x = BlockVector.zeros(structure)
    blocks = rng.choice(structure.num_blocks, size=k.s, replace=False)
    for b in blocks:
        b = int(b)
        sig = k.sigma[b]
        if sig == 0:
            continue
        cols = rng.choice(structure.block_sizes[b], size=sig, replace=False)
        vals = rng.standard_normal(sig) + 1j * rng.standard_normal(sig)
        x.block(b)[np.asarray(cols, dtype=np.intp)] = vals
    return x
