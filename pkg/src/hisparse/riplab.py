"""Exact restricted-isometry constants on small instances.

The S-RIP constant of a matrix B is the smallest delta with
|  ||Bx||^2 - ||x||^2 | <= delta * ||x||^2 for every S-sparse x, which
equals max over column subsets T of size S of the spectral norm of
(B_T^* B_T - I).  The hierarchical variant takes the maximum over
(s, sigma)-supports instead of flat ones.  Everything here enumerates
supports explicitly (with a budget guard) and diagonalizes the restricted
Gram matrices in batches, so the returned constants are exact up to
eigensolver roundoff.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .blocks import BlockStructure, BlockVector, HiSparsity, HiSupport
from .errors import BudgetError
from .ensembles import as_rng
from .operators import DENSE_ENTRY_BUDGET, HierarchicalOperator

# Exhaustive enumeration refuses to walk more supports than this.
DEFAULT_SUPPORT_BUDGET = 2_000_000

_CHUNK = 4096


@dataclass(frozen=True)
class RipEstimate:
    """An enumerated (or sampled) restricted-isometry constant.

    In exact mode supports_examined is the full support count and delta is
    the true constant; in randomized mode delta is only a lower bound.
    argmax_support is the support achieving delta: a tuple of column
    indices for flat RIP, a HiSupport for the hierarchical constant.
    """

    delta: float
    mode: str  # "exact-enumeration" | "randomized-lower-bound"
    supports_examined: int
    argmax_support: object


def flat_support_count(cols: int, order: int) -> int:
    return math.comb(cols, order)


def hierarchical_support_count(structure: BlockStructure, k: HiSparsity) -> int:
    """Number of maximal (s, sigma)-supports: the order-s elementary
    symmetric polynomial of the per-block counts C(n_i, sigma_i)."""
    k.validate_for(structure)
    e = [0] * (k.s + 1)
    e[0] = 1
    for n, sig in zip(structure.block_sizes, k.sigma):
        c = math.comb(n, sig)
        for j in range(min(k.s, len(e) - 1), 0, -1):
            e[j] += e[j - 1] * c
    return e[k.s]


def _batch_deviations(dense: np.ndarray, cols_batch: np.ndarray) -> np.ndarray:
    """Spectral norms of (D_T^* D_T - I) for a batch of same-size supports."""
    sub = dense[:, cols_batch]  # (rows, batch, k)
    gram = np.einsum("rbk,rbl->bkl", sub.conj(), sub)
    eig = np.linalg.eigvalsh(gram)
    return np.abs(eig - 1.0).max(axis=1)


def _max_deviation(dense: np.ndarray, supports, chunk: int = _CHUNK):
    """Maximum Gram deviation over enumerated supports.

    supports yields (cols_tuple, payload) in enumeration order; the first
    support attaining the maximum wins ties, so for a lexicographic
    enumeration the argmax is the lexicographically smallest maximizer.
    Returns (delta, payload_of_argmax, count).
    """
    buffers: dict[int, tuple[list, list, list]] = {}
    best_delta = -1.0
    best_ordinal = None
    best_payload = None
    count = 0

    def consider(delta, ordinal, payload):
        nonlocal best_delta, best_ordinal, best_payload
        if delta > best_delta or (delta == best_delta and ordinal < best_ordinal):
            best_delta, best_ordinal, best_payload = delta, ordinal, payload

    def flush(size):
        cols_list, ordinals, payloads = buffers.pop(size)
        devs = _batch_deviations(dense, np.asarray(cols_list, dtype=np.intp))
        j = int(np.argmax(devs))  # first occurrence, ordinals ascend per size
        consider(float(devs[j]), ordinals[j], payloads[j])

    for ordinal, (cols, payload) in enumerate(supports):
        count += 1
        size = len(cols)
        if size == 0:
            consider(0.0, ordinal, payload)
            continue
        buf = buffers.setdefault(size, ([], [], []))
        buf[0].append(cols)
        buf[1].append(ordinal)
        buf[2].append(payload)
        if len(buf[0]) >= chunk:
            flush(size)
    for size in sorted(buffers):
        flush(size)
    return max(best_delta, 0.0), best_payload, count


def rip_constant_exact(
    B: np.ndarray, order: int, budget: int = DEFAULT_SUPPORT_BUDGET
) -> RipEstimate:
    """Exact S-RIP constant by enumerating all C(cols, S) column subsets."""
    B = np.asarray(B, dtype=np.complex128)
    cols = B.shape[1]
    if not 1 <= order <= cols:
        raise ValueError(f"need 1 <= order <= {cols}, got {order}")
    count = flat_support_count(cols, order)
    if count > budget:
        raise BudgetError(
            f"{count} supports exceed the enumeration budget {budget}; "
            "use rip_constant_randomized for a lower bound"
        )
    supports = ((c, c) for c in itertools.combinations(range(cols), order))
    delta, argmax, examined = _max_deviation(B, supports)
    return RipEstimate(delta, "exact-enumeration", examined, argmax)


def rip_constant_randomized(
    B: np.ndarray, order: int, trials: int, seed
) -> RipEstimate:
    """Lower bound on the S-RIP constant from uniformly sampled supports.

    Under a fixed seed the sampled sequence is a prefix of any longer run,
    so the estimate is non-decreasing in trials.
    """
    B = np.asarray(B, dtype=np.complex128)
    cols = B.shape[1]
    if not 1 <= order <= cols:
        raise ValueError(f"need 1 <= order <= {cols}, got {order}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = as_rng(seed)
    draws = [
        tuple(int(c) for c in np.sort(rng.choice(cols, size=order, replace=False)))
        for _ in range(trials)
    ]
    delta, argmax, _ = _max_deviation(B, ((c, c) for c in draws))
    return RipEstimate(delta, "randomized-lower-bound", trials, argmax)


def _iter_hierarchical_supports(structure: BlockStructure, k: HiSparsity):
    """Yield (global_cols, (blocks, per_block_cols)) for every maximal
    (s, sigma)-support, in lexicographic order."""
    per_block = [
        list(itertools.combinations(range(n), sig))
        for n, sig in zip(structure.block_sizes, k.sigma)
    ]
    for blocks in itertools.combinations(range(structure.num_blocks), k.s):
        for choice in itertools.product(*(per_block[b] for b in blocks)):
            cols = tuple(
                structure.offset(b) + c for b, local in zip(blocks, choice) for c in local
            )
            yield cols, (blocks, choice)


def hirip_constant_exact(
    H: HierarchicalOperator,
    k: HiSparsity,
    budget: int = DEFAULT_SUPPORT_BUDGET,
    dense_budget: int = DENSE_ENTRY_BUDGET,
) -> RipEstimate:
    """Exact (s, sigma)-HiRIP constant of a hierarchical operator.

    Only maximal supports (exactly s blocks, exactly sigma_i coordinates
    each) are enumerated: every smaller hierarchical support is a principal
    submatrix of a maximal one and cannot increase the spectral deviation.
    """
    st = H.structure
    k.validate_for(st)
    count = hierarchical_support_count(st, k)
    if count > budget:
        raise BudgetError(
            f"{count} hierarchical supports exceed the enumeration budget {budget}"
        )
    dense = H.assemble_dense(dense_budget)
    delta, payload, examined = _max_deviation(dense, _iter_hierarchical_supports(st, k))
    blocks, choice = payload
    support = HiSupport(blocks, {b: local for b, local in zip(blocks, choice)})
    return RipEstimate(delta, "exact-enumeration", examined, support)


def hirip_bound(delta_a: float, delta_bs) -> float:
    """Upper bound on the hierarchical constant from the constituents:
    delta_A + max_i delta_{B_i} + delta_A * max_i delta_{B_i}."""
    delta_a = float(delta_a)
    worst_b = max(float(d) for d in delta_bs)
    if delta_a < 0 or worst_b < 0:
        raise ValueError("isometry constants must be non-negative")
    return delta_a + worst_b + delta_a * worst_b


def gram_matrix(H: HierarchicalOperator, x: BlockVector) -> np.ndarray:
    """The N x N Hermitian PSD matrix G with G[i, j] = <B_i x_i, B_j x_j>,
    conjugate-linear in the second slot.

    Under that convention ||H x||^2 equals the trace pairing of A^*A with
    G (the quantity lemma1_check bounds), for every block vector x.
    """
    if x.structure != H.structure:
        raise ValueError("block structure mismatch")
    z = np.empty((H.inner_rows, H.num_blocks), dtype=np.complex128)
    for i in range(H.num_blocks):
        z[:, i] = H.Bs[i] @ x.block(i)
    return z.T @ z.conj()


def nuclear_norm_hermitian(X: np.ndarray) -> float:
    """Sum of absolute eigenvalues (equals the trace for PSD inputs)."""
    return float(np.abs(np.linalg.eigvalsh(X)).sum())


def column_necessity_check(
    H: HierarchicalOperator,
    k: HiSparsity,
    tol: float = 1e-10,
    budget: int = DEFAULT_SUPPORT_BUDGET,
) -> dict:
    """Check that every column-weighted block matrix inherits the RIP.

    For each block i, the sigma_i-RIP constant of ||a_i|| * B_i must not
    exceed the hierarchical constant of H: a vector supported on a single
    block is (s, sigma)-sparse, so the restricted isometry of H already
    constrains each weighted B_i.  Blocks with sigma_i = 0 are vacuous and
    reported with a zero constant.
    """
    hi = hirip_constant_exact(H, k, budget=budget)
    per_block = []
    for i in range(H.num_blocks):
        a_norm = float(np.linalg.norm(H.A[:, i]))
        if k.sigma[i] == 0:
            delta_i = 0.0
        else:
            delta_i = rip_constant_exact(a_norm * H.Bs[i], k.sigma[i], budget).delta
        per_block.append(
            {
                "block": i,
                "column_norm": a_norm,
                "delta_weighted": delta_i,
                "slack": hi.delta - delta_i,
            }
        )
    slacks = [row["slack"] for row in per_block]
    return {
        "delta_hirip": hi.delta,
        "per_block": per_block,
        "min_slack": min(slacks),
        "max_slack": max(slacks),
        "tolerance": tol,
        "passed": min(slacks) >= -tol,
    }


def prop1_check(
    H: HierarchicalOperator,
    k: HiSparsity,
    active_set,
    gs: dict,
    tol: float = 1e-9,
    budget: int = DEFAULT_SUPPORT_BUDGET,
) -> dict:
    """Necessity bound for the mixing matrix when the block matrices
    cannot demix on their own.

    Given s blocks whose unit sigma_i-sparse probes g_i produce nearly
    identical images (max pairwise distance epsilon), the s-RIP constant of
    A is bounded by delta_hirip / (1 - max_i delta_{B_i} - epsilon)^2.  A
    non-positive denominator means the premise fails and the bound is
    vacuous (reported, not an error).
    """
    st = H.structure
    k.validate_for(st)
    active = tuple(sorted(int(b) for b in active_set))
    if len(active) != k.s:
        raise ValueError(f"active set must have exactly s={k.s} blocks")
    images = {}
    for b in active:
        g = np.asarray(gs[b], dtype=np.complex128).reshape(-1)
        if g.shape[0] != st.block_sizes[b]:
            raise ValueError(f"probe for block {b} has wrong length")
        if abs(np.linalg.norm(g) - 1.0) > 1e-8:
            raise ValueError(f"probe for block {b} is not unit-norm")
        if int(np.count_nonzero(g)) > k.sigma[b]:
            raise ValueError(f"probe for block {b} is not sigma_{b}-sparse")
        images[b] = H.Bs[b] @ g
    epsilon = max(
        float(np.linalg.norm(images[i] - images[j]))
        for i in active
        for j in active
    )
    delta_h = hirip_constant_exact(H, k, budget=budget).delta
    delta_b = max(
        rip_constant_exact(H.Bs[i], k.sigma[i], budget).delta if k.sigma[i] > 0 else 0.0
        for i in range(H.num_blocks)
    )
    delta_a = rip_constant_exact(H.A, k.s, budget).delta
    denom = 1.0 - delta_b - epsilon
    report = {
        "epsilon": epsilon,
        "delta_hirip": delta_h,
        "delta_b_max": delta_b,
        "delta_a": delta_a,
        "denominator": denom,
        "tolerance": tol,
    }
    if denom <= 0.0:
        report.update(status="premise violated, bound vacuous", bound=None, passed=True)
    else:
        bound = delta_h / denom**2
        report.update(status="checked", bound=bound, passed=delta_a <= bound + tol)
    return report


def lemma1_check(
    A: np.ndarray,
    X: np.ndarray,
    tol: float = 1e-9,
    budget: int = DEFAULT_SUPPORT_BUDGET,
) -> dict:
    """Trace inequality for Hermitian matrices with a small square pattern.

    If every nonzero row and column of the Hermitian X lies in one index
    set of size s, then |<A^*A, X> - ||X||_*| <= delta_s(A) * ||X||_*,
    with the nuclear norm taken as the sum of absolute eigenvalues.  The
    inequality is a theorem for PSD X (where the nuclear norm is the
    trace); indefinite Hermitian inputs are accepted and reported but the
    bound need not hold for them.
    """
    A = np.asarray(A, dtype=np.complex128)
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] != A.shape[1]:
        raise ValueError("X must be square with side equal to the column count of A")
    scale = max(1.0, float(np.abs(X).max()))
    if float(np.abs(X - X.conj().T).max()) > 1e-12 * scale:
        raise ValueError("X is not Hermitian to 1e-12")
    pattern = [i for i in range(X.shape[0]) if np.any(X[i, :] != 0)]
    s = len(pattern)
    nuclear = nuclear_norm_hermitian(X)
    inner = np.vdot(A.conj().T @ A, X)
    deviation = float(abs(inner - nuclear))
    if s == 0:
        return {
            "pattern_size": 0,
            "delta": 0.0,
            "inner_product": 0.0,
            "nuclear_norm": 0.0,
            "deviation": deviation,
            "tolerance": tol,
            "passed": deviation <= tol,
        }
    delta = rip_constant_exact(A, s, budget).delta
    return {
        "pattern_size": s,
        "delta": delta,
        "inner_product": float(inner.real),
        "nuclear_norm": nuclear,
        "deviation": deviation,
        "tolerance": tol,
        "passed": deviation <= delta * nuclear + tol,
    }
