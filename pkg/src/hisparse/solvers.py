"""Pursuit solvers for hierarchically structured measurements.

hihtp alternates a unit-step gradient update, hierarchical thresholding of
the updated iterate, and a least-squares refit on the selected support;
htp_flat is the same loop with unstructured top-K thresholding, kept as the
baseline that ignores the block structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import BlockVector, HiSparsity, HiSupport, hi_threshold
from .errors import DimensionError
from .operators import HierarchicalOperator

STOP_SUPPORT_REPEAT = "support-repeat"
STOP_RESIDUAL = "residual"
STOP_MAX_ITERS = "max-iters"
STOP_LS_FAILURE = "ls-failure"


@dataclass(frozen=True)
class SolverConfig:
    """Iteration and tolerance knobs shared by the pursuit solvers.

    The refit solves the restricted least-squares problem directly (QR/SVD)
    when the support has at most ls_direct_threshold columns and falls back
    to conjugate gradients on the normal equations above that.
    """

    max_iters: int = 50
    support_stall_stop: bool = True
    residual_tol: float = 1e-7
    ls_tol: float = 1e-10
    ls_max_iters: int = 1000
    ls_direct_threshold: int = 600

    def __post_init__(self):
        if self.max_iters < 1 or self.ls_max_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if min(self.residual_tol, self.ls_tol) < 0:
            raise ValueError("tolerances must be >= 0")


@dataclass
class SolverResult:
    estimate: BlockVector
    support: HiSupport
    iterations: int
    residual_norm: float
    converged: bool
    stop_reason: str


@dataclass
class _LsInfo:
    converged: bool
    rank_deficient: bool
    iterations: int

    @property
    def failed(self) -> bool:
        return self.rank_deficient or not self.converged


def _assemble_restricted(H: HierarchicalOperator, support: HiSupport) -> np.ndarray:
    """Dense (M*m) x |support| matrix of the selected columns, ascending."""
    cols = []
    for b in support.active_blocks:
        local = np.asarray(support.entries[b], dtype=np.intp)
        if local.size:
            cols.append(np.kron(H.A[:, b : b + 1], H.Bs[b][:, local]))
    if not cols:
        return np.zeros((H.out_dim, 0), dtype=np.complex128)
    return np.hstack(cols)


def _scatter(H: HierarchicalOperator, support: HiSupport, values: np.ndarray) -> BlockVector:
    out = BlockVector.zeros(H.structure)
    pos = 0
    for b in support.active_blocks:
        local = np.asarray(support.entries[b], dtype=np.intp)
        out.block(b)[local] = values[pos : pos + local.size]
        pos += local.size
    return out


def _gather(x: BlockVector, support: HiSupport) -> np.ndarray:
    parts = [x.block(b)[np.asarray(support.entries[b], dtype=np.intp)]
             for b in support.active_blocks]
    if not parts:
        return np.zeros(0, dtype=np.complex128)
    return np.concatenate(parts)


def _restricted_lstsq(
    H: HierarchicalOperator,
    y: np.ndarray,
    support: HiSupport,
    cfg: SolverConfig,
    warm: BlockVector | None = None,
) -> tuple[BlockVector, _LsInfo]:
    """Minimize ||y - H z|| over z supported in `support`.

    Small systems go through a dense factorization; larger ones run
    conjugate gradients on the normal equations, warm-started at `warm`
    (whose residual they can only improve)."""
    support.validate_for(H.structure)
    ncols = support.num_entries
    if ncols == 0:
        return BlockVector.zeros(H.structure), _LsInfo(True, False, 0)

    if ncols <= cfg.ls_direct_threshold:
        R = _assemble_restricted(H, support)
        sol, _, rank, _ = np.linalg.lstsq(R, y, rcond=None)
        return _scatter(H, support, sol), _LsInfo(True, rank < ncols, 1)

    # CGNR on the support-restricted system.
    def forward(z):
        return H.apply(_scatter(H, support, z))

    def adjoint(r):
        return _gather(H.adjoint_apply(r), support)

    z = _gather(warm, support) if warm is not None else np.zeros(ncols, np.complex128)
    b_norm = float(np.linalg.norm(adjoint(y)))
    if b_norm == 0.0:
        return BlockVector.zeros(H.structure), _LsInfo(True, False, 0)
    r = y - forward(z)
    g = adjoint(r)
    gg = float(np.vdot(g, g).real)
    p = g.copy()
    rank_deficient = False
    it = 0
    while np.sqrt(gg) > cfg.ls_tol * b_norm and it < cfg.ls_max_iters:
        q = forward(p)
        qq = float(np.vdot(q, q).real)
        if qq <= 1e-30 * float(np.vdot(p, p).real):
            rank_deficient = True
            break
        alpha = gg / qq
        z = z + alpha * p
        r = r - alpha * q
        g = adjoint(r)
        gg_new = float(np.vdot(g, g).real)
        p = g + (gg_new / gg) * p
        gg = gg_new
        it += 1
    converged = np.sqrt(gg) <= cfg.ls_tol * b_norm
    return _scatter(H, support, z), _LsInfo(converged, rank_deficient, it)


def least_squares_on_support(
    H: HierarchicalOperator, y: np.ndarray, support: HiSupport, cfg: SolverConfig = SolverConfig()
) -> BlockVector:
    """Least-squares fit of y on the given support; zero elsewhere."""
    y = np.asarray(y, dtype=np.complex128).reshape(-1)
    if y.shape[0] != H.out_dim:
        raise DimensionError("measurement length does not match the operator")
    z, _ = _restricted_lstsq(H, y, support, cfg)
    return z


def _pursuit(H, y, project, cfg: SolverConfig) -> SolverResult:
    y = np.asarray(y, dtype=np.complex128).reshape(-1)
    if y.shape[0] != H.out_dim:
        raise DimensionError("measurement length does not match the operator")
    y_norm = float(np.linalg.norm(y))
    x = BlockVector.zeros(H.structure)
    support = HiSupport.empty()
    prev_support = None
    residual = y_norm
    converged = False
    stop = STOP_MAX_ITERS
    iterations = 0
    for t in range(1, cfg.max_iters + 1):
        iterations = t
        grad = H.adjoint_apply(y - H.apply(x))
        u = BlockVector(H.structure, x.coeffs + grad.coeffs)
        x_thr, new_support = project(u)
        if cfg.support_stall_stop and new_support == prev_support:
            # the previous refit already solved this support
            support = new_support
            converged = True
            stop = STOP_SUPPORT_REPEAT
            break
        x, info = _restricted_lstsq(H, y, new_support, cfg, warm=x_thr)
        support = new_support
        prev_support = new_support
        residual = float(np.linalg.norm(y - H.apply(x)))
        if info.failed:
            converged = False
            stop = STOP_LS_FAILURE
            break
        if residual <= cfg.residual_tol * y_norm:
            converged = True
            stop = STOP_RESIDUAL
            break
    return SolverResult(x, support, iterations, residual, converged, stop)


def hihtp(
    H: HierarchicalOperator,
    y: np.ndarray,
    k: HiSparsity,
    cfg: SolverConfig = SolverConfig(),
) -> SolverResult:
    """Hierarchical hard thresholding pursuit.

    From x = 0, iterate: gradient update u = x + H*(y - Hx); keep the best
    (s, sigma)-sparse approximation of u to get the next support; refit by
    least squares on that support.  Stops on support repetition, on the
    relative residual dropping below residual_tol, or at max_iters; a
    failed refit (rank-deficient or non-converged) stops with
    stop_reason "ls-failure" instead of raising.
    """
    k.validate_for(H.structure)
    return _pursuit(H, y, lambda u: hi_threshold(u, k), cfg)


def htp_flat(
    H: HierarchicalOperator,
    y: np.ndarray,
    k_total: int,
    cfg: SolverConfig = SolverConfig(),
) -> SolverResult:
    """Hard thresholding pursuit with unstructured top-k_total selection.

    Baseline that sees only the flat coefficient vector; callers comparing
    against hihtp at budget (s, sigma) typically set
    k_total = s * max(sigma).
    """
    if not 1 <= k_total <= H.total_dim:
        raise ValueError(f"need 1 <= k_total <= {H.total_dim}, got {k_total}")
    st = H.structure
    block_starts = np.asarray([st.offset(i) for i in range(st.num_blocks)])

    def project(u: BlockVector):
        order = np.argsort(-np.abs(u.coeffs), kind="stable")
        keep = np.sort(order[:k_total])
        out = BlockVector.zeros(st)
        out.coeffs[keep] = u.coeffs[keep]
        entries: dict[int, list[int]] = {}
        for g in keep:
            g = int(g)
            b = int(np.searchsorted(block_starts, g, side="right") - 1)
            entries.setdefault(b, []).append(g - st.offset(b))
        frozen = {b: tuple(v) for b, v in entries.items()}
        return out, HiSupport(tuple(frozen), frozen)

    return _pursuit(H, y, project, cfg)
