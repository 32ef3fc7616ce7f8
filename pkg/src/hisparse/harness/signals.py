"""Synthetic signals, measurement noise and the error metric."""

from __future__ import annotations

import math

import numpy as np

from ..blocks import BlockStructure, BlockVector, HiSparsity
from ..ensembles import as_rng, complex_gaussian
from ..errors import DimensionError

PLACEMENT_UNIFORM = "uniform"
PLACEMENT_FRONT = "front-loaded"


def generate_signal(
    structure: BlockStructure,
    k: HiSparsity,
    seed,
    placement: str = PLACEMENT_UNIFORM,
    front_width: int = 10,
    front_blocks=None,
) -> BlockVector:
    """Plant a random (s, sigma)-sparse signal.

    s active blocks are chosen uniformly; inside each, sigma_i positions
    are chosen uniformly and filled with i.i.d. standard complex Gaussian
    values.  In front-loaded placement the designated blocks (front_blocks,
    default all) draw their positions from the first front_width
    coordinates only, modelling short delay spreads.
    """
    k.validate_for(structure)
    if placement not in (PLACEMENT_UNIFORM, PLACEMENT_FRONT):
        raise ValueError(f"unknown placement {placement!r}")
    designated = None
    if placement == PLACEMENT_FRONT:
        designated = (
            set(range(structure.num_blocks)) if front_blocks is None
            else {int(b) for b in front_blocks}
        )
    rng = as_rng(seed)
    active = np.sort(rng.choice(structure.num_blocks, size=k.s, replace=False))
    x = BlockVector.zeros(structure)
    for i in active:
        i = int(i)
        sig = k.sigma[i]
        if sig == 0:
            continue
        domain = structure.block_sizes[i]
        if designated is not None and i in designated:
            if front_width < sig:
                raise ValueError(
                    f"front window {front_width} is smaller than sigma_{i}={sig}"
                )
            domain = min(domain, front_width)
        pos = np.sort(rng.choice(domain, size=sig, replace=False))
        x.block(i)[pos] = complex_gaussian(rng, sig)
    return x


def add_noise(y: np.ndarray, snr_db: float, seed) -> np.ndarray:
    """Add complex Gaussian noise at the requested signal-to-noise ratio.

    The per-entry noise variance is ||y||^2 / (len(y) * 10^(snr_db/10)),
    so the expected total noise energy is ||y||^2 * 10^(-snr_db/10).
    snr_db = inf is the noiseless sentinel.
    """
    y = np.asarray(y, dtype=np.complex128).reshape(-1)
    if math.isinf(snr_db) and snr_db > 0:
        return y.copy()
    energy = float(np.vdot(y, y).real)
    if energy == 0.0:
        raise ValueError("cannot set a finite SNR on a zero signal")
    var = energy / (y.size * 10.0 ** (snr_db / 10.0))
    rng = as_rng(seed)
    return y + math.sqrt(var) * complex_gaussian(rng, y.size)


def noise_floor(y_clean: np.ndarray, snr_db: float, x_true: BlockVector) -> float:
    """Per-entry noise variance used as the success threshold for the MSE.

    For a finite SNR this is the variance of the measurement noise added by
    add_noise; in the noiseless case it degenerates to zero, so a relative
    floor of 1e-12 times the mean signal power stands in for it.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return 1e-12 * float(np.mean(np.abs(x_true.coeffs) ** 2))
    y_clean = np.asarray(y_clean).reshape(-1)
    energy = float(np.vdot(y_clean, y_clean).real)
    return energy / (y_clean.size * 10.0 ** (snr_db / 10.0))


def mse(x: BlockVector, xhat: BlockVector) -> float:
    """Mean squared error (1/dim) * sum |x_k - xhat_k|^2."""
    if x.structure != xhat.structure:
        raise DimensionError("block structures differ")
    diff = x.coeffs - xhat.coeffs
    return float(np.vdot(diff, diff).real) / x.structure.total_dim


def detection_rate(true_active, estimated_active, s: int) -> float:
    """Fraction of the s true active blocks present in the estimate."""
    return len(set(true_active) & set(estimated_active)) / s
