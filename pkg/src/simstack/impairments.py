"""Evaluation-time hardware imperfections: finite phase resolution,
inter-atom coupling and random phase response errors. Training always
runs on the ideal model; these transforms are applied to the trained
configuration before the link evaluation."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import i0e, i1e

from .core import PhaseBook, wrap_phases

COUPLING_BAND = 5  # index-distance reach of the coupling model


@dataclass
class ImpairmentConfig:
    quant_bits: int | None = None
    coupling_alpha: float | None = None
    phase_noise_sigma: float | None = None

    def __post_init__(self):
        if self.quant_bits is not None and self.quant_bits < 1:
            raise ValueError("quantizer needs at least one bit")
        if self.coupling_alpha is not None and not 0 <= self.coupling_alpha < 1:
            raise ValueError("coupling strength must lie in [0, 1)")
        if self.phase_noise_sigma is not None and self.phase_noise_sigma < 0:
            raise ValueError("phase noise sigma must be nonnegative")

    @property
    def active(self) -> bool:
        return (
            self.quant_bits is not None
            or self.coupling_alpha is not None
            or self.phase_noise_sigma is not None
        )


def quantize_phases(pb: PhaseBook, bits: int) -> PhaseBook:
    """Snap every phase to the nearest multiple of 2pi / 2**bits.

    Ties round half away from zero; canonical phases are nonnegative so
    floor(x + 1/2) implements that exactly. Idempotent, and the circular
    error never exceeds pi / 2**bits.
    """
    if bits < 1:
        raise ValueError("quantizer needs at least one bit")
    step = 2 * np.pi / 2**bits
    q = np.floor(pb.phases / step + 0.5) * step
    return PhaseBook(wrap_phases(q))


def coupling_matrix(atoms: int, alpha: float) -> np.ndarray:
    """Banded symmetric Toeplitz coupling: alpha**|i-j| within the band,
    zero outside, unit diagonal. alpha = 0 gives the identity."""
    if atoms < 1:
        raise ValueError("need at least one atom")
    if not 0 <= alpha < 1:
        raise ValueError("coupling strength must lie in [0, 1)")
    idx = np.arange(atoms)
    dist = np.abs(idx[:, None] - idx[None, :])
    c = np.where(dist <= COUPLING_BAND, np.power(alpha, dist.astype(float)), 0.0)
    return c


def kappa_for_circular_std(sigma: float) -> float:
    """Von Mises concentration whose circular standard deviation
    sqrt(-2 ln(I1(k)/I0(k))) equals sigma (bisection)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")

    def circ_std(kappa):
        return math.sqrt(-2 * math.log(i1e(kappa) / i0e(kappa)))

    lo, hi = 1e-9, 1.0
    while circ_std(hi) > sigma:
        hi *= 2
        if hi > 1e14:
            raise ValueError("sigma too small to resolve")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if circ_std(mid) > sigma:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def von_mises_phase_noise(pb: PhaseBook, sigma: float, seed: int) -> PhaseBook:
    """Add zero-mean von Mises phase errors with circular std sigma to
    every atom. sigma = 0 returns an unchanged copy."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return pb.copy()
    kappa = kappa_for_circular_std(sigma)
    rng = np.random.default_rng(seed)
    noise = rng.vonmises(0.0, kappa, size=pb.phases.shape)
    return PhaseBook(wrap_phases(pb.phases + noise))


def apply_phase_impairments(
    pb: PhaseBook, cfg: ImpairmentConfig, noise_seed: int = 0
) -> PhaseBook:
    """Quantize first (hardware levels), then perturb with phase noise.
    Coupling acts on the forward model, not the phases; fetch its matrix
    via impairment_coupling()."""
    out = pb
    if cfg.quant_bits is not None:
        out = quantize_phases(out, cfg.quant_bits)
    if cfg.phase_noise_sigma is not None and cfg.phase_noise_sigma > 0:
        out = von_mises_phase_noise(out, cfg.phase_noise_sigma, noise_seed)
    return out if out is not pb else pb.copy()


def impairment_coupling(cfg: ImpairmentConfig, atoms: int) -> np.ndarray | None:
    if cfg.coupling_alpha is None or cfg.coupling_alpha == 0:
        return None
    return coupling_matrix(atoms, cfg.coupling_alpha)
