"""Unit-power QPSK symbols, noise/jamming waveforms and link metrics."""

from dataclasses import dataclass

import numpy as np

# Gray-mapped quadrants: bits (b0, b1) -> ((1-2*b0) + j(1-2*b1)) / sqrt(2)
QPSK_ALPHABET = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)


def qpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Map bit pairs (..., 2) to unit-power QPSK symbols; 00 lands in the
    first quadrant at (1+j)/sqrt(2)."""
    bits = np.asarray(bits)
    if bits.shape[-1] != 2:
        raise ValueError("last axis must hold bit pairs")
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0 or 1")
    return ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2)


def qpsk_demodulate(y: np.ndarray) -> np.ndarray:
    """Quadrant decision back to bit pairs; an exact-zero component is
    resolved toward the positive axis."""
    y = np.asarray(y)
    bits = np.empty(y.shape + (2,), dtype=int)
    bits[..., 0] = (y.real < 0).astype(int)
    bits[..., 1] = (y.imag < 0).astype(int)
    return bits


@dataclass
class SymbolFrame:
    symbols: np.ndarray  # (K, U)
    bits: np.ndarray  # (K, U, 2)


def gen_frame(users: int, slots: int, seed: int) -> SymbolFrame:
    """Uniform random QPSK frame, one row per user."""
    if users < 1 or slots < 1:
        raise ValueError("frame dimensions must be positive")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(users, slots, 2))
    return SymbolFrame(symbols=qpsk_modulate(bits), bits=bits)


def awgn(shape, noise_variance: float, seed: int) -> np.ndarray:
    """Circularly symmetric complex Gaussian noise with the given total
    variance per sample."""
    if noise_variance < 0:
        raise ValueError("noise variance must be nonnegative")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(noise_variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass
class JammerWaveform:
    """Wideband interference samples with per-slot power jitter."""

    samples: np.ndarray  # (U,)
    amplitudes: np.ndarray  # (U,) per-slot sqrt(P)
    base_variance: float = 0.5


def jammer_waveform(slots: int, power_range, seed: int) -> JammerWaveform:
    """Per-slot samples sqrt(P_u) * g_u with g ~ CN(0, 0.5) and P_u drawn
    uniformly from power_range."""
    p_min, p_max = power_range
    if p_min < 0 or p_max < p_min:
        raise ValueError("need 0 <= p_min <= p_max")
    rng = np.random.default_rng(seed)
    amplitudes = np.sqrt(rng.uniform(p_min, p_max, size=slots))
    g = 0.5 * (rng.standard_normal(slots) + 1j * rng.standard_normal(slots))
    return JammerWaveform(samples=amplitudes * g, amplitudes=amplitudes)


def snr_to_noise_variance(
    snr_db: float,
    selected: np.ndarray,
    branches: int | None = None,
    frame_power: float = 1.0,
) -> float:
    """Noise variance realizing the given receive SNR.

    SNR references the total desired-signal power sum_k |d_kk|^2 *
    frame_power spread over `branches` receive chains against the
    per-chain noise variance. branches=None averages over the K users
    themselves, so an identity selected channel with unit symbols at
    0 dB gives variance 1; experiments pass the antenna count of the
    receive array.
    """
    d = np.asarray(selected)
    if branches is None:
        branches = d.shape[0]
    p_sig = float(np.sum(np.abs(np.diag(d)) ** 2)) * frame_power / branches
    if p_sig == 0:
        raise ValueError("selected channel has zero desired-signal power")
    return p_sig * 10 ** (-snr_db / 10)


def ser(received: np.ndarray, transmitted_bits: np.ndarray) -> float:
    """Symbol error rate: a symbol is wrong when either bit is wrong."""
    received = np.asarray(received)
    bits = np.asarray(transmitted_bits)
    if bits.shape != received.shape + (2,):
        raise ValueError("bit array must match received shape plus bit axis")
    if received.size == 0:
        raise ValueError("empty frame")
    decided = qpsk_demodulate(received)
    wrong = np.any(decided != bits, axis=-1)
    return float(np.mean(wrong))


def normalize_received(received: np.ndarray) -> np.ndarray:
    """Scale each slot (column) onto the sqrt(K) sphere so per-symbol
    ideal power is one; matches the training-loss normalization."""
    r = np.asarray(received)
    norms = np.linalg.norm(r, axis=0)
    if np.any(norms == 0):
        raise ValueError("slot with zero received norm")
    return np.sqrt(r.shape[0]) * r / norms


def constellation_mse(received_normalized: np.ndarray, ideal: np.ndarray) -> float:
    """Mean squared symbol displacement of an already-normalized frame."""
    r = np.asarray(received_normalized)
    s = np.asarray(ideal)
    if r.shape != s.shape:
        raise ValueError("received/ideal shapes differ")
    return float(np.mean(np.abs(r - s) ** 2))


def sinr_and_sumrate(eq, noise_variance: float, jammer_mean_power: float = 0.0) -> tuple:
    """Per-user SINR at the assigned antennas and the sum rate.

    SINR_k = |d_kk|^2 / (sum_{i != k} |d_ki|^2 + P_jam |j_k|^2 + sigma_n^2).
    Requires an equivalent channel with the selected view populated.
    """
    if eq.selected is None:
        raise ValueError("equivalent channel has no selected view; apply an assignment")
    d = eq.selected
    k = d.shape[0]
    desired = np.abs(np.diag(d)) ** 2
    interference = np.sum(np.abs(d) ** 2, axis=1) - desired
    jam = np.zeros(k)
    if jammer_mean_power > 0:
        if eq.jammer_selected is None:
            raise ValueError("jammer power given but no jammer column present")
        jam = jammer_mean_power * np.abs(eq.jammer_selected) ** 2
    denom = interference + jam + noise_variance
    if np.any(denom == 0):
        raise ValueError("zero interference-plus-noise denominator")
    sinr = desired / denom
    return sinr, float(np.sum(np.log2(1 + sinr)))
