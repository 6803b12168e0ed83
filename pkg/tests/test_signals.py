"""QPSK frames, noise/jammer waveforms, SNR calibration and link metrics."""

import numpy as np
import pytest

from simstack import (
    EquivalentChannel,
    awgn,
    constellation_mse,
    gen_frame,
    jammer_waveform,
    normalize_received,
    qpsk_demodulate,
    qpsk_modulate,
    ser,
    sinr_and_sumrate,
    snr_to_noise_variance,
)

S2 = 1 / np.sqrt(2)


def test_qpsk_mapping_hand_cases():
    assert qpsk_modulate(np.array([0, 0])) == pytest.approx((1 + 1j) * S2)
    assert qpsk_modulate(np.array([0, 1])) == pytest.approx((1 - 1j) * S2)
    assert qpsk_modulate(np.array([1, 0])) == pytest.approx((-1 + 1j) * S2)
    assert qpsk_modulate(np.array([1, 1])) == pytest.approx((-1 - 1j) * S2)
    with pytest.raises(ValueError):
        qpsk_modulate(np.array([0, 2]))
    with pytest.raises(ValueError):
        qpsk_modulate(np.zeros((3, 3)))


def test_gray_mapping_neighbours_differ_in_one_bit():
    # crossing one decision boundary flips exactly one bit
    along_real = qpsk_demodulate(np.array([1 + 1j, -1 + 1j]))
    along_imag = qpsk_demodulate(np.array([1 + 1j, 1 - 1j]))
    assert np.sum(along_real[0] != along_real[1]) == 1
    assert np.sum(along_imag[0] != along_imag[1]) == 1


def test_demod_inverts_mod_and_resolves_zeros():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=(6, 50, 2))
    assert np.array_equal(qpsk_demodulate(qpsk_modulate(bits)), bits)
    assert np.array_equal(qpsk_demodulate(np.array([0.0 + 0.0j])), [[0, 0]])


def test_gen_frame_unit_power_and_determinism():
    f = gen_frame(4, 256, seed=3)
    assert f.symbols.shape == (4, 256)
    assert f.bits.shape == (4, 256, 2)
    assert np.allclose(np.abs(f.symbols), 1.0)
    assert np.array_equal(gen_frame(4, 256, seed=3).bits, f.bits)
    assert not np.array_equal(gen_frame(4, 256, seed=4).bits, f.bits)
    with pytest.raises(ValueError):
        gen_frame(0, 10, seed=0)


def test_awgn_variance_and_circularity():
    n = awgn((200, 200), 0.3, seed=1)
    assert np.mean(np.abs(n) ** 2) == pytest.approx(0.3, rel=0.02)
    assert np.mean(n.real * n.imag) == pytest.approx(0.0, abs=0.002)
    assert np.array_equal(awgn((4,), 0.3, seed=1), awgn((4,), 0.3, seed=1))
    assert np.all(awgn((8,), 0.0, seed=2) == 0)
    with pytest.raises(ValueError):
        awgn((4,), -1.0, seed=0)


def test_jammer_waveform_power_statistics():
    jw = jammer_waveform(20000, (2.0, 2.0), seed=5)
    # degenerate jitter range: every amplitude is exactly sqrt(2)
    assert np.allclose(jw.amplitudes, np.sqrt(2.0))
    # g ~ CN(0, 0.5), so E|sample|^2 = 2 * 0.5 = 1
    assert np.mean(np.abs(jw.samples) ** 2) == pytest.approx(1.0, rel=0.05)
    jw2 = jammer_waveform(20000, (1.0, 3.0), seed=6)
    assert np.all((jw2.amplitudes ** 2 >= 1.0) & (jw2.amplitudes ** 2 <= 3.0))
    with pytest.raises(ValueError):
        jammer_waveform(8, (3.0, 1.0), seed=0)


def test_noise_calibration_oracles():
    ident = np.eye(2, dtype=complex)
    # 0 dB on an identity channel with per-user referencing: variance 1
    assert snr_to_noise_variance(0.0, ident) == pytest.approx(1.0)
    assert snr_to_noise_variance(10.0, ident) == pytest.approx(0.1)
    # spreading the same desired power over 4 branches halves the per-branch level
    assert snr_to_noise_variance(0.0, ident, branches=4) == pytest.approx(0.5)
    d = np.diag([2.0, 1.0]).astype(complex)
    assert snr_to_noise_variance(0.0, d) == pytest.approx(2.5)  # (4 + 1) / 2
    with pytest.raises(ValueError):
        snr_to_noise_variance(0.0, np.zeros((2, 2), dtype=complex))


def test_ser_counts_symbol_errors():
    f = gen_frame(1, 8, seed=9)
    y = f.symbols.copy()
    y[0, 0] *= -1  # both bits wrong: still one symbol error
    y[0, 1] = y[0, 1].real - 1j * y[0, 1].imag  # one bit wrong
    assert ser(y, f.bits) == pytest.approx(2 / 8)
    assert ser(f.symbols, f.bits) == 0.0
    with pytest.raises(ValueError):
        ser(y[:, :4], f.bits)


def test_normalize_received_puts_slots_on_sqrt_k_sphere():
    rng = np.random.default_rng(2)
    r = rng.standard_normal((3, 40)) + 1j * rng.standard_normal((3, 40))
    rn = normalize_received(r)
    assert np.allclose(np.linalg.norm(rn, axis=0), np.sqrt(3))
    # direction preserved per slot
    assert np.allclose(rn[:, 5] / np.linalg.norm(rn[:, 5]), r[:, 5] / np.linalg.norm(r[:, 5]))
    bad = r.copy()
    bad[:, 0] = 0
    with pytest.raises(ValueError):
        normalize_received(bad)


def test_constellation_mse_hand_case():
    ideal = np.array([[1.0 + 0j, 1j]])
    got = np.array([[1.0 + 0j, 1j + 0.2]])
    assert constellation_mse(got, ideal) == pytest.approx(0.02)
    with pytest.raises(ValueError):
        constellation_mse(got, ideal[:, :1])


def test_sinr_and_sumrate_hand_cases():
    eq = EquivalentChannel(full=np.eye(2, dtype=complex), selected=np.eye(2, dtype=complex))
    sinr, rate = sinr_and_sumrate(eq, 1.0)
    assert np.allclose(sinr, 1.0)
    assert rate == pytest.approx(2.0)

    eq = EquivalentChannel(
        full=np.eye(2, dtype=complex),
        selected=np.eye(2, dtype=complex),
        jammer_selected=np.ones(2, dtype=complex),
    )
    sinr, rate = sinr_and_sumrate(eq, 1.0, jammer_mean_power=1.0)
    assert np.allclose(sinr, 0.5)
    assert rate == pytest.approx(2 * np.log2(1.5))

    with pytest.raises(ValueError):
        sinr_and_sumrate(EquivalentChannel(full=np.eye(2, dtype=complex)), 1.0)
    no_jam = EquivalentChannel(full=np.eye(2, dtype=complex), selected=np.eye(2, dtype=complex))
    with pytest.raises(ValueError):
        sinr_and_sumrate(no_jam, 1.0, jammer_mean_power=1.0)
