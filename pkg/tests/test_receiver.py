import numpy as np
import pytest

from dectlink import modem
from dectlink.channel import DopplerSpec, flat_profile, generate_channel, load_profile
from dectlink.numerology import Modulation, format0, payload_capacity_bits
from dectlink.receiver import (
    ChannelEstimate,
    ReceiverError,
    build_wiener_bank,
    combine,
    demap_llrs,
    estimate_channel,
    format_positions,
    format_wiener_banks,
    perfect_csi,
    time_sync,
)


class TestTimeSync:
    def test_zero_delay(self):
        assert time_sync(np.zeros(10), 0.0) == 0

    def test_ten_samples(self):
        assert time_sync(np.zeros(100), 10.0) == 10

    def test_static_single_tap_chain(self):
        # synced window + flat gain: demodulated pilots equal transmitted
        # pilots scaled by the tap gain
        fmt = format0()
        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, payload_capacity_bits(fmt))
        grid = modem.assemble_grid(bits, fmt)
        w = modem.ofdm_modulate(grid)
        real = generate_channel(flat_profile(), DopplerSpec(0.0), 1, 1, 2000, 5, rate=fmt.numerology.sample_rate)
        gain = real.tap_gains(0, 1)[0, 0, 0, 0]
        from dectlink.channel import apply_channel

        y = apply_channel(w.samples, real)
        start = time_sync(y, real.delay_samples[0])
        assert start == 0
        back = modem.ofdm_demodulate(y[0], fmt.numerology, fmt.n_symbols, start_index=start)
        np.testing.assert_allclose(back, grid.symbols[0] * gain, atol=1e-9)


class TestWienerBank:
    def _positions(self):
        fmt = format0()
        return format_positions(fmt), fmt.numerology

    def test_flat_limit_is_mean_interpolator(self):
        (pilots, data), num = self._positions()
        bank = build_wiener_bank(
            pilots[0], data, num.symbol_samples / num.sample_rate,
            num.subcarrier_spacing, worst_ds=0.0, worst_fd=0.0, design_snr_db=300.0,
        )
        n_p = pilots[0].shape[0]
        np.testing.assert_allclose(bank.weights, np.full_like(bank.weights, 1 / n_p), atol=1e-3)
        np.testing.assert_allclose(bank.weights.sum(axis=1), 1.0, atol=1e-9)

    def test_pilot_coincident_target_dominated_by_it(self):
        (pilots, data), num = self._positions()
        bank = build_wiener_bank(
            pilots[0], pilots[0][:4], num.symbol_samples / num.sample_rate,
            num.subcarrier_spacing, worst_ds=363e-9, worst_fd=111.2, design_snr_db=80.0,
        )
        for i in range(4):
            assert abs(bank.weights[i, i]) > 0.9

    def test_deterministic_construction(self):
        fmt = format0()
        a = format_wiener_banks(fmt, design_snr_db=24.0)
        b = format_wiener_banks(fmt, design_snr_db=24.0)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.weights, y.weights)

    def test_negative_design_stats_rejected(self):
        (pilots, data), num = self._positions()
        with pytest.raises(ReceiverError):
            build_wiener_bank(
                pilots[0], data, num.symbol_samples / num.sample_rate,
                num.subcarrier_spacing, worst_ds=-1.0, worst_fd=0.0,
            )

    def test_noiseless_flat_channel_bias(self):
        # closed-form MMSE bias: the measured estimate equals sum(w) exactly,
        # and at the design operating point it stays within 0.1 dB of unity
        fmt = format0()
        banks = format_wiener_banks(fmt, design_snr_db=27.0)
        rng = np.random.default_rng(1)
        bits = rng.integers(0, 2, payload_capacity_bits(fmt))
        grid = modem.assemble_grid(bits, fmt)
        est = estimate_channel(grid.symbols[0][None], banks, fmt)
        closed_form = banks[0].weights.sum(axis=1)
        np.testing.assert_allclose(est.h[0, 0], closed_form, atol=1e-12)
        bias_db = 20 * np.log10(np.abs(closed_form))
        assert np.abs(bias_db).max() <= 0.11


class TestEstimation:
    def test_perfect_csi_passthrough(self):
        fmt = format0()
        prof = load_profile("tdl_iii", target_rms_ds=363e-9)
        real = generate_channel(prof, DopplerSpec(0.0), 1, 1, 40000, 3)
        est = perfect_csi(real, fmt, 0, 16)
        # single-tap-free check: response is the exact kernel-weighted sum
        num = fmt.numerology
        freqs = (np.arange(num.fft_size) - num.fft_size // 2) * num.subcarrier_spacing
        resp = real.frequency_response(np.array([num.cp_samples * 16 + 512.0]), freqs)
        _, data = format_positions(fmt)
        np.testing.assert_allclose(est.h[0, 0][:64], resp[0, 0, 0][data[:64, 1]], rtol=1e-3, atol=1e-3)

    def test_wiener_tracks_flat_gain(self):
        fmt = format0()
        banks = format_wiener_banks(fmt, design_snr_db=30.0)
        rng = np.random.default_rng(2)
        bits = rng.integers(0, 2, payload_capacity_bits(fmt))
        grid = modem.assemble_grid(bits, fmt)
        h = 0.8 - 0.6j
        est = estimate_channel(grid.symbols[0][None] * h, banks, fmt)
        np.testing.assert_allclose(est.h[0, 0], h * banks[0].weights.sum(axis=1), atol=1e-12)
        assert np.abs(est.h[0, 0] - h).max() < 0.05


class TestCombining:
    def test_zero_forcing_1x1(self):
        h = np.array([[0.4 + 0.9j]])
        y = np.array([[1.0 - 0.3j]])
        est = ChannelEstimate(h=h[None], source="perfect")
        eq, snr = combine(y, est, 0.1)
        np.testing.assert_allclose(eq, (y / h).reshape(-1))
        assert snr[0] == pytest.approx(abs(h[0, 0]) ** 2 / 0.1)

    def test_mrc_equal_gain_doubles_snr(self):
        n_data = 6
        h = np.ones((1, 2, n_data), dtype=complex)
        y = np.ones((2, n_data), dtype=complex)
        eq, snr2 = combine(y, ChannelEstimate(h=h, source="perfect"), 1.0)
        eq1, snr1 = combine(y[:1], ChannelEstimate(h=h[:, :1], source="perfect"), 1.0)
        assert snr2[0] == pytest.approx(2 * snr1[0])
        assert 10 * np.log10(snr2[0] / snr1[0]) == pytest.approx(3.0, abs=0.02)

    def test_sfbc_matches_pairwise_least_squares_oracle(self):
        rng = np.random.default_rng(3)
        n_pairs = 64
        s = (rng.standard_normal(2 * n_pairs) + 1j * rng.standard_normal(2 * n_pairs)) / np.sqrt(2)
        a0, a1 = modem.sfbc_encode(s)
        h = (rng.standard_normal((2, 2, 1)) + 1j * rng.standard_normal((2, 2, 1))) / np.sqrt(2)
        h_full = np.repeat(h, 2 * n_pairs, axis=2)
        y = np.einsum("trn,tn->rn", h_full, np.stack([a0, a1]) / np.sqrt(2))
        eq, _ = combine(y, ChannelEstimate(h=h_full, source="perfect"), 1e-12)
        # oracle: per pair, solve the 4x2 linear system directly
        pairs = s.reshape(-1, 2)
        for p in range(n_pairs):
            ya, yb = y[:, 2 * p], y[:, 2 * p + 1]
            rows, rhs = [], []
            for r in range(2):
                h1, h2 = h[0, r, 0], h[1, r, 0]
                rows += [[h1 / np.sqrt(2), 0], [0, h1 / np.sqrt(2)]]
                rhs += [ya[r] + h2 / np.sqrt(2) * np.conj(pairs[p, 1]), yb[r] - h2 / np.sqrt(2) * np.conj(pairs[p, 0])]
            sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
            np.testing.assert_allclose(eq[2 * p : 2 * p + 2], pairs[p], atol=1e-9)
            np.testing.assert_allclose(sol, pairs[p], atol=1e-9)

    def test_scheme_antenna_mismatch(self):
        h = np.ones((2, 2, 4), dtype=complex)
        y = np.ones((2, 4), dtype=complex)
        with pytest.raises(ReceiverError):
            combine(y, ChannelEstimate(h=h, source="perfect"), 1.0, scheme="mrc")
        with pytest.raises(ReceiverError):
            combine(y, ChannelEstimate(h=h[:1], source="perfect"), 1.0, scheme="sfbc")


class TestDemapping:
    def test_qpsk_clean_symbol_large_positive(self):
        c = modem.Constellation.for_modulation(Modulation.QPSK)
        llrs = demap_llrs(np.array([(1 + 1j) / np.sqrt(2)]), np.array([100.0]), c)
        assert np.all(llrs > 50)

    def test_origin_symbol_zero_llrs(self):
        c = modem.Constellation.for_modulation(Modulation.QPSK)
        llrs = demap_llrs(np.array([0j]), np.array([10.0]), c)
        np.testing.assert_allclose(llrs, 0.0, atol=1e-12)

    @pytest.mark.parametrize("mod", list(Modulation))
    def test_llr_signs_equal_min_distance_detection(self, mod):
        rng = np.random.default_rng(4)
        c = modem.Constellation.for_modulation(mod)
        n = 100_000 // c.bits_per_symbol
        bits = rng.integers(0, 2, n * c.bits_per_symbol)
        s = modem.map_symbols(bits, c)
        noisy = s + 0.3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        llrs = demap_llrs(noisy, np.ones(n), c)
        hard = (llrs < 0).astype(np.uint8)
        assert np.array_equal(hard, modem.hard_decisions(noisy, c))
