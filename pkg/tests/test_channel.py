import numpy as np
import pytest
from scipy.special import j0

from dectlink import channel as ch
from dectlink.channel import (
    ChannelError,
    DopplerSpec,
    TapProfile,
    add_awgn,
    apply_channel,
    flat_profile,
    generate_channel,
    load_profile,
    max_doppler,
    rms_delay_spread,
    scale_profile,
)


class TestTapProfiles:
    def test_shipped_profiles_load(self):
        nlos = load_profile("tdl_iii")
        los = load_profile("tdl_v")
        assert nlos.n_taps == 24 and nlos.rician_k_db is None
        assert los.n_taps == 14 and los.rician_k_db == 9.0
        assert nlos.powers.sum() == pytest.approx(1.0)
        assert los.powers.sum() == pytest.approx(1.0)

    def test_scale_to_nlos_target(self):
        p = scale_profile(load_profile("tdl_iii"), 363e-9)
        assert abs(rms_delay_spread(p) - 363e-9) < 1e-12

    def test_scale_to_los_target(self):
        p = scale_profile(load_profile("tdl_v"), 93e-9)
        assert abs(rms_delay_spread(p) - 93e-9) < 1e-12

    def test_scaling_idempotent(self):
        p = scale_profile(load_profile("tdl_iii"), 363e-9)
        again = scale_profile(p, 363e-9)
        np.testing.assert_allclose(again.delays, p.delays)

    def test_single_tap_rejected(self):
        with pytest.raises(ChannelError):
            scale_profile(flat_profile(), 100e-9)

    def test_unsorted_delays_rejected(self):
        with pytest.raises(ChannelError):
            TapProfile("bad", np.array([1e-6, 0.5e-6]), np.array([0.5, 0.5]))

    def test_loader_applies_target(self):
        p = load_profile("tdl_iii", target_rms_ds=200e-9)
        assert rms_delay_spread(p) == pytest.approx(200e-9, abs=1e-15)


class TestDoppler:
    def test_upper_bound(self):
        assert max_doppler(30 / 3.6, 4e9) == pytest.approx(111.2, abs=0.1)

    def test_lower_bound(self):
        assert max_doppler(3 / 3.6, 700e6) == pytest.approx(1.9, abs=0.05)

    def test_zero_velocity(self):
        assert max_doppler(0.0, 4e9) == 0.0

    def test_negative_velocity_rejected(self):
        with pytest.raises(ChannelError):
            max_doppler(-1.0, 4e9)


class TestFading:
    def test_zero_doppler_constant(self):
        real = generate_channel(flat_profile(), DopplerSpec(0.0), 1, 1, 5000, 3)
        g = real.tap_gains(0, 5000)
        assert np.all(g == g[..., :1])

    def test_deterministic_given_seed(self):
        a = generate_channel(flat_profile(), DopplerSpec(40.0), 2, 2, 2000, 99)
        b = generate_channel(flat_profile(), DopplerSpec(40.0), 2, 2, 2000, 99)
        np.testing.assert_array_equal(a.tap_gains(0, 2000), b.tap_gains(0, 2000))

    def test_jakes_autocorrelation(self):
        # ensemble autocorrelation against the Bessel oracle
        fd = 111.2
        rate = ch.SIMULATION_RATE_HZ
        lags_s = np.linspace(0, 0.5 / fd, 16)
        lags = lags_s * rate
        acc = np.zeros(len(lags), dtype=complex)
        var = 0.0
        n_real = 2000
        for i in range(n_real):
            real = generate_channel(
                flat_profile(), DopplerSpec(fd), 1, 1, int(lags[-1]) + 8,
                np.random.default_rng(1000 + i), fading_fft_size=8192,
            )
            g = real._interp_coarse(lags)[0, 0, 0]
            acc += g * np.conj(g[0])
            var += np.abs(g[0]) ** 2
        rho = (acc / var).real
        assert np.abs(rho - j0(2 * np.pi * fd * lags_s)).max() < 0.05

    def test_unit_tap_power(self):
        vals = [
            np.abs(generate_channel(flat_profile(), DopplerSpec(50.0), 1, 1, 50, i).tap_gains(0, 1)[0, 0, 0, 0]) ** 2
            for i in range(3000)
        ]
        assert np.mean(vals) == pytest.approx(1.0, abs=0.06)

    def test_rician_k_factor(self):
        # squared-mean to variance ratio of the first tap approximates K
        prof = load_profile("tdl_v", target_rms_ds=93e-9)
        g0 = np.array([
            generate_channel(prof, DopplerSpec(10.0), 1, 1, 50, 50_000 + i).tap_gains(0, 1)[0, 0, 0, 0]
            for i in range(4000)
        ])
        m2 = np.mean(np.abs(g0) ** 2)
        v2 = np.var(np.abs(g0) ** 2)
        sig_c2 = m2 - np.sqrt(max(m2**2 - v2, 1e-12))
        k_est = (m2 - sig_c2) / sig_c2
        assert k_est == pytest.approx(10 ** 0.9, rel=0.10)

    def test_link_independence(self):
        a, b = [], []
        for i in range(2000):
            real = generate_channel(flat_profile(), DopplerSpec(0.0), 2, 2, 10, 90_000 + i)
            g = real.tap_gains(0, 1)[:, :, 0, 0]
            a.append(g[0, 0])
            b.append(g[1, 1])
        a, b = np.array(a), np.array(b)
        rho = abs(np.mean(a * np.conj(b))) / np.sqrt(np.mean(np.abs(a) ** 2) * np.mean(np.abs(b) ** 2))
        assert rho < 0.05


class TestApplyChannel:
    def test_identity_channel(self):
        real = generate_channel(flat_profile(), DopplerSpec(0.0), 1, 1, 1000, 1)
        gain = real.tap_gains(0, 1)[0, 0, 0, 0]
        rng = np.random.default_rng(2)
        x = rng.standard_normal(400) + 1j * rng.standard_normal(400)
        y = apply_channel(x[None, :], real)
        np.testing.assert_allclose(y[0, :400], gain * x, atol=1e-9)

    def test_integer_delay_shift(self):
        prof = TapProfile("d5", np.array([5 / ch.SIMULATION_RATE_HZ]), np.array([1.0]))
        real = generate_channel(prof, DopplerSpec(0.0), 1, 1, 1000, 7)
        g = real.tap_gains(0, 1)[0, 0, 0, 0]
        rng = np.random.default_rng(3)
        x = rng.standard_normal(300) + 0j
        y = apply_channel(x[None, :], real)
        np.testing.assert_allclose(y[0, 5:305], g * x, atol=1e-9)
        np.testing.assert_allclose(y[0, :5], 0, atol=1e-9)

    def test_static_two_tap_vs_convolution_oracle(self):
        prof = TapProfile(
            "two", np.array([0.0, 5.5 / ch.SIMULATION_RATE_HZ]), np.array([0.6, 0.4])
        )
        real = generate_channel(prof, DopplerSpec(0.0), 1, 1, 800, 11)
        rng = np.random.default_rng(4)
        x = rng.standard_normal(300) + 1j * rng.standard_normal(300)
        gains = real.tap_gains(0, 1)[0, 0, :, 0]
        oracle = np.zeros(300 + real._kernels.shape[1] - 1, dtype=complex)
        for t in range(2):
            oracle += gains[t] * np.convolve(x, real._kernels[t])
        for model in ("linear", "exact"):
            y = apply_channel(x[None, :], real, gain_model=model)
            assert np.abs(y[0] - oracle[real.kernel_center :]).max() < 1e-10

    def test_linear_matches_exact_at_max_doppler(self):
        prof = load_profile("tdl_iii", target_rms_ds=363e-9)
        real = generate_channel(prof, DopplerSpec(111.2), 1, 2, 20000, 13)
        rng = np.random.default_rng(5)
        x = np.exp(1j * 2 * np.pi * rng.random(4000))
        y_lin = apply_channel(x[None, :], real, start_sample=5000, gain_model="linear")
        y_ex = apply_channel(x[None, :], real, start_sample=5000, gain_model="exact")
        assert np.abs(y_lin - y_ex).max() / np.abs(y_ex).max() < 5e-3

    def test_received_power_normalized(self):
        prof = load_profile("tdl_iii", target_rms_ds=363e-9)
        rng0 = np.random.default_rng(6)
        x = np.exp(1j * 2 * np.pi * rng0.random(2000))
        acc = 0.0
        n_real = 500
        for i in range(n_real):
            real = generate_channel(prof, DopplerSpec(11.0), 1, 1, 2300, 10_000 + i)
            y = apply_channel(x[None, :], real)
            acc += np.mean(np.abs(y[0, :2000]) ** 2) / n_real
        assert acc == pytest.approx(1.0, abs=0.02)

    def test_antenna_count_mismatch(self):
        real = generate_channel(flat_profile(), DopplerSpec(0.0), 2, 1, 100, 1)
        with pytest.raises(ChannelError):
            apply_channel(np.zeros((1, 50), dtype=complex), real)


class TestAwgn:
    def test_infinite_snr_passthrough(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(100) + 0j
        np.testing.assert_array_equal(add_awgn(x, None, rng), x)
        np.testing.assert_array_equal(add_awgn(x, np.inf, rng), x)

    def test_absolute_variance_mode(self):
        rng = np.random.default_rng(8)
        noise = add_awgn(np.zeros(1_000_000, dtype=complex), None, rng, noise_variance=0.37)
        assert np.var(noise) == pytest.approx(0.37, rel=0.01)

    def test_inband_snr_with_oversampling(self):
        # full-band unit-power signal at 1/16th of the sampling rate:
        # in-band SNR must hit the requested value
        rng = np.random.default_rng(9)
        n = 1 << 20
        rate, bw = 27_648_000, 1_728_000
        spec = np.zeros(n, dtype=complex)
        band = int(n * bw / rate / 2)
        phases = np.exp(1j * 2 * np.pi * rng.random(2 * band))
        spec[:band] = phases[:band]
        spec[-band:] = phases[band:]
        x = np.fft.ifft(spec) * (n / np.sqrt(2 * band))
        assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=1e-6)
        y = add_awgn(x, 10.0, rng, signal_power=1.0, occupied_bandwidth=bw, sample_rate=rate)
        spec_y = np.fft.fft(y) / np.sqrt(n)
        mask = np.zeros(n, dtype=bool)
        mask[:band] = mask[-band:] = True
        p_sig = np.mean(np.abs(spec_y[mask]) ** 2) - np.mean(np.abs(spec_y[~mask]) ** 2)
        p_noise_inband = np.mean(np.abs(spec_y[~mask]) ** 2)
        snr_db = 10 * np.log10(p_sig / p_noise_inband)
        assert snr_db == pytest.approx(10.0, abs=0.1)
