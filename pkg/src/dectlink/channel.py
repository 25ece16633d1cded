"""Doubly selective multi-antenna channels: tapped-delay-line profiles
with Jakes Doppler fading, applied at the 27.648 MHz simulation rate.

Fading synthesis is spectral: per tap and link, a white complex Gaussian
sequence is shaped by the square root of the Jakes spectrum's per-bin
power mass at a decimated fading rate (64x the maximum Doppler), then
band-limited-interpolated to the simulation rate.  Tap delays, which are
partly sub-sample even at 27.648 MHz, are realized by unit-energy
windowed-sinc kernels of length 33.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.signal import fftconvolve

SPEED_OF_LIGHT = 299_792_458.0
SIMULATION_RATE_HZ = 27_648_000

_SINC_HALF = 16
_SINC_LEN = 2 * _SINC_HALF + 1
#: Fading samples per Doppler period at the decimated synthesis rate.
_FADING_OVERSAMPLING = 64
_MIN_FADING_FFT = 256


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class TapProfile:
    """Tap delays (seconds) and normalized linear powers (sum = 1)."""

    name: str
    delays: np.ndarray
    powers: np.ndarray
    rician_k_db: float | None = None

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=np.float64)
        powers = np.asarray(self.powers, dtype=np.float64)
        if delays.ndim != 1 or delays.shape != powers.shape:
            raise ChannelError("delays and powers must be matching 1-D arrays")
        if np.any(delays < 0):
            raise ChannelError("tap delays must be non-negative")
        if np.any(np.diff(delays) < 0):
            raise ChannelError("tap delays must be sorted ascending")
        if np.any(powers <= 0):
            raise ChannelError("tap powers must be positive")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "powers", powers / powers.sum())

    @classmethod
    def from_db(
        cls,
        name: str,
        delays_s: np.ndarray,
        powers_db: np.ndarray,
        rician_k_db: float | None = None,
    ) -> "TapProfile":
        return cls(name, np.asarray(delays_s, float), 10 ** (np.asarray(powers_db, float) / 10), rician_k_db)

    @property
    def n_taps(self) -> int:
        return self.delays.size


def rms_delay_spread(profile: TapProfile) -> float:
    """Power-weighted RMS spread of the tap delays."""
    mean = np.sum(profile.powers * profile.delays)
    second = np.sum(profile.powers * profile.delays**2)
    return float(np.sqrt(second - mean**2))


def scale_profile(profile: TapProfile, target_rms_ds: float) -> TapProfile:
    """Rescale tap delays so the RMS delay spread hits the target exactly."""
    if target_rms_ds <= 0:
        raise ChannelError("target RMS delay spread must be positive")
    if profile.n_taps < 2:
        raise ChannelError(
            "RMS delay spread of a single-tap profile is zero; cannot scale"
        )
    current = rms_delay_spread(profile)
    if current == 0:
        raise ChannelError("profile has zero delay spread; cannot scale")
    return TapProfile(
        name=profile.name,
        delays=profile.delays * (target_rms_ds / current),
        powers=profile.powers,
        rician_k_db=profile.rician_k_db,
    )


def load_profile(name_or_path: str, target_rms_ds: float | None = None) -> TapProfile:
    """Load a tap-profile JSON (shipped name like 'tdl_iii' or a path)."""
    shipped = {"tdl_iii", "tdl_v", "tdl-iii", "tdl-v"}
    key = name_or_path.lower().replace("-", "_")
    if key in {"tdl_iii", "tdl_v"}:
        text = resources.files("dectlink.data").joinpath(f"{key}.json").read_text()
    else:
        with open(name_or_path) as fh:
            text = fh.read()
    raw = json.loads(text)
    profile = TapProfile.from_db(
        raw["name"],
        np.asarray(raw["delays_ns"], float) * 1e-9,
        np.asarray(raw["powers_db"], float),
        raw.get("k_factor_db"),
    )
    if target_rms_ds is not None:
        profile = scale_profile(profile, target_rms_ds)
    return profile


def flat_profile() -> TapProfile:
    """Single zero-delay Rayleigh tap (flat fading)."""
    return TapProfile("flat", np.array([0.0]), np.array([1.0]))


@dataclass(frozen=True)
class DopplerSpec:
    max_doppler: float
    spectrum: str = "jakes"

    def __post_init__(self):
        if self.max_doppler < 0:
            raise ChannelError("maximum Doppler frequency must be >= 0")
        if self.spectrum != "jakes":
            raise ChannelError(f"unsupported Doppler spectrum {self.spectrum!r}")


def max_doppler(velocity_mps: float, carrier_hz: float) -> float:
    """Maximum Doppler shift v * f / c."""
    if velocity_mps < 0:
        raise ChannelError("velocity must be >= 0")
    return velocity_mps * carrier_hz / SPEED_OF_LIGHT


def jakes_bin_masses(m_fft: int) -> np.ndarray:
    """Per-FFT-bin probability mass of the Jakes spectrum.

    The synthesis rate is _FADING_OVERSAMPLING times the maximum Doppler,
    so the band edges fall at bin frequency +-fs/_FADING_OVERSAMPLING.
    Masses integrate the spectrum over each bin (the arcsine law), which
    keeps the edge singularities finite and the total mass exactly 1.
    """
    freqs = np.fft.fftfreq(m_fft)  # cycles per sample at the fading rate
    half_bin = 0.5 / m_fft
    fd = 1.0 / _FADING_OVERSAMPLING
    lo = np.clip((freqs - half_bin) / fd, -1.0, 1.0)
    hi = np.clip((freqs + half_bin) / fd, -1.0, 1.0)
    return (np.arcsin(hi) - np.arcsin(lo)) / np.pi


def _fractional_delay_kernel(delay_samples: float) -> tuple[int, np.ndarray]:
    """(integer offset, unit-energy windowed-sinc) realizing the delay."""
    d_int = int(np.floor(delay_samples))
    frac = delay_samples - d_int
    n = np.arange(_SINC_LEN)
    kernel = np.sinc(n - _SINC_HALF - frac) * np.blackman(_SINC_LEN + 2)[1:-1]
    kernel /= np.sqrt(np.sum(kernel**2))
    return d_int, kernel


class _DelayKernelBank:
    """Delay kernels and their FFTs, shared by every realization of a
    profile (they depend only on the tap delays and the rate)."""

    def __init__(self, delay_samples: tuple[float, ...]):
        kernels = [_fractional_delay_kernel(d) for d in delay_samples]
        max_off = max((off for off, _ in kernels), default=0)
        self.kernels = np.zeros((len(kernels), _SINC_LEN + max_off))
        for t, (off, kern) in enumerate(kernels):
            self.kernels[t, off : off + _SINC_LEN] = kern
        self.center = _SINC_HALF
        self._fft: dict[int, np.ndarray] = {}

    def fft(self, nfft: int) -> np.ndarray:
        if nfft not in self._fft:
            self._fft[nfft] = np.fft.fft(self.kernels, nfft, axis=-1)
        return self._fft[nfft]


_KERNEL_BANKS: dict[tuple[float, ...], _DelayKernelBank] = {}


def _kernel_bank(delay_samples: np.ndarray) -> _DelayKernelBank:
    key = tuple(float(d) for d in delay_samples)
    if key not in _KERNEL_BANKS:
        _KERNEL_BANKS[key] = _DelayKernelBank(key)
    return _KERNEL_BANKS[key]


class ChannelRealization:
    """Time-varying tap gains for every TX-RX link of one channel draw.

    Gains are synthesized on a decimated grid and interpolated lazily;
    `tap_gains(start, n)` returns them on the simulation-rate grid.
    """

    def __init__(
        self,
        profile: TapProfile,
        doppler: DopplerSpec,
        n_tx: int,
        n_rx: int,
        duration_samples: int,
        rng: np.random.Generator,
        rate: float = SIMULATION_RATE_HZ,
        fading_fft_size: int | None = None,
    ):
        self.profile = profile
        self.doppler = doppler
        self.n_tx = n_tx
        self.n_rx = n_rx
        self.rate = rate
        self.duration = duration_samples

        fd = doppler.max_doppler
        self.fading_rate = _FADING_OVERSAMPLING * fd if fd > 0 else 0.0
        if fd > 0:
            needed = int(np.ceil(duration_samples / rate * self.fading_rate)) + 8
            m = fading_fft_size or max(_MIN_FADING_FFT, 1 << int(np.ceil(np.log2(8 * needed))))
            shaping = m * np.sqrt(jakes_bin_masses(m))
            white = (
                rng.standard_normal((n_tx, n_rx, profile.n_taps, m))
                + 1j * rng.standard_normal((n_tx, n_rx, profile.n_taps, m))
            ) / np.sqrt(2)
            self._coarse = np.fft.ifft(white * shaping, axis=-1)
            self._m = m
        else:
            static = (
                rng.standard_normal((n_tx, n_rx, profile.n_taps, 1))
                + 1j * rng.standard_normal((n_tx, n_rx, profile.n_taps, 1))
            ) / np.sqrt(2)
            self._coarse = static
            self._m = 1

        scale = np.sqrt(profile.powers)[None, None, :, None]
        k_db = profile.rician_k_db
        self._los = None
        if k_db is not None:
            k_lin = 10 ** (k_db / 10)
            diffuse = np.ones(profile.n_taps)
            diffuse[0] = np.sqrt(1 / (k_lin + 1))
            scale = scale * diffuse[None, None, :, None]
            phases = rng.uniform(0, 2 * np.pi, (n_tx, n_rx))
            self._los = np.sqrt(profile.powers[0] * k_lin / (k_lin + 1)) * np.exp(1j * phases)
        self._coarse = self._coarse * scale

        self.delay_samples = profile.delays * rate
        self._bank = _kernel_bank(self.delay_samples)
        self.kernel_center = self._bank.center
        self.tail_samples = self._bank.kernels.shape[1] - 1 - self.kernel_center

    @property
    def _kernels(self) -> np.ndarray:
        return self._bank.kernels

    def kernel_fft(self, nfft: int) -> np.ndarray:
        """Cached FFT of the per-tap delay kernels at the given length."""
        return self._bank.fft(nfft)

    def _interp_coarse(self, times_samples: np.ndarray) -> np.ndarray:
        """Gains at arbitrary simulation-rate times, all links and taps.

        Returns shape (n_tx, n_rx, n_taps, len(times)).
        """
        if self._m == 1:
            out = np.broadcast_to(
                self._coarse, (self.n_tx, self.n_rx, self.profile.n_taps, times_samples.size)
            ).copy()
        else:
            u = np.asarray(times_samples, float) * self.fading_rate / self.rate
            # Windowed-sinc interpolation on an 8x refined anchor grid,
            # then linear interpolation (the process is 32x oversampled
            # relative to its own Nyquist rate, so the error is tiny).
            u0 = np.floor(u.min()) - 1
            u1 = np.ceil(u.max()) + 1
            anchors = np.arange(u0, u1 + 0.126, 0.125)
            base = np.floor(anchors).astype(np.int64)
            frac = anchors - base
            taps = np.arange(-7, 9)
            w = np.sinc(frac[:, None] - taps[None, :]) * np.hamming(18)[1:-1][None, taps + 7]
            w /= w.sum(axis=1, keepdims=True)
            idx = (base[:, None] + taps[None, :]) % self._m
            coarse = self._coarse[..., idx]  # (tx, rx, tap, n_anchor, 16)
            at_anchors = np.einsum("...aw,aw->...a", coarse, w)
            pos = (u - u0) / 0.125
            lo = np.clip(pos.astype(np.int64), 0, anchors.size - 2)
            lam = pos - lo
            out = at_anchors[..., lo] * (1 - lam) + at_anchors[..., lo + 1] * lam
        if self._los is not None:
            out[..., 0, :] = out[..., 0, :] + self._los[..., None]
        return out

    def tap_gains(self, start: int, n: int) -> np.ndarray:
        """Gains on the simulation grid, shape (n_tx, n_rx, n_taps, n)."""
        return self._interp_coarse(np.arange(start, start + n, dtype=np.float64))

    def frequency_response(
        self, times_samples: np.ndarray, subcarrier_freqs: np.ndarray
    ) -> np.ndarray:
        """Exact per-subcarrier response at given times.

        Includes the fractional-delay kernels, so it matches what a
        synchronized OFDM receiver observes.  Returns shape
        (n_tx, n_rx, len(times), len(freqs)).
        """
        gains = self._interp_coarse(np.asarray(times_samples, float))
        m = np.arange(self._kernels.shape[1])
        phase = np.exp(
            -2j * np.pi * np.outer(m - self.kernel_center, subcarrier_freqs) / self.rate
        )
        kern_resp = self._kernels @ phase  # (n_taps, n_freq)
        return np.einsum("abtn,tf->abnf", gains, kern_resp)


def generate_channel(
    profile: TapProfile,
    doppler: DopplerSpec,
    n_tx: int,
    n_rx: int,
    duration_samples: int,
    rng: np.random.Generator | int,
    rate: float = SIMULATION_RATE_HZ,
    fading_fft_size: int | None = None,
) -> ChannelRealization:
    """Draw one channel realization (deterministic given the generator)."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    return ChannelRealization(
        profile, doppler, n_tx, n_rx, duration_samples, rng, rate, fading_fft_size
    )


def apply_channel(
    tx_samples: np.ndarray,
    realization: ChannelRealization,
    start_sample: int = 0,
    gain_model: str = "linear",
) -> np.ndarray:
    """Pass (n_tx, n) samples through the channel window at start_sample.

    Output is (n_rx, n + tail) and is aligned so a zero-delay tap maps
    input sample i to output sample i.

    gain_model "exact" evaluates every tap gain at every output sample;
    "linear" (default) linearizes the gain trajectory across the window,
    which collapses the tap sum into two combined impulse responses.  At
    the supported Doppler spreads a window is a small fraction of the
    coherence time, so the linearization error is far below statistical
    noise; static channels are reproduced exactly.
    """
    x = np.atleast_2d(np.asarray(tx_samples, dtype=np.complex128))
    if x.shape[0] != realization.n_tx:
        raise ChannelError(
            f"waveform has {x.shape[0]} antennas, channel expects {realization.n_tx}"
        )
    n = x.shape[1]
    kernels = realization._kernels
    full_len = n + kernels.shape[1] - 1
    center = realization.kernel_center
    out_len = full_len - center

    if gain_model == "exact":
        rx_times = np.arange(full_len, dtype=np.float64) + start_sample - center
        gains = realization._interp_coarse(rx_times)  # (tx, rx, tap, full_len)
        y = np.zeros((realization.n_rx, out_len), dtype=np.complex128)
        for tx in range(realization.n_tx):
            shifted = fftconvolve(x[tx][None, :], kernels, axes=-1)
            for rx in range(realization.n_rx):
                y[rx] += np.einsum("tn,tn->n", gains[tx, rx], shifted)[center:]
        return y
    if gain_model != "linear":
        raise ChannelError(f"unknown gain model {gain_model!r}")

    n_tx, n_rx, n_taps = realization.n_tx, realization.n_rx, realization.profile.n_taps
    t_edges = np.array(
        [start_sample - center, start_sample - center + full_len - 1], dtype=np.float64
    )
    g_edges = realization._interp_coarse(t_edges)  # (tx, rx, tap, 2)
    alpha = g_edges[..., 0]
    beta = (g_edges[..., 1] - g_edges[..., 0]) / max(full_len - 1, 1)

    nfft = _next_fast_len(full_len)
    kern_fft = realization.kernel_fft(nfft)  # (n_taps, nfft)
    x_fft = np.fft.fft(x, nfft, axis=-1)     # (n_tx, nfft)

    h_alpha = alpha.reshape(-1, n_taps) @ kern_fft
    h_beta = beta.reshape(-1, n_taps) @ kern_fft
    h_alpha = h_alpha.reshape(n_tx, n_rx, nfft)
    h_beta = h_beta.reshape(n_tx, n_rx, nfft)

    spec_a = np.einsum("tf,trf->rf", x_fft, h_alpha)
    spec_b = np.einsum("tf,trf->rf", x_fft, h_beta)
    ya = np.fft.ifft(spec_a, axis=-1)[:, :full_len]
    yb = np.fft.ifft(spec_b, axis=-1)[:, :full_len]
    ramp = np.arange(full_len, dtype=np.float64)
    return (ya + ramp * yb)[:, center:]


def _next_fast_len(n: int) -> int:
    from scipy.fft import next_fast_len

    return int(next_fast_len(n, real=False))


def add_awgn(
    samples: np.ndarray,
    snr_db: float | None,
    rng: np.random.Generator,
    signal_power: float = 1.0,
    occupied_bandwidth: float | None = None,
    sample_rate: float | None = None,
    noise_variance: float | None = None,
) -> np.ndarray:
    """Add complex white Gaussian noise.

    The SNR is defined per receive antenna over the occupied signal
    bandwidth; when the sampling rate exceeds the occupied bandwidth the
    per-sample noise variance is scaled up accordingly.  Passing
    snr_db=None (or +inf) returns the input unchanged; noise_variance
    sets the per-sample complex variance directly.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    if noise_variance is None:
        if snr_db is None or np.isinf(snr_db):
            return samples
        noise_variance = signal_power / 10 ** (snr_db / 10)
        if occupied_bandwidth is not None and sample_rate is not None:
            noise_variance *= sample_rate / occupied_bandwidth
    noise = (
        rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
    ) * np.sqrt(noise_variance / 2)
    return samples + noise
