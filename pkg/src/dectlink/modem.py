"""Bits to baseband and back: constellation mapping, resource-grid
assembly, space-frequency transmit diversity, CP-OFDM, and resampling.

Gray labelings follow the common cellular convention: bits alternate
between the I and Q axes (even positions I, odd positions Q) and each
axis carries a reflected-Gray amplitude code; alphabets are normalized
to unit average power.  For QPSK, bits 00 map to (+1+j)/sqrt(2); BPSK
maps 0 to +1 and 1 to -1.

The modulator synthesizes directly at any integer multiple of the native
rate by zero-padding the IFFT, which is exact band-limited interpolation
of each CP-OFDM symbol.  A generic Fourier-domain resampler is provided
for arbitrary waveforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerology import (
    Modulation,
    NumerologyConfig,
    PacketFormat,
    RELabel,
    grid_labels,
)

SIMULATION_RATE_HZ = 27_648_000

#: Seed of the fixed pseudo-random QPSK training/pilot sequences.
TRAINING_SEED = 0x0DEC7


class ModemError(ValueError):
    pass


@dataclass(frozen=True)
class Constellation:
    order: int
    points: np.ndarray          # unit-average-power alphabet, Gray-indexed
    bits_per_symbol: int

    @classmethod
    def for_modulation(cls, modulation: Modulation) -> "Constellation":
        return _constellation(modulation.value)


@lru_cache(maxsize=None)
def _constellation(order: int) -> Constellation:
    if order == 2:
        points = np.array([1.0 + 0j, -1.0 + 0j])
        return Constellation(2, points, 1)
    m = int(np.log2(order))
    if 2 ** m != order or m % 2:
        raise ModemError(f"unsupported constellation order {order}")
    half = m // 2
    axis = _gray_pam(half)
    idx = np.arange(order)
    # Even bit positions select the I level, odd positions the Q level.
    i_bits = np.zeros(order, dtype=np.int64)
    q_bits = np.zeros(order, dtype=np.int64)
    for pos in range(m):
        bit = (idx >> (m - 1 - pos)) & 1
        if pos % 2 == 0:
            i_bits = (i_bits << 1) | bit
        else:
            q_bits = (q_bits << 1) | bit
    points = axis[i_bits] + 1j * axis[q_bits]
    points = points / np.sqrt(np.mean(np.abs(points) ** 2))
    return Constellation(order, points, m)


def _gray_pam(bits: int) -> np.ndarray:
    """Amplitude levels indexed by the Gray code of the axis bits.

    Bit value 0 on the leading axis bit lands on the positive side, so
    QPSK bit pair 00 maps to the first quadrant.
    """
    n = 2 ** bits
    gray = np.arange(n) ^ (np.arange(n) >> 1)
    level_of_gray = np.empty(n, dtype=np.int64)
    level_of_gray[gray] = np.arange(n)
    # level index 0 -> +(n-1), level n-1 -> -(n-1): descending odd levels
    return (n - 1 - 2 * level_of_gray[np.arange(n)]).astype(np.float64)


def map_symbols(bits: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Gray-map a bit sequence onto constellation symbols."""
    bits = np.asarray(bits, dtype=np.int64)
    m = constellation.bits_per_symbol
    if bits.size % m:
        raise ModemError(f"bit count {bits.size} is not a multiple of {m}")
    groups = bits.reshape(-1, m)
    index = np.zeros(groups.shape[0], dtype=np.int64)
    for pos in range(m):
        index = (index << 1) | groups[:, pos]
    return constellation.points[index]


def hard_decisions(symbols: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Minimum-distance detection back to bits."""
    d = np.abs(symbols[:, None] - constellation.points[None, :]) ** 2
    idx = np.argmin(d, axis=1)
    m = constellation.bits_per_symbol
    out = np.empty((symbols.size, m), dtype=np.uint8)
    for pos in range(m):
        out[:, pos] = (idx >> (m - 1 - pos)) & 1
    return out.reshape(-1)


@dataclass
class ResourceGrid:
    """Per-antenna complex symbols on the (symbol, subcarrier) lattice."""

    symbols: np.ndarray          # (n_tx, n_symbols, n_subcarriers)
    labels: np.ndarray           # same shape, RELabel values
    fmt: PacketFormat


@dataclass
class PacketWaveform:
    samples: np.ndarray          # (n_tx, n_samples)
    rate: int
    numerology: NumerologyConfig
    oversampling: int = 1


def _training_sequence(n: int, stream: int) -> np.ndarray:
    """Fixed unit-power QPSK sequence used for STF, DRS and PCC filler."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=TRAINING_SEED, spawn_key=(stream,)))
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, n)))


def pilot_values(fmt: PacketFormat) -> np.ndarray:
    """Unit-power DRS values on the full grid lattice (shared by TX/RX)."""
    n_sym, n_sc = fmt.n_symbols, fmt.n_subcarriers
    return _training_sequence(n_sym * n_sc, 1).reshape(n_sym, n_sc)


def assemble_grid(coded_bits: np.ndarray, fmt: PacketFormat) -> ResourceGrid:
    """Fill the packet grid: data in symbol-major order, pilots, STF, PCC.

    With two transmit antennas the data symbols are Alamouti-encoded over
    adjacent data subcarriers and every occupied RE is scaled by
    1/sqrt(n_tx) so total transmit power stays 1.
    """
    labels = grid_labels(fmt)
    n_tx, n_sym, n_sc = labels.shape
    constellation = Constellation.for_modulation(fmt.modulation)
    data_syms = map_symbols(coded_bits, constellation)

    n_data = int(np.sum(labels[0] == RELabel.DATA.value))
    if data_syms.size != n_data:
        raise ModemError(
            f"{fmt.name}: grid carries {n_data} data symbols, got {data_syms.size}"
        )

    scale = 1.0 / np.sqrt(n_tx)
    grid = np.zeros((n_tx, n_sym, n_sc), dtype=np.complex128)

    stf = _training_sequence(n_sc, 0)
    drs = pilot_values(fmt)
    pcc = _training_sequence(n_sym * n_sc, 2).reshape(n_sym, n_sc)

    if n_tx == 1:
        streams = [data_syms]
    else:
        streams = sfbc_encode(data_syms)

    for ant in range(n_tx):
        lab = labels[ant]
        grid[ant, lab == RELabel.STF.value] = stf[lab[0] == RELabel.STF.value] * scale
        grid[ant, lab == RELabel.DRS.value] = drs[lab == RELabel.DRS.value] * scale
        grid[ant, lab == RELabel.PCC.value] = pcc[lab == RELabel.PCC.value] * scale
        data_mask = lab == RELabel.DATA.value
        grid[ant, data_mask] = streams[ant] * scale

    return ResourceGrid(grid, labels, fmt)


def disassemble_grid(grid: ResourceGrid) -> np.ndarray:
    """Recover the data symbols of antenna 0 (inverse of assembly order)."""
    lab = grid.labels[0]
    return grid.symbols[0, lab == RELabel.DATA.value] * np.sqrt(grid.fmt.n_tx_antennas)


def sfbc_encode(symbols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Alamouti pairs over adjacent data positions.

    Antenna 0 sends (s1, s2); antenna 1 sends (-s2*, s1*).  The caller
    applies the 1/sqrt(2) power split.
    """
    if symbols.size % 2:
        raise ModemError("space-frequency coding needs an even symbol count")
    s = symbols.reshape(-1, 2)
    ant0 = s.reshape(-1)
    ant1 = np.empty_like(s)
    ant1[:, 0] = -np.conj(s[:, 1])
    ant1[:, 1] = np.conj(s[:, 0])
    return ant0, ant1.reshape(-1)


def ofdm_modulate(grid: ResourceGrid, oversampling: int = 1) -> PacketWaveform:
    """CP-OFDM with per-symbol zero-padded IFFT at oversampling x native.

    Subcarrier k of the grid sits at baseband frequency
    (k - fft_size/2) * subcarrier_spacing; the cyclic prefix length
    scales with the oversampling factor.
    """
    num = grid.fmt.numerology
    n = num.fft_size
    if grid.symbols.shape[-1] != n:
        raise ModemError("grid subcarrier count must equal the FFT size")
    if oversampling < 1 or int(oversampling) != oversampling:
        raise ModemError("oversampling factor must be a positive integer")
    m = n * oversampling
    cp = num.cp_samples * oversampling

    n_tx, n_sym, _ = grid.symbols.shape
    spec = np.zeros((n_tx, n_sym, m), dtype=np.complex128)
    bins = (np.arange(n) - n // 2) % m
    spec[:, :, bins] = grid.symbols
    body = np.fft.ifft(spec, axis=-1) * (m / np.sqrt(n))
    with_cp = np.concatenate([body[:, :, -cp:], body], axis=-1)
    samples = with_cp.reshape(n_tx, -1)
    return PacketWaveform(
        samples=samples,
        rate=num.sample_rate * oversampling,
        numerology=num,
        oversampling=oversampling,
    )


def ofdm_demodulate(
    samples: np.ndarray,
    num: NumerologyConfig,
    n_symbols: int,
    start_index: int = 0,
    oversampling: int = 1,
) -> np.ndarray:
    """Recover the resource grid from (..., samples) at the given rate.

    Accepts a 1-D or (n_rx, n_samples) array; returns symbols of shape
    (..., n_symbols, fft_size) matching the input dimensionality.
    """
    samples = np.asarray(samples)
    squeeze = samples.ndim == 1
    samples = np.atleast_2d(samples)
    n = num.fft_size
    m = n * oversampling
    cp = num.cp_samples * oversampling
    needed = start_index + n_symbols * (m + cp)
    if samples.shape[-1] < needed:
        raise ModemError(
            f"need {needed} samples to demodulate {n_symbols} symbols, "
            f"got {samples.shape[-1]}"
        )
    sym_len = m + cp
    windows = samples[:, start_index : start_index + n_symbols * sym_len]
    windows = windows.reshape(samples.shape[0], n_symbols, sym_len)[:, :, cp:]
    spec = np.fft.fft(windows, axis=-1) * (np.sqrt(n) / m)
    bins = (np.arange(n) - n // 2) % m
    out = spec[:, :, bins]
    return out[0] if squeeze else out


def upsample(waveform: PacketWaveform, target_rate: int = SIMULATION_RATE_HZ) -> PacketWaveform:
    """Fourier-domain integer-factor upsampling (exact in-band)."""
    if target_rate % waveform.rate:
        raise ModemError(
            f"target rate {target_rate} is not an integer multiple of {waveform.rate}"
        )
    factor = target_rate // waveform.rate
    if factor == 1:
        return waveform
    x = waveform.samples
    n = x.shape[-1]
    spec = np.fft.fft(x, axis=-1)
    out_spec = np.zeros((*x.shape[:-1], n * factor), dtype=np.complex128)
    half = n // 2
    out_spec[..., :half] = spec[..., :half]
    out_spec[..., -(n - half) :] = spec[..., half:]
    # Split the Nyquist bin symmetrically so real signals stay real.
    if n % 2 == 0:
        out_spec[..., half] = 0.5 * spec[..., half]
        out_spec[..., n * factor - half] = 0.5 * spec[..., half]
    y = np.fft.ifft(out_spec, axis=-1) * factor
    return PacketWaveform(
        samples=y,
        rate=target_rate,
        numerology=waveform.numerology,
        oversampling=waveform.oversampling * factor,
    )


def downsample(samples: np.ndarray, factor: int) -> np.ndarray:
    """Inverse of Fourier upsampling for integer factors (decimation)."""
    if factor == 1:
        return samples
    return np.asarray(samples)[..., ::factor]


def dump_waveform(waveform: PacketWaveform, path, meta: dict | None = None) -> None:
    """Write interleaved little-endian float32 I/Q plus a JSON sidecar."""
    import json
    from pathlib import Path

    path = Path(path)
    flat = waveform.samples.reshape(-1)
    iq = np.empty(2 * flat.size, dtype="<f4")
    iq[0::2] = flat.real
    iq[1::2] = flat.imag
    iq.tofile(path)
    sidecar = {
        "rate_hz": waveform.rate,
        "n_antennas": int(waveform.samples.shape[0]),
        "n_samples": int(waveform.samples.shape[-1]),
        "layout": "interleaved float32 I/Q, little-endian, antenna-major",
    }
    if meta:
        sidecar.update(meta)
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))
