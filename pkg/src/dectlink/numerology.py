"""OFDM numerology, packet formats, and the resource-element layout.

DECT-2020 NR scales a 27 kHz base subcarrier spacing by mu and a 64-point
base FFT by beta.  Every dimension used elsewhere (sample rates, grid
shapes, pilot positions, payload capacity) derives from the two scaling
factors, so this module is the single source of truth for them.

Resource-element layout adopted here (per transmit antenna):

* symbol 0 of the packet is the synchronization training field (STF);
* the remaining 9 symbols form the data field (DF);
* demodulation pilots (DRS) sit in DF symbols 0 and 5, one RE on every
  4th subcarrier; the comb offset is staggered across the two pilot
  symbols (antenna a uses offset a in the first and a+2 in the second),
  so each antenna samples the channel on an effective half-spacing
  lattice while antennas stay disjoint (the other antenna keeps those
  REs silent, label NULL);
* the physical control channel (PCC) occupies the first 98 non-pilot REs
  of the DF in symbol-major, subcarrier-ascending order;
* everything else is DATA.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

VALID_MU = (1, 2, 4, 8)
VALID_BETA = (1, 2, 4, 8, 12, 16)

BASE_SUBCARRIER_SPACING_HZ = 27_000
BASE_FFT_SIZE = 64
FRAME_DURATION_S = Fraction(10, 1000)
FRAME_SLOTS = 24

#: OFDM symbols in a packet (one STF symbol + nine DF symbols).
PACKET_SYMBOLS = 10
STF_SYMBOLS = 1
DRS_DF_SYMBOLS = (0, 5)   # DF-relative symbol indices carrying pilots
DRS_SPACING = 4           # pilot every 4th subcarrier
PCC_RES = 98              # control-channel overhead, placeholder symbols

TX_ANTENNA_COUNTS = (1, 2)


class Modulation(Enum):
    BPSK = 2
    QPSK = 4
    QAM16 = 16
    QAM64 = 64
    QAM256 = 256
    QAM1024 = 1024

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.value))


class ConfigError(ValueError):
    """Raised when a numerology or packet configuration is inconsistent."""


@dataclass(frozen=True)
class NumerologyConfig:
    """Derived OFDM timing and sizing for one (mu, beta) pair."""

    mu: int
    beta: int
    subcarrier_spacing: int
    fft_size: int
    sample_rate: int
    cp_samples: int
    symbols_per_slot: int
    slot_duration: Fraction
    frame_duration: Fraction = FRAME_DURATION_S
    frame_slots: int = FRAME_SLOTS

    @property
    def symbol_samples(self) -> int:
        """Samples per CP-OFDM symbol at the native rate."""
        return self.fft_size + self.cp_samples


def derive_numerology(mu: int, beta: int) -> NumerologyConfig:
    """Derive all OFDM dimensions for a (mu, beta) pair.

    Raises ConfigError for scaling factors outside the standard's sets.
    """
    if mu not in VALID_MU:
        raise ConfigError(f"mu must be one of {VALID_MU}, got {mu!r}")
    if beta not in VALID_BETA:
        raise ConfigError(f"beta must be one of {VALID_BETA}, got {beta!r}")

    spacing = BASE_SUBCARRIER_SPACING_HZ * mu
    fft_size = BASE_FFT_SIZE * beta
    cfg = NumerologyConfig(
        mu=mu,
        beta=beta,
        subcarrier_spacing=spacing,
        fft_size=fft_size,
        sample_rate=spacing * fft_size,
        cp_samples=fft_size // 8,
        symbols_per_slot=10 * mu,
        slot_duration=FRAME_DURATION_S / FRAME_SLOTS,
    )
    # Rational identity: (fft + cp) * symbols_per_slot / rate == slot exactly.
    assert (
        Fraction(cfg.symbol_samples * cfg.symbols_per_slot, cfg.sample_rate)
        == cfg.slot_duration
    )
    return cfg


@dataclass(frozen=True)
class McsEntry:
    """One modulation-and-coding-scheme row."""

    index: int
    modulation: Modulation
    code_rate: Fraction

    @property
    def spectral_efficiency(self) -> Fraction:
        return self.modulation.bits_per_symbol * self.code_rate


#: MCS ladder 0..9.  Anchored rows: 0 = BPSK 1/2, 1 = QPSK 1/2,
#: 2 = QPSK 2/3, 7 = 64-QAM 5/6; the remaining rows fill the ladder with
#: strictly increasing spectral efficiency.
MCS_TABLE = (
    McsEntry(0, Modulation.BPSK, Fraction(1, 2)),
    McsEntry(1, Modulation.QPSK, Fraction(1, 2)),
    McsEntry(2, Modulation.QPSK, Fraction(2, 3)),
    McsEntry(3, Modulation.QPSK, Fraction(3, 4)),
    McsEntry(4, Modulation.QAM16, Fraction(1, 2)),
    McsEntry(5, Modulation.QAM16, Fraction(2, 3)),
    McsEntry(6, Modulation.QAM64, Fraction(2, 3)),
    McsEntry(7, Modulation.QAM64, Fraction(5, 6)),
    McsEntry(8, Modulation.QAM256, Fraction(3, 4)),
    McsEntry(9, Modulation.QAM256, Fraction(5, 6)),
)


class RELabel(Enum):
    STF = 0
    DRS = 1
    PCC = 2
    DATA = 3
    NULL = 4


@dataclass(frozen=True)
class PacketFormat:
    """One packet configuration: grid shape, payload size, coding, HARQ."""

    name: str
    numerology: NumerologyConfig
    n_symbols: int
    tbs_bits: int
    modulation: Modulation
    code_rate: Fraction
    max_harq_retx: int
    n_tx_antennas: int = 1

    def __post_init__(self):
        if self.n_symbols <= 0:
            raise ConfigError("packet must contain at least one OFDM symbol")
        if self.n_tx_antennas not in TX_ANTENNA_COUNTS:
            raise ConfigError(
                f"n_tx_antennas must be in {TX_ANTENNA_COUNTS}, got {self.n_tx_antennas}"
            )
        if self.tbs_bits <= 0:
            raise ConfigError("transport block size must be positive")
        dims = packet_grid_dimensions(self)
        capacity = dims.n_data_res * self.modulation.bits_per_symbol
        if capacity < self.tbs_bits + 24:
            raise ConfigError(
                f"{self.name}: payload capacity {capacity} bits cannot carry "
                f"TBS {self.tbs_bits} plus a 24-bit CRC"
            )

    @property
    def n_subcarriers(self) -> int:
        return self.numerology.fft_size

    def with_antennas(self, n_tx: int) -> "PacketFormat":
        return PacketFormat(
            name=self.name,
            numerology=self.numerology,
            n_symbols=self.n_symbols,
            tbs_bits=self.tbs_bits,
            modulation=self.modulation,
            code_rate=self.code_rate,
            max_harq_retx=self.max_harq_retx,
            n_tx_antennas=n_tx,
        )


@dataclass(frozen=True)
class GridDimensions:
    n_symbols: int
    n_subcarriers: int
    n_stf_res: int
    n_drs_res: int
    n_pcc_res: int
    n_data_res: int
    n_null_res: int


def grid_labels(fmt: PacketFormat) -> np.ndarray:
    """Per-antenna RE label map, shape (n_tx, n_symbols, n_subcarriers).

    The layout is a pure function of the format and antenna count; it is
    identical across runs and seeds.
    """
    n_sym = fmt.n_symbols
    n_sc = fmt.n_subcarriers
    n_tx = fmt.n_tx_antennas
    if n_sym <= STF_SYMBOLS:
        raise ConfigError("packet needs at least one DF symbol after the STF")

    labels = np.full((n_tx, n_sym, n_sc), RELabel.DATA.value, dtype=np.int8)
    labels[:, 0, :] = RELabel.STF.value

    drs_abs_symbols = [STF_SYMBOLS + d for d in DRS_DF_SYMBOLS if STF_SYMBOLS + d < n_sym]
    for ant in range(n_tx):
        for j, sym in enumerate(drs_abs_symbols):
            for other in range(n_tx):
                own = other == ant
                offset = (other + 2 * j) % DRS_SPACING
                sc = np.arange(offset, n_sc, DRS_SPACING)
                labels[ant, sym, sc] = RELabel.DRS.value if own else RELabel.NULL.value

    # PCC: first PCC_RES REs of the DF that are still DATA, symbol-major.
    placed = 0
    for sym in range(STF_SYMBOLS, n_sym):
        if placed >= PCC_RES:
            break
        free = np.where(labels[0, sym] == RELabel.DATA.value)[0]
        take = free[: PCC_RES - placed]
        labels[:, sym, take] = RELabel.PCC.value
        placed += len(take)
    if placed < PCC_RES:
        raise ConfigError("grid too small to host the control-channel region")
    return labels


def packet_grid_dimensions(fmt: PacketFormat) -> GridDimensions:
    """Count REs of each kind for one antenna of the packet grid."""
    labels = grid_labels(fmt)[0]
    counts = {lab: int(np.sum(labels == lab.value)) for lab in RELabel}
    dims = GridDimensions(
        n_symbols=fmt.n_symbols,
        n_subcarriers=fmt.n_subcarriers,
        n_stf_res=counts[RELabel.STF],
        n_drs_res=counts[RELabel.DRS],
        n_pcc_res=counts[RELabel.PCC],
        n_data_res=counts[RELabel.DATA],
        n_null_res=counts[RELabel.NULL],
    )
    if dims.n_data_res <= 0:
        raise ConfigError("packet layout leaves no data resource elements")
    return dims


def payload_capacity_bits(fmt: PacketFormat) -> int:
    """Bits the data REs can carry with the format's modulation."""
    return packet_grid_dimensions(fmt).n_data_res * fmt.modulation.bits_per_symbol


def format0(n_tx: int = 1) -> PacketFormat:
    return PacketFormat(
        name="Format0",
        numerology=derive_numerology(1, 1),
        n_symbols=PACKET_SYMBOLS,
        tbs_bits=296,
        modulation=Modulation.QPSK,
        code_rate=Fraction(1, 2),
        max_harq_retx=0,
        n_tx_antennas=n_tx,
    )


def format1(n_tx: int = 1) -> PacketFormat:
    return PacketFormat(
        name="Format1",
        numerology=derive_numerology(4, 1),
        n_symbols=PACKET_SYMBOLS,
        tbs_bits=368,
        modulation=Modulation.QPSK,
        code_rate=Fraction(3, 4),
        max_harq_retx=1,
        n_tx_antennas=n_tx,
    )


def format2(n_tx: int = 1) -> PacketFormat:
    return PacketFormat(
        name="Format2",
        numerology=derive_numerology(4, 2),
        n_symbols=PACKET_SYMBOLS,
        tbs_bits=288,
        modulation=Modulation.BPSK,
        code_rate=Fraction(1, 2),
        max_harq_retx=1,
        n_tx_antennas=n_tx,
    )


PRESET_FORMATS = {"Format0": format0, "Format1": format1, "Format2": format2}


def preset_format(name: str, n_tx: int = 1) -> PacketFormat:
    try:
        return PRESET_FORMATS[name](n_tx)
    except KeyError:
        raise ConfigError(
            f"unknown packet format {name!r}; presets: {sorted(PRESET_FORMATS)}"
        ) from None


def mcs_format(
    mcs: McsEntry,
    numerology: NumerologyConfig | None = None,
    n_tx: int = 1,
    max_harq_retx: int = 0,
    legal_sizes: "tuple[int, ...] | None" = None,
) -> PacketFormat:
    """Build a custom single-packet format for an MCS entry.

    The transport block size is derived from the grid: the largest legal
    turbo input size not exceeding n_data_res * bits_per_symbol * rate,
    minus the 24-bit CRC.
    """
    from .coding.turbo import LEGAL_BLOCK_SIZES

    sizes = legal_sizes if legal_sizes is not None else LEGAL_BLOCK_SIZES
    num = numerology if numerology is not None else derive_numerology(1, 1)
    probe = PacketFormat(
        name=f"MCS{mcs.index}",
        numerology=num,
        n_symbols=PACKET_SYMBOLS,
        tbs_bits=1,
        modulation=Modulation.BPSK,
        code_rate=Fraction(1, 2),
        max_harq_retx=0,
        n_tx_antennas=n_tx,
    )
    n_data = packet_grid_dimensions(probe).n_data_res
    budget = int(n_data * mcs.modulation.bits_per_symbol * mcs.code_rate)
    eligible = [k for k in sizes if k <= budget]
    if not eligible:
        raise ConfigError(
            f"MCS{mcs.index}: grid supports only {budget} coded bits, below the "
            f"smallest legal block size {min(sizes)}"
        )
    k = max(eligible)
    return PacketFormat(
        name=f"MCS{mcs.index}",
        numerology=num,
        n_symbols=PACKET_SYMBOLS,
        tbs_bits=k - 24,
        modulation=mcs.modulation,
        code_rate=mcs.code_rate,
        max_harq_retx=max_harq_retx,
        n_tx_antennas=n_tx,
    )
