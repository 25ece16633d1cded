import json
from fractions import Fraction

import numpy as np
import pytest

from dectlink import numerology as num
from dectlink.numerology import (
    ConfigError,
    MCS_TABLE,
    Modulation,
    RELabel,
    derive_numerology,
    format0,
    format1,
    format2,
    grid_labels,
    mcs_format,
    packet_grid_dimensions,
    payload_capacity_bits,
    preset_format,
)


class TestDeriveNumerology:
    def test_base_pair(self):
        cfg = derive_numerology(1, 1)
        assert cfg.subcarrier_spacing == 27_000
        assert cfg.fft_size == 64
        assert cfg.sample_rate == 1_728_000

    def test_format2_pair(self):
        cfg = derive_numerology(4, 2)
        assert cfg.subcarrier_spacing == 108_000
        assert cfg.fft_size == 128
        assert cfg.sample_rate == 13_824_000

    def test_maximum_pair(self):
        cfg = derive_numerology(8, 16)
        assert cfg.subcarrier_spacing == 216_000
        assert cfg.fft_size == 1024
        assert cfg.sample_rate == 221_184_000

    @pytest.mark.parametrize("mu", num.VALID_MU)
    @pytest.mark.parametrize("beta", num.VALID_BETA)
    def test_all_legal_pairs(self, mu, beta):
        cfg = derive_numerology(mu, beta)
        assert 1_728_000 <= cfg.sample_rate <= 221_184_000
        assert cfg.symbols_per_slot in (10, 20, 40, 80)
        # slot closes exactly, checked in rational arithmetic
        assert (
            Fraction(cfg.symbol_samples * cfg.symbols_per_slot, cfg.sample_rate)
            == Fraction(10, 1000) / 24
        )

    @pytest.mark.parametrize("mu,beta", [(3, 1), (1, 3), (0, 1), (1, 0), (16, 1)])
    def test_illegal_pairs_rejected(self, mu, beta):
        with pytest.raises(ConfigError):
            derive_numerology(mu, beta)

    def test_doubling_beta_keeps_slot_timing(self):
        a = derive_numerology(2, 4)
        b = derive_numerology(2, 8)
        assert b.fft_size == 2 * a.fft_size
        assert b.sample_rate == 2 * a.sample_rate
        assert b.slot_duration == a.slot_duration
        assert b.symbols_per_slot == a.symbols_per_slot


def enumerate_layout(n_symbols, n_subcarriers, n_tx):
    """Independent oracle: walk the documented lattice rules RE by RE.

    Symbol 0 is STF.  DRS combs sit in symbols 1 and 6 with offset
    (antenna + 2 * comb_index) mod 4; other antennas' combs are NULL.
    The first 98 remaining REs (symbol-major) are PCC; the rest DATA.
    """
    STF, DRS, PCC, DATA, NULL = "stf", "drs", "pcc", "data", "null"
    grids = []
    for ant in range(n_tx):
        grid = {}
        for sym in range(n_symbols):
            for sc in range(n_subcarriers):
                grid[(sym, sc)] = STF if sym == 0 else DATA
        for j, sym in enumerate((1, 6)):
            if sym >= n_symbols:
                continue
            for other in range(n_tx):
                for sc in range((other + 2 * j) % 4, n_subcarriers, 4):
                    grid[(sym, sc)] = DRS if other == ant else NULL
        grids.append(grid)
    placed = 0
    for sym in range(1, n_symbols):
        for sc in range(n_subcarriers):
            if placed >= 98:
                break
            if grids[0][(sym, sc)] == DATA:
                for g in grids:
                    g[(sym, sc)] = PCC
                placed += 1
    counts = {k: 0 for k in (STF, DRS, PCC, DATA, NULL)}
    for v in grids[0].values():
        counts[v] += 1
    return counts


class TestGridDimensions:
    @pytest.mark.parametrize("factory,n_tx", [
        (format0, 1), (format0, 2), (format1, 1), (format1, 2), (format2, 1), (format2, 2),
    ])
    def test_counts_match_enumeration_oracle(self, factory, n_tx):
        fmt = factory(n_tx)
        dims = packet_grid_dimensions(fmt)
        oracle = enumerate_layout(fmt.n_symbols, fmt.n_subcarriers, n_tx)
        assert dims.n_stf_res == oracle["stf"]
        assert dims.n_drs_res == oracle["drs"]
        assert dims.n_pcc_res == oracle["pcc"]
        assert dims.n_data_res == oracle["data"]
        assert dims.n_null_res == oracle["null"]

    def test_format0_totals(self):
        dims = packet_grid_dimensions(format0())
        total = dims.n_symbols * dims.n_subcarriers
        assert total == 640
        assert (
            dims.n_stf_res + dims.n_drs_res + dims.n_pcc_res
            + dims.n_data_res + dims.n_null_res
            == total
        )

    def test_format2_totals(self):
        dims = packet_grid_dimensions(format2())
        assert dims.n_symbols * dims.n_subcarriers == 1280

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigError):
            num.PacketFormat(
                name="empty",
                numerology=derive_numerology(1, 1),
                n_symbols=0,
                tbs_bits=296,
                modulation=Modulation.QPSK,
                code_rate=Fraction(1, 2),
                max_harq_retx=0,
            )

    def test_labels_pure_function_of_format(self):
        a = grid_labels(format0(2))
        b = grid_labels(format0(2))
        assert np.array_equal(a, b)

    def test_two_tx_drs_disjoint_and_nulled(self):
        labels = grid_labels(format0(2))
        drs0 = labels[0] == RELabel.DRS.value
        drs1 = labels[1] == RELabel.DRS.value
        assert not np.any(drs0 & drs1)
        # the other antenna is silent wherever this one sends pilots
        assert np.all(labels[1][drs0] == RELabel.NULL.value)
        assert np.all(labels[0][drs1] == RELabel.NULL.value)


class TestPayloadCapacity:
    def test_format0_capacity(self):
        fmt = format0()
        dims = packet_grid_dimensions(fmt)
        assert payload_capacity_bits(fmt) == 2 * dims.n_data_res
        assert payload_capacity_bits(fmt) >= 296 + 24

    def test_format2_capacity(self):
        fmt = format2()
        dims = packet_grid_dimensions(fmt)
        assert payload_capacity_bits(fmt) == dims.n_data_res
        assert payload_capacity_bits(fmt) >= 288 + 24

    def test_capacity_guard_at_construction(self):
        with pytest.raises(ConfigError):
            num.PacketFormat(
                name="overfull",
                numerology=derive_numerology(1, 1),
                n_symbols=10,
                tbs_bits=10_000,
                modulation=Modulation.BPSK,
                code_rate=Fraction(1, 2),
                max_harq_retx=0,
            )


class TestPresets:
    def test_table_rows(self):
        f0, f1, f2 = format0(), format1(), format2()
        assert (f0.numerology.mu, f0.numerology.beta) == (1, 1)
        assert (f0.tbs_bits, f0.modulation, f0.code_rate) == (296, Modulation.QPSK, Fraction(1, 2))
        assert f0.max_harq_retx == 0
        assert (f1.numerology.mu, f1.numerology.beta) == (4, 1)
        assert (f1.tbs_bits, f1.modulation, f1.code_rate) == (368, Modulation.QPSK, Fraction(3, 4))
        assert f1.max_harq_retx == 1
        assert (f2.numerology.mu, f2.numerology.beta) == (4, 2)
        assert (f2.tbs_bits, f2.modulation, f2.code_rate) == (288, Modulation.BPSK, Fraction(1, 2))
        assert f2.max_harq_retx == 1

    def test_tbs_floor(self):
        for factory in (format0, format1, format2):
            assert factory().tbs_bits >= 256

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_format("Format9")

    def test_presets_round_trip_serialization(self):
        for factory in (format0, format1, format2):
            fmt = factory(2)
            blob = json.dumps({
                "name": fmt.name,
                "mu": fmt.numerology.mu,
                "beta": fmt.numerology.beta,
                "n_tx": fmt.n_tx_antennas,
            })
            raw = json.loads(blob)
            again = preset_format(raw["name"], raw["n_tx"])
            assert again == fmt


class TestMcsTable:
    def test_anchor_rows(self):
        assert (MCS_TABLE[0].modulation, MCS_TABLE[0].code_rate) == (Modulation.BPSK, Fraction(1, 2))
        assert (MCS_TABLE[1].modulation, MCS_TABLE[1].code_rate) == (Modulation.QPSK, Fraction(1, 2))
        assert (MCS_TABLE[2].modulation, MCS_TABLE[2].code_rate) == (Modulation.QPSK, Fraction(2, 3))
        assert (MCS_TABLE[7].modulation, MCS_TABLE[7].code_rate) == (Modulation.QAM64, Fraction(5, 6))

    def test_spectral_efficiency_strictly_increasing(self):
        eff = [m.spectral_efficiency for m in MCS_TABLE]
        assert all(b > a for a, b in zip(eff, eff[1:]))

    def test_mcs_format_tbs_fits(self):
        from dectlink.coding.turbo import LEGAL_BLOCK_SIZES

        for entry in MCS_TABLE:
            fmt = mcs_format(entry)
            assert payload_capacity_bits(fmt) >= fmt.tbs_bits + 24
            assert fmt.tbs_bits + 24 in LEGAL_BLOCK_SIZES
