"""End-to-end transport chain: CRC, segmentation, encoding, rate
matching, HARQ soft buffers, and decoding.

A TransportCoder is built once per packet configuration (transport block
size and rate-matched length are fixed) and is then pure: encoding maps
payload bits to transmission bits for a redundancy version, decoding
maps accumulated soft buffers back to payload bits plus a CRC verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .crc import CRC16, CRC24A, crc_attach, crc_check
from .rate_matching import (
    buffer_to_streams,
    derate_match,
    mother_buffer_length,
    rate_match,
)
from .segmentation import Segmentation, desegment_code_blocks, segment_code_blocks, segmentation_plan
from .turbo import turbo_decode_streams, turbo_encode

#: Redundancy-version schedule across HARQ transmissions: systematic
#: first, then versions spreading over the parity-heavy buffer regions.
RV_SEQUENCE = (0, 2, 3, 1)


@dataclass
class SoftBuffer:
    """Accumulated mother-code LLRs for the blocks of one transport block."""

    llrs: list[np.ndarray]
    n_transmissions: int = 0

    @classmethod
    def for_plan(cls, plan: Segmentation) -> "SoftBuffer":
        return cls([np.zeros(mother_buffer_length(k)) for k in plan.block_sizes])


class TransportCoder:
    """Coding chain for a fixed (tbs, e_length) packet configuration."""

    def __init__(
        self,
        tbs_bits: int,
        e_length: int,
        max_block: int = 6144,
        tb_crc=CRC24A,
        max_iterations: int = 8,
    ):
        if tbs_bits <= 0:
            raise ValueError("transport block size must be positive")
        if e_length <= 0:
            raise ValueError("rate-matched length must be positive")
        self.tbs_bits = tbs_bits
        self.e_length = e_length
        self.tb_crc = tb_crc
        self.max_block = max_block
        self.max_iterations = max_iterations
        self.plan = segmentation_plan(tbs_bits + tb_crc.length, max_block)
        self._block_e = _split_lengths(e_length, len(self.plan.block_sizes))

    def new_buffer(self) -> SoftBuffer:
        return SoftBuffer.for_plan(self.plan)

    def encode(self, payload: np.ndarray, rv: int = 0) -> np.ndarray:
        """Payload bits -> e_length transmission bits at version rv."""
        payload = np.asarray(payload, dtype=np.uint8)
        if payload.size != self.tbs_bits:
            raise ValueError(
                f"payload must be {self.tbs_bits} bits, got {payload.size}"
            )
        tb = crc_attach(payload, self.tb_crc)
        blocks, plan = segment_code_blocks(tb, max_block=self.max_block)
        out = []
        for block, e in zip(blocks, self._block_e):
            filler = plan.filler_bits if block is blocks[0] else 0
            streams = turbo_encode(block, filler_count=filler)
            out.append(rate_match(streams, e, rv, filler_count=filler))
        return np.concatenate(out)

    def accumulate(self, buffer: SoftBuffer, rx_llrs: np.ndarray, rv: int) -> SoftBuffer:
        """Soft-combine one received transmission into the buffer."""
        rx_llrs = np.asarray(rx_llrs, dtype=np.float64)
        if rx_llrs.size != self.e_length:
            raise ValueError(
                f"expected {self.e_length} LLRs, got {rx_llrs.size}"
            )
        pos = 0
        for i, (k, e) in enumerate(zip(self.plan.block_sizes, self._block_e)):
            filler = self.plan.filler_bits if i == 0 else 0
            derate_match(rx_llrs[pos : pos + e], k, rv, filler, buffer=buffer.llrs[i])
            pos += e
        buffer.n_transmissions += 1
        return buffer

    def decode(self, buffer: SoftBuffer, max_iterations: int | None = None) -> tuple[np.ndarray, bool]:
        """Decode the accumulated buffer; returns (payload_bits, crc_pass)."""
        iters = max_iterations if max_iterations is not None else self.max_iterations
        single = len(self.plan.block_sizes) == 1
        decoded = []
        all_ok = True
        for i, k in enumerate(self.plan.block_sizes):
            filler = self.plan.filler_bits if i == 0 else 0
            streams = buffer_to_streams(buffer.llrs[i], k, filler)
            if single:
                check = lambda bits: crc_check(bits[filler:], self.tb_crc)
            else:
                from .crc import CRC24B

                check = lambda bits, f=filler: crc_check(bits[f:], CRC24B)
            hard, ok, _ = turbo_decode_streams(
                streams, max_iterations=iters, filler_count=filler, check=check
            )
            all_ok = all_ok and ok
            decoded.append(hard.astype(np.int8))

        tb, blocks_ok = desegment_code_blocks(decoded, self.plan)
        if not single:
            all_ok = all_ok and blocks_ok
        crc_ok = all_ok and crc_check(tb, self.tb_crc)
        return tb[: self.tbs_bits], bool(crc_ok)

    def decode_transmission(self, rx_llrs: np.ndarray, rv: int = 0) -> tuple[np.ndarray, bool]:
        """Single-shot decode of one transmission (fresh buffer)."""
        buf = self.accumulate(self.new_buffer(), rx_llrs, rv)
        return self.decode(buf)


def _split_lengths(e_total: int, n_blocks: int) -> tuple[int, ...]:
    base = e_total // n_blocks
    extra = e_total - base * n_blocks
    return tuple(base + (1 if i >= n_blocks - extra else 0) for i in range(n_blocks))
