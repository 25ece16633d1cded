"""Code-block segmentation with filler bits and per-block CRCs.

Transport blocks larger than the configured maximum are split into
blocks drawn from the legal turbo sizes; each then carries its own
24-bit CRC.  Filler bits (zeros, marked NULL for the encoder) are
prepended to the first block so the sizes work out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crc import CRC24B, crc_attach, crc_check
from .turbo import LEGAL_BLOCK_SIZES, NULL_BIT

#: The standard allows either of two maximum code-block sizes.
MAX_BLOCK_SIZES = (2048, 6144)
_BLOCK_CRC_LEN = 24


@dataclass(frozen=True)
class Segmentation:
    block_sizes: tuple[int, ...]
    filler_bits: int
    per_block_crc: bool
    payload_bits: int


def segmentation_plan(b: int, max_block: int = 6144) -> Segmentation:
    """Block sizes, filler count and CRC policy for a b-bit input."""
    if max_block not in MAX_BLOCK_SIZES:
        raise ValueError(f"max_block must be one of {MAX_BLOCK_SIZES}, got {max_block}")
    if b <= 0:
        raise ValueError("cannot segment an empty transport block")
    sizes = [k for k in LEGAL_BLOCK_SIZES if k <= max_block]

    if b <= max_block:
        k_plus = min(k for k in sizes if k >= b)
        return Segmentation((k_plus,), k_plus - b, False, b)

    c = -(-b // (max_block - _BLOCK_CRC_LEN))
    b_prime = b + c * _BLOCK_CRC_LEN
    k_plus = min(k for k in sizes if c * k >= b_prime)
    smaller = [k for k in sizes if k < k_plus]
    if smaller:
        k_minus = max(smaller)
        c_minus = (c * k_plus - b_prime) // (k_plus - k_minus)
        c_plus = c - c_minus
    else:
        k_minus, c_minus, c_plus = 0, 0, c
    if c_minus == 0:
        k_minus = 0
    filler = c_plus * k_plus + c_minus * k_minus - b_prime
    blocks = (k_minus,) * c_minus + (k_plus,) * c_plus
    return Segmentation(blocks, filler, True, b)


def segment_code_blocks(bits: np.ndarray, max_block: int = 6144) -> tuple[list[np.ndarray], Segmentation]:
    """Split a (CRC-bearing) transport block into encoder-ready blocks.

    Each returned block is int8 with NULL_BIT marking filler positions;
    when more than one block results, every block ends in its own CRC.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    plan = segmentation_plan(bits.size, max_block)

    blocks = []
    pos = 0
    for i, size in enumerate(plan.block_sizes):
        block = np.empty(size, dtype=np.int8)
        start = plan.filler_bits if i == 0 else 0
        data_end = size - _BLOCK_CRC_LEN if plan.per_block_crc else size
        if i == 0:
            block[:start] = NULL_BIT
        n = data_end - start
        block[start:data_end] = bits[pos : pos + n]
        pos += n
        if plan.per_block_crc:
            with_crc = crc_attach(np.where(block[:data_end] < 0, 0, block[:data_end]), CRC24B)
            block[data_end:] = with_crc[-_BLOCK_CRC_LEN:]
        blocks.append(block)
    assert pos == bits.size
    return blocks, plan


def desegment_code_blocks(
    blocks: list[np.ndarray], plan: Segmentation
) -> tuple[np.ndarray, bool]:
    """Reassemble decoded blocks; verifies per-block CRCs when present."""
    pieces = []
    ok = True
    for i, block in enumerate(blocks):
        start = plan.filler_bits if i == 0 else 0
        if plan.per_block_crc:
            body = np.asarray(block[start:], dtype=np.uint8)
            ok = ok and crc_check(body, CRC24B)
            pieces.append(body[:-_BLOCK_CRC_LEN])
        else:
            pieces.append(np.asarray(block[start:], dtype=np.uint8))
    return np.concatenate(pieces), ok
