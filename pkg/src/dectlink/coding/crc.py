"""Cyclic redundancy checks used by the transport chain.

Polynomials follow the LTE transport-channel family.  The shift register
starts at zero and no final XOR is applied, so an all-zero input yields
an all-zero remainder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class CrcSpec:
    name: str
    length: int
    poly: int  # including the x^length term, MSB first


# x^24 + x^23 + x^18 + x^17 + x^14 + x^11 + x^10 + x^7 + x^6 + x^5 + x^4 + x^3 + x + 1
CRC24A = CrcSpec("CRC24A", 24, 0x1864CFB)
# x^24 + x^23 + x^6 + x^5 + x + 1
CRC24B = CrcSpec("CRC24B", 24, 0x1800063)
# x^16 + x^12 + x^5 + 1
CRC16 = CrcSpec("CRC16", 16, 0x11021)


def _poly_bits(spec: CrcSpec) -> np.ndarray:
    bits = [(spec.poly >> i) & 1 for i in range(spec.length, -1, -1)]
    return np.array(bits, dtype=np.uint8)


@njit(cache=True)
def _long_division(work, poly, n_bits):
    for i in range(n_bits):
        if work[i]:
            for j in range(poly.shape[0]):
                work[i + j] ^= poly[j]


def crc_remainder(bits: np.ndarray, spec: CrcSpec) -> np.ndarray:
    """GF(2) long-division remainder of bits * x^length by the polynomial."""
    bits = np.asarray(bits, dtype=np.uint8)
    work = np.concatenate([bits, np.zeros(spec.length, dtype=np.uint8)])
    _long_division(work, _poly_bits(spec), bits.size)
    return work[-spec.length :]


def crc_attach(bits: np.ndarray, spec: CrcSpec = CRC24A) -> np.ndarray:
    """Append the CRC parity bits to a bit sequence."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        raise ValueError("cannot attach a CRC to an empty bit sequence")
    return np.concatenate([bits, crc_remainder(bits, spec)])


def crc_check(bits_with_crc: np.ndarray, spec: CrcSpec = CRC24A) -> bool:
    """True when the trailing parity bits match the payload."""
    bits_with_crc = np.asarray(bits_with_crc, dtype=np.uint8)
    if bits_with_crc.size <= spec.length:
        return False
    payload = bits_with_crc[: -spec.length]
    return bool(np.array_equal(crc_remainder(payload, spec), bits_with_crc[-spec.length :]))
