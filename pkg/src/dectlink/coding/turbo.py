"""Rate-1/3 parallel-concatenated turbo code with a QPP interleaver.

Two identical 8-state recursive systematic encoders (feedback 1+D^2+D^3,
parity 1+D+D^3) run on the input block and its quadratic-permutation
interleaved copy.  Both trellises are terminated, contributing 12 tail
bits arranged across the three output streams, so a K-bit block encodes
to 3K+12 bits.

Filler bits (used by code-block segmentation) are fed to the encoders as
zeros but their systematic and first-parity outputs are marked NULL (-1)
and never transmitted.

Decoding is iterative max-log BCJR with the usual extrinsic exchange.
All hot loops are numba-compiled.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

NULL_BIT = -1
TAIL_COLUMNS = 4  # per-stream columns appended by trellis termination


def _legal_sizes() -> tuple[int, ...]:
    sizes = list(range(40, 512 + 1, 8))
    sizes += list(range(528, 1024 + 1, 16))
    sizes += list(range(1056, 2048 + 1, 32))
    sizes += list(range(2112, 6144 + 1, 64))
    return tuple(sizes)


LEGAL_BLOCK_SIZES: tuple[int, ...] = _legal_sizes()

# QPP parameters (f1, f2) per block size K: pi(i) = (f1*i + f2*i^2) mod K.
_QPP_PARAMS: dict[int, tuple[int, int]] = {
    40: (3, 10), 48: (7, 12), 56: (19, 42), 64: (7, 16), 72: (7, 18),
    80: (11, 20), 88: (5, 22), 96: (11, 24), 104: (7, 26), 112: (41, 84),
    120: (103, 90), 128: (15, 32), 136: (9, 34), 144: (17, 108),
    152: (9, 38), 160: (21, 120), 168: (101, 84), 176: (21, 44),
    184: (57, 46), 192: (23, 48), 200: (13, 50), 208: (27, 52),
    216: (11, 36), 224: (27, 56), 232: (85, 58), 240: (29, 60),
    248: (33, 62), 256: (15, 32), 264: (17, 198), 272: (33, 68),
    280: (103, 210), 288: (19, 36), 296: (19, 74), 304: (37, 76),
    312: (19, 78), 320: (21, 120), 328: (21, 82), 336: (115, 84),
    344: (193, 86), 352: (21, 44), 360: (133, 90), 368: (81, 46),
    376: (45, 94), 384: (23, 48), 392: (243, 98), 400: (151, 40),
    408: (155, 102), 416: (25, 52), 424: (51, 106), 432: (47, 72),
    440: (91, 110), 448: (29, 168), 456: (29, 114), 464: (247, 58),
    472: (29, 118), 480: (89, 180), 488: (91, 122), 496: (157, 62),
    504: (55, 84), 512: (31, 64), 528: (17, 66), 544: (35, 68),
    560: (227, 420), 576: (65, 96), 592: (19, 74), 608: (37, 76),
    624: (41, 234), 640: (39, 80), 656: (185, 82), 672: (43, 252),
    688: (21, 86), 704: (155, 44), 720: (79, 120), 736: (139, 92),
    752: (23, 94), 768: (217, 48), 784: (25, 98), 800: (17, 80),
    816: (127, 102), 832: (25, 52), 848: (239, 106), 864: (17, 48),
    880: (137, 110), 896: (215, 112), 912: (29, 114), 928: (15, 58),
    944: (147, 118), 960: (29, 60), 976: (59, 122), 992: (65, 124),
    1008: (55, 84), 1024: (31, 64), 1056: (17, 66), 1088: (171, 204),
    1120: (67, 140), 1152: (35, 72), 1184: (19, 74), 1216: (39, 76),
    1248: (19, 78), 1280: (199, 240), 1312: (21, 82), 1344: (211, 252),
    1376: (21, 86), 1408: (43, 88), 1440: (149, 60), 1472: (45, 92),
    1504: (49, 846), 1536: (71, 48), 1568: (13, 28), 1600: (17, 80),
    1632: (25, 102), 1664: (183, 104), 1696: (55, 954), 1728: (127, 96),
    1760: (27, 110), 1792: (29, 112), 1824: (29, 114), 1856: (57, 116),
    1888: (45, 354), 1920: (31, 120), 1952: (59, 610), 1984: (185, 124),
    2016: (113, 420), 2048: (31, 64), 2112: (17, 66), 2176: (171, 136),
    2240: (209, 420), 2304: (253, 216), 2368: (367, 444), 2432: (265, 456),
    2496: (181, 468), 2560: (39, 80), 2624: (27, 164), 2688: (127, 504),
    2752: (143, 172), 2816: (43, 88), 2880: (29, 300), 2944: (45, 92),
    3008: (157, 188), 3072: (47, 96), 3136: (13, 28), 3200: (111, 240),
    3264: (443, 204), 3328: (51, 104), 3392: (51, 212), 3456: (451, 192),
    3520: (257, 220), 3584: (57, 336), 3648: (313, 228), 3712: (271, 232),
    3776: (179, 236), 3840: (331, 120), 3904: (363, 244), 3968: (375, 248),
    4032: (127, 168), 4096: (31, 64), 4160: (33, 130), 4224: (43, 264),
    4288: (33, 134), 4352: (477, 408), 4416: (35, 138), 4480: (233, 280),
    4544: (357, 142), 4608: (337, 480), 4672: (37, 146), 4736: (71, 444),
    4800: (71, 120), 4864: (37, 152), 4928: (39, 462), 4992: (127, 234),
    5056: (39, 158), 5120: (39, 80), 5184: (31, 96), 5248: (113, 902),
    5312: (41, 166), 5376: (251, 336), 5440: (43, 170), 5504: (21, 86),
    5568: (43, 174), 5632: (45, 176), 5696: (45, 178), 5760: (161, 120),
    5824: (89, 182), 5888: (323, 184), 5952: (47, 186), 6016: (23, 94),
    6080: (47, 190), 6144: (263, 480),
}


class BlockSizeError(ValueError):
    """Raised for block sizes outside the interleaver table."""


def nearest_legal_sizes(k: int) -> tuple[int, int]:
    """(largest legal size <= k or 0, smallest legal size >= k or 0)."""
    below = max((s for s in LEGAL_BLOCK_SIZES if s <= k), default=0)
    above = min((s for s in LEGAL_BLOCK_SIZES if s >= k), default=0)
    return below, above


def _require_legal(k: int) -> None:
    if k not in _QPP_PARAMS:
        below, above = nearest_legal_sizes(k)
        raise BlockSizeError(
            f"block size {k} is not a legal interleaver size; "
            f"nearest legal sizes: {below or 'none'} and {above or 'none'}"
        )


@lru_cache(maxsize=None)
def qpp_permutation(k: int) -> np.ndarray:
    """Interleaver indices pi for block size k: c'[i] = c[pi[i]]."""
    _require_legal(k)
    f1, f2 = _QPP_PARAMS[k]
    i = np.arange(k, dtype=np.int64)
    return (f1 * i + f2 * i * i) % k


@lru_cache(maxsize=None)
def qpp_inverse(k: int) -> np.ndarray:
    perm = qpp_permutation(k)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(k, dtype=np.int64)
    return inv


@njit(cache=True)
def _rsc_encode(bits, parity_out):
    """Encode one constituent stream; returns final state.

    bits entries < 0 (fillers) are encoded as zeros.
    """
    state = 0
    for i in range(bits.shape[0]):
        b = bits[i]
        if b < 0:
            b = 0
        s1 = state & 1
        s2 = (state >> 1) & 1
        s3 = (state >> 2) & 1
        r = b ^ s2 ^ s3
        parity_out[i] = r ^ s1 ^ s3
        state = (s2 << 2) | (s1 << 1) | r
    return state


@njit(cache=True)
def _rsc_tail(state, tail_sys, tail_par):
    for t in range(3):
        s1 = state & 1
        s2 = (state >> 1) & 1
        s3 = (state >> 2) & 1
        u = s2 ^ s3
        tail_sys[t] = u
        tail_par[t] = s1 ^ s3  # r = 0 on the termination path
        state = (s2 << 2) | (s1 << 1)
    return state


def turbo_encode(bits: np.ndarray, filler_count: int = 0) -> np.ndarray:
    """Encode a K-bit block into the three mother streams.

    Returns an int8 array of shape (3, K+4): systematic, parity-1 and
    parity-2 streams with the termination bits in the last four columns.
    Filler positions carry NULL_BIT in the systematic and parity-1
    streams.
    """
    bits = np.asarray(bits)
    k = bits.shape[0]
    _require_legal(k)
    work = bits.astype(np.int8)

    perm = qpp_permutation(k)
    par1 = np.empty(k, dtype=np.int8)
    par2 = np.empty(k, dtype=np.int8)
    state1 = _rsc_encode(work, par1)
    interleaved = work[perm]
    state2 = _rsc_encode(interleaved, par2)

    tail_sys1 = np.empty(3, dtype=np.int8)
    tail_par1 = np.empty(3, dtype=np.int8)
    tail_sys2 = np.empty(3, dtype=np.int8)
    tail_par2 = np.empty(3, dtype=np.int8)
    end1 = _rsc_tail(state1, tail_sys1, tail_par1)
    end2 = _rsc_tail(state2, tail_sys2, tail_par2)
    assert end1 == 0 and end2 == 0

    d = np.empty((3, k + TAIL_COLUMNS), dtype=np.int8)
    sys = np.where(work < 0, NULL_BIT, work).astype(np.int8)
    d[0, :k] = sys
    d[1, :k] = np.where(work < 0, NULL_BIT, par1)
    d[2, :k] = par2
    if filler_count:
        if not np.all(bits[:filler_count] <= 0):
            raise ValueError("filler positions must hold zeros or NULL markers")
        d[0, :filler_count] = NULL_BIT
        d[1, :filler_count] = NULL_BIT

    # Termination bits interleaved across the three streams.
    d[0, k : k + 4] = (tail_sys1[0], tail_par1[1], tail_sys2[0], tail_par2[1])
    d[1, k : k + 4] = (tail_par1[0], tail_sys1[2], tail_par2[0], tail_sys2[2])
    d[2, k : k + 4] = (tail_sys1[1], tail_par1[2], tail_sys2[1], tail_par2[2])
    return d


NEG_INF = -1e30


@njit(cache=True)
def _bcjr_max_log(sys_llr, par_llr, prior, tail_sys, tail_par, posterior):
    """Max-log BCJR over one terminated constituent trellis.

    sys_llr/par_llr/prior have length K; tail_sys/tail_par length 3.
    LLR convention: positive means bit 0.  Writes the full posterior
    (channel + prior + extrinsic) into `posterior`.
    """
    k = sys_llr.shape[0]
    n_states = 8

    # Trellis tables: next state and parity for input bits 0/1.
    nxt = np.empty((2, n_states), dtype=np.int64)
    par = np.empty((2, n_states), dtype=np.int64)
    for s in range(n_states):
        s1 = s & 1
        s2 = (s >> 1) & 1
        s3 = (s >> 2) & 1
        for b in range(2):
            r = b ^ s2 ^ s3
            par[b, s] = r ^ s1 ^ s3
            nxt[b, s] = (s2 << 2) | (s1 << 1) | r

    alpha = np.full((k + 1, n_states), NEG_INF)
    alpha[0, 0] = 0.0
    for i in range(k):
        ls = sys_llr[i] + prior[i]
        lp = par_llr[i]
        for s in range(n_states):
            a = alpha[i, s]
            if a <= NEG_INF:
                continue
            for b in range(2):
                m = a + 0.5 * (1 - 2 * b) * ls + 0.5 * (1 - 2 * par[b, s]) * lp
                ns = nxt[b, s]
                if m > alpha[i + 1, ns]:
                    alpha[i + 1, ns] = m

    # Backward init through the three termination steps (single allowed
    # transition per state, input forced to drive the register to zero).
    beta = np.full(n_states, NEG_INF)
    beta[0] = 0.0
    for t in range(2, -1, -1):
        new_beta = np.full(n_states, NEG_INF)
        for s in range(n_states):
            s1 = s & 1
            s2 = (s >> 1) & 1
            s3 = (s >> 2) & 1
            u = s2 ^ s3
            z = s1 ^ s3
            ns = (s2 << 2) | (s1 << 1)
            m = beta[ns]
            if m <= NEG_INF:
                continue
            new_beta[s] = (
                m
                + 0.5 * (1 - 2 * u) * tail_sys[t]
                + 0.5 * (1 - 2 * z) * tail_par[t]
            )
        beta = new_beta

    for i in range(k - 1, -1, -1):
        ls = sys_llr[i] + prior[i]
        lp = par_llr[i]
        m0 = NEG_INF
        m1 = NEG_INF
        new_beta = np.full(n_states, NEG_INF)
        for s in range(n_states):
            a = alpha[i, s]
            bmax = NEG_INF
            for b in range(2):
                g = 0.5 * (1 - 2 * b) * ls + 0.5 * (1 - 2 * par[b, s]) * lp
                t = g + beta[nxt[b, s]]
                if t > bmax:
                    bmax = t
                if a > NEG_INF:
                    m = a + t
                    if b == 0:
                        if m > m0:
                            m0 = m
                    else:
                        if m > m1:
                            m1 = m
            new_beta[s] = bmax
        beta = new_beta
        posterior[i] = m0 - m1


def turbo_decode_streams(
    llr_streams: np.ndarray,
    max_iterations: int = 8,
    filler_count: int = 0,
    check=None,
) -> tuple[np.ndarray, bool, int]:
    """Iteratively decode mother-stream LLRs of shape (3, K+4).

    `check` is an optional callable mapping hard bits (length K) to a
    boolean; decoding stops early as soon as it passes.  Returns
    (hard_bits, check_passed, half_iterations_run).  When no check is
    supplied the verdict is False.
    """
    llr = np.asarray(llr_streams, dtype=np.float64)
    k = llr.shape[1] - TAIL_COLUMNS
    _require_legal(k)
    perm = qpp_permutation(k)
    inv_perm = qpp_inverse(k)

    sys1 = llr[0, :k].copy()
    par1 = llr[1, :k].copy()
    par2 = llr[2, :k].copy()
    if filler_count:
        sys1[:filler_count] = 1e6  # fillers are known zeros
        par1[:filler_count] = 0.0

    d0, d1, d2 = llr[0], llr[1], llr[2]
    tail_sys1 = np.array([d0[k], d2[k], d1[k + 1]])
    tail_par1 = np.array([d1[k], d0[k + 1], d2[k + 1]])
    tail_sys2 = np.array([d0[k + 2], d2[k + 2], d1[k + 3]])
    tail_par2 = np.array([d1[k + 2], d0[k + 3], d2[k + 3]])

    sys2 = sys1[perm]
    prior1 = np.zeros(k)
    post = np.empty(k)
    half_iters = 0
    for _ in range(max_iterations):
        _bcjr_max_log(sys1, par1, prior1, tail_sys1, tail_par1, post)
        half_iters += 1
        hard = (post < 0).astype(np.uint8)
        if check is not None and check(hard):
            return hard, True, half_iters
        extrinsic1 = post - sys1 - prior1

        prior2 = extrinsic1[perm]
        _bcjr_max_log(sys2, par2, prior2, tail_sys2, tail_par2, post)
        half_iters += 1
        hard = (post < 0).astype(np.uint8)[inv_perm]
        if check is not None and check(hard):
            return hard, True, half_iters
        extrinsic2 = post - sys2 - prior2
        prior1 = extrinsic2[inv_perm]

    return hard, False, half_iters
