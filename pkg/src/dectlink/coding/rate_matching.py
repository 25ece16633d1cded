"""Circular-buffer rate matching for the turbo mother code.

The three mother streams pass a 32-column sub-block interleaver, are
collected into a circular buffer (systematic block first, then the two
parity streams interlaced), and the output is read circularly from a
redundancy-version dependent offset, skipping NULL positions (dummy
padding and filler bits).  Everything is precomputed as index maps and
cached, so matching and de-matching are pure gathers/scatters.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .turbo import TAIL_COLUMNS

_SUBBLOCK_COLUMNS = 32
_COLUMN_PERMUTATION = np.array(
    [0, 16, 8, 24, 4, 20, 12, 28, 2, 18, 10, 26, 6, 22, 14, 30,
     1, 17, 9, 25, 5, 21, 13, 29, 3, 19, 11, 27, 7, 23, 15, 31],
    dtype=np.int64,
)

_DUMMY = -1
REDUNDANCY_VERSIONS = (0, 1, 2, 3)


@lru_cache(maxsize=None)
def _stream_maps(d: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Sub-block interleaver index maps for stream length d.

    Returns (v01_map, v2_map, k_pi) where each map holds, per interleaved
    position, the source index within the stream or -1 for dummy padding.
    """
    r = -(-d // _SUBBLOCK_COLUMNS)
    k_pi = r * _SUBBLOCK_COLUMNS
    nd = k_pi - d
    y = np.concatenate([np.full(nd, _DUMMY, dtype=np.int64), np.arange(d, dtype=np.int64)])
    matrix = y.reshape(r, _SUBBLOCK_COLUMNS)
    v01 = matrix[:, _COLUMN_PERMUTATION].flatten(order="F")

    k = np.arange(k_pi, dtype=np.int64)
    pi = (_COLUMN_PERMUTATION[k // r] + _SUBBLOCK_COLUMNS * (k % r) + 1) % k_pi
    v2 = y[pi]
    return v01, v2, k_pi


@lru_cache(maxsize=None)
def buffer_layout(k: int, filler_count: int = 0) -> tuple[np.ndarray, np.ndarray, int]:
    """Circular-buffer layout for block size k.

    Returns (w_map, valid_mask, k_pi).  w_map[i] is the flat index into
    the (3, K+4) stream array feeding buffer position i, or -1 where the
    position holds a NULL (dummy padding or filler in streams 0/1).
    """
    d = k + TAIL_COLUMNS
    v01, v2, k_pi = _stream_maps(d)

    w_map = np.empty(3 * k_pi, dtype=np.int64)
    w_map[:k_pi] = np.where(v01 >= 0, v01, _DUMMY)
    w_map[k_pi::2] = np.where(v01 >= 0, d + v01, _DUMMY)
    w_map[k_pi + 1 :: 2] = np.where(v2 >= 0, 2 * d + v2, _DUMMY)

    valid = w_map >= 0
    if filler_count:
        src = w_map[valid]
        stream = src // d
        idx = src % d
        filler = (idx < filler_count) & (stream <= 1)
        keep = np.where(valid)[0][~filler]
        valid = np.zeros_like(valid)
        valid[keep] = True
    return w_map, valid, k_pi


def mother_buffer_length(k: int) -> int:
    """Circular-buffer length for block size k (includes NULL slots)."""
    _, _, k_pi = buffer_layout(k)
    return 3 * k_pi


@lru_cache(maxsize=None)
def selection_indices(k: int, e: int, rv: int, filler_count: int = 0) -> np.ndarray:
    """Buffer positions transmitted for output length e at version rv."""
    if e <= 0:
        raise ValueError("rate-matched length must be positive")
    if rv not in REDUNDANCY_VERSIONS:
        raise ValueError(f"redundancy version must be in {REDUNDANCY_VERSIONS}")
    w_map, valid, k_pi = buffer_layout(k, filler_count)
    r = k_pi // _SUBBLOCK_COLUMNS
    n_cb = 3 * k_pi
    k0 = r * (2 * -(-n_cb // (8 * r)) * rv + 2)

    order = (np.arange(n_cb, dtype=np.int64) + k0) % n_cb
    order = order[valid[order]]
    reps = -(-e // order.size)
    return np.tile(order, reps)[:e]


def rate_match(streams: np.ndarray, e: int, rv: int = 0, filler_count: int = 0) -> np.ndarray:
    """Select e output bits from the mother streams (shape (3, K+4))."""
    streams = np.asarray(streams)
    k = streams.shape[1] - TAIL_COLUMNS
    w_map, _, _ = buffer_layout(k, filler_count)
    sel = selection_indices(k, e, rv, filler_count)
    flat = streams.reshape(-1)
    return flat[w_map[sel]].astype(np.uint8)


def derate_match(
    llrs: np.ndarray, k: int, rv: int, filler_count: int = 0, buffer: np.ndarray | None = None
) -> np.ndarray:
    """Scatter-add received LLRs into a mother circular buffer.

    Positions selected more than once (wrap-around) accumulate.  Passing
    an existing buffer performs soft combining in place.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if buffer is None:
        buffer = np.zeros(mother_buffer_length(k))
    sel = selection_indices(k, llrs.size, rv, filler_count)
    np.add.at(buffer, sel, llrs)
    return buffer


def buffer_to_streams(buffer: np.ndarray, k: int, filler_count: int = 0) -> np.ndarray:
    """Map circular-buffer LLRs back to the (3, K+4) stream layout."""
    w_map, valid, _ = buffer_layout(k, filler_count)
    streams = np.zeros(3 * (k + TAIL_COLUMNS))
    streams[w_map[valid]] = buffer[valid]
    return streams.reshape(3, k + TAIL_COLUMNS)
