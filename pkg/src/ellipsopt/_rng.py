"""Deterministic counter-based random streams.

Every stochastic draw in this package is keyed by (seed, stream, step) and a
batch-element index. Element ``l`` of a batch owns a fixed Philox counter
block, and normals come from the inverse CDF (fixed consumption per element,
unlike rejection samplers), so a batch can be generated whole, in chunks, or
across worker threads and still produce bit-identical values.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox, SeedSequence
from scipy.special import ndtri

# stream tags; a (seed, stream, step) triple names one substream
GRAD_STREAM = 0
EVAL_STREAM = 1
DATA_STREAM = 2
SPLIT_STREAM = 3
PROBE_STREAM = 4

_LANES_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter tick
_INV_2_53 = 2.0**-53


def stream_key(seed: int, stream: int, step: int) -> np.ndarray:
    """128-bit Philox key for the substream (seed, stream, step)."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    if step < 0:
        raise ValueError("step must be a non-negative integer")
    ss = SeedSequence(entropy=(int(seed), int(stream), int(step)))
    return ss.generate_state(2, np.uint64)


def raw_lanes(key: np.ndarray, first_element: int, count: int, lanes_per_element: int) -> np.ndarray:
    """Raw 64-bit words for batch elements [first_element, first_element + count).

    Element l always reads the same counter blocks regardless of how the
    batch is chunked, which is what makes worker partitioning invisible.
    """
    blocks = -(-lanes_per_element // _LANES_PER_BLOCK)
    bits = Philox(key=key, counter=int(first_element) * blocks)
    raw = bits.random_raw(count * blocks * _LANES_PER_BLOCK)
    return raw.reshape(count, blocks * _LANES_PER_BLOCK)[:, :lanes_per_element]


def open_uniforms(raw: np.ndarray) -> np.ndarray:
    # strictly inside (0, 1) so inverse-CDF transforms stay finite
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def standard_normals(key: np.ndarray, first_element: int, count: int, dims: int) -> np.ndarray:
    """(count, dims) standard normals for the given batch-element window."""
    return ndtri(open_uniforms(raw_lanes(key, first_element, count, dims)))


def uniform_indices(key: np.ndarray, first_element: int, count: int, upper: int) -> np.ndarray:
    """(count,) integers uniform on [0, upper), one per batch element."""
    raw = raw_lanes(key, first_element, count, 1)[:, 0]
    u = (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53
    idx = (u * upper).astype(np.int64)
    return np.minimum(idx, upper - 1)


def pairwise_sum(rows: np.ndarray) -> np.ndarray:
    """Fixed-shape pairwise reduction over axis 0.

    The tree depends only on the number of rows, never on how the rows were
    produced, so chunked generation cannot change the rounding.
    """
    a = np.asarray(rows, dtype=np.float64)
    if a.shape[0] == 0:
        raise ValueError("cannot reduce an empty batch")
    while a.shape[0] > 1:
        m = a.shape[0]
        half = m // 2
        merged = a[0 : 2 * half : 2] + a[1 : 2 * half : 2]
        if m % 2:
            merged = np.concatenate([merged, a[2 * half :]], axis=0)
        a = merged
    return a[0]


def pairwise_mean(rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    return pairwise_sum(rows) / rows.shape[0]
