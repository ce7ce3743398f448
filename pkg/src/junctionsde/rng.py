"""Per-path counter-based random streams.

Each path ``k`` of a run with seed ``s`` owns two Philox streams keyed by
``SeedSequence([s, k, tag])``: tag 0 feeds the Gaussian increments (one per
grid step) and tag 1 the uniforms used for edge selection (the ``n``-th draw
picks ``Z_n``). Keys depend on nothing else, so the variates of a path are the
same whatever the batch size, chunking or worker count, and two runs that
differ only in ``delta`` see identical noise.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

NOISE_TAG = 0
EDGE_TAG = 1
_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53
_TWO_M52 = 2.0 ** -52


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def philox(seed: int, index: int, tag: int) -> np.random.Philox:
    key = np.random.SeedSequence([check_seed(seed), int(index), int(tag)]).generate_state(2, np.uint64)
    return np.random.Philox(key=key)


def stream_id(seed: int, index: int) -> str:
    return f"philox4x64/seedseq[{seed},{index},{{{NOISE_TAG},{EDGE_TAG}}}]"


def uniforms_from_raw(raw: np.ndarray, open_interval: bool = False) -> np.ndarray:
    """53-bit uniforms in ``[0, 1)``, or 52-bit midpoints in ``(0, 1)``.

    The open variant uses 52 bits so that ``k + 0.5`` stays exact and the
    largest value is ``1 - 2**-53`` rather than rounding up to 1.
    """
    if open_interval:
        return ((raw >> np.uint64(12)).astype(np.float64) + 0.5) * _TWO_M52
    return (raw >> np.uint64(11)).astype(np.float64) * _TWO_M53


class PathStreams:
    """Noise and edge-selection streams for one path."""

    def __init__(self, seed: int, index: int):
        self.seed = check_seed(seed)
        self.index = int(index)
        self._noise = philox(seed, index, NOISE_TAG)
        self._edges = philox(seed, index, EDGE_TAG)

    def normals(self, n: int) -> np.ndarray:
        """Next ``n`` standard normals by inverse-CDF transform."""
        return ndtri(uniforms_from_raw(self._noise.random_raw(n), open_interval=True))

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms in ``[0, 1)`` for edge draws."""
        return uniforms_from_raw(self._edges.random_raw(n))
