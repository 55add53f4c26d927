"""Counter-based random streams (Philox4x32-10).

Every draw is a pure function of ``(master_seed, stream_index, counter)``.
The master seed is the 64-bit Philox key; the 128-bit Philox counter holds
the 64-bit draw counter in its low words and the 64-bit stream index in its
high words. The simulation engine uses one stream per trajectory and packs
``(step, lane)`` into the draw counter, so trajectories can be generated in
any grouping or order without changing a single bit of the output.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "philox4x32-10"

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_MASK64 = (1 << 64) - 1

# lanes reserved per step in the packed draw counter
LANE_BITS = 8

_TWO_M53 = 1.0 / 9007199254740992.0


def _split64(v):
    v = np.asarray(v, dtype=np.uint64)
    return v & _MASK32, v >> _SHIFT32


def philox4x32(counter, key):
    """Apply Philox4x32-10 to broadcastable counter words.

    Args:
        counter: sequence of four arrays (or ints) of 32-bit counter words.
        key: pair of 32-bit key words (ints).

    Returns:
        Tuple of four ``uint64`` arrays, each holding 32-bit output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in counter)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for rnd in range(10):
        if rnd:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ np.uint64(k0),
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ np.uint64(k1),
            p0 & _MASK32,
        )
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    # 27 + 26 bits -> double in [0, 1)
    a = (hi >> np.uint64(5)).astype(np.float64)
    b = (lo >> np.uint64(6)).astype(np.float64)
    return (a * 67108864.0 + b) * _TWO_M53


def block_uniforms(master_seed, counter, stream_index):
    """Two uniform doubles in [0, 1) per (counter, stream_index) pair.

    ``counter`` and ``stream_index`` broadcast against each other; the result
    has their broadcast shape plus a trailing axis of length 2.
    """
    k = int(master_seed) & _MASK64
    key = (k & 0xFFFFFFFF, k >> 32)
    c_lo, c_hi = _split64(counter)
    s_lo, s_hi = _split64(stream_index)
    w0, w1, w2, w3 = philox4x32((c_lo, c_hi, s_lo, s_hi), key)
    return np.stack([_to_unit(w0, w1), _to_unit(w2, w3)], axis=-1)


def step_counter(step, lane):
    """Pack a simulation step and a lane id into one 64-bit draw counter."""
    return (np.asarray(step, dtype=np.uint64) << np.uint64(LANE_BITS)) | np.uint64(lane)


def trajectory_uniforms(master_seed, step, lane, trajectories):
    """Uniform pairs for many trajectories at one ``(step, lane)``.

    ``step`` may be a scalar or an array aligned with ``trajectories``.
    Returns an ``(n, 2)`` array.
    """
    return block_uniforms(master_seed, step_counter(step, lane), trajectories)


class RandomStream:
    """Sequential view of one counter-based stream.

    Draws come in Philox blocks of two doubles; the counter advances by one
    block per pair, so ``uniforms(3)`` consumes two blocks and discards the
    spare value.
    """

    def __init__(self, master_seed, stream_index=0, counter=0):
        if not 0 <= int(master_seed) <= _MASK64:
            raise ValueError("master_seed must fit in 64 bits")
        if not 0 <= int(stream_index) <= _MASK64:
            raise ValueError("stream_index must fit in 64 bits")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        self.counter = int(counter)

    def uniforms(self, n):
        nblocks = (int(n) + 1) // 2
        ctr = np.arange(self.counter, self.counter + nblocks, dtype=np.uint64)
        self.counter += nblocks
        u = block_uniforms(self.master_seed, ctr, np.uint64(self.stream_index))
        return u.reshape(-1)[:n]

    def uniform(self):
        return float(self.uniforms(1)[0])

    def spawn(self, stream_index):
        """Fresh stream under the same master seed."""
        return RandomStream(self.master_seed, stream_index)

    def __repr__(self):
        return (f"RandomStream(master_seed={self.master_seed}, "
                f"stream_index={self.stream_index}, counter={self.counter})")
