"""Counter-based random streams.

Every random number used by a simulation is a pure function of
``(master_seed, run_index, stage, draw)``.  The mapping is the Philox4x32-10
block cipher (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3"),
evaluated with numpy over whole batches of runs at once.  Because nothing is
carried between runs, an ensemble comes out bit-identical no matter how the
runs are chunked or scheduled.

Key layout: ``key = (seed & 0xffffffff, seed >> 32)``.
Counter layout: ``(run & 0xffffffff, run >> 32, stage, block)``.
"""

from __future__ import annotations

import enum

import numpy as np

__all__ = ["Stage", "RngStream", "derive_rng_stream", "philox4x32"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


class Stage(enum.IntEnum):
    """Pipeline stage a stream feeds; each stage gets its own counter space."""

    SETTINGS = 0
    LAMBDA = 1
    MICROSTATES = 2
    RESPOND_A = 3
    RESPOND_B = 4


def philox4x32(counter, key, rounds=10):
    """Vectorized Philox4x32 with ``rounds`` rounds.

    ``counter`` is a sequence of four uint32 arrays (broadcastable to each
    other), ``key`` a pair of uint32 arrays/scalars.  Returns four uint32
    arrays.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    k0 = np.asarray(key[0], dtype=np.uint64) & _MASK32
    k1 = np.asarray(key[1], dtype=np.uint64) & _MASK32
    for r in range(rounds):
        if r:
            k0 = (k0 + np.uint64(_W0)) & _MASK32
            k1 = (k1 + np.uint64(_W1)) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ k1,
            p0 & _MASK32,
        )
    return tuple(c.astype(np.uint32) for c in (c0, c1, c2, c3))


class RngStream:
    """A batch of independent per-run streams for one pipeline stage.

    Row ``i`` of every array this object returns depends only on
    ``(master_seed, run_indices[i], stage)`` and on how many values were
    drawn from this stream before, never on the other rows.
    """

    def __init__(self, master_seed, run_indices, stage):
        seed = int(master_seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {seed}")
        runs = np.atleast_1d(np.asarray(run_indices, dtype=np.uint64))
        if runs.ndim != 1:
            raise ValueError("run_indices must be one-dimensional")
        self.master_seed = seed
        self.run_indices = runs
        self.stage = Stage(stage)
        self._key = (np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32))
        self._lo = runs & _MASK32
        self._hi = runs >> _SHIFT32
        self._block = 0

    def __len__(self):
        return len(self.run_indices)

    def _blocks(self, count):
        """Next ``count`` Philox blocks, shape (4, n_runs, count)."""
        blocks = np.arange(self._block, self._block + count, dtype=np.uint64)
        self._block += count
        words = philox4x32(
            (
                self._lo[:, None],
                self._hi[:, None],
                np.uint64(int(self.stage)),
                blocks[None, :],
            ),
            self._key,
        )
        return np.stack(words)

    def uint64(self, k=None):
        """Raw 64-bit outputs; shape (n,) or (n, k)."""
        m = 1 if k is None else k
        w = self._blocks((m + 1) // 2).astype(np.uint64)
        first = (w[0] << _SHIFT32) | w[1]
        second = (w[2] << _SHIFT32) | w[3]
        out = np.empty((len(self), 2 * w.shape[2]), dtype=np.uint64)
        out[:, 0::2] = first
        out[:, 1::2] = second
        out = out[:, :m]
        return out[:, 0] if k is None else out

    def uniform(self, k=None):
        """Doubles in [0, 1) with 53 random bits; shape (n,) or (n, k)."""
        bits = self.uint64(k)
        return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def next_uint64(self):
        """Next 64-bit word of a single-run stream (one Philox block per call)."""
        if len(self) != 1:
            raise ValueError("next_uint64 is only defined for single-run streams")
        return int(self.uint64()[0])

    def __repr__(self):
        return (
            f"RngStream(seed={self.master_seed}, runs={len(self)}, "
            f"stage={self.stage.name}, block={self._block})"
        )


def derive_rng_stream(master_seed, run_index, stage):
    """The stream for one run and one stage."""
    if run_index < 0:
        raise ValueError("run_index must be nonnegative")
    return RngStream(master_seed, [run_index], stage)
