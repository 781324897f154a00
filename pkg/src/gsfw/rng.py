"""Deterministic random streams.

Every random draw in the package goes through :class:`Stream`, a thin layer
over the Philox4x64-10 counter-based generator.  The generator key is the
pair ``(seed, stream_id)`` and the counter starts at zero, so a stream is fully
determined by those two integers.

Conversions from raw 64-bit words are done here rather than delegated to
``numpy.random.Generator`` so that the mapping is fixed and documented:

* uniform:   ``u = ((w >> 11) + 0.5) * 2**-53``, strictly inside (0, 1);
* normal:    basic Box-Muller on consecutive uniform pairs ``(u1, u2)``,
  emitting ``r*cos(2*pi*u2)`` then ``r*sin(2*pi*u2)`` with
  ``r = sqrt(-2*log(u1))``;
* integers:  ``below(n)`` is the high word of ``w * n`` (multiply-shift).
"""
import numpy as np

GENERATOR_NAME = "philox4x64-10/box-muller"

# stream ids used by the experiment harness
MATRIX = 1
NOISE = 2
SIGNAL = 3
ORACLE = 4
INIT = 5

_MASK64 = (1 << 64) - 1


class Stream:
    """A keyed Philox stream with fixed conversions to floats and integers."""

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def __repr__(self):
        return f"Stream(seed={self.seed}, stream_id={self.stream_id})"

    def raw(self, size):
        return np.asarray(self._bitgen.random_raw(int(size)), dtype=np.uint64)

    def uniform(self, size):
        w = self.raw(size)
        return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    def normal(self, size, scale=1.0):
        size = int(size)
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log(u[:, 0]))
        theta = 2.0 * np.pi * u[:, 1]
        out = np.empty((pairs, 2))
        out[:, 0] = r * np.cos(theta)
        out[:, 1] = r * np.sin(theta)
        return scale * out.reshape(-1)[:size]

    def below(self, n):
        """Integer uniformly distributed on ``0..n-1``."""
        if n < 1:
            raise ValueError("n must be positive")
        w = int(self.raw(1)[0])
        return (w * int(n)) >> 64

    def choice(self, items):
        items = list(items)
        return items[self.below(len(items))]

    def signs(self, size):
        """Independent +1/-1 values with equal probability."""
        w = self.raw(size)
        return np.where((w >> np.uint64(63)) == 1, 1.0, -1.0)

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
