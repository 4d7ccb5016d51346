"""SplitMix64 generator.

All randomness in the package comes from here so that fixtures are reproducible
from a seed alone, independent of numpy's bit generators. The stream is the
reference SplitMix64: ``state += 0x9E3779B97F4A7C15`` followed by the
``(z ^ z>>30) * 0xBF58476D1CE4E5B9; (z ^ z>>27) * 0x94D049BB133111EB; z ^ z>>31``
finalizer. Uniforms use the top 53 bits; normals use Box-Muller (both outputs
of a pair are consumed in order).
"""

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self, n: int | None = None):
        """Next raw 64-bit output, or an array of the next ``n`` outputs."""
        count = 1 if n is None else int(n)
        steps = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GAMMA)
            out = _mix(z)
        self.state = (self.state + count * GAMMA) & _MASK
        return int(out[0]) if n is None else out

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        """Uniform doubles in [low, high)."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        u = low + (high - low) * u
        return float(u[0]) if size is None else u.reshape(size)

    def normal(self, size=None, loc: float = 0.0, scale: float = 1.0):
        n = 1 if size is None else int(np.prod(size))
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        phi = 2.0 * np.pi * u[:, 1]
        z = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1).reshape(-1)[:n]
        z = loc + scale * z
        return float(z[0]) if size is None else z.reshape(size)

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)."""
        span = high - low
        if span <= 0:
            raise ValueError("empty integer range")
        return low + min(int(self.uniform() * span), span - 1)

    def spawn(self) -> "SplitMix64":
        """Independent child stream seeded from the next output."""
        return SplitMix64(self.next_u64())
