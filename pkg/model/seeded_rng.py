"""Deterministic SplitMix64 random stream shared by every seeded component.

The generator is the classic SplitMix64: the state advances by the golden
gamma 0x9E3779B97F4A7C15 and each state is finalized by two xor-shift-multiply
rounds. Draws are produced in vectorized blocks, so a stream that hands out
``n`` values and then ``m`` values yields exactly the same numbers as one
draw of ``n + m``. No platform entropy is ever consulted.
"""

import hashlib

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_INV_2_53 = 1.0 / 9007199254740992.0


def derive_seed(root_seed: int, purpose: str) -> int:
    """Derive an independent 64-bit seed for one purpose from the root seed."""
    digest = hashlib.sha256(f"{root_seed & _MASK64}:{purpose}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class SplitMix64:
    """Counter-based SplitMix64 stream."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self.position = 0

    def next_uint64(self, n: int) -> np.ndarray:
        """Return the next ``n`` raw 64-bit outputs."""
        if n < 0:
            raise ValueError(f"cannot draw a negative count: {n}")
        counters = np.arange(self.position + 1, self.position + n + 1, dtype=np.uint64)
        self.position += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + counters * _GAMMA
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
            z = z ^ (z >> np.uint64(31))
        return z

    def random(self, n: int) -> np.ndarray:
        """Uniform float64 draws in [0, 1) from the top 53 bits."""
        return (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform(self, low: float, high: float, shape) -> np.ndarray:
        """Uniform draws in ``[low, high)`` with the given shape."""
        size = int(np.prod(shape)) if shape != () else 1
        values = low + (high - low) * self.random(size)
        return values.reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``.

        Walks ``i`` from ``n - 1`` down to 1 and swaps with
        ``j = floor(u_i * (i + 1))``, consuming ``n - 1`` draws.
        """
        order = np.arange(n, dtype=np.int64)
        if n < 2:
            return order
        draws = self.random(n - 1)
        for step, i in enumerate(range(n - 1, 0, -1)):
            j = int(draws[step] * (i + 1))
            order[i], order[j] = order[j], order[i]
        return order

    def spawn(self, purpose: str) -> "SplitMix64":
        """Independent child stream keyed by purpose."""
        return SplitMix64(derive_seed(self.seed, purpose))
