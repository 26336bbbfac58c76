# coalition_utils/rng.py
"""SplitMix64 generator for reproducible dynamics runs.

Each draw adds 0x9E3779B97F4A7C15 to a 64-bit state and mixes it with two
xor-shift-multiply rounds (constants 0xBF58476D1CE4E5B9, 0x94D049BB133111EB,
shifts 30/27/31). ``randbelow`` rejects the top partial block so every index
is equally likely. The same seed gives the same stream in any language that
implements these few lines.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self._state = int(seed) & _MASK

    @property
    def state(self) -> int:
        return self._state

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        if n < 1:
            raise ValueError(f"randbelow needs a positive bound, got {n}")
        limit = (_MASK + 1) - ((_MASK + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))
