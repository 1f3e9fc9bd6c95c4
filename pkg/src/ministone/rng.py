"""Deterministic RNG stream with a single-integer state.

Matches run a lot of tiny draws (shuffles, uniform picks) and the whole
stream state must live inside a serializable GameState, so we use
splitmix64 instead of random.Random (whose state is a 625-word tuple).
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def mix(*parts) -> int:
    """Fold ints and strings into one well-mixed 64-bit seed."""
    import hashlib
    state = 0x5EED1E57
    for p in parts:
        if isinstance(p, str):
            p = int.from_bytes(hashlib.sha256(p.encode()).digest()[:8], "little")
        _, state = splitmix64((state ^ int(p)) & MASK64)
    return state


def splitmix64(state: int) -> tuple[int, int]:
    """Advance the stream once. Returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class Stream:
    """Stateful wrapper; `state` is the full serializable state."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, out = splitmix64(self.state)
        return out

    def randrange(self, n: int) -> int:
        # Rejection sampling to avoid modulo bias.
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        limit = (MASK64 + 1) - ((MASK64 + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def uniform(self) -> float:
        return self.next_u64() / float(1 << 64)

    def shuffle(self, xs: list) -> None:
        for i in range(len(xs) - 1, 0, -1):
            j = self.randrange(i + 1)
            xs[i], xs[j] = xs[j], xs[i]

    def choice(self, xs):
        return xs[self.randrange(len(xs))]
