"""Deterministic PRNG used for dataset splits and task streams.

splitmix64, chosen because it is trivial to reimplement bit-for-bit in
any language, which keeps generated datasets reproducible across ports.
"""

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        assert n > 0
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def split(self, stream_id: int) -> "SplitMix64":
        """Independent child stream, stable under stream_id."""
        child = SplitMix64(self.state ^ ((stream_id * 0xD6E8FEB86659FD93) & MASK))
        child.next_u64()
        return child

    def shuffle(self, xs: list) -> None:
        for i in range(len(xs) - 1, 0, -1):
            j = self.below(i + 1)
            xs[i], xs[j] = xs[j], xs[i]
