"""
Seeded random source shared by every sampler.

Wraps a numpy PCG64 generator. Samplers receive the source explicitly so a
run is reproducible from its seed alone; parallel trials use spawn() to get
independent, deterministic child streams.
"""

from typing import Optional, Tuple

import numpy as np


class RandomSource:
    """Deterministic stream of random variates"""

    def __init__(self, seed: Optional[int] = None, spawn_key: tuple = ()):
        """
        Initialize random source.

        Args:
            seed: Non-negative integer seed; fresh OS entropy when None
            spawn_key: Child-stream path below the seed
        """
        sequence = np.random.SeedSequence(seed, spawn_key=spawn_key)
        self.seed = sequence.entropy
        self.spawn_key = tuple(spawn_key)
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def spawn(self, index: int) -> "RandomSource":
        """Independent child stream, determined by (seed, index)"""
        return RandomSource(self.seed, self.spawn_key + (index,))

    def uniform(self) -> float:
        """Uniform float in [0, 1)"""
        return float(self._generator.random())

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def integer_below(self, n: int) -> int:
        """Uniform integer in [0, n), exact for arbitrarily large n"""
        if n <= 0:
            raise ValueError("n must be positive")
        if n < 2 ** 63:
            return int(self._generator.integers(n))
        bits = n.bit_length()
        while True:
            words = self._generator.integers(0, 2 ** 32, size=(bits + 31) // 32, dtype=np.uint64)
            value = 0
            for word in words:
                value = (value << 32) | int(word)
            value >>= 32 * len(words) - bits
            if value < n:
                return value

    def permutation(self, n: int) -> np.ndarray:
        """Uniform permutation of 0..n-1"""
        return self._generator.permutation(n)

    def subset(self, n: int, k: int) -> Tuple[int, ...]:
        """Uniform k-subset of 0..n-1, in increasing order"""
        if k == 0:
            return ()
        return tuple(sorted(int(i) for i in self._generator.choice(n, size=k, replace=False)))

    def standard_gamma(self, shape: float) -> float:
        """Gamma(shape, 1) variate"""
        return float(self._generator.standard_gamma(shape))
