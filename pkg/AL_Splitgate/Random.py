""" AL_Splitgate.Random

    A portable, seedable 64-bit generator so that splits, fold plans and null distributions
    reproduce bit-for-bit on any machine (and in any language that implements the same steps).

    Algorithm
        seeding: state = SplitMix64(seed); a zero state is replaced with the SplitMix64 gamma
        step:    Marsaglia xorshift64 with shifts (13, 7, 17)
                     x ^= x << 13; x ^= x >> 7; x ^= x << 17   (all modulo 2**64)
        below(n): ((next() >> 32) * n) >> 32, for 1 <= n <= 2**32
        shuffle:  Fisher-Yates from the last position down: j = below(i + 1), swap(i, j)

    Test vectors (xorshift64 from state 1): 0x40822041, 0x100041060C011441
    Test vector (SplitMix64 of 0): 0xE220A8397B1DCDAF
"""
## Builtin
import typing
## Third Party
import numpy as np

__all__ = ["XorShift64", "splitmix64", "derive_seed", "uniform_labels"]

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

T = typing.TypeVar("T")

def splitmix64(value: int)-> int:
    """ Returns the SplitMix64 output for the given state (the state is advanced by the gamma first) """
    z = (value + GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)

def derive_seed(seed: int, *tags: int)-> int:
    """ Derives an independent seed for a sub-unit of work (a repeat, an iteration, an image).

        derive_seed(seed, a, b) == derive_seed(derive_seed(seed, a), b)
    """
    state = seed & MASK64
    for tag in tags:
        state = splitmix64(state ^ splitmix64(tag & MASK64))
    return state

class XorShift64():
    """ xorshift64 generator with SplitMix64 seeding

    Generator state is local to the instance; nothing is shared between instances.
    """
    def __init__(self, seed: int):
        if seed < 0: raise ValueError(f"seed must be a non-negative integer: {seed}")
        self.seed = seed & MASK64
        self.state = splitmix64(self.seed) or GAMMA

    @classmethod
    def from_state(cls, state: int)-> "XorShift64":
        """ Builds a generator with a raw (non-zero) state, bypassing seeding """
        if not state & MASK64: raise ValueError("xorshift state must be non-zero")
        rng = cls.__new__(cls)
        rng.seed = None
        rng.state = state & MASK64
        return rng

    def next(self)-> int:
        x = self.state
        x ^= (x << 13) & MASK64
        x ^= x >> 7
        x ^= (x << 17) & MASK64
        self.state = x
        return x

    def below(self, n: int)-> int:
        """ Returns an integer in [0, n) """
        if not 1 <= n <= 1 << 32: raise ValueError(f"below() requires 1 <= n <= 2**32: {n}")
        return ((self.next() >> 32) * n) >> 32

    def shuffle(self, items: list[T])-> list[T]:
        """ Fisher-Yates shuffles items in place and returns it """
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

def uniform_labels(seeds: typing.Sequence[int], length: int, k: int)-> np.ndarray:
    """ Vectorized equivalent of [[XorShift64(seed).below(k) for _ in range(length)] for seed in seeds].

        Returns a (len(seeds), length) int64 array; row i is exactly the stream of XorShift64(seeds[i]).
    """
    if not 1 <= k <= 1 << 32: raise ValueError(f"k must be in [1, 2**32]: {k}")
    states = np.array([splitmix64(seed & MASK64) or GAMMA for seed in seeds], dtype = np.uint64)
    out = np.empty((len(states), length), dtype = np.int64)
    s13, s7, s17, s32 = np.uint64(13), np.uint64(7), np.uint64(17), np.uint64(32)
    nk = np.uint64(k)
    for column in range(length):
        states ^= states << s13
        states ^= states >> s7
        states ^= states << s17
        out[:, column] = (((states >> s32) * nk) >> s32).astype(np.int64)
    return out
