"""Subset-parity fingerprints and prime-modulus hashing."""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bitcore import BitString, Seed, XorShift64


class NotFound(LookupError):
    """No element of the suspect list matches the fingerprint."""


# -- subset parity ---------------------------------------------------------

def expand_seed(seed, nbits):
    """Seed -> nbits of shared randomness.

    A Seed whose bit_budget equals nbits is used verbatim (so the whole seed
    space can be enumerated); anything else is stretched with XorShift64.
    """
    if isinstance(seed, Seed) and seed.bit_budget == nbits:
        return BitString.from_int(seed.value, nbits)
    return BitString.from_int(XorShift64(seed).getrandbits(nbits), nbits) if nbits else BitString("")


def subset_parity(x, seed, m):
    """Bit i is the parity of x restricted to the i-th seed segment."""
    if m < 0:
        raise ValueError("m must be >= 0")
    x = BitString(x)
    n = len(x)
    rho = expand_seed(seed, m * n)
    xv = x.to_int()
    out = []
    for i in range(m):
        seg = int(rho[i * n:(i + 1) * n], 2) if n else 0
        out.append(bin(seg & xv).count("1") & 1)
    return BitString(out)


def first_match(S, fp, fn):
    """First element z of S with fn(z) == fp, else NotFound."""
    for z in S:
        if fn(z) == fp:
            return z
    raise NotFound("no suspect has this fingerprint")


# -- primes ----------------------------------------------------------------

MR_WITNESSES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)
SIEVE_MAX_S = 20


def is_prime(n):
    """Deterministic Miller-Rabin, exact for n < 2^64."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in MR_WITNESSES:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def sieve_primes(limit):
    """All primes < limit as an int64 array."""
    if limit < 3:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit, dtype=bool)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, int(limit ** 0.5) + 1, 2):
        if flags[p]:
            flags[p * p::2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


def clog2(v):
    """Ceiling of log2 for v > 0 (exact for integers and Fractions)."""
    if v <= 1:
        return 0
    if isinstance(v, int):
        return (v - 1).bit_length()
    c = math.ceil(math.log2(v))
    while 2 ** (c - 1) >= v:
        c -= 1
    while 2 ** c < v:
        c += 1
    return c


def pool_size_param(eps_exp, K, n):
    """s = ceil(log2(K * n / eps)) with eps = 2^-eps_exp."""
    return max(1, clog2(K * max(n, 1) << eps_exp))


def prime_bits(s):
    return s + clog2(s) + 1


@dataclass(frozen=True)
class PrimePool:
    s: int
    bits: int
    size: int
    primes: object = None   # array when sieved, None when sampled

    def sample(self, rng):
        if self.primes is not None:
            return int(self.primes[rng.randrange(self.size)])
        top = 1 << self.bits
        while True:
            c = rng.randrange(top)
            if is_prime(c):
                return c


def prime_count_lower(x):
    # pi(x) >= x / ln x for x >= 17
    return int(x / math.log(x))


@lru_cache(maxsize=None)
def prime_pool(s):
    """All primes of bit size <= s + ceil(log s) + 1."""
    if s < 1:
        raise ValueError("s must be >= 1")
    b = prime_bits(s)
    if s <= SIEVE_MAX_S:
        ps = sieve_primes(1 << b)
        pool = PrimePool(s, b, len(ps), ps)
    else:
        pool = PrimePool(s, b, prime_count_lower(1 << b), None)
    assert pool.size >= (1 << s), "prime pool too small for s=%d" % s
    return pool


def sample_prime(eps_exp, K, n, seed):
    if K < 1 or n < 1:
        raise ValueError("K and n must be >= 1")
    pool = prime_pool(pool_size_param(eps_exp, K, n))
    rng = seed if hasattr(seed, "randrange") else XorShift64(seed)
    return pool.sample(rng)


@dataclass(frozen=True)
class PrimeHash:
    p: int
    residue: int

    def __post_init__(self):
        if not 0 <= self.residue < self.p:
            raise ValueError("residue out of range")

    def bit_length(self):
        return self.p.bit_length() + max(1, self.residue.bit_length())


def prime_hash(x, eps_exp, K, seed):
    """(p, int(x) mod p) for a random prime p from the pool for (eps, K, |x|)."""
    x = BitString(x)
    p = sample_prime(eps_exp, K, max(len(x), 1), seed)
    return PrimeHash(p, x.to_int() % p)


def tag_length_bound(eps_exp, K, n):
    return 2 * prime_bits(pool_size_param(eps_exp, K, n))


def _as_int(z):
    return z if isinstance(z, (int, np.integer)) else BitString(z).to_int()


def prime_hash_invert(S, h):
    """First element of S congruent to the residue modulo p."""
    for z in S:
        if _as_int(z) % h.p == h.residue:
            return z
    raise NotFound("no suspect matches residue %d mod %d" % (h.residue, h.p))
