"""Bit-level primitives: bitstrings, gamma headers, exact-length codes,
GF(2) and GF(2^w) arithmetic, and a seeded xorshift generator."""

from dataclasses import dataclass


class CapacityExceeded(ValueError):
    """Header plus payload does not fit in the requested code length."""


class BitString(str):
    """Immutable string over {'0','1'}.

    Built on str so equality, hashing and slicing behave bitwise.
    Integers are read most-significant-bit first.
    """

    def __new__(cls, bits=""):
        if isinstance(bits, BitString):
            return bits
        if isinstance(bits, (list, tuple)):
            bits = "".join("1" if b else "0" for b in bits)
        s = str.__new__(cls, bits)
        if s.strip("01"):
            raise ValueError("bitstring may only contain 0 and 1: %r" % bits)
        return s

    @classmethod
    def from_int(cls, v, length):
        if v < 0 or (length < v.bit_length()):
            raise ValueError("%d does not fit in %d bits" % (v, length))
        if length == 0:
            return cls("")
        return str.__new__(cls, format(v, "0%db" % length))

    def to_int(self):
        return int(self, 2) if self else 0

    # pieces of valid bitstrings are valid, so skip the check
    def __add__(self, other):
        return str.__new__(BitString, str.__add__(self, BitString(other)))

    def __getitem__(self, key):
        return str.__new__(BitString, str.__getitem__(self, key))

    def __repr__(self):
        return "BitString('%s')" % str(self)


def bits(s):
    return BitString(s)


def random_bits(rng, n):
    """n uniformly random bits from a generator with getrandbits."""
    if n == 0:
        return BitString("")
    return BitString.from_int(rng.getrandbits(n), n)


# -- Elias gamma -----------------------------------------------------------

def gamma_encode(v):
    if v < 1:
        raise ValueError("gamma code needs v >= 1, got %r" % v)
    b = format(v, "b")
    return BitString("0" * (len(b) - 1) + b)


def gamma_decode(s):
    """Return (v, rest) for a gamma code at the front of s."""
    s = str(s)
    z = 0
    while z < len(s) and s[z] == "0":
        z += 1
    if z >= len(s) or len(s) < 2 * z + 1:
        raise ValueError("truncated gamma code")
    v = int(s[z:2 * z + 1], 2)
    return v, BitString(s[2 * z + 1:])


# -- exact-length codes ----------------------------------------------------

@dataclass(frozen=True)
class Code:
    bits: BitString
    e: int
    k: int
    payload: BitString

    @property
    def m(self):
        return len(self.bits)


def header_len(e, k):
    return len(gamma_encode(e)) + len(gamma_encode(k))


def pack_code(e, k, payload, m):
    """gamma(e) ++ gamma(k) ++ payload ++ '1' ++ '0'*j, exactly m bits.

    k is stored as gamma(k + 1) so that k = 0 is representable.
    """
    payload = BitString(payload)
    head = gamma_encode(e) + gamma_encode(k + 1)
    used = len(head) + len(payload) + 1
    if used > m:
        raise CapacityExceeded("need %d bits, have %d" % (used, m))
    out = head + payload + "1" + "0" * (m - used)
    return Code(out, e, k, payload)


def unpack_code(code):
    s = str(code.bits if isinstance(code, Code) else code)
    t = s.rstrip("0")
    if not t:
        raise ValueError("code has no end marker")
    t = t[:-1]
    e, rest = gamma_decode(t)
    k1, payload = gamma_decode(rest)
    return e, k1 - 1, BitString(payload)


# -- GF(2) -----------------------------------------------------------------

def gf2_matvec(rows, x):
    x = BitString(x)
    xv = x.to_int()
    out = []
    for r in rows:
        r = BitString(r)
        if len(r) != len(x):
            raise ValueError("row length %d != vector length %d" % (len(r), len(x)))
        out.append(bin(r.to_int() & xv).count("1") & 1)
    return BitString(out)


def identity_rows(n):
    return [BitString("0" * i + "1" + "0" * (n - i - 1)) for i in range(n)]


# -- GF(2^w) ---------------------------------------------------------------

MODULI = {4: 0b10011, 8: 0b100011011}


def _modulus(w):
    if w in MODULI:
        return MODULI[w]
    raise ValueError("no fixed modulus for w=%d (supported: %s)" % (w, sorted(MODULI)))


def gf_mul(a, b, w):
    mod = _modulus(w)
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> w:
            a ^= mod
    return r


def gf_add(a, b, w=None):
    return a ^ b


def gf_pow(a, e, w):
    r = 1
    while e:
        if e & 1:
            r = gf_mul(r, a, w)
        a = gf_mul(a, a, w)
        e >>= 1
    return r


def gf_inv(a, w):
    if a == 0:
        raise ZeroDivisionError("0 has no inverse")
    # a^(2^w - 2) by Fermat
    return gf_pow(a, (1 << w) - 2, w)


@dataclass(frozen=True)
class FieldElement:
    w: int
    value: int

    def __post_init__(self):
        _modulus(self.w)
        if not 0 <= self.value < (1 << self.w):
            raise ValueError("value out of range")

    def __add__(self, other):
        return FieldElement(self.w, self.value ^ other.value)

    __sub__ = __add__

    def __mul__(self, other):
        return FieldElement(self.w, gf_mul(self.value, other.value, self.w))

    def inverse(self):
        return FieldElement(self.w, gf_inv(self.value, self.w))

    def to_bits(self):
        return BitString.from_int(self.value, self.w)


def line_point_instance(w, seed):
    """Random line y = a*x + b and a point (u, v) on it.

    Returns ((a, b), (u, v)) as FieldElements.
    """
    if w < 2:
        raise ValueError("w must be >= 2")
    rng = XorShift64(seed)
    a, b, u = (FieldElement(w, rng.getrandbits(w)) for _ in range(3))
    v = a * u + b
    return (a, b), (u, v)


# -- seeded generator ------------------------------------------------------

MASK64 = (1 << 64) - 1


def _splitmix64(z):
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64:
    """xorshift64* generator.

    State update:  s ^= s >> 12;  s ^= s << 25;  s ^= s >> 27  (mod 2^64)
    Output:        s * 0x2545F4914F6CDD1D  (mod 2^64)
    The seed is scrambled once through splitmix64 so that small seeds
    (0, 1, 2, ...) give unrelated streams; a zero state is replaced by 1.
    """

    def __init__(self, seed=0):
        if isinstance(seed, Seed):
            seed = seed.value
        if isinstance(seed, (tuple, list)):
            seed = mix_seed(*seed)
        s = _splitmix64(int(seed) & MASK64)
        self.state = s or 1

    def next64(self):
        s = self.state
        s ^= s >> 12
        s ^= (s << 25) & MASK64
        s ^= s >> 27
        self.state = s
        return (s * 0x2545F4914F6CDD1D) & MASK64

    def getrandbits(self, k):
        if k <= 0:
            return 0
        r = 0
        got = 0
        while got < k:
            r = (r << 64) | self.next64()
            got += 64
        return r >> (got - k)

    def randrange(self, n):
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("empty range")
        k = max(1, (n - 1).bit_length())
        while True:
            r = self.getrandbits(k)
            if r < n:
                return r

    def random(self):
        return self.getrandbits(53) / float(1 << 53)

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def shuffle(self, seq):
        for i in range(len(seq) - 1, 0, -1):
            j = self.randrange(i + 1)
            seq[i], seq[j] = seq[j], seq[i]


def mix_seed(*parts):
    """Fold integers / strings into one 64-bit seed, deterministically."""
    h = 0x243F6A8885A308D3
    for p in parts:
        if isinstance(p, str):
            p = int.from_bytes(p.encode(), "big") ^ (len(p) << 1) ^ 0x5BD1E995
        elif isinstance(p, (tuple, list)):
            p = mix_seed(*p)
        h = _splitmix64((h ^ (int(p) & MASK64)) + ((int(p) >> 64) & MASK64))
    return h


@dataclass(frozen=True)
class Seed:
    value: int
    bit_budget: int = 64

    def __post_init__(self):
        if self.value < 0 or self.value >= (1 << self.bit_budget):
            raise ValueError("seed value does not fit its bit budget")

    def rng(self):
        return XorShift64(self.value)
