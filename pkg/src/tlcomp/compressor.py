"""Exact-length compressor, toy decompressors and the online decompressor."""

import math
from collections import Counter
from functools import lru_cache

from .analysis import compressor_bound_reports
from .bitcore import BitString, CapacityExceeded, Code, XorShift64, gamma_encode, mix_seed, pack_code, unpack_code
from .hashing import NotFound
from .invertible import Fingerprint, Inverter, fingerprint_bits_bound, fingerprint_F

INFINITE = math.inf

# the fingerprint runs at eps/4 so that its 3x error stays below eps
FP_EXTRA_EXP = 2


# -- toy decompressors -----------------------------------------------------

def hexbits(b):
    """'<length>:<hex>' rendering of a bitstring (hex zero-padded)."""
    b = BitString(b)
    if not b:
        return "0:"
    return "%d:%0*x" % (len(b), (len(b) + 3) // 4, b.to_int())


def parse_hexbits(s):
    n, _, h = s.partition(":")
    n = int(n)
    if n == 0:
        return BitString("")
    return BitString.from_int(int(h, 16), n)


def _prog_key(p):
    return (len(p), str(p))


class ToyDecompressor:
    """Finite table (program[, condition]) -> output.

    The unconditional view uses condition None.
    """

    def __init__(self, entries=None):
        self.entries = {}
        self._index = {}
        for key, out in (entries or {}).items():
            if isinstance(key, tuple):
                self.add(key[0], out, key[1])
            else:
                self.add(key, out)

    def add(self, program, output, cond=None):
        program = BitString(program)
        cond = None if cond is None else BitString(cond)
        self.entries[(program, cond)] = BitString(output)
        self._index.pop(cond, None)

    def __len__(self):
        return len(self.entries)

    def __call__(self, program, cond=None):
        return self.entries.get((BitString(program), None if cond is None else BitString(cond)))

    def _stream(self, cond):
        """(program, output) pairs for a condition, sorted by program length then lex."""
        if cond not in self._index:
            items = [(p, out) for (p, c), out in self.entries.items() if c == cond]
            items.sort(key=lambda t: _prog_key(t[0]))
            best = {}
            for p, out in items:
                best.setdefault(out, len(p))
            self._index[cond] = (items, best)
        return self._index[cond]

    def complexity(self, x, cond=None):
        cond = None if cond is None else BitString(cond)
        return self._stream(cond)[1].get(BitString(x), INFINITE)

    def conditions(self):
        return sorted({c for (_, c) in self.entries if c is not None}, key=_prog_key)

    def dumps(self):
        lines = []
        for (p, c), out in sorted(self.entries.items(), key=lambda t: (_prog_key(t[0][0]), str(t[0][1]))):
            mid = "" if c is None else " " + hexbits(c)
            lines.append("P %s%s -> %s" % (hexbits(p), mid, hexbits(out)))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        D = cls()
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            left, arrow, right = line.partition("->")
            parts = left.split()
            if not arrow or not parts or parts[0] != "P" or len(parts) not in (2, 3):
                raise ValueError("line %d: expected 'P <prog> [<cond>] -> <out>'" % ln)
            cond = parse_hexbits(parts[2]) if len(parts) == 3 else None
            D.add(parse_hexbits(parts[1]), parse_hexbits(right.strip()), cond)
        return D


def complexity_CD(D, x, cond=None):
    return D.complexity(x, cond)


def enumerate_suspects(D, k, n=None, cond=None):
    """Distinct outputs with C_D(x | cond) < k, ordered by their shortest program."""
    cond = None if cond is None else BitString(cond)
    items, _ = D._stream(cond)
    seen, out = set(), []
    for p, x in items:
        if len(p) >= k:
            break
        if x in seen or (n is not None and len(x) != n):
            continue
        seen.add(x)
        out.append(x)
    assert len(out) < (1 << k) if k > 0 else not out
    return out


def random_toy_decompressor(seed, n, programs=256, max_len=12, conditions=None, out_pool=None):
    """Random finite decompressor with n-bit outputs.

    Program lengths are drawn so that short programs are rare; outputs are
    drawn from out_pool when given (to force sharing) or uniformly.
    """
    rng = XorShift64(mix_seed("toyD", seed, n, programs, max_len))
    D = ToyDecompressor()
    conds = [None] if conditions is None else list(conditions)
    budget = min(programs, sum(1 << L for L in range(max_len + 1)) * len(conds))
    while len(D) < budget:
        # length L with probability ~ 2^L / 2^(max_len+1): a uniform program of length <= max_len
        L = min(max_len, (1 + rng.randrange((1 << (max_len + 1)) - 1)).bit_length() - 1)
        p = BitString.from_int(rng.getrandbits(L), L) if L else BitString("")
        c = conds[rng.randrange(len(conds))]
        if (p, c) in D.entries:
            continue
        if out_pool:
            x = out_pool[rng.randrange(len(out_pool))]
        else:
            x = BitString.from_int(rng.getrandbits(n), n)
        D.add(p, x, c)
    return D


# -- compressor ------------------------------------------------------------

@lru_cache(maxsize=None)
def choose_k(eps_exp, m, n):
    """Largest k whose packed code fits in m bits; None if none fits."""
    fe = eps_exp + FP_EXTRA_EXP
    head_e = len(gamma_encode(eps_exp))
    for k in range(m, -1, -1):
        need = head_e + len(gamma_encode(k + 1)) + fingerprint_bits_bound(n, k, fe) + 1
        if need <= m:
            return k
    return None


def overhead(eps_exp, m, n):
    """Measured overhead: decoding is guaranteed when C_D(x) <= m - overhead."""
    k = choose_k(eps_exp, m, n)
    return None if k is None else m - k + 1


# m - k <= OVERHEAD_C * log2(m) * log2(n / eps) on every swept (n, eps, m)
OVERHEAD_C = 3


def _gl(v):
    return 2 * int(math.log2(v)) + 1


def _cl(v):
    return math.ceil(math.log2(v)) if v > 1 else 0


def overhead_at_k(eps_exp, k, n):
    """Bits a k-fingerprint code spends beyond k, written out term by term."""
    fe = eps_exp + FP_EXTRA_EXP
    if k + 2 > n:
        D, body = 1, n
    elif k <= fe:
        D, body = 1 << fe, max(k + 2, fe)
    else:
        D, body = 3 * n << fe, k + 2
    s = max(1, _cl(D * (k + 1) * n) + fe)
    B = s + _cl(s) + 1
    # gamma(e) gamma(k+1) | gamma(n+1) body gamma(B) p residue | stop bit, +1 for Delta = m-k+1
    return _gl(eps_exp) + _gl(k + 1) + _gl(n + 1) + (body - k) + _gl(B) + 2 * B + 2


def overhead_closed_form(eps_exp, m, n):
    """Smallest Delta whose k = m - Delta + 1 fits; None if none does."""
    for d in range(1, m + 2):
        if overhead_at_k(eps_exp, m - d + 1, n) <= d:
            return d
    return None


def min_target(eps_exp, n, kappa):
    """Smallest m whose chosen k is at least kappa."""
    m = kappa
    while True:
        k = choose_k(eps_exp, m, n)
        if k is not None and k >= kappa:
            return m
        m += 1


@lru_cache(maxsize=None)
def check_bounds(n, eps_exp, m, k):
    """Every applicable lower bound holds for this configuration (asserted)."""
    reps = compressor_bound_reports(n, eps_exp, m, k, eps_exp + FP_EXTRA_EXP)
    bad = [r for r in reps if r.satisfied is False]
    assert not bad, "lower bound violated: %s" % bad
    return tuple(reps)


def compress(x, eps_exp, m, seed):
    """Exactly m bits: gamma(e) gamma(k+1) fingerprint 1 0*."""
    x = BitString(x)
    if eps_exp < 1:
        raise ValueError("eps exponent must be >= 1")
    k = choose_k(eps_exp, m, len(x))
    if k is None:
        raise CapacityExceeded("m=%d cannot hold any fingerprint of a %d-bit string" % (m, len(x)))
    check_bounds(len(x), eps_exp, m, k)
    fp = fingerprint_F(x, eps_exp + FP_EXTRA_EXP, k, seed)
    code = pack_code(eps_exp, k, fp.to_bits(), m)
    assert len(code.bits) == m
    return code


def parse_code(code):
    e, k, payload = unpack_code(code)
    return e, k, Fingerprint.from_bits(payload, k, e + FP_EXTRA_EXP)


class OnlineDecompressor:
    """D' for a toy decompressor: enumerate suspects, invert, commit once.

    Inverters are cached per (k, n, condition) so repeated decoding against
    the same suspect set is cheap.
    """

    def __init__(self, D):
        self.D = D
        self._inv = {}

    def inverter(self, k, n, fe, cond=None):
        key = (k, n, fe, cond)
        if key not in self._inv:
            S = [x.to_int() for x in enumerate_suspects(self.D, k, n, cond)]
            self._inv[key] = Inverter(n, k, fe, S)
        return self._inv[key]

    def __call__(self, code, cond=None):
        e, k, fp = parse_code(code)
        cond = None if cond is None else BitString(cond)
        v = self.inverter(k, fp.n, fp.e, cond)(fp)
        return BitString.from_int(v, fp.n)

    def stream(self, code, chunks, cond=None):
        """Feed the suspect enumeration in the given chunk sizes.

        Returns the committed answer after each chunk (None until committed);
        once committed the value must never change.
        """
        e, k, fp = parse_code(code)
        S = [x.to_int() for x in enumerate_suspects(self.D, k, fp.n, cond)]
        inv = Inverter(fp.n, k, fp.e)
        answers, committed, pos = [], None, 0
        for c in list(chunks) + [len(S)]:
            inv.extend(S[pos:pos + c])
            pos = min(len(S), pos + c)
            try:
                v = inv(fp)
            except NotFound:
                v = None
            if committed is not None:
                assert v == committed, "online decoder changed its committed answer"
            committed = v if v is not None else committed
            answers.append(committed)
            if pos >= len(S):
                break
        return answers


def decompress_online(D, code, cond=None):
    return OnlineDecompressor(D)(code, cond)


# -- majority transform ----------------------------------------------------

def majority_decompressor(Dprob, programs, R, cond=None):
    """Deterministic D_maj(p): the value seen for more than half of the R seeds.

    Dprob(p, r) returns a bitstring or None; programs without a strict
    majority value are left undefined.
    """
    out = ToyDecompressor()
    for p in programs:
        c = Counter(Dprob(p, r) for r in range(R))
        v, cnt = c.most_common(1)[0] if c else (None, 0)
        if v is not None and 2 * cnt > R:
            out.add(p, v, cond)
    return out


# -- code files ------------------------------------------------------------

def dump_code(code):
    bits = code.bits if isinstance(code, Code) else BitString(code)
    m = len(bits)
    pad = (-m) % 8
    v = (bits + "0" * pad).to_int() if m else 0
    return ("TLC1 %d\n" % m).encode() + v.to_bytes((m + pad) // 8, "big")


def load_code(data):
    head, _, body = data.partition(b"\n")
    parts = head.decode().split()
    if len(parts) != 2 or parts[0] != "TLC1":
        raise ValueError("not a TLC1 code file")
    m = int(parts[1])
    if len(body) != (m + 7) // 8:
        raise ValueError("body has %d bytes, expected %d" % (len(body), (m + 7) // 8))
    v = int.from_bytes(body, "big")
    bits = BitString.from_int(v, len(body) * 8)[:m] if body else BitString("")
    return bits
