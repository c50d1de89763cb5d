"""Online invertible fingerprints built from conductors and condensers.

Suspect lists are handled as integer arrays (bitstrings read MSB-first).
"First appearances" always means stream arrival order.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bitcore import BitString, XorShift64, gamma_decode, gamma_encode, mix_seed
from .condensers import TOL, CondenserTable, random_condenser
from .hashing import NotFound, PrimeHash, clog2, pool_size_param, prime_bits, prime_hash_invert, sample_prime

TABLE_SEED = 20240601       # fixed seed of the shared conductor tables


# running record of every pruning call: (depth, depth bound, length, length bound)
PRUNE_LOG = {"calls": 0, "max_depth_ratio": 0.0, "max_len_ratio": 0.0, "violations": 0}


def _log_prune(depth, depth_bound, length, length_bound):
    PRUNE_LOG["calls"] += 1
    PRUNE_LOG["max_depth_ratio"] = max(PRUNE_LOG["max_depth_ratio"], depth / depth_bound)
    PRUNE_LOG["max_len_ratio"] = max(PRUNE_LOG["max_len_ratio"], length / length_bound)
    if depth > depth_bound + TOL or length > length_bound + TOL:
        PRUNE_LOG["violations"] += 1
        raise AssertionError("pruning bound violated: depth %d/%g, length %d/%g"
                             % (depth, depth_bound, length, length_bound))


def as_ints(S):
    if isinstance(S, np.ndarray):
        return S.astype(np.int64, copy=False)
    S = list(S)
    if all(isinstance(z, (int, np.integer)) for z in S):
        return np.array(S, dtype=np.int64)
    out = []
    for z in S:
        out.append(int(z) if isinstance(z, (int, np.integer)) else BitString(z).to_int())
    return np.array(out, dtype=np.int64)


def _like(S, vals, n):
    """Return vals in the element type used by S (ints or bitstrings)."""
    if len(S) and not isinstance(S[0], (int, np.integer)):
        return [BitString.from_int(int(v), n) for v in vals]
    return [int(v) for v in vals]


def _dedupe(xs):
    _, first = np.unique(xs, return_index=True)
    if len(first) == len(xs):
        return xs
    return xs[np.sort(first)]


# -- one level: G and R ----------------------------------------------------

@dataclass
class Level:
    elems: np.ndarray        # stream positions (into the top-level list) at this level
    sel_y: np.ndarray        # selected (y, position) pairs sorted by y then position
    sel_pos: np.ndarray
    miss: np.ndarray         # Pr_d[x not in G(S, f(x, d))] per element
    rejected: np.ndarray     # positions whose miss probability exceeds 2 eps

    def select(self, y):
        lo = np.searchsorted(self.sel_y, y, side="left")
        hi = np.searchsorted(self.sel_y, y, side="right")
        return self.sel_pos[lo:hi]


def _level(f, values, positions, cap, eps):
    """G/R for one list: cap = a * D first appearances per output symbol."""
    N = len(values)
    if N == 0:
        e = np.zeros(0, dtype=np.int64)
        return Level(positions, e, e, np.zeros(0), e)
    rows = f.rows(values)                                   # N x D
    keys = (np.arange(N, dtype=np.int64)[:, None] * f.Y + rows).reshape(-1)
    uniq, inv = np.unique(keys, return_inverse=True)        # sorted by element, then y
    ui, uy = uniq // f.Y, uniq % f.Y
    order = np.lexsort((ui, uy))                            # by y, then stream order
    sy = uy[order]
    idx = np.arange(len(sy))
    starts = np.r_[0, np.flatnonzero(sy[1:] != sy[:-1]) + 1]
    grp = np.repeat(starts, np.diff(np.r_[starts, len(sy)]))
    rank = np.empty(len(sy), dtype=np.int64)
    rank[order] = idx - grp
    kept = rank < cap
    miss = (~kept[inv.reshape(-1)]).reshape(N, f.D).mean(axis=1)
    sel = order[kept[order]]
    rejected = positions[miss > 2 * eps + TOL]
    return Level(positions, uy[sel], positions[ui[sel]], miss, rejected)


def list_invert_G(f, S, y, a=1):
    """First a*D elements of S (stream order) that map to y under some seed."""
    xs = as_ints(S)
    lv = _level(f, xs, np.arange(len(xs)), a * f.D, 0.0)
    return [S[int(i)] for i in lv.select(y)]


def miss_probabilities(f, S, a=1):
    xs = as_ints(S)
    return _level(f, xs, np.arange(len(xs)), a * f.D, 0.0).miss


def rejects_R(f, S, a, eps):
    """Elements x with Pr_d[x not in G(S, f(x, d))] > 2 eps, in stream order."""
    xs = as_ints(S)
    lv = _level(f, xs, np.arange(len(xs)), a * f.D, eps)
    return [S[int(i)] for i in lv.rejected]


class ListInverse:
    """Recursive pruning G'(S, y) = G(S, y) ++ G'(R(S), y) for a fixed list S.

    Built once per (table, S); queries for any y are then cheap.  M is the
    capacity the conductor was certified for (defaults to |S|).
    """

    def __init__(self, f, S, eps, M=None, a=1, check_halving=True):
        self.f, self.eps, self.a = f, eps, a
        self.values = _dedupe(as_ints(S))
        N = len(self.values)
        self.M = max(1, M if M is not None else N)
        if N > self.M:
            raise ValueError("suspect list of size %d exceeds capacity %d" % (N, self.M))
        self.levels = []
        cur = np.arange(N)
        while len(cur):
            lv = _level(f, self.values[cur], cur, a * f.D, eps)
            if check_halving:
                assert 2 * len(lv.rejected) <= len(cur), \
                    "|R(S)| = %d > |S|/2 = %d/2: table is not a certified condenser here" % (len(lv.rejected), len(cur))
            self.levels.append(lv)
            if len(lv.rejected) == len(cur):
                break
            cur = lv.rejected
        self.depth = len(self.levels)
        self.depth_bound = math.log2(2 * self.M)
        self.length_bound = a * f.D * self.depth_bound

    def rejected(self, level=0):
        return self.levels[level].rejected if level < self.depth else np.zeros(0, dtype=np.int64)

    def positions(self, y, order="levels"):
        parts = [lv.select(y) for lv in self.levels]
        out = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        _log_prune(self.depth, self.depth_bound, len(out), self.length_bound)
        if order == "stream":
            out = np.sort(out)
        return out

    def candidates(self, y, order="levels"):
        return self.values[self.positions(y, order)]


def prune_Gprime(f, S, y, eps, M=None, order="levels"):
    """Candidate list for symbol y; depth and length bounds asserted."""
    inv = ListInverse(f, S, eps, M)
    return _like(S, inv.candidates(y, order), f.n)


def pruning_large(f, S, y, a, b, eps, M):
    """Partition into b round-robin parts of size <= M, select and reject per part.

    Returns (selected, rejected) as position lists into S, both in stream order.
    """
    xs = as_ints(S)
    if len(xs) > b * M:
        raise ValueError("list longer than b*M")
    cap = a * f.D
    rounds = 0
    cur = np.arange(len(xs))
    selected = []
    while True:
        rounds += 1
        rec = []
        for i in range(min(b, len(cur))):      # parts beyond |cur| are empty
            part = cur[i::b]
            assert len(part) <= M
            lv = _level(f, xs[part], part, cap, eps)
            selected.append(lv.select(y))
            rec.append(lv.rejected)
        rec = np.sort(np.concatenate(rec)) if rec else np.zeros(0, dtype=np.int64)
        if len(rec) <= M / 2 or len(rec) == len(cur):
            break
        cur = rec
    sel = np.sort(np.concatenate(selected)) if selected else np.zeros(0, dtype=np.int64)
    bound_rounds = math.log2(2 * b)
    assert rounds <= bound_rounds + TOL, "pruning_large used %d rounds > log(2b)" % rounds
    assert len(sel) <= a * b * f.D * bound_rounds + TOL
    assert len(rec) <= M / 2 + TOL, "rejected %d > M/2" % len(rec)
    _log_prune(rounds, bound_rounds, len(sel), a * b * f.D * bound_rounds)
    return sel, rec, rounds


# -- conductor route -------------------------------------------------------

def conductor_shape(n, k, e):
    """(kind, D, Y) of the shared (2^k, 2^-e)-conductor on n-bit inputs."""
    K = 1 << k
    Y = 4 * K
    if k + 2 > n:
        return "identity", 1, 1 << n
    if k <= e:
        D = 1 << e
        return "uniform", D, max(Y, D)
    return "random", 3 * n << e, Y


def conductor_for(n, k, e):
    if k + 2 > n:
        # every such k shares the identity table
        return _conductor(n, max(n - 1, 0), 1)
    return _conductor(n, k, e)


@lru_cache(maxsize=None)
def _conductor(n, k, e):
    f = random_condenser(n, 1 << k, 2.0 ** -e, seed=TABLE_SEED)
    assert (f.kind, f.D, f.Y) == conductor_shape(n, k, e), (f, conductor_shape(n, k, e))
    return f


def tag_capacity(D, k):
    """List size the prime tag must separate: D * log2(2 * 2^k)."""
    return D * (k + 1)


def _width(Y):
    return max(1, (Y - 1).bit_length())


@lru_cache(maxsize=None)
def fingerprint_bits_bound(n, k, e):
    """Worst-case serialised fingerprint length for (n, k, eps=2^-e)."""
    _, D, Y = conductor_shape(n, k, e)
    B = prime_bits(pool_size_param(e, tag_capacity(D, k), n))
    return len(gamma_encode(n + 1)) + _width(Y) + len(gamma_encode(B)) + 2 * B


@dataclass(frozen=True)
class Fingerprint:
    n: int
    k: int
    e: int                # conductor error 2^-e; the pair is (2^k, 3 * 2^-e)-invertible
    body: int
    tag: PrimeHash
    layout: dict = field(default_factory=dict, compare=False, hash=False)

    def to_bits(self):
        _, D, Y = conductor_shape(self.n, self.k, self.e)
        plen = self.tag.p.bit_length()
        return (gamma_encode(self.n + 1) + BitString.from_int(self.body, _width(Y))
                + gamma_encode(plen) + BitString.from_int(self.tag.p, plen)
                + BitString.from_int(self.tag.residue, plen))

    @classmethod
    def from_bits(cls, bits, k, e):
        n1, rest = gamma_decode(bits)
        n = n1 - 1
        _, D, Y = conductor_shape(n, k, e)
        w = _width(Y)
        body = BitString(rest[:w]).to_int()
        plen, rest = gamma_decode(rest[w:])
        p = BitString(rest[:plen]).to_int()
        r = BitString(rest[plen:2 * plen]).to_int()
        if len(rest) != 2 * plen:
            raise ValueError("trailing bits after fingerprint")
        return cls(n, k, e, body, PrimeHash(p, r))

    def __len__(self):
        return len(self.to_bits())


def fingerprint_F(x, eps_exp, k, seed):
    """(conductor output, prime tag) for x; (2^k, 3 eps)-invertible."""
    x = BitString(x)
    n = len(x)
    f = conductor_for(n, k, eps_exp)
    rng = XorShift64(mix_seed("fingerprint", seed))
    d = rng.randrange(f.D)
    xv = x.to_int()
    body = int(f.row(xv)[d])
    s = tag_capacity(f.D, k)
    p = sample_prime(eps_exp, s, max(n, 1), rng)
    fp = Fingerprint(n, k, eps_exp, body, PrimeHash(p, xv % p),
                     {"kind": f.kind, "D": f.D, "Y": f.Y, "tag_capacity": s,
                      "prime_bits_max": prime_bits(pool_size_param(eps_exp, s, max(n, 1)))})
    assert len(fp.to_bits()) <= fingerprint_bits_bound(n, k, eps_exp)
    return fp


class Inverter:
    """Monotone inverse g_S for conductor fingerprints of one (n, k, e).

    Caches the pruning structure for the current suspect list, so many
    fingerprints can be inverted against the same S cheaply.
    """

    def __init__(self, n, k, e, S=()):
        self.n, self.k, self.e = n, k, e
        self.f = conductor_for(n, k, e)
        self.S = as_ints(S)
        self._inv = None

    def extend(self, more):
        more = as_ints(more)
        if len(more):
            self.S = np.concatenate([self.S, more])
            self._inv = None

    @property
    def inverse(self):
        if self._inv is None:
            self._inv = ListInverse(self.f, self.S, 2.0 ** -self.e, M=max(1 << self.k, 1))
        return self._inv

    def __call__(self, fp):
        if (fp.n, fp.k, fp.e) != (self.n, self.k, self.e):
            raise ValueError("fingerprint parameters do not match this inverter")
        inv = self.inverse
        cands = inv.candidates(fp.body, order="stream")
        if len(cands) == 0:
            raise NotFound("empty candidate list")
        hit = np.flatnonzero(cands % fp.tag.p == fp.tag.residue)
        if len(hit) == 0:
            raise NotFound("no candidate matches the prime tag")
        return int(cands[hit[0]])


def invert_full(S, fp):
    """Prune S with the conductor body, then pick by the prime tag.

    Only suspects of the fingerprint's length n take part.
    """
    same = [z for z in S if isinstance(z, (int, np.integer)) or len(z) == fp.n]
    v = Inverter(fp.n, fp.k, fp.e, same)(fp)
    return BitString.from_int(v, fp.n)


# -- condenser recursion route ---------------------------------------------

def recursion_b(n, e):
    """b with 2^b >= D * log2(4K) for all K <= 2^n, D = ceil(3n/eps)."""
    D = 3 * n << e
    return clog2(D) + clog2(n + 2)


def next_k(k, b):
    """Capacity handed to the next level: 2 * ceil(k/3) + b."""
    return 2 * -(-k // 3) + b


def recursion_plan(n, k, e, threshold=100):
    """List of k values visited by the recursion, ending at the base case."""
    b = recursion_b(n, e)
    ks = [k]
    while ks[-1] < n and ks[-1] >= threshold * b:
        nxt = next_k(ks[-1], b)
        assert 6 * nxt <= 5 * ks[-1] or threshold < 100
        if nxt >= ks[-1]:
            break       # fixed point near 3b: stop and use the base case
        ks.append(nxt)
    return ks, b


@lru_cache(maxsize=None)
def level_condenser(n, kappa, e):
    """Random table n -> kappa bits used as a (2^2kappa -> 2^kappa) condenser."""
    D = 3 * n << e
    return CondenserTable(n, D, 1 << kappa, hash_seed=mix_seed("level", n, kappa, e, TABLE_SEED),
                          kind="random", meta={"kappa": kappa})


@dataclass(frozen=True)
class RecursiveFingerprint:
    n: int
    k: int
    e: int                 # target total error 2^-e
    level_e: int           # per-level error exponent after downscaling
    bodies: tuple          # one condenser symbol per recursion level
    ks: tuple
    b: int
    tail: object           # PrimeHash for the base case, or the identity value
    threshold: int = 100

    def length(self):
        kap = [-(-k // 3) for k in self.ks[:-1]]
        base = self.ks[-1]
        tail = self.n if base >= self.n else self.tail.bit_length()
        return sum(kap) + tail


def condenser_recursion_F(x, eps_exp, k, seed, threshold=100):
    """Concatenate condensers for kappa = ceil(k/3), recursing on k' = 2 kappa + b."""
    x = BitString(x)
    n = len(x)
    xv = x.to_int()
    ks, b = recursion_plan(n, k, eps_exp, threshold)
    d = len(ks) - 1
    le = eps_exp + clog2(2 * d + 1)
    rng = XorShift64(mix_seed("recursion", seed))
    bodies = []
    for kk in ks[:-1]:
        f = level_condenser(n, -(-kk // 3), le)
        bodies.append(int(f.row(xv)[rng.randrange(f.D)]))
    base = ks[-1]
    if base >= n:
        tail = xv
    else:
        p = sample_prime(le, 1 << base, max(n, 1), rng)
        tail = PrimeHash(p, xv % p)
    return RecursiveFingerprint(n, k, eps_exp, le, tuple(bodies), tuple(ks), b, tail, threshold)


def invert_recursion(S, fp):
    """Inverse for condenser_recursion_F, monotone in S."""
    xs = _dedupe(as_ints(S))
    if len(xs) > (1 << fp.k):
        raise ValueError("suspect list exceeds 2^k")
    eps = 2.0 ** -fp.level_e
    cur = xs
    for kk, body in zip(fp.ks[:-1], fp.bodies):
        kap = -(-kk // 3)
        f = level_condenser(fp.n, kap, fp.level_e)
        K = 1 << kap
        sel, rej, _ = pruning_large(f, list(cur), body, K, K, eps, K * K)
        keep = np.sort(np.concatenate([sel, rej]))
        cur = cur[keep]
        nxt = fp.ks[fp.ks.index(kk) + 1]
        assert len(cur) <= (1 << nxt), "candidate list outgrew the next level"
    if fp.ks[-1] >= fp.n:
        hit = np.flatnonzero(cur == fp.tail)
    else:
        p, r = fp.tail.p, fp.tail.residue
        if p.bit_length() > 62:       # wider than int64: reduce with Python ints
            hit = np.flatnonzero(np.array([int(v) % p == r for v in cur], dtype=bool))
        else:
            hit = np.flatnonzero(cur % p == r)
    if len(hit) == 0:
        raise NotFound("no candidate survives")
    return BitString.from_int(int(cur[hit[0]]), fp.n)
