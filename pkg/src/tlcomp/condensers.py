"""Excess, condenser/conductor tables and brute-force certificates."""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bitcore import XorShift64, mix_seed
from .hashing import NotFound

TOL = 1e-9
EXACT_LIMIT = 1 << 22     # max number of candidate sets enumerated in exact mode
VERIFY_KMAX = 64          # random tables with larger Kmax are not certified at build time
VERIFY_WORK = 1 << 27     # cap on table evaluations spent on a sampled build-time certificate


class ScaleError(ValueError):
    """Requested exhaustive work beyond the hard scale guard."""


# -- excess ----------------------------------------------------------------

def _probs(P):
    if isinstance(P, dict):
        P = list(P.values())
    p = np.asarray(P, dtype=float)
    if p.ndim != 1 or (p < -TOL).any() or abs(p.sum() - 1.0) > TOL:
        raise ValueError("not a probability distribution")
    return p


def excess(P, gamma):
    """Probability mass sitting above the cap gamma."""
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    p = _probs(P)
    return float(np.maximum(p - gamma, 0.0).sum())


def trim_redistribute(P, K):
    """Cap every value at 1/K and spread the trimmed mass over values below the cap."""
    p = _probs(P).copy()
    if len(p) < K:
        raise ValueError("support of size %d is smaller than K=%d" % (len(p), K))
    cap = 1.0 / K
    spare = float(np.maximum(p - cap, 0).sum())
    p = np.minimum(p, cap)
    for i in np.argsort(p, kind="stable"):
        if spare <= 0:
            break
        room = cap - p[i]
        take = min(room, spare)
        p[i] += take
        spare -= take
    return p


def statistical_distance(P, Q):
    return 0.5 * float(np.abs(np.asarray(P, float) - np.asarray(Q, float)).sum())


def minentropy_close_check(P, K, eps):
    """True iff P is eps-close to a distribution with min-entropy log K."""
    p = _probs(P)
    if len(p) < K:
        raise ValueError("support smaller than K: only the forward direction holds")
    ex = excess(p, 1.0 / K)
    Q = trim_redistribute(p, K)
    # the trimmed witness sits exactly `ex` away and is a (log K)-source
    assert Q.max() <= 1.0 / K + TOL
    assert abs(statistical_distance(p, Q) - ex) <= 1e-7
    return ex <= eps + TOL


# -- tables ----------------------------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def mix64(z):
    """Vectorised splitmix64 finaliser on uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64) + _GOLD
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hashed_values(seed, xs, ds, Y):
    """Deterministic pseudo-random table entries f(x, d) in [0, Y)."""
    with np.errstate(over="ignore"):
        s = np.uint64(mix_seed(seed) & ((1 << 64) - 1))
        hx = mix64(np.asarray(xs, dtype=np.uint64) ^ s)
        h = mix64(hx[..., None] ^ (np.asarray(ds, dtype=np.uint64) * _M2 + s))
    return (h % np.uint64(Y)).astype(np.int64)


class CondenserTable:
    """f: [2^n] x [D] -> [Y], evaluated as F(x) = f(x, uniform d).

    Backed by an explicit array, or by a seeded hash for tables too large
    to store (rows are then produced on demand).  kind records the origin.
    """

    MATERIALIZE_LIMIT = 1 << 22

    def __init__(self, n, D, Y, array=None, hash_seed=None, kind="table", meta=None):
        self.n, self.D, self.Y = int(n), int(D), int(Y)
        self.kind = kind
        self.hash_seed = hash_seed
        self.meta = dict(meta or {})
        self._arr = None
        if array is not None:
            a = np.asarray(array, dtype=np.int64)
            if a.shape != (1 << self.n, self.D):
                raise ValueError("table shape %s != (%d, %d)" % (a.shape, 1 << self.n, self.D))
            if a.size and (a.min() < 0 or a.max() >= self.Y):
                raise ValueError("table values out of range")
            self._arr = a
        elif kind not in ("identity", "uniform") and hash_seed is None:
            raise ValueError("need an array, a hash seed, or a structural kind")

    # evaluation
    def rows(self, xs):
        xs = np.asarray(xs, dtype=np.int64)
        if self._arr is not None:
            return self._arr[xs]
        if self.kind == "identity":
            return xs[..., None].copy()
        if self.kind == "uniform":
            return np.broadcast_to(np.arange(self.D, dtype=np.int64), xs.shape + (self.D,)).copy()
        if (1 << self.n) * self.D <= self.MATERIALIZE_LIMIT:
            self._arr = hashed_values(self.hash_seed, np.arange(1 << self.n), np.arange(self.D), self.Y)
            return self._arr[xs]
        return hashed_values(self.hash_seed, xs, np.arange(self.D), self.Y)

    def row(self, x):
        return self.rows(np.array([int(x)]))[0]

    def __call__(self, x, d):
        return int(self.row(x)[d])

    @property
    def table(self):
        if (1 << self.n) * self.D > 4 * self.MATERIALIZE_LIMIT:
            raise ScaleError("table too large to materialise")
        return self.rows(np.arange(1 << self.n))

    @property
    def seed_bits(self):
        return math.log2(self.D)

    @property
    def out_bits(self):
        return max(1, (self.Y - 1).bit_length())

    def __repr__(self):
        return "CondenserTable(n=%d, D=%d, Y=%d, kind=%s)" % (self.n, self.D, self.Y, self.kind)


def identity_table(n):
    return CondenserTable(n, 1, 1 << n, kind="identity")


def constant_table(n, Y=2, D=1):
    return CondenserTable(n, D, Y, array=np.zeros((1 << n, D), dtype=np.int64), kind="constant")


def from_array(a, Y=None, kind="table"):
    a = np.asarray(a, dtype=np.int64)
    n = int(a.shape[0]).bit_length() - 1
    return CondenserTable(n, a.shape[1], Y if Y is not None else int(a.max()) + 1, array=a, kind=kind)


# serialisation: "CND1 n D Y" then D*2^n integers, x-major

def dumps_table(f):
    t = f.table
    lines = ["CND1 %d %d %d" % (f.n, f.D, f.Y)]
    for row in t:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def loads_table(text):
    toks = text.split()
    if len(toks) < 4 or toks[0] != "CND1":
        raise ValueError("not a CND1 table")
    n, D, Y = (int(t) for t in toks[1:4])
    vals = [int(t) for t in toks[4:]]
    if len(vals) != D << n:
        raise ValueError("expected %d entries, got %d" % (D << n, len(vals)))
    return CondenserTable(n, D, Y, array=np.array(vals, dtype=np.int64).reshape(1 << n, D))


# -- certificates ----------------------------------------------------------

@dataclass
class CondenserCert:
    K: int
    Kp: int
    eps: float
    verified: bool
    worst_excess: float
    worst_set: tuple = None
    mode: str = "exact"
    trials: int = 0
    per_k: dict = field(default_factory=dict)

    def __post_init__(self):
        assert not self.verified or self.worst_excess <= self.eps + TOL


def _excess_of_sets(f, sets, Kp):
    """Exact (1/Kp)-excess of F(U_S) for each row of `sets` (shape c x K)."""
    sets = np.asarray(sets, dtype=np.int64)
    c, K = sets.shape
    vals = f.rows(sets.reshape(-1)).reshape(c, K * f.D)
    idx = (np.arange(c, dtype=np.int64)[:, None] * f.Y + vals).reshape(-1)
    counts = np.bincount(idx, minlength=c * f.Y).reshape(c, f.Y)
    # excess = sum max(0, cnt/(K D) - 1/Kp) ; numerator over K*D*Kp kept integral
    num = np.maximum(counts * Kp - K * f.D, 0).sum(axis=1)
    return num / float(K * f.D * Kp)


def exact_allowed(n, K):
    return (1 << n) <= 24 or K <= 3


def verify_condenser(f, K, Kp, eps, mode="auto", trials=200, seed=0, chunk=4096):
    """Check that every K-set S has (1/Kp)-excess of F(U_S) at most eps."""
    N = 1 << f.n
    if K > N or K < 1:
        raise ValueError("K must lie in [1, 2^n]")
    total = math.comb(N, K)
    if mode == "auto":
        small = exact_allowed(f.n, K) and total <= EXACT_LIMIT and total * K * f.D <= VERIFY_WORK
        mode = "exact" if small else "sampled"
    worst, wset, done = -1.0, None, 0
    if mode == "exact":
        if not exact_allowed(f.n, K) or total > EXACT_LIMIT:
            raise ScaleError("C(%d, %d) sets is beyond the exhaustive guard" % (N, K))
        it = itertools.combinations(range(N), K)
        while True:
            block = list(itertools.islice(it, chunk))
            if not block:
                break
            ex = _excess_of_sets(f, block, Kp)
            i = int(ex.argmax())
            if ex[i] > worst:
                worst, wset = float(ex[i]), tuple(block[i])
            done += len(block)
    elif mode == "sampled":
        rng = np.random.default_rng(mix_seed("verify", seed, f.n, K, Kp))
        left = trials
        while left > 0:
            c = min(left, chunk)
            if K * 4 <= N:
                block = np.sort(rng.integers(0, N, size=(c, K)), axis=1)
                # redraw rows with repeats
                bad = (np.diff(block, axis=1) == 0).any(axis=1)
                while bad.any():
                    block[bad] = np.sort(rng.integers(0, N, size=(int(bad.sum()), K)), axis=1)
                    bad = (np.diff(block, axis=1) == 0).any(axis=1)
            else:
                block = np.array([np.sort(rng.choice(N, K, replace=False)) for _ in range(c)])
            ex = _excess_of_sets(f, block, Kp)
            i = int(ex.argmax())
            if ex[i] > worst:
                worst, wset = float(ex[i]), tuple(int(v) for v in block[i])
            done += c
            left -= c
    else:
        raise ValueError("mode must be auto, exact or sampled")
    ok = worst <= eps + TOL
    return CondenserCert(K, Kp, eps, ok, worst, None if ok else wset, mode, done)


def verify_conductor(f, K, eps, mode="auto", trials=200, seed=0):
    """verify_condenser(f, K', K', eps) for every K' = 1..K."""
    worst, wset, modes, done, per = -1.0, None, set(), 0, {}
    for k in range(1, K + 1):
        c = verify_condenser(f, k, k, eps, mode=mode, trials=trials, seed=seed)
        per[k] = c.worst_excess
        modes.add(c.mode)
        done += c.trials
        if c.worst_excess > worst:
            worst, wset = c.worst_excess, c.worst_set
    ok = worst <= eps + TOL
    mode_s = "exact" if modes == {"exact"} else "sampled"
    return CondenserCert(K, K, eps, ok, worst, None if ok else wset, mode_s, done, per)


def worst_conductor_excess(f, K):
    """Smallest eps for which f is an exact (K, eps)-conductor."""
    return verify_conductor(f, K, 1.0, mode="exact").worst_excess


# -- constructions ---------------------------------------------------------

def _frac(eps):
    e = Fraction(eps).limit_denominator(1 << 40)
    if not 0 < e < 1:
        raise ValueError("eps must lie in (0, 1)")
    return e


def condenser_degree(n, eps):
    """D = ceil(3n/eps), the seed count of the random construction."""
    e = _frac(eps)
    return math.ceil(3 * n / e)


@lru_cache(maxsize=256)
def random_condenser(n, Kmax, eps, seed=0, verify=True, max_tries=20, trials=200):
    """A (Kmax, eps)-conductor [2^n] -> [4 Kmax] from a uniformly random table.

    Degenerate cases: identity when 4 Kmax > 2^n; when Kmax <= 1/eps the
    output is a uniform element of [2^ceil(log 1/eps)] and ignores x.
    """
    e = _frac(eps)
    Y = 4 * Kmax
    if Y > (1 << n):
        f = identity_table(n)
        check_degree_bounds(f, min(Kmax, 1 << n), e)
        return f
    if Kmax <= 1 / e:
        D = 1 << max(0, math.ceil(math.log2(1 / e) - 1e-12))
        f = CondenserTable(n, D, max(Y, D), kind="uniform", meta={"eps": float(e), "Kmax": Kmax})
        check_degree_bounds(f, Kmax, e)
        return f
    D = condenser_degree(n, e)
    assert D <= 4 * n / e
    for t in range(max_tries):
        s = mix_seed("random_condenser", n, Kmax, seed, t)
        f = CondenserTable(n, D, Y, hash_seed=s, kind="random",
                           meta={"eps": float(e), "Kmax": Kmax, "seed": seed, "retry": t})
        if not verify or Kmax > VERIFY_KMAX:
            check_degree_bounds(f, Kmax, e)
            return f
        tr = trials
        if not exact_allowed(n, Kmax):
            tr = max(16, min(trials, VERIFY_WORK // (D * Kmax * Kmax)))
        cert = verify_conductor(f, Kmax, float(e), trials=tr, seed=s)
        f.meta["cert"] = cert
        if cert.verified:
            check_degree_bounds(f, Kmax, e)
            return f
    raise RuntimeError("no verified conductor after %d tries" % max_tries)


def check_degree_bounds(f, Kmax, eps):
    """The degree lower bound holds for every K <= Kmax the table is used at."""
    from .analysis import condenser_bound_reports
    Ks = sorted({1 << i for i in range(Kmax.bit_length())} | {Kmax})
    reps = [r for K in Ks for r in condenser_bound_reports(f, K, eps)]
    bad = [r for r in reps if r.satisfied is False]
    assert not bad, "degree bound violated: %s" % bad
    return reps


def search_conductor(n, k, eps, max_D=8, max_Y=16, restarts=400, seed=0):
    """Smallest-degree table found that is an exact (2^k, eps)-conductor."""
    if (1 << n) > 16 or max_D > 8 or max_Y > 16:
        raise ScaleError("search is limited to 2^n <= 16, D <= 8, Y <= 16")
    K = 1 << k
    if k >= n:
        return identity_table(n)
    rng = XorShift64(mix_seed("search", n, k, seed))
    N = 1 << n
    Y = min(max_Y, 4 * K)
    for D in range(1, max_D + 1):
        cands = [np.tile(np.arange(D), (N, 1)) % Y,
                 (np.arange(N)[:, None] + np.arange(D)[None, :] * max(1, Y // D)) % Y]
        for _ in range(restarts):
            cands.append(np.array([[rng.randrange(Y) for _ in range(D)] for _ in range(N)]))
        for a in cands:
            f = CondenserTable(n, D, Y, array=a, kind="searched")
            if verify_conductor(f, min(K, N), eps, mode="exact").verified:
                return f
    raise NotFound("no (%d, %s)-conductor with D <= %d at n=%d" % (K, eps, max_D, n))


def compose_condensers(S, T, Kp=None):
    """x -> (S(x), T(x)) on product seeds; output symbol y1 * Y2 + y2."""
    if S.n != T.n:
        raise ValueError("condensers must share their domain")
    if Kp is not None and T.Y < Kp:
        raise ValueError("second output alphabet %d is smaller than K'=%d" % (T.Y, Kp))
    xs = np.arange(1 << S.n)
    a = S.rows(xs)[:, :, None] * T.Y + T.rows(xs)[:, None, :]
    return CondenserTable(S.n, S.D * T.D, S.Y * T.Y, array=a.reshape(len(xs), -1),
                          kind="composed", meta={"parts": (S, T)})


def concat_pipeline_bits(base_bits, target_bits):
    """Output bit lengths of the iterated composition.

    Each step composes a condenser 2^(2*kappa) -> 2^kappa (with 2*kappa the
    current length) on top of the current conductor, so the length grows by
    half; the last step is trimmed to hit the target exactly.
    """
    if base_bits < 2:
        raise ValueError("need at least 2 base bits")
    out = [base_bits]
    while out[-1] < target_bits:
        nxt = out[-1] + out[-1] // 2
        if nxt > target_bits:
            nxt = target_bits
        else:
            assert 2 * nxt >= 3 * out[-1] - 1
        out.append(nxt)
    return out
