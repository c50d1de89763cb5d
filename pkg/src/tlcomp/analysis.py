"""Lower bounds, the rounding sampler, randomness reduction and blocking sets."""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .hashing import clog2, pool_size_param, prime_pool

SLACK = 1e-9

# running tally of every bound check made by the constructions
LB_LOG = {"checks": 0, "violations": 0, "not_applicable": 0}


def _exact(v):
    """Fraction for ints, Fractions and (dyadic) floats; other inputs pass through."""
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v)
    return v


def log2_exact(q):
    """log2 as an int when q is a power of two, else a float."""
    q = Fraction(q)
    if q > 0 and q.numerator & (q.numerator - 1) == 0 and q.denominator & (q.denominator - 1) == 0:
        return q.numerator.bit_length() - q.denominator.bit_length()
    return math.log2(q)


def _ge(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a >= b
    return float(a) >= float(b) - SLACK


# -- reports ---------------------------------------------------------------

@dataclass
class BoundReport:
    formula: str
    inputs: dict
    bound: object
    observed: object
    applicable: bool = True
    direction: str = ">="       # observed >= bound
    note: str = ""
    satisfied: object = field(default=None)

    def __post_init__(self):
        if not self.applicable:
            self.satisfied = None
        else:
            self.satisfied = _ge(self.observed, self.bound)

    COLUMNS = (("formula", 12), ("inputs", 40), ("observed", 12), ("dir", 3), ("bound", 12), ("status", 6))

    def cells(self):
        ins = " ".join("%s=%s" % (k, _fmt(v)) for k, v in self.inputs.items())
        status = "n/a" if not self.applicable else ("ok" if self.satisfied else "FAIL")
        return (self.formula, ins, _fmt(self.observed), self.direction, _fmt(self.bound), status)

    def row(self):
        return "  ".join(str(c).ljust(w) for c, (_, w) in zip(self.cells(), self.COLUMNS)).rstrip()


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, Fraction):
        return str(v) if v.denominator == 1 else "%.4g" % float(v)
    if isinstance(v, float):
        return "%.4g" % v
    return str(v)


def render_reports(reports):
    head = "  ".join(name.ljust(w) for name, w in BoundReport.COLUMNS).rstrip()
    return "\n".join([head, "-" * len(head)] + [r.row() for r in reports]) + "\n"


def _record(rep):
    LB_LOG["checks"] += 1
    if not rep.applicable:
        LB_LOG["not_applicable"] += 1
    elif not rep.satisfied:
        LB_LOG["violations"] += 1
    return rep


# -- overhead lower bound --------------------------------------------------

def overhead_lb(n, eps):
    """log(n/eps) - log log(n/eps) - 8, or None outside 2^(-n/4) <= eps <= 1/4."""
    if not (2.0 ** (-n / 4) <= eps <= 0.25):
        return None
    L = math.log2(n / eps)
    return L - math.log2(L) - 8


def overhead_lb_check(n, eps, delta):
    b = overhead_lb(n, eps)
    return BoundReport("overhead", {"n": n, "eps": eps}, b, delta, applicable=b is not None)


# -- randomness lower bound ------------------------------------------------

def randomness_sides(n, r, eps):
    """(ceil(eps 2^(r+1)), n - r - log(2/eps)); exact when eps is dyadic."""
    e = _exact(eps)
    lhs = math.ceil(e * 2 ** (r + 1))
    return lhs, n - r - log2_exact(2 / e)


def randomness_lb_check(n, r, eps, delta):
    """ceil(eps 2^(r+1)) >= (n - r - log(2/eps)) / (delta + 4)."""
    if eps > 0.5 or delta + 4 <= 0:
        return BoundReport("randomness", {"n": n, "r": r, "eps": eps, "delta": delta}, None, None,
                           applicable=False)
    lhs, num = randomness_sides(n, r, eps)
    rhs = Fraction(num) / (Fraction(delta) + 4) if isinstance(num, int) and isinstance(delta, int) \
        else num / (delta + 4)
    return BoundReport("randomness", {"n": n, "r": r, "eps": eps, "delta": delta}, rhs, Fraction(lhs))


def randomness_delta_threshold(n, r, eps):
    """Smallest real delta allowed by the randomness bound: num / lhs - 4.

    Uses only ring operations on n, so a symbolic or affine n passes through.
    """
    lhs, _ = randomness_sides(0, r, eps)
    L = log2_exact(2 / _exact(eps))
    return (n - r - L) * Fraction(1, lhs) - 4


def deterministic_overhead_lb(n):
    """A deterministic compressor cannot beat delta = n - 1."""
    return n - 1


# -- degree lower bound for condensers -------------------------------------

def degree_lb_check(f, K, eps):
    """ceil(2 eps D) >= log(#X/K) / (3 + log(#Y/K)) under #Y >= 2K >= 4D/eps, eps <= 1/2."""
    e = _exact(eps)
    X, Y, D = 1 << f.n, f.Y, f.D
    ins = {"n": f.n, "D": D, "Y": Y, "K": K, "eps": eps}
    if not (e <= Fraction(1, 2) and Y >= 2 * K and 2 * K >= 4 * D / e):
        return BoundReport("degree", ins, None, None, applicable=False)
    lhs = math.ceil(2 * e * D)
    a, b = log2_exact(Fraction(X, K)), log2_exact(Fraction(Y, K))
    rhs = Fraction(a, 3 + b) if isinstance(a, int) and isinstance(b, int) else a / (3 + b)
    return BoundReport("degree", ins, rhs, Fraction(lhs))


def compressor_randomness_bits(n, k, e):
    """Random bits consumed by one fingerprint: seed index plus prime choice."""
    from .invertible import conductor_shape, tag_capacity
    _, D, _ = conductor_shape(n, k, e)
    pool = prime_pool(pool_size_param(e, tag_capacity(D, k), max(n, 1)))
    return clog2(D) + clog2(pool.size)


def compressor_bound_reports(n, eps_exp, m, k, fp_exp):
    """All applicable lower bounds for one (n, eps, m) compressor configuration."""
    delta = m - k + 1
    eps = Fraction(1, 1 << eps_exp)
    r = compressor_randomness_bits(n, k, fp_exp)
    reps = [overhead_lb_check(n, float(eps), delta), randomness_lb_check(n, r, eps, delta)]
    return [_record(x) for x in reps]


def condenser_bound_reports(f, K, eps):
    return [_record(degree_lb_check(f, K, eps))]


# -- Hoeffding -------------------------------------------------------------

def hoeffding(mu, nu):
    """Tail bound Pr[Z >= nu] <= (mu/nu)^nu for sums of independent 0/1 variables."""
    if not 0 < mu < nu:
        raise ValueError("need 0 < mu < nu")
    return (mu / nu) ** nu


def hoeffding_full(mu, nu, t):
    """Hoeffding's tail for t independent [0,1] variables with mean sum mu.

    (mu/nu)^nu ((t-mu)/(t-nu))^(t-nu); the short form above drops the
    second factor, which can reach e^(nu-mu), and is not a valid bound by itself.
    """
    if not 0 < mu < nu:
        raise ValueError("need 0 < mu < nu")
    if nu > t:
        return 0.0
    if nu == t:
        return (mu / t) ** t
    return (mu / nu) ** nu * ((t - mu) / (t - nu)) ** (t - nu)


# -- rounding sampler ------------------------------------------------------

def _as_dist(mu):
    if not isinstance(mu, dict):
        mu = dict(enumerate(mu))
    d = {y: _exact(p) for y, p in mu.items() if p > 0}
    tot = sum(d.values())
    if abs(float(tot) - 1) > SLACK:
        raise ValueError("measure does not sum to 1")
    return {y: p / tot for y, p in d.items()}


def sampler_round(mu, d, b):
    """Measure nu with values in 2^-(d+b) Z, sum 1 and nu <= (1 + 3 2^-b) mu.

    Starts from mu rounded down, then rounds up in order of decreasing
    fractional part, never past the cap (1 + 3 2^-b) mu.
    """
    mu = _as_dist(mu)
    if len(mu) > 1 << d:
        raise ValueError("support %d exceeds 2^d = %d" % (len(mu), 1 << d))
    G = 1 << (d + b)
    c = 1 + Fraction(3, 1 << b)
    units = {y: math.floor(p * G) for y, p in mu.items()}
    caps = {y: math.floor(c * p * G) for y, p in mu.items()}
    need = G - sum(units.values())
    order = sorted(mu, key=lambda y: -(mu[y] * G - units[y]))
    # first pass: one step each by fractional part, then fill remaining headroom
    for y in order:
        if need <= 0:
            break
        if units[y] < caps[y]:
            units[y] += 1
            need -= 1
    for y in sorted(mu, key=lambda y: -(caps[y] - units[y])):
        if need <= 0:
            break
        step = min(need, caps[y] - units[y])
        units[y] += step
        need -= step
    assert need == 0
    return {y: Fraction(u, G) for y, u in units.items() if u}


def sampler_draw(nu, i, bits):
    """Output for random integer i in [2^bits]: the largest y whose prefix mass is <= i/2^bits."""
    acc, pick = Fraction(0), None
    for y in sorted(nu):
        if acc <= Fraction(i, 1 << bits):
            pick = y
        acc += nu[y]
    return pick


def sampler_draw_check(nu, bits):
    """Enumerate all 2^bits draws; returns the induced measure."""
    cnt = {}
    for i in range(1 << bits):
        y = sampler_draw(nu, i, bits)
        cnt[y] = cnt.get(y, 0) + 1
    return {y: Fraction(c, 1 << bits) for y, c in cnt.items()}


# -- randomness reduction --------------------------------------------------

def core_outputs(dist, eps):
    """Outputs left after removing a maximum-size set of measure <= eps.

    Smallest outcomes go first; equal probabilities break ties by value.
    """
    items = sorted(dist.items(), key=lambda t: (t[1], t[0]))
    removed, i = Fraction(0), 0
    while i < len(items) and removed + items[i][1] <= eps:
        removed += items[i][1]
        i += 1
    return {y for y, _ in items[i:]}


@dataclass
class ReducedFunction:
    K: int
    M: int
    eps: object
    inputs: list
    heavy: list
    dists: dict          # x -> rounded measure over outputs
    bits: int
    g: object

    def __call__(self, x, i):
        """Evaluate on randomness i in [2^bits]."""
        if x in self._heavy_idx:
            return ("reserved", self._heavy_idx[x])
        return sampler_draw(self.dists[x], i, self.bits)

    def __post_init__(self):
        self._heavy_idx = {x: j for j, x in enumerate(self.heavy)}

    def distribution(self, x):
        if x in self._heavy_idx:
            return {("reserved", self._heavy_idx[x]): Fraction(1)}
        return self.dists[x]

    def invert(self, S, y):
        if isinstance(y, tuple) and len(y) == 2 and y[0] == "reserved":
            return self.heavy[y[1]]
        return self.g(S, y)

    def failure(self, S, x):
        return sum((p for y, p in self.distribution(x).items() if self.invert(S, y) != x), Fraction(0))

    def values(self):
        vs = set()
        for x in self.inputs:
            vs |= set(self.distribution(x))
        return vs


def reduce_randomness(dists, g, K, M, eps):
    """Rebuild a (K, eps)-invertible function so it needs ceil(log(M/K)) + 3 random bits.

    dists: x -> {y: probability} (the exact output law, from enumerable seeds);
    g(S, y): the inverse of the original function.
    """
    eps = _exact(eps)
    if eps > Fraction(1, 4):
        raise ValueError("eps must be <= 1/4")
    if K < 1 or M < K:
        raise ValueError("need 1 <= K <= M")
    vals = set()
    for dx in dists.values():
        vals |= {y for y, p in dx.items() if p > 0}
    if len(vals) > M:
        raise ValueError("function has %d > M values" % len(vals))
    inputs = list(dists)
    light_cap = Fraction(M, K)
    d = clog2(light_cap)
    b = 3
    heavy, out = [], {}
    for x in inputs:
        dx = _as_dist(dists[x])
        P = core_outputs(dx, eps)
        if len(P) > light_cap:
            heavy.append(x)
            continue
        Z = sum(dx[y] for y in P)
        out[x] = sampler_round({y: dx[y] / Z for y in P}, d, b)
    if len(heavy) >= K:
        raise AssertionError("%d heavy inputs, expected fewer than K=%d" % (len(heavy), K))
    return ReducedFunction(K, M, eps, inputs, heavy, out, d + b, g)


# -- blocking sets ---------------------------------------------------------

def blocking_set(family, K, ny=None):
    """(x, S): |S| < K, x not in S and F_x covered by the union of F_z over S.

    A first-match inverse on the list S followed by x therefore never returns x.
    """
    X = list(family)
    F = {x: frozenset(family[x]) for x in X}
    if ny is None:
        ny = len(frozenset().union(*F.values())) if F else 0
    if not ny < min(Fraction(K * K, 4), len(X) - Fraction(K, 2)):
        raise ValueError("need #Y < min(K^2/4, #X - K/2); got #Y=%d, K=%d, #X=%d" % (ny, K, len(X)))
    holders = {}
    for x in X:
        for y in F[x]:
            holders.setdefault(y, []).append(x)

    def cover(x, ys):
        return [next(z for z in holders[y] if z != x) for y in sorted(ys, key=repr)]

    cands = [x for x in X if all(len(holders[y]) > 1 for y in F[x])]
    assert 2 * len(cands) >= K, "too few covered inputs"
    small = [x for x in cands if len(F[x]) < K]
    if small:
        x = small[0]
        S = cover(x, F[x])
    else:
        S, Y, x = [], set(), None
        for xi in cands:
            if 2 * len(F[xi] - Y) >= K:
                S.append(xi)
                Y |= F[xi]
            else:
                x = xi
                break
        assert x is not None
        S += cover(x, F[x] - Y)
    S = list(dict.fromkeys(S))
    union = frozenset().union(*(F[z] for z in S)) if S else frozenset()
    assert x not in S and len(S) < K and F[x] <= union
    return x, S


def first_match_inverse(family, order, y):
    """The simple inverse: first z in order with y in F_z."""
    for z in order:
        if y in family[z]:
            return z
    return None
