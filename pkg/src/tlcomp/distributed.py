"""Multi-sender decoding: Slepian-Wolf constraints, small slices and the
random decode tree (percolation, then bubble-up through per-coordinate
inverses), with a plurality-vote derandomised mode.

Coordinates of tuples are handled as integers (bitstrings read MSB-first)
together with their bit lengths.
"""

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bitcore import BitString, XorShift64, gamma_decode, gamma_encode, gf_mul, mix_seed
from .compressor import INFINITE, ToyDecompressor, hexbits, parse_code, parse_hexbits
from .condensers import ScaleError, mix64
from .hashing import NotFound, clog2
from .invertible import Inverter, conductor_for

MAX_SENDERS = 20
MAJORITY_TRIALS = 15


class _Blocked:
    def __repr__(self):
        return "Blocked"

    def __bool__(self):
        return False


Blocked = _Blocked()


# -- tuple-set encoding ----------------------------------------------------

def encode_tuple_set(items):
    """{j: bits} -> gamma(j+1) gamma(len+1) bits ..., sorted by j."""
    out = BitString("")
    for j in sorted(items):
        b = BitString(items[j])
        out = out + gamma_encode(j + 1) + gamma_encode(len(b) + 1) + b
    return out


def decode_tuple_set(bits):
    bits = BitString(bits)
    out = {}
    while bits:
        j1, bits = gamma_decode(bits)
        l1, bits = gamma_decode(bits)
        out[j1 - 1] = bits[:l1 - 1]
        bits = bits[l1 - 1:]
    return out


def _subsets(ell):
    for r in range(1, ell + 1):
        yield from itertools.combinations(range(ell), r)


# -- decompressor views ----------------------------------------------------

class TabulatedSW:
    """Slepian-Wolf view of a ToyDecompressor whose outputs are encoded tuple-sets.

    C(x_J | x_rest) looks up programs under the condition encode(x_rest)
    (no condition when J is everything).
    """

    def __init__(self, D, ell):
        if ell > MAX_SENDERS:
            raise ScaleError("at most %d senders" % MAX_SENDERS)
        self.D, self.ell = D, ell

    def complexity(self, x, J):
        x = [BitString(v) for v in x]
        J = tuple(sorted(J))
        rest = [j for j in range(self.ell) if j not in J]
        out = encode_tuple_set({j: x[j] for j in J})
        cond = encode_tuple_set({j: x[j] for j in rest}) if rest else None
        return self.D.complexity(out, cond)

    def tuples(self):
        """Full tuples in the image of D, ordered by their shortest program."""
        items, _ = self.D._stream(None)
        seen, out = set(), []
        for p, o in items:
            try:
                t = decode_tuple_set(o)
            except ValueError:
                continue
            if sorted(t) != list(range(self.ell)) or o in seen:
                continue
            seen.add(o)
            out.append(tuple(t[j] for j in range(self.ell)))
        return out

    def suspects(self, thresholds):
        return [x for x in self.tuples() if sw_check(self, x, thresholds)]


def random_sw_toy(seed, ell, n, size, pool=None):
    """Random ell-sender toy decompressor over `size` correlated tuples.

    Coordinates are drawn from a pool of n-bit values per sender so tuples
    share coordinates.  Joint programs index the tuple list; the program for
    x_J given x_rest indexes the distinct J-parts among tuples agreeing on
    the rest.  Returns (ToyDecompressor, tuples).
    """
    if ell > MAX_SENDERS:
        raise ScaleError("at most %d senders" % MAX_SENDERS)
    rng = XorShift64(mix_seed("swtoy", seed, ell, n, size))
    pool = pool or max(2, int(round(size ** (1 / max(ell - 1, 1)))) + 1)
    vals = []
    for _ in range(ell):
        vs = set()
        while len(vs) < min(pool, 1 << n):
            vs.add(rng.getrandbits(n))
        vals.append([BitString.from_int(v, n) for v in sorted(vs)])
    if size > math.prod(len(v) for v in vals):
        raise ValueError("pool too small for %d distinct tuples" % size)
    seen, tuples = set(), []
    while len(tuples) < size:
        t = tuple(v[rng.randrange(len(v))] for v in vals)
        if t not in seen:
            seen.add(t)
            tuples.append(t)
    D = ToyDecompressor()
    b = clog2(size)
    for i, t in enumerate(tuples):
        D.add(BitString.from_int(i, b) if b else "", encode_tuple_set(dict(enumerate(t))))
    for J in _subsets(ell):
        rest = [j for j in range(ell) if j not in J]
        if not rest:
            continue
        groups = {}
        for t in tuples:
            g = groups.setdefault(tuple(t[j] for j in rest), [])
            part = tuple(t[j] for j in J)
            if part not in g:
                g.append(part)
        for key, parts in groups.items():
            cb = clog2(len(parts))
            cond = encode_tuple_set(dict(zip(rest, key)))
            for i, part in enumerate(parts):
                D.add(BitString.from_int(i, cb) if cb else "", encode_tuple_set(dict(zip(J, part))), cond)
    return D, tuples


def sw_toy_rates(D, tuples):
    """Smallest-ish integer rates with C(x_J | x_rest) <= sum_J rate for every listed tuple."""
    ell = len(tuples[0])
    V = as_view(D, ell)
    need = {J: max(V.complexity(t, J) for t in tuples) for J in _subsets(ell)}
    rates = [need[(j,)] for j in range(ell)]
    changed = True
    while changed:
        changed = False
        for J, c in need.items():
            short = c - sum(rates[j] for j in J)
            if short > 0:
                for i in range(short):
                    rates[J[i % len(J)]] += 1
                changed = True
    return tuple(rates)


def gf_table(w):
    t = np.zeros((1 << w, 1 << w), dtype=np.int64)
    for a in range(1 << w):
        for b in range(1 << w):
            t[a, b] = gf_mul(a, b, w)
    return t


_GF_TABLES = {}


def _gft(w):
    if w not in _GF_TABLES:
        _GF_TABLES[w] = gf_table(w)
    return _GF_TABLES[w]


class LinePointSW:
    """Rule-based decompressor for the line-and-point instance over GF(2^w).

    Sender 0 holds the line a||b (2w bits), sender 1 the point u||v.
    An incident pair has joint complexity 3w (program a||b||u) and each
    coordinate given the other costs w bits; non-incident pairs are
    unreachable.
    """

    ell = 2

    def __init__(self, w):
        self.w = w

    def incident(self, x):
        w = self.w
        L, P = (BitString(v).to_int() for v in x)
        a, b, u, v = L >> w, L & ((1 << w) - 1), P >> w, P & ((1 << w) - 1)
        return len(x[0]) == 2 * w and len(x[1]) == 2 * w and v == gf_mul(a, u, w) ^ b

    def complexity(self, x, J):
        if not self.incident(x):
            return INFINITE
        return 3 * self.w if len(J) == 2 else self.w

    def columns(self):
        """All incident pairs as (lines, points), in program order a||b||u."""
        w = self.w
        r = np.arange(1 << (3 * w), dtype=np.int64)
        a, b, u = r >> (2 * w), (r >> w) & ((1 << w) - 1), r & ((1 << w) - 1)
        v = _gft(w)[a, u] ^ b
        return [r >> w, (u << w) | v]

    def suspects_columns(self, thresholds):
        tA, tB = thresholds
        w = self.w
        if 3 * w < tA + tB and w < tA and w < tB:
            return self.columns()
        return [np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)]

    def tabulate(self):
        """Equivalent ToyDecompressor (only sensible for small w)."""
        w = self.w
        if w > 4:
            raise ScaleError("tabulating line-point beyond w=4 is too large")
        D = ToyDecompressor()
        mul = _gft(w)
        B = lambda v, n: BitString.from_int(int(v), n)
        for a, b, u in itertools.product(range(1 << w), repeat=3):
            v = int(mul[a, u]) ^ b
            L, P = B(a << w | b, 2 * w), B(u << w | v, 2 * w)
            D.add(B(a, w) + B(b, w) + B(u, w), encode_tuple_set({0: L, 1: P}))
            # line given point: slope a picks the line through P
            D.add(B(a, w), encode_tuple_set({0: L}), encode_tuple_set({1: P}))
            # point given line: abscissa u picks the point on L
            D.add(B(u, w), encode_tuple_set({1: P}), encode_tuple_set({0: L}))
        return D


def as_view(D, ell=None):
    if hasattr(D, "complexity") and hasattr(D, "ell"):
        return D
    return TabulatedSW(D, ell)


def sw_check(D, x, k):
    """All 2^ell - 1 constraints C(x_J | x_rest) < sum_{j in J} k_j."""
    ell = len(x)
    if ell > MAX_SENDERS:
        raise ScaleError("sw_check enumerates 2^ell constraints; ell=%d is too many" % ell)
    if len(k) != ell:
        raise ValueError("need one rate per sender")
    V = as_view(D, ell)
    return all(V.complexity(x, J) < sum(k[j] for j in J) for J in _subsets(ell))


def sw_violations(D, x, k):
    V = as_view(D, len(x))
    return [J for J in _subsets(len(x)) if not V.complexity(x, J) < sum(k[j] for j in J)]


# -- small slices ----------------------------------------------------------

@dataclass(frozen=True)
class SliceCert:
    K: tuple
    verified: bool
    witness: tuple = None       # (x, J, slice size, bound)

    def __post_init__(self):
        assert self.verified == (self.witness is None)


def small_slices_check(S, K):
    """#{z in S : z_J = x_J} <= prod_{j not in J} K_j for every x in S and every J."""
    S = [tuple(z) for z in S]
    ell = len(K)
    for J in [()] + list(_subsets(ell)):
        bound = 1
        for j in range(ell):
            if j not in J:
                bound *= K[j]
        cnt = Counter(tuple(z[j] for j in J) for z in S)
        for z in S:
            c = cnt[tuple(z[j] for j in J)]
            if c > bound:
                return SliceCert(tuple(K), False, (z, J, c, bound))
    return SliceCert(tuple(K), True, None)


# -- random tree -----------------------------------------------------------

def child_hash(seed, depth, parent, values, count):
    """Child index of each value under a parent node (vectorised, deterministic)."""
    s = np.uint64(mix_seed("tree", seed, depth))
    with np.errstate(over="ignore"):
        hv = mix64(np.asarray(values, dtype=np.uint64) ^ s)
        h = mix64(hv ^ (np.asarray(parent, dtype=np.uint64) * np.uint64(0x94D049BB133111EB) + s))
    return (h % np.uint64(count)).astype(np.int64)


@dataclass
class DecodeTree:
    """Lazy ell-level tree.  Nodes are identified by mixed-radix packed paths."""

    ell: int
    K: tuple
    eps: Fraction
    seed: int
    counts: tuple
    pebbles: dict = field(default_factory=dict)     # (depth, node id) -> row
    children: dict = field(default_factory=dict)    # (depth, parent id) -> [(row, value)]
    root: object = None

    def child(self, depth, parent, value):
        return int(child_hash(self.seed, depth, [parent], [value], self.counts[depth - 1])[0])

    def path(self, x):
        """Node ids on the branch of tuple x, depths 1..ell."""
        ids, cur = [], 0
        for j in range(1, self.ell + 1):
            cur = cur * self.counts[j - 1] + self.child(j, cur, x[j - 1])
            ids.append(cur)
        return ids

    def place(self, depth, node, row, value):
        key = (depth, node)
        assert key not in self.pebbles, "two pebbles on one node at depth %d" % depth
        self.pebbles[key] = row
        parent = node // self.counts[depth - 1]
        sib = self.children.setdefault((depth, parent), [])
        assert all(v != value for _, v in sib), "siblings share a coordinate"
        sib.append((row, value))
        assert len(sib) <= self.counts[depth - 1]

    def siblings(self, depth, parent):
        return [v for _, v in self.children.get((depth, parent), [])]


def child_counts(ell, K, eps):
    eps = Fraction(eps)
    return tuple(math.ceil(Fraction(ell) / eps * Fraction(k)) for k in K)


def build_tree(ell, K, eps, seed):
    counts = child_counts(ell, K, eps)
    if min(counts) < 1:
        raise ValueError("child counts must be >= 1")
    if sum(math.log2(c) for c in counts) > 62:
        raise ScaleError("packed node ids need more than 62 bits")
    return DecodeTree(ell, tuple(K), Fraction(eps), seed, counts)


def percolate(tree, x, row=0):
    """Descend to x's leaf; Blocked if the leaf already holds a pebble."""
    leaf = tree.path(x)[-1]
    if (tree.ell, leaf) in tree.pebbles:
        return Blocked
    tree.place(tree.ell, leaf, row, x[-1])
    return leaf


# -- per-coordinate inverses -----------------------------------------------

@dataclass(frozen=True)
class Coord:
    """What the decoder knows about one sender: its fingerprint and capacity."""
    fp: object
    kappa: int

    @property
    def n(self):
        return self.fp.n

    def invert(self, B):
        """g_j(B, y_j) as an int, or None."""
        if not len(B):
            return None
        try:
            return Inverter(self.fp.n, self.fp.k, self.fp.e, np.asarray(B, dtype=np.int64))(self.fp)
        except NotFound:
            return None

    def consistent(self, values):
        """Mask of values that g_j could ever output for this fingerprint."""
        values = np.asarray(values, dtype=np.int64)
        fp = self.fp
        mask = values % fp.tag.p == fp.tag.residue
        idx = np.flatnonzero(mask)
        if len(idx):
            f = conductor_for(fp.n, fp.k, fp.e)
            hit = (f.rows(values[idx]) == fp.body).any(axis=1)
            mask[idx[~hit]] = False
        return mask


def coords_from_codes(codes):
    out = []
    for c in codes:
        e, k, fp = parse_code(c)
        out.append(Coord(fp, k))
    return out


def slack_bits(ell, eps):
    """Integer L = ceil(log2(ell/eps)) used to size the suspect set."""
    return clog2(Fraction(ell) / Fraction(eps))


def tree_capacities(coords, ell, eps):
    L = slack_bits(ell, eps)
    return tuple(Fraction(2) ** (c.kappa - L) for c in coords)


# -- reference decoder -----------------------------------------------------

class MultiDecoder:
    """Online pebble decoder over one random tree.

    push() processes one suspect tuple (percolation, then bubble-up); the
    first tuple to reach the root is committed and never changes.
    """

    def __init__(self, coords, eps, seed):
        self.coords = list(coords)
        self.ell = len(coords)
        K = tree_capacities(coords, self.ell, eps)
        self.tree = build_tree(self.ell, K, eps, seed)
        for c, cnt in zip(self.coords, self.tree.counts):
            assert cnt <= 1 << c.kappa, "sibling capacity exceeds the inverse's capacity"
        self.rows = []
        self.fates = []

    @property
    def committed(self):
        return self.tree.root

    def push(self, x):
        x = tuple(int(v) for v in x)
        row = len(self.rows)
        self.rows.append(x)
        t = self.tree
        ids = t.path(x)
        if (t.ell, ids[-1]) in t.pebbles:
            self.fates.append(None)        # blocked at percolation
            return t.root
        t.place(t.ell, ids[-1], row, x[-1])
        depth = t.ell
        while depth >= 1:
            parent = ids[depth - 2] if depth >= 2 else 0
            B = t.siblings(depth, parent)
            if self.coords[depth - 1].invert(B) != x[depth - 1]:
                break
            depth -= 1
            if depth == 0:
                assert t.root is None, "root already committed"
                t.root = row
            else:
                t.place(depth, ids[depth - 1], row, x[depth - 1])
        self.fates.append(depth)
        return t.root

    def run(self, S):
        for x in S:
            before = self.tree.root
            now = self.push(x)
            assert before is None or now == before
        return self.tree.root

    def result(self):
        if self.tree.root is None:
            raise NotFound("no tuple reached the root")
        return self.rows[self.tree.root]


# -- indexed evaluator -----------------------------------------------------

class SuspectIndex:
    """Column store of a suspect tuple stream with per-coordinate value indexes.

    Built once per suspect set; every decode of it (any tree, any
    fingerprints) reuses the indexes.
    """

    def __init__(self, columns):
        self.cols = [np.asarray(c, dtype=np.int64) for c in columns]
        self.ell = len(self.cols)
        self.N = len(self.cols[0]) if self.cols else 0
        self.uniq, self.inv, self.order, self.starts = [], [], [], []
        for c in self.cols:
            u, inv = np.unique(c, return_inverse=True)
            order = np.argsort(inv, kind="stable")
            starts = np.r_[0, np.cumsum(np.bincount(inv, minlength=len(u)))]
            self.uniq.append(u)
            self.inv.append(inv)
            self.order.append(order)
            self.starts.append(starts)

    @classmethod
    def from_tuples(cls, S, ell=None):
        S = list(S)
        if not S:
            return cls([np.zeros(0, dtype=np.int64)] * (ell or 1))
        cols = list(zip(*[[int(BitString(v).to_int()) if not isinstance(v, (int, np.integer)) else int(v)
                           for v in z] for z in S]))
        return cls(cols)

    def rows_with(self, j, uidx):
        """Rows (sorted) whose j-th coordinate is one of the given unique indexes."""
        uidx = np.asarray(uidx, dtype=np.int64)
        if not len(uidx):
            return np.zeros(0, dtype=np.int64)
        st, order = self.starts[j], self.order[j]
        parts = [order[st[u]:st[u + 1]] for u in uidx]
        return np.sort(np.concatenate(parts))

    def tuple(self, row):
        return tuple(int(c[row]) for c in self.cols)


class FastDecode:
    """Evaluates the pebble decoder's committed output without replaying S.

    Only tuples whose coordinates pass the fingerprint checks can climb
    above a leaf, so the evaluator follows those and materialises the tree
    groups they touch.  Produces exactly the reference decoder's answer.
    """

    def __init__(self, index, coords, eps, seed):
        self.ix = index
        self.coords = list(coords)
        self.ell = len(coords)
        K = tree_capacities(coords, self.ell, eps)
        self.tree = build_tree(self.ell, K, eps, seed)
        self.counts = self.tree.counts
        self.cons = [c.consistent(u) for c, u in zip(self.coords, index.uniq)]
        self._rows_under = {}
        self._pebble = {}
        self._reach = {}
        self._ids = {}
        self._tail = {}
        self._group = {}
        # depth-1 children of every distinct first coordinate
        c1 = child_hash(self.tree.seed, 1, np.zeros(len(index.uniq[0]), dtype=np.int64),
                        index.uniq[0], self.counts[0])
        self._c1 = c1
        self._c1_order = np.argsort(c1, kind="stable")
        self._c1_sorted = c1[self._c1_order]

    # tree geometry
    def child_ids(self, depth, rows):
        """Packed depth-`depth` node ids of the given rows (vectorised)."""
        rows = np.asarray(rows, dtype=np.int64)
        ids = self._c1[self.ix.inv[0][rows]]
        for j in range(2, depth + 1):
            cnt = self.counts[j - 1]
            ids = ids * cnt + child_hash(self.tree.seed, j, ids, self.ix.cols[j - 1][rows], cnt)
        return ids

    def ids(self, row):
        if row not in self._ids:
            self._ids[row] = [int(self.child_ids(j, [row])[0]) for j in range(1, self.ell + 1)]
        return self._ids[row]

    def group(self, depth, parent):
        """(rows, child ids, order by id) for all rows under a depth-(depth-1) node, depth >= 2."""
        key = (depth, parent)
        if key not in self._group:
            prow = self.rows_under(depth - 1, parent)
            cnt = self.counts[depth - 1]
            ids = parent * cnt + child_hash(self.tree.seed, depth, np.full(len(prow), parent, dtype=np.int64),
                                            self.ix.cols[depth - 1][prow], cnt)
            order = np.argsort(ids, kind="stable")
            self._group[key] = (prow, ids, order, ids[order])
        return self._group[key]

    def rows_under(self, depth, node):
        key = (depth, node)
        if key in self._rows_under:
            return self._rows_under[key]
        if depth == 1:
            lo = np.searchsorted(self._c1_sorted, node, "left")
            hi = np.searchsorted(self._c1_sorted, node, "right")
            rows = self.ix.rows_with(0, self._c1_order[lo:hi])
        else:
            prow, ids, order, sid = self.group(depth, node // self.counts[depth - 1])
            lo, hi = np.searchsorted(sid, node, "left"), np.searchsorted(sid, node, "right")
            rows = prow[order[lo:hi]]
        self._rows_under[key] = rows
        return rows

    def tail_consistent(self, rows, j):
        """Rows consistent on coordinates j..ell-1 (0-based)."""
        m = np.ones(len(rows), dtype=bool)
        for i in range(j, self.ell):
            m &= self.cons[i][self.ix.inv[i][rows]]
        return rows[m]

    def tail_rows(self, j):
        """All rows consistent on coordinates j..ell-1, via the smallest index."""
        if j not in self._tail:
            best = None
            for i in range(j, self.ell):
                u = np.flatnonzero(self.cons[i])
                size = int((self.ix.starts[i][u + 1] - self.ix.starts[i][u]).sum())
                if best is None or size < best[0]:
                    best = (size, i, u)
            rows = self.ix.rows_with(best[1], best[2])
            self._tail[j] = self.tail_consistent(rows, j)
        return self._tail[j]

    # pebbles
    def pebble(self, depth, node):
        key = (depth, node)
        if key not in self._pebble:
            rows = self.rows_under(depth, node)
            peb = None
            if depth == self.ell:
                peb = int(rows[0]) if len(rows) else None
            else:
                for w in self.tail_consistent(rows, depth):
                    if self.reach(int(w), depth):
                        peb = int(w)
                        break
            self._pebble[key] = peb
        return self._pebble[key]

    def siblings(self, depth, parent, t):
        """j-th coordinates of pebbles on parent's children placed up to time t."""
        if depth == self.ell:
            prow, ids, _, _ = self.group(depth, parent)
            _, first = np.unique(ids, return_index=True)
            pebs = np.sort(prow[first])
            pebs = pebs[pebs <= t]
        else:
            if depth == 1:
                rows = self.tail_rows(1)
            else:
                rows = self.tail_consistent(self.rows_under(depth - 1, parent), depth)
            rows = rows[rows <= t]
            pebs = []
            for nid in np.unique(self.child_ids(depth, rows)):
                p = self.pebble(depth, int(nid))
                if p is not None and p <= t:
                    pebs.append(p)
            pebs = np.sort(np.array(pebs, dtype=np.int64))
        B = self.ix.cols[depth - 1][pebs]
        assert len(np.unique(B)) == len(B), "siblings share a coordinate"
        assert len(B) <= self.counts[depth - 1]
        return B

    def reach(self, w, depth):
        """Does tuple w get placed on its depth-`depth` node when it arrives?"""
        key = (w, depth)
        if key not in self._reach:
            ids = self.ids(w)
            if depth == self.ell:
                ok = self.pebble(self.ell, ids[-1]) == w
            else:
                ok = False
                if self.reach(w, depth + 1):
                    parent = ids[depth - 1] if depth >= 1 else 0
                    B = self.siblings(depth + 1, parent, w)
                    ok = self.coords[depth].invert(B) == int(self.ix.cols[depth][w])
            self._reach[key] = ok
        return self._reach[key]

    def fate(self, w):
        """None if blocked at percolation, else the smallest depth reached."""
        if not self.reach(w, self.ell):
            return None
        d = self.ell
        while d > 0 and self.reach(w, d - 1):
            d -= 1
        return d

    def root(self):
        for w in self.tail_rows(0):
            if self.reach(int(w), 0):
                return int(w)
        return None


# -- front end -------------------------------------------------------------

def _as_index(S, ell):
    if isinstance(S, SuspectIndex):
        return S
    return SuspectIndex.from_tuples(S, ell)


def decode_once(coords, S, eps, seed, engine="auto"):
    """One probabilistic decode: the committed row, or None."""
    ell = len(coords)
    if ell == 1:
        ix = _as_index(S, 1)
        vals = ix.cols[0]
        v = coords[0].invert(vals)
        if v is None:
            return None
        return int(np.flatnonzero(vals == v)[0])
    if engine == "auto":
        engine = "fast" if isinstance(S, SuspectIndex) else "reference"
    if engine == "reference":
        dec = MultiDecoder(coords, eps, seed)
        rows = S if not isinstance(S, SuspectIndex) else [S.tuple(i) for i in range(S.N)]
        dec.run(tuple(int(BitString(v).to_int()) if not isinstance(v, (int, np.integer)) else int(v)
                      for v in z) for z in rows)
        return dec.tree.root
    return FastDecode(_as_index(S, ell), coords, eps, seed).root()


def decode_multi(codes, S, eps_exp, mode="probabilistic", trials=MAJORITY_TRIALS, seed=0, engine="auto"):
    """Recover the tuple behind ell codes from a suspect stream S of tuples.

    probabilistic: one random tree drawn from `seed`.
    majority: plurality over `trials` independent trees.
    Returns a tuple of BitStrings; NotFound if nothing is committed.
    """
    coords = coords_from_codes(codes)
    eps = Fraction(1, 1 << eps_exp)
    ix = _as_index(S, len(coords))
    if mode == "probabilistic":
        row = decode_once(coords, ix if engine != "reference" else S, eps, mix_seed("tree", seed, 0), engine)
    elif mode == "majority":
        votes = Counter()
        for t in range(trials):
            votes[decode_once(coords, ix if engine != "reference" else S, eps, mix_seed("tree", seed, t), engine)] += 1
        # highest count wins; ties go to a real answer, then the earliest row
        ranked = sorted(votes.items(), key=lambda kv: (-kv[1], kv[0] is None, kv[0] or 0))
        row = ranked[0][0]
    else:
        raise ValueError("mode must be probabilistic or majority")
    if row is None:
        raise NotFound("no tuple reached the root")
    return tuple(BitString.from_int(v, c.n) for v, c in zip(ix.tuple(row), coords))


def suspect_thresholds(codes, eps_exp):
    """Per-sender rates kappa_j - L defining the decoder's suspect set."""
    coords = coords_from_codes(codes)
    L = slack_bits(len(coords), Fraction(1, 1 << eps_exp))
    return tuple(c.kappa - L for c in coords)


def sw_suspects(D, thresholds, ell=None):
    """Suspect tuples for a decompressor view, as a SuspectIndex."""
    V = as_view(D, ell)
    if hasattr(V, "suspects_columns"):
        return SuspectIndex(V.suspects_columns(thresholds))
    return SuspectIndex.from_tuples(V.suspects(thresholds), V.ell)


def sw_decompress(D, codes, eps_exp, mode="probabilistic", trials=MAJORITY_TRIALS, seed=0, index=None):
    thr = suspect_thresholds(codes, eps_exp)
    ix = index if index is not None else sw_suspects(D, thr, len(codes))
    return decode_multi(codes, ix, eps_exp, mode, trials, seed)


def sw_targets(rates, eps_exp, ns):
    """Code lengths m_j so that kappa_j >= rate_j + 1 + L."""
    from .compressor import min_target
    ell = len(rates)
    L = slack_bits(ell, Fraction(1, 1 << eps_exp))
    return tuple(min_target(eps_exp, n, r + 1 + L) for r, n in zip(rates, ns))


def line_point_rates(w):
    return (3 * w // 2 + 1, 3 * w // 2 + 1)


# -- two-source product inverse --------------------------------------------

def balanced_partition(S, K2):
    """Parts R_1..R_K2: pairs sharing a first coordinate go to distinct
    smallest parts (lowest index on ties)."""
    parts = [[] for _ in range(K2)]
    groups = {}
    for z in S:
        groups.setdefault(z[0], []).append(z)
    for x1, zs in groups.items():
        if len(zs) > K2:
            raise ValueError("first-coordinate slice larger than K2")
        order = sorted(range(K2), key=lambda i: (len(parts[i]), i))
        for z, i in zip(zs, order):
            parts[i].append(z)
    return parts


def two_source_invert(g1, g2, S, K1, K2, y1, y2):
    """Product inverse from two single inverses g(list, y) -> element or None."""
    S = [tuple(z) for z in S]
    if len(S) > K1 * K2:
        raise ValueError("#S > K1*K2")
    by2, by1 = Counter(z[1] for z in S), Counter(z[0] for z in S)
    if by2 and max(by2.values()) > K1:
        raise ValueError("some column slice exceeds K1")
    if by1 and max(by1.values()) > K2:
        raise ValueError("some row slice exceeds K2")
    parts = balanced_partition(S, K2)
    for R in parts:
        assert len(R) <= K1 and len({z[0] for z in R}) == len(R)
    part_of = {z: i for i, R in enumerate(parts) for z in R}
    T = []
    col_cache, part_cache = {}, {}
    for z in S:
        x1, x2 = z
        if x2 not in col_cache:
            col_cache[x2] = g1([w[0] for w in S if w[1] == x2], y1)
        i = part_of[z]
        if i not in part_cache:
            part_cache[i] = g1([w[0] for w in parts[i]], y1)
        if part_cache[i] == x1 and col_cache[x2] == x1:
            T.append(z)
    assert len(T) <= K2
    T2 = [z[1] for z in T]
    v = g2(T2, y2)
    if v is None:
        return None
    for z in T:
        if z[1] == v:
            return z
    return None


# -- SW1 instance files ----------------------------------------------------

@dataclass
class SwInstance:
    ell: int
    eps_exp: int
    targets: tuple
    tuples: list
    D: object = None

    def dumps(self):
        lines = ["SW1 %d %d" % (self.ell, self.eps_exp), " ".join(str(m) for m in self.targets)]
        for z in self.tuples:
            lines.append(" ".join(hexbits(v) for v in z))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text, D=None):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        head = lines[0].split()
        if len(head) != 3 or head[0] != "SW1":
            raise ValueError("not an SW1 file")
        ell, e = int(head[1]), int(head[2])
        targets = tuple(int(t) for t in lines[1].split())
        if len(targets) != ell:
            raise ValueError("target line needs %d entries" % ell)
        tuples = []
        for ln in lines[2:]:
            parts = ln.split()
            if len(parts) != ell:
                raise ValueError("tuple line needs %d entries: %r" % (ell, ln))
            tuples.append(tuple(parse_hexbits(p) for p in parts))
        return cls(ell, e, targets, tuples, D)
