import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chi2

from tlcomp.bitcore import BitString, line_point_instance, mix_seed
from tlcomp.condensers import ScaleError
from tlcomp.compressor import INFINITE, ToyDecompressor, compress, min_target
from tlcomp.distributed import (Blocked, LinePointSW, MultiDecoder, SwInstance, as_view, balanced_partition,
                                build_tree, child_counts, coords_from_codes, decode_multi, decode_once,
                                decode_tuple_set, encode_tuple_set, line_point_rates, percolate, random_sw_toy,
                                small_slices_check, suspect_thresholds, sw_check, sw_decompress, sw_suspects,
                                sw_targets, sw_toy_rates, sw_violations, two_source_invert)
from tlcomp.hashing import NotFound
from tlcomp.invertible import invert_full


def bs(v, n):
    return BitString.from_int(v, n)


def brute_complexity(D, x, J):
    """Shortest program printing the encoded x_J under the encoded rest."""
    ell = len(x)
    rest = [j for j in range(ell) if j not in J]
    want = {j: x[j] for j in J}
    cond = encode_tuple_set({j: x[j] for j in rest}) if rest else None
    best = INFINITE
    for (p, c), out in D.entries.items():
        if c == cond and decode_tuple_set(out) == want:
            best = min(best, len(p))
    return best


def test_tuple_set_encoding_round_trip():
    items = {0: bs(5, 4), 2: BitString(""), 3: bs(1, 1)}
    assert decode_tuple_set(encode_tuple_set(items)) == items


def test_sw_check_single_sender():
    D, T = random_sw_toy(1, 1, 6, 10)
    for x in T:
        c = as_view(D, 1).complexity(x, (0,))
        for k in range(0, 8):
            assert sw_check(D, x, (k,)) == (c < k)


def test_sw_check_line_point():
    w = 8
    V = LinePointSW(w)
    (a, b), (u, v) = line_point_instance(w, 3)
    x = (bs(a.value << w | b.value, 2 * w), bs(u.value << w | v.value, 2 * w))
    assert sw_check(V, x, line_point_rates(w))
    assert not sw_check(V, x, (w - 1, 3 * w // 2 + 1))
    assert (0,) in sw_violations(V, x, (w - 1, 3 * w // 2 + 1))


def test_line_point_tabulation_agrees():
    w = 4
    V, D = LinePointSW(w), LinePointSW(w).tabulate()
    rng = random.Random(0)
    for _ in range(60):
        L, P = bs(rng.getrandbits(2 * w), 2 * w), bs(rng.getrandbits(2 * w), 2 * w)
        for J in [(0,), (1,), (0, 1)]:
            assert as_view(D, 2).complexity((L, P), J) == V.complexity((L, P), J)


def test_sw_check_matches_brute_force():
    for seed in range(6):
        ell = 2 + seed % 2
        D, T = random_sw_toy(seed, ell, 4, 12)
        rates = sw_toy_rates(D, T)
        V = as_view(D, ell)
        for x in T:
            for J in itertools.chain.from_iterable(itertools.combinations(range(ell), r) for r in range(1, ell + 1)):
                assert V.complexity(x, J) == brute_complexity(D, x, J)
                assert V.complexity(x, J) <= sum(rates[j] for j in J)
            for k in itertools.product(range(4), repeat=ell):
                direct = all(brute_complexity(D, x, J) < sum(k[j] for j in J)
                             for r in range(1, ell + 1) for J in itertools.combinations(range(ell), r))
                assert sw_check(D, x, k) == direct


def test_sw_check_scale_error():
    with pytest.raises(ScaleError):
        sw_check(ToyDecompressor(), tuple(BitString("0") for _ in range(21)), (1,) * 21)


def test_small_slices_examples():
    grid = list(itertools.product([0, 1], repeat=2))
    assert small_slices_check(grid, (2, 2)).verified
    diag = [(i, i) for i in range(5)]
    assert small_slices_check(diag, (1, 5)).verified
    bad = small_slices_check(grid, (1, 2))
    assert not bad.verified and bad.witness[2] > bad.witness[3]


def test_constraint_sets_have_small_slices():
    for seed in range(10):
        ell = 2 + seed % 2
        D, T = random_sw_toy(seed, ell, 4, 16)
        for k in itertools.product(range(1, 4), repeat=ell):
            S = [x for x in T if sw_check(D, x, k)]
            assert small_slices_check(S, tuple(2 ** v for v in k)).verified


def test_tree_child_counts_and_determinism():
    t = build_tree(2, (2, 2), Fraction(1, 2), 7)
    assert t.counts == (8, 8) == child_counts(2, (2, 2), Fraction(1, 2))
    u = build_tree(2, (2, 2), Fraction(1, 2), 7)
    for x in itertools.product(range(30), repeat=2):
        assert t.path(x) == u.path(x)


def test_child_uniformity():
    t = build_tree(2, (2, 2), Fraction(1, 2), 11)
    obs = np.bincount([t.child(1, 0, v) for v in range(10 ** 4)], minlength=8)
    stat = ((obs - 1250.0) ** 2 / 1250.0).sum()
    assert stat < chi2.ppf(0.999, 7)


def test_first_tuple_never_blocked():
    for seed in range(200):
        t = build_tree(3, (1, 2, 4), Fraction(1, 4), seed)
        assert percolate(t, (seed, 2 * seed, 3)) is not Blocked


def test_pair_collision_probability():
    ell, K, eps = 2, (2, 2), Fraction(1, 2)
    p = 1 / math.prod(child_counts(ell, K, eps))
    trials = 40000
    hits = sum(build_tree(ell, K, eps, s).path((1, 2))[-1] == build_tree(ell, K, eps, s).path((5, 9))[-1]
               for s in range(trials))
    assert abs(hits / trials - p) <= 4 * math.sqrt(p * (1 - p) / trials)


def test_blocking_rate_on_small_slices():
    ell, K, eps = 2, (4, 4), Fraction(1, 8)
    S = list(itertools.product(range(4), range(4)))
    assert small_slices_check(S, K).verified
    trials, blocked = 3000, 0
    for s in range(trials):
        t = build_tree(ell, K, eps, s)
        for x in S[:-1]:
            percolate(t, x)
        blocked += percolate(t, S[-1]) is Blocked
    bound = float(eps) * math.e
    assert blocked / trials <= bound + 2 * math.sqrt(bound * (1 - bound) / trials)


def _toy_codes(seed, ell, eps_exp, pick):
    D, T = random_sw_toy(seed, ell, 6, 24)
    ms = sw_targets(sw_toy_rates(D, T), eps_exp, (6,) * ell)
    x = T[pick % len(T)]
    codes = [compress(x[j], eps_exp, ms[j], mix_seed("c", seed, pick, j)) for j in range(ell)]
    return D, T, x, codes


def test_single_sender_matches_invert_full():
    for s in range(20):
        D, T, x, codes = _toy_codes(s, 1, 3, s)
        thr = suspect_thresholds(codes, 3)
        S = [z[0] for z in as_view(D, 1).suspects(thr)]
        try:
            want = invert_full(S, coords_from_codes(codes)[0].fp)
        except NotFound:
            want = None
        try:
            got = sw_decompress(D, codes, 3, seed=s)[0]
        except NotFound:
            got = None
        assert got == want


def test_fast_and_reference_decoders_agree():
    for s in range(25):
        D, T, x, codes = _toy_codes(s, 2 + s % 2, 4, 3 * s)
        ell = len(x)
        S = as_view(D, ell).suspects(suspect_thresholds(codes, 4))
        ix = sw_suspects(D, suspect_thresholds(codes, 4), ell)
        coords = coords_from_codes(codes)
        for tree_seed in range(3):
            ref = decode_once(coords, S, Fraction(1, 16), tree_seed, engine="reference")
            fast = decode_once(coords, ix, Fraction(1, 16), tree_seed, engine="fast")
            assert ref == fast


def test_root_commitment_is_monotone():
    D, T, x, codes = _toy_codes(3, 3, 4, 1)
    S = as_view(D, 3).suspects(suspect_thresholds(codes, 4))
    coords = coords_from_codes(codes)
    dec = MultiDecoder(coords, Fraction(1, 16), 5)
    seen = None
    for z in S:
        r = dec.push(tuple(BitString(v).to_int() for v in z))
        assert seen is None or r == seen
        seen = r


def test_random_toy_success_three_senders():
    ell, e, trials = 3, 5, 120
    D, T = random_sw_toy(2, ell, 4, 20)
    ms = sw_targets(sw_toy_rates(D, T), e, (4,) * ell)
    ok, ix = 0, None
    for t in range(trials):
        x = T[t % len(T)]
        codes = [compress(x[j], e, ms[j], mix_seed("r3", t, j)) for j in range(ell)]
        thr = suspect_thresholds(codes, e)
        assert sw_check(D, x, tuple(v + 1 for v in sw_toy_rates(D, T)))
        ix = ix or sw_suspects(D, thr, ell)
        try:
            ok += decode_multi(codes, ix, e, seed=t) == x
        except NotFound:
            pass
    bound = 1 - 8 * ell * 2.0 ** -e
    assert ok / trials >= bound - 2 * math.sqrt(max(bound, 0) * (1 - max(bound, 0)) / trials)
    assert ok / trials >= 0.9


def test_majority_mode():
    D, T, x, codes = _toy_codes(4, 2, 5, 2)
    assert sw_decompress(D, codes, 5, mode="majority", trials=5) == x
    with pytest.raises(ValueError):
        sw_decompress(D, codes, 5, mode="vote")


def test_line_point_decode_small_run():
    w, e = 8, 3
    V = LinePointSW(w)
    ms = sw_targets(line_point_rates(w), e, (16, 16))
    assert ms[0] >= min_target(e, 16, 3 * w // 2 + 1)
    ok, ix = 0, None
    for t in range(12):
        (a, b), (u, v) = line_point_instance(w, t)
        x = (bs(a.value << w | b.value, 16), bs(u.value << w | v.value, 16))
        codes = [compress(x[j], e, ms[j], mix_seed("lp", t, j)) for j in range(2)]
        ix = ix or sw_suspects(V, suspect_thresholds(codes, e))
        try:
            ok += decode_multi(codes, ix, e, seed=t) == x
        except NotFound:
            pass
    assert ok >= 9


def test_balanced_partition_property():
    rng = random.Random(3)
    for _ in range(200):
        K1, K2 = rng.randint(1, 4), rng.randint(1, 4)
        S = set()
        for _ in range(K1 * K2):
            S.add((rng.randrange(6), rng.randrange(6)))
        S = sorted(S)
        if max(sum(z[0] == a for z in S) for a, _ in S) > K2:
            continue
        parts = balanced_partition(S, K2)
        assert sorted(z for R in parts for z in R) == S
        for R in parts:
            assert len({z[0] for z in R}) == len(R)
            assert len(R) <= math.ceil(len(S) / K2) + 1


def _seeded_inverse(table):
    """F(x, d) = (d, table[x][d]); g picks the unique list element hitting y."""
    def g(B, y):
        d, v = y
        hit = [z for z in B if table[z][d] == v]
        return hit[0] if len(hit) == 1 else None
    return g


def _list_failure(table, D, K, universe):
    worst = Fraction(0)
    for size in range(1, K + 1):
        for B in itertools.combinations(universe, size):
            for x in B:
                bad = sum(sum(table[z][d] == table[x][d] for z in B) > 1 for d in range(D))
                worst = max(worst, Fraction(bad, D))
    return worst


def test_two_source_exhaustive_failure():
    rng = random.Random(4)
    D, Y, K1, K2 = 8, 32, 2, 2
    U = range(6)
    t1 = [[rng.randrange(Y) for _ in range(D)] for _ in U]
    t2 = [[rng.randrange(Y) for _ in range(D)] for _ in U]
    eps = max(_list_failure(t1, D, K1, U), _list_failure(t2, D, K2, U))
    assert eps < Fraction(1, 3)
    g1, g2 = _seeded_inverse(t1), _seeded_inverse(t2)
    for _ in range(60):
        S = sorted({(rng.randrange(6), rng.randrange(6)) for _ in range(K1 * K2)})
        try:
            for x in S:
                fails = 0
                for d1, d2 in itertools.product(range(D), repeat=2):
                    got = two_source_invert(g1, g2, S, K1, K2, (d1, t1[x[0]][d1]), (d2, t2[x[1]][d2]))
                    fails += got != x
                assert Fraction(fails, D * D) <= 3 * eps
        except ValueError:
            continue


def test_two_source_singleton_and_domain():
    g = lambda B, y: B[0] if B else None
    assert two_source_invert(g, g, [(3, 4)], 1, 1, None, None) == (3, 4)
    with pytest.raises(ValueError):
        two_source_invert(g, g, [(1, 1), (1, 2), (2, 1)], 1, 2, None, None)


def test_sw1_round_trip():
    inst = SwInstance(2, 3, (40, 41), [(bs(5, 4), bs(9, 6)), (BitString(""), bs(1, 1))])
    back = SwInstance.loads(inst.dumps())
    assert (back.ell, back.eps_exp, back.targets, back.tuples) == (2, 3, (40, 41), inst.tuples)
    with pytest.raises(ValueError):
        SwInstance.loads("SW2 1 1\n5\n")
