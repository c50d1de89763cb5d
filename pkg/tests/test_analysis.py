import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tlcomp.analysis import (LB_LOG, BoundReport, blocking_set, compressor_bound_reports, condenser_bound_reports,
                             core_outputs, degree_lb_check, deterministic_overhead_lb, first_match_inverse,
                             hoeffding, hoeffding_full, overhead_lb, overhead_lb_check, randomness_delta_threshold,
                             randomness_lb_check, reduce_randomness, render_reports, sampler_draw_check,
                             sampler_round)
from tlcomp.compressor import FP_EXTRA_EXP, choose_k, overhead
from tlcomp.condensers import excess, from_array, identity_table, random_condenser


def test_overhead_lb_values():
    assert overhead_lb(256, 0.25) == pytest.approx(10 - math.log2(10) - 8)
    assert overhead_lb(256, 0.25) < 0
    assert overhead_lb(2 ** 16, 2 ** -10) == pytest.approx(26 - math.log2(26) - 8)
    assert overhead_lb(4, 0.25) is None and overhead_lb(256, 0.5) is None
    assert overhead_lb(8, 0.25) is not None
    assert overhead_lb_check(4, 0.25, 3).applicable is False


def test_measured_overhead_respects_lb():
    for n in (16, 24, 40, 62):
        for e in (2, 3, 4):
            if overhead_lb(n, 2.0 ** -e) is None:
                continue
            for m in range(30, 300, 7):
                d = overhead(e, m, n)
                if d is not None:
                    assert overhead_lb_check(n, 2.0 ** -e, d).satisfied


def test_randomness_bound_special_case():
    # r = 0 and eps = 1/2: 1 >= (n - 2) / (delta + 4), i.e. delta >= n - 6
    for n in range(4, 80):
        assert randomness_delta_threshold(n, 0, Fraction(1, 2)) == n - 6
        assert randomness_lb_check(n, 0, Fraction(1, 2), n - 6).satisfied
        assert not randomness_lb_check(n, 0, Fraction(1, 2), n - 7).satisfied
    assert deterministic_overhead_lb(40) == 39 >= randomness_delta_threshold(40, 0, Fraction(1, 2))


def test_randomness_bound_affine_in_n():
    f = lambda n: randomness_delta_threshold(n, 0, Fraction(1, 2))
    assert (f(0), f(1)) == (-6, -5)
    assert all(f(n) == f(0) + n * (f(1) - f(0)) for n in range(200))


def test_randomness_not_applicable_above_half():
    assert randomness_lb_check(10, 0, 0.75, 1).applicable is False


def test_compressor_configs_respect_both_bounds():
    for n in (8, 16, 24, 40):
        for e in (1, 2, 3):
            for m in range(20, 200, 5):
                k = choose_k(e, m, n)
                if k is None:
                    continue
                for rep in compressor_bound_reports(n, e, m, k, e + FP_EXTRA_EXP):
                    assert rep.satisfied is not False


def test_degree_bound_tiny_counterexample():
    # n=8, K=4, #Y=16, D=1, eps=1/2: 1 < 6/5, so no such condenser exists
    rng = np.random.default_rng(0)
    for _ in range(30):
        f = from_array(rng.integers(0, 16, size=(256, 1)), Y=16)
        rep = degree_lb_check(f, 4, 0.5)
        assert rep.bound == Fraction(6, 5) and rep.observed == 1 and rep.satisfied is False
        # a witness set: four inputs sharing one output has excess 3/4 > 1/2
        col = f.table[:, 0]
        y = np.bincount(col).argmax()
        S = np.flatnonzero(col == y)[:4]
        assert len(S) == 4
        law = np.bincount(f.table[S].ravel(), minlength=16) / (4 * f.D)
        assert excess(law, 0.25) == 0.75 > 0.5


def test_degree_bound_identity_not_applicable():
    assert degree_lb_check(identity_table(4), 4, 0.25).applicable is False


def test_random_condensers_satisfy_degree_bound():
    for n, K, eps in [(4, 4, 0.5), (6, 4, 0.25), (8, 8, 0.25), (10, 16, 0.125)]:
        f = random_condenser(n, K, eps)
        for Kc in (2, 4, 8, 16):
            if Kc <= K:
                assert condenser_bound_reports(f, Kc, eps)[0].satisfied is not False


def test_report_rendering():
    rep = BoundReport("degree", {"n": 4}, Fraction(6, 5), Fraction(1))
    assert rep.satisfied is False and rep.cells()[-1] == "FAIL"
    out = render_reports([rep, BoundReport("x", {}, None, None, applicable=False)])
    assert out.splitlines()[0].startswith("formula") and "n/a" in out


def test_hoeffding_examples():
    assert hoeffding(1, 2) == 0.25
    assert hoeffding(1, 4) == 1 / 256
    with pytest.raises(ValueError):
        hoeffding(2, 2)


def binom_tail(N, p, nu):
    return sum(math.comb(N, i) * p ** i * (1 - p) ** (N - i) for i in range(nu, N + 1))


def test_hoeffding_tail_simulation():
    rng = np.random.default_rng(1)
    for N, p in [(40, 0.05), (12, 0.1), (200, 0.01)]:
        mu = N * p
        Z = (rng.random((10 ** 4, N)) < p).sum(axis=1)
        for nu in range(math.floor(mu) + 1, N + 1):
            bound = hoeffding_full(mu, nu, N)
            assert binom_tail(N, p, nu) <= bound + 1e-12
            assert (Z >= nu).mean() <= bound + 2 * math.sqrt(bound / 10 ** 4) + 1e-12


def test_short_hoeffding_form_can_fail():
    # exact binomial tail above (mu/nu)^nu: the short form is not a bound on its own
    assert binom_tail(40, 0.05, 3) > hoeffding(2.0, 3)
    assert binom_tail(40, 0.025, 2) > hoeffding(1.0, 2)
    # it is exact when there are only nu variables
    assert binom_tail(3, 0.5, 3) == pytest.approx(hoeffding(1.5, 3))


def _sampler_ok(mu, nu, d, b):
    G = 2 ** (d + b)
    assert sum(nu.values()) == 1
    assert all((v * G).denominator == 1 for v in nu.values())
    for y, v in nu.items():
        assert v <= (1 + Fraction(3, 2 ** b)) * Fraction(mu[y])


def test_sampler_examples():
    nu = sampler_round({0: Fraction(1, 2), 1: Fraction(1, 2)}, 1, 0)
    assert nu == {0: Fraction(1, 2), 1: Fraction(1, 2)}
    mu = {0: Fraction(3, 4), 1: Fraction(1, 12), 2: Fraction(1, 12), 3: Fraction(1, 12)}
    nu = sampler_round(mu, 2, 0)
    _sampler_ok(mu, nu, 2, 0)
    assert all(nu[y] <= 4 * mu[y] for y in nu)
    with pytest.raises(ValueError):
        sampler_round({i: Fraction(1, 5) for i in range(5)}, 2, 1)


def test_sampler_random_measures():
    rng = random.Random(2)
    for _ in range(500):
        d, b = rng.randint(0, 4), rng.randint(0, 4)
        size = rng.randint(1, 2 ** d)
        w = [rng.randint(1, 50) for _ in range(size)]
        mu = {i: Fraction(v, sum(w)) for i, v in enumerate(w)}
        nu = sampler_round(mu, d, b)
        _sampler_ok(mu, nu, d, b)
        assert sampler_draw_check(nu, d + b) == nu


def test_sampler_bound_tight_case():
    mu = {0: Fraction(126, 1000), 1: Fraction(124, 1000), 2: Fraction(124, 1000), 3: Fraction(626, 1000)}
    _sampler_ok(mu, sampler_round(mu, 2, 3), 2, 3)


def test_core_outputs():
    P = {0: Fraction(1, 2), 1: Fraction(1, 4), 2: Fraction(1, 8), 3: Fraction(1, 8)}
    assert core_outputs(P, Fraction(1, 4)) == {0, 1}
    assert core_outputs(P, Fraction(1, 8)) == {0, 1, 3}
    assert core_outputs(P, 0) == {0, 1, 2, 3}


def test_reduce_injective_has_no_heavy_inputs():
    dists = {x: {x: Fraction(1)} for x in range(8)}
    g = lambda S, y: y if y in S else None
    R = reduce_randomness(dists, g, 2, 8, Fraction(1, 8))
    assert R.heavy == [] and R.bits == 2 + 3
    for x in range(8):
        assert R.distribution(x) == {x: 1} and R.failure([x, (x + 1) % 8], x) == 0


def _seeded_function(table, D):
    """Exact output law of x -> (d, table[x][d]) with d uniform."""
    return {x: {(d, table[x][d]): Fraction(1, D) for d in range(D)} for x in range(len(table))}


def _best_inverse(dists):
    """Max-likelihood inverse on a list: the listed x most likely to give y."""
    def g(S, y):
        cands = [(dists[x].get(y, 0), -i, x) for i, x in enumerate(S)]
        p, _, x = max(cands)
        return x if p > 0 else None
    return g


def _worst_failure(dists, g, K, failure):
    xs = list(dists)
    worst = Fraction(0)
    for size in range(1, K + 1):
        for S in itertools.combinations(xs, size):
            for x in S:
                worst = max(worst, failure(list(S), x))
    return worst


def test_reduce_randomness_exact_small():
    rng = random.Random(3)
    for trial in range(5):
        n, D, Yc, K = 4, 16, 4, 2
        table = [[rng.randrange(Yc) for _ in range(D)] for _ in range(1 << n)]
        dists = _seeded_function(table, D)
        g = _best_inverse(dists)
        orig = lambda S, x: sum((p for y, p in dists[x].items() if g(S, y) != x), Fraction(0))
        eps = _worst_failure(dists, g, K, orig)
        if eps > Fraction(1, 4):
            continue
        M = len({y for dx in dists.values() for y in dx})
        R = reduce_randomness(dists, g, K, M, eps)
        assert len(R.heavy) < K and len(R.values()) <= M + K
        assert R.bits == math.ceil(math.log2(M / K)) + 3
        assert _worst_failure(dists, g, K, R.failure) <= 2 * eps


def test_reduce_randomness_domain_errors():
    dists = {0: {0: Fraction(1)}}
    with pytest.raises(ValueError):
        reduce_randomness(dists, None, 1, 1, Fraction(1, 2))
    with pytest.raises(ValueError):
        reduce_randomness(dists, None, 2, 1, Fraction(1, 8))


def test_blocking_set_singleton_family():
    fam = {x: {0} for x in range(6)}
    x, S = blocking_set(fam, 3)
    assert len(S) == 1 and x not in S and fam[x] <= fam[S[0]]


def test_blocking_set_random_families():
    rng = random.Random(4)
    done = 0
    while done < 100:
        K = rng.randint(4, 10)
        ny = rng.randint(1, K * K // 4 - 1)
        X = rng.randint(ny + K // 2 + 1, ny + K + 8)
        fam = {x: set(rng.sample(range(ny), rng.randint(1, min(ny, K)))) for x in range(X)}
        if len(set().union(*fam.values())) != ny:
            continue
        x, S = blocking_set(fam, K)
        assert len(S) < K and x not in S
        assert fam[x] <= set().union(*(fam[z] for z in S))
        # first-match over S then x never returns x on any of its outputs
        assert all(first_match_inverse(fam, S + [x], y) != x for y in fam[x])
        done += 1


def test_blocking_set_hypothesis_enforced():
    fam = {x: {x} for x in range(10)}
    with pytest.raises(ValueError):
        blocking_set(fam, 4)


def test_bound_log_has_no_violations():
    assert LB_LOG["violations"] == 0
