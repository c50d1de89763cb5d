"""
Two senders, one line and one point
===================================

Sender 0 holds a line (a, b) over GF(2^w), sender 1 a point (u, v) on it.
Each string has 2w bits but the pair only carries 3w bits of information,
so each sender can get away with about 1.5w bits plus a small overhead.
Neither sender sees the other's input.  At w=4 the fixed overhead of the
codes dwarfs the inputs; the point is that decoding works from the joint
structure alone.
"""

from tlcomp.bitcore import BitString, line_point_instance, mix_seed
from tlcomp.compressor import compress
from tlcomp.distributed import LinePointSW, decode_multi, line_point_rates, suspect_thresholds, sw_suspects, sw_targets
from tlcomp.hashing import NotFound

w = 4
V = LinePointSW(w)
for e in (2, 3, 4):
    ms = sw_targets(line_point_rates(w), e, (2 * w, 2 * w))
    ok, trials, ix = 0, 200, None
    for t in range(trials):
        (a, b), (u, v) = line_point_instance(w, mix_seed("demo", t))
        x = (BitString.from_int(a.value << w | b.value, 2 * w), BitString.from_int(u.value << w | v.value, 2 * w))
        codes = [compress(x[j], e, ms[j], mix_seed("c", t, j)) for j in range(2)]
        if ix is None:
            ix = sw_suspects(V, suspect_thresholds(codes, e))
        try:
            ok += decode_multi(codes, ix, e, seed=t) == x
        except NotFound:
            pass
    print("eps=1/%-3d targets m=%s  suspects=%-4d  success %d/%d" % (1 << e, ms, ix.N, ok, trials))
