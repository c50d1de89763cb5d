"""
Decoding with side information
==============================

The receiver holds a string y and a decompressor conditioned on y.  The
sender never sees y: it compresses x with the same call as in the
unconditional case, only the target length is now set from C_D(x | y).
"""

from tlcomp.bitcore import BitString
from tlcomp.compressor import (OnlineDecompressor, complexity_CD, compress, enumerate_suspects,
                               min_target, random_toy_decompressor)

n, e = 10, 3
ys = [BitString("1011"), BitString("0110011")]
D = random_toy_decompressor(9, n, programs=200, max_len=9, conditions=ys)
dec = OnlineDecompressor(D)

for y in ys:
    print("receiver holds y=%s" % y)
    for x in enumerate_suspects(D, 7, n, cond=y)[:4]:
        c = complexity_CD(D, x, y)
        m = min_target(e, n, c + 1)
        ok = sum(dec(compress(x, e, m, s), y) == x for s in range(50))
        print("  x=%s  C_D(x|y)=%-2d  m=%-3d  decoded %d/50" % (x, c, m, ok))

# the online decoder commits once and never changes its answer
x = enumerate_suspects(D, 7, n, cond=ys[0])[-1]
code = compress(x, e, min_target(e, n, complexity_CD(D, x, ys[0]) + 1), 1)
answers = dec.stream(code, [1] * 6, ys[0])
print("answers while the suspect list streams in:", [a if a is None else format(a, "0%db" % n) for a in answers])
