"""
Compressing to a chosen length
==============================

A toy decompressor D maps short programs to 10-bit strings.  For a string x
of D-complexity c we pick a target length m a little above c, compress x to
exactly m bits without looking at D, and decode with D alone.
"""

from tlcomp.compressor import (OnlineDecompressor, complexity_CD, compress, enumerate_suspects,
                               min_target, overhead, overhead_closed_form, random_toy_decompressor)

n, e = 10, 3
D = random_toy_decompressor(5, n, programs=300, max_len=10)
dec = OnlineDecompressor(D)

# a handful of strings with short programs
xs = enumerate_suspects(D, 8, n)[:6]

for x in xs:
    c = complexity_CD(D, x)
    m = min_target(e, n, c + 1)
    ok = sum(dec(compress(x, e, m, seed)) == x for seed in range(50))
    print("x=%s  C_D=%-2d  m=%-3d  decoded %d/50" % (x, c, m, ok))

# at n=10 the overhead (~70 bits) exceeds n itself; for longer strings it
# grows only logarithmically in m (once m passes n the code just stores x)
print()
print("n=1000   m  overhead  closed form")
for m in (90, 120, 200, 400, 800):
    print("      %5d  %8d  %11d" % (m, overhead(e, m, 1000), overhead_closed_form(e, m, 1000)))
