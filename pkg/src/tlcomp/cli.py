"""Command-line front end: compress/decompress files and run experiments."""

import argparse
import hashlib
import itertools
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import analysis
from .bitcore import BitString, CapacityExceeded, gamma_encode, mix_seed
from .compressor import (FP_EXTRA_EXP, ToyDecompressor, OnlineDecompressor, choose_k, compress,
                         dump_code, load_code, overhead, parse_code)
from .condensers import (ScaleError, dumps_table, loads_table, random_condenser, search_conductor,
                         verify_condenser, verify_conductor)
from .hashing import NotFound

USAGE_ERROR = 1
CAPACITY_ERROR = 2


# -- experiment plumbing ---------------------------------------------------

@dataclass
class ExperimentConfig:
    scenario: str
    grid: dict
    trials: int
    seed: int
    output: str = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.grid or any(not list(v) for v in self.grid.values()):
            raise ValueError("parameter grid is empty")

    def cells(self):
        keys = sorted(self.grid)
        for vals in itertools.product(*(self.grid[k] for k in keys)):
            yield dict(zip(keys, vals))

    def digest(self):
        blob = json.dumps(asdict(self), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def wilson_interval(successes, trials, z=2.0):
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    den = 1 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def config_block(cfg):
    lines = ["# scenario: %s" % cfg.scenario,
             "# grid: %s" % json.dumps(cfg.grid, sort_keys=True),
             "# trials: %d" % cfg.trials,
             "# seed: %d" % cfg.seed]
    for k in sorted(cfg.extra):
        lines.append("# %s: %s" % (k, cfg.extra[k]))
    lines.append("# config_hash: %s" % cfg.digest())
    return lines


# -- scenarios -------------------------------------------------------------

def _line_point_cell(w, eps_exp, trials, seed):
    from .bitcore import line_point_instance
    from .distributed import LinePointSW, decode_multi, line_point_rates, sw_suspects, sw_targets, suspect_thresholds

    V = LinePointSW(w)
    ms = sw_targets(line_point_rates(w), eps_exp, (2 * w, 2 * w))
    ix, ok = None, 0
    for t in range(trials):
        (a, b), (u, v) = line_point_instance(w, mix_seed("lp", seed, t))
        x = (BitString.from_int(a.value << w | b.value, 2 * w), BitString.from_int(u.value << w | v.value, 2 * w))
        codes = [compress(x[j], eps_exp, ms[j], mix_seed("code", seed, t, j)) for j in range(2)]
        if ix is None:
            thr = suspect_thresholds(codes, eps_exp)
            ix = sw_suspects(V, thr)
            if ix.N == 0:
                return ms, 0, "infeasible"
        try:
            ok += decode_multi(codes, ix, eps_exp, seed=mix_seed("tree", seed, t)) == x
        except NotFound:
            pass
    return ms, ok, ""


def _random_toy_cell(ell, n, size, eps_exp, trials, seed):
    from .distributed import as_view, decode_multi, random_sw_toy, sw_suspects, sw_targets, sw_toy_rates, suspect_thresholds

    D, T = random_sw_toy(seed, ell, n, size)
    V = as_view(D, ell)
    ms = sw_targets(sw_toy_rates(D, T), eps_exp, (n,) * ell)
    ix, ok = None, 0
    for t in range(trials):
        x = T[mix_seed("pick", seed, t) % len(T)]
        codes = [compress(x[j], eps_exp, ms[j], mix_seed("code", seed, t, j)) for j in range(ell)]
        if ix is None:
            ix = sw_suspects(V, suspect_thresholds(codes, eps_exp), ell)
            if ix.N == 0:
                return ms, 0, "infeasible"
        try:
            ok += decode_multi(codes, ix, eps_exp, seed=mix_seed("tree", seed, t)) == x
        except NotFound:
            pass
    return ms, ok, ""


def simulate_sw(cfg):
    """Rows of the success table, one per grid cell."""
    rows = []
    for cell in cfg.cells():
        e = cell["eps_exp"]
        if cfg.scenario == "line-point":
            ell = 2
            ms, ok, flag = _line_point_cell(cell["w"], e, cfg.trials, cfg.seed)
        elif cfg.scenario == "random-toy":
            ell = cell["ell"]
            ms, ok, flag = _random_toy_cell(ell, cell["n"], cell["size"], e, cfg.trials, cfg.seed)
        else:
            raise ValueError("unknown scenario %r" % cfg.scenario)
        lo, hi = wilson_interval(ok, cfg.trials)
        bound = 1 - 8 * ell * 2.0 ** -e
        verdict = flag or ("ok" if hi >= bound else "below")
        rows.append(dict(cell, ell=ell, targets=",".join(map(str, ms)), trials=cfg.trials, successes=ok,
                         rate=ok / cfg.trials, ci_lo=lo, ci_hi=hi, bound=bound, verdict=verdict))
    return rows


def format_tsv(cfg, rows):
    cols = sorted(cfg.grid) + ["ell", "targets", "trials", "successes", "rate", "ci_lo", "ci_hi", "bound", "verdict"]
    cols = list(dict.fromkeys(cols))
    out = config_block(cfg) + ["\t".join(cols)]
    for r in rows:
        out.append("\t".join(("%.4f" % r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols))
    return "\n".join(out) + "\n"


# -- commands --------------------------------------------------------------

def _read_bits(path):
    with open(path) as fh:
        s = "".join(fh.read().split())
    return BitString(s)


def cmd_compress(args):
    x = BitString(args.bits) if args.bits is not None else _read_bits(args.input)
    try:
        code = compress(x, args.eps_exp, args.target_m, args.seed)
    except CapacityExceeded as exc:
        print("error: %s" % exc, file=sys.stderr)
        return CAPACITY_ERROR
    e, k, fp = parse_code(code)
    data = dump_code(code)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    head = len(gamma_encode(e)) + len(gamma_encode(k + 1))
    print("n=%d m=%d eps=2^-%d k=%d delta=%d" % (len(x), code.m, e, k, overhead(e, code.m, len(x))))
    print("layout: header=%d fingerprint=%d marker=1 padding=%d" % (
        head, len(code.payload), code.m - head - len(code.payload) - 1))
    print("fingerprint: kind=%s D=%d Y=%d prime=%d" % (fp_kind(fp.n, k, fp.e), *fp_shape(fp.n, k, fp.e), fp.tag.p))
    if not args.output:
        print("code: %s" % code.bits)
    return 0


def fp_kind(n, k, e):
    from .invertible import conductor_shape
    return conductor_shape(n, k, e)[0]


def fp_shape(n, k, e):
    from .invertible import conductor_shape
    return conductor_shape(n, k, e)[1:]


def cmd_decompress(args):
    with open(args.code, "rb") as fh:
        bits = load_code(fh.read())
    with open(args.decompressor) as fh:
        D = ToyDecompressor.loads(fh.read())
    cond = BitString(args.condition) if args.condition is not None else None
    try:
        x = OnlineDecompressor(D)(bits, cond)
    except NotFound:
        print("not found")
        return 0
    print(x)
    return 0


def cmd_simulate_sw(args):
    if args.scenario == "line-point":
        grid = {"w": args.w, "eps_exp": args.eps_exp}
    else:
        grid = {"ell": args.ell, "n": args.n, "size": args.size, "eps_exp": args.eps_exp}
    cfg = ExperimentConfig(args.scenario, grid, args.trials, args.seed, args.output)
    text = format_tsv(cfg, simulate_sw(cfg))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_verify_condenser(args):
    eps = 2.0 ** -args.eps_exp
    if args.table:
        with open(args.table) as fh:
            f = loads_table(fh.read())
    else:
        f = random_condenser(args.n, args.K, eps, seed=args.seed, verify=False)
    if args.conductor:
        cert = verify_conductor(f, args.K, eps, mode=args.mode, trials=args.trials, seed=args.seed)
    else:
        cert = verify_condenser(f, args.K, args.Kp or args.K, eps, mode=args.mode, trials=args.trials, seed=args.seed)
    print("table: %r" % f)
    print("K=%d Kp=%d eps=%g mode=%s sets=%d" % (cert.K, cert.Kp, cert.eps, cert.mode, cert.trials))
    print("worst_excess=%.6f verified=%s" % (cert.worst_excess, cert.verified))
    if cert.worst_set is not None:
        print("witness=%s" % (cert.worst_set,))
    return 0


def cmd_search_conductor(args):
    try:
        f = search_conductor(args.n, args.k, 2.0 ** -args.eps_exp, max_D=args.max_D, max_Y=args.max_Y,
                             restarts=args.restarts, seed=args.seed)
    except NotFound as exc:
        print("none found: %s" % exc)
        return 0
    text = dumps_table(f)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    print("found %r" % f)
    if not args.output:
        sys.stdout.write(text)
    return 0


def bound_reports(ns, eps_exps, ms):
    from .invertible import conductor_for
    reps = []
    for n, e in itertools.product(ns, eps_exps):
        for m in ms:
            k = choose_k(e, m, n)
            if k is None:
                continue
            reps += analysis.compressor_bound_reports(n, e, m, k, e + FP_EXTRA_EXP)
            f = conductor_for(n, k, e + FP_EXTRA_EXP)
            reps += analysis.condenser_bound_reports(f, 1 << min(k, n), Fraction(1, 1 << (e + FP_EXTRA_EXP)))
    return reps


def cmd_bounds(args):
    ms = args.m or [60, 80, 100]
    try:
        reps = bound_reports(args.n, args.eps_exp, ms)
    except ScaleError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return USAGE_ERROR
    sys.stdout.write(analysis.render_reports(reps))
    t0 = analysis.randomness_delta_threshold(0, 0, Fraction(1, 2))
    t1 = analysis.randomness_delta_threshold(1, 0, Fraction(1, 2))
    slope = "n" if t1 - t0 == 1 else "%s*n" % (t1 - t0)
    print("deterministic, eps=1/2: delta >= %s %s %s" % (slope, "-" if t0 < 0 else "+", abs(t0)))
    for n in args.n:
        lb = analysis.overhead_lb(n, 0.25)
        print("n=%d: overhead bound at eps=1/4 is %s" % (n, "n/a" if lb is None else "%.3f" % lb))
    return 0


def cmd_demo_line_point(args):
    from .bitcore import line_point_instance
    from .distributed import LinePointSW, decode_multi, line_point_rates, sw_suspects, sw_targets, suspect_thresholds

    w, e = args.w, args.eps_exp
    (a, b), (u, v) = line_point_instance(w, args.seed)
    x = (BitString.from_int(a.value << w | b.value, 2 * w), BitString.from_int(u.value << w | v.value, 2 * w))
    ms = sw_targets(line_point_rates(w), e, (2 * w, 2 * w))
    codes = [compress(x[j], e, ms[j], mix_seed("code", args.seed, j)) for j in range(2)]
    print("line  a=%d b=%d -> %s" % (a.value, b.value, x[0]))
    print("point u=%d v=%d -> %s" % (u.value, v.value, x[1]))
    print("targets m=%s (each input has %d bits, joint complexity %d)" % (ms, 2 * w, 3 * w))
    ix = sw_suspects(LinePointSW(w), suspect_thresholds(codes, e))
    print("suspect tuples: %d" % ix.N)
    try:
        got = decode_multi(codes, ix, e, seed=args.seed)
        print("decoded: %s" % ("correct" if got == x else "wrong"))
    except NotFound:
        print("decoded: nothing committed")
    return 0


# -- parser ----------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="tlcomp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--seed", type=int, default=0)
        s.set_defaults(fn=fn)
        return s

    s = add("compress", cmd_compress, "compress a bitstring to exactly m bits")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="file holding the bitstring as 0/1 text")
    src.add_argument("--bits", help="bitstring given inline")
    s.add_argument("--target-m", type=int, required=True)
    s.add_argument("--eps-exp", type=int, required=True)
    s.add_argument("--output")

    s = add("decompress", cmd_decompress, "decode a code file against a toy decompressor")
    s.add_argument("--code", required=True)
    s.add_argument("--decompressor", required=True)
    s.add_argument("--condition")

    s = add("simulate-sw", cmd_simulate_sw, "Monte-Carlo success rates of multi-sender decoding")
    s.add_argument("--scenario", choices=["line-point", "random-toy"], default="line-point")
    s.add_argument("--w", type=int, nargs="+", default=[4])
    s.add_argument("--ell", type=int, nargs="+", default=[3])
    s.add_argument("--n", type=int, nargs="+", default=[12])
    s.add_argument("--size", type=int, nargs="+", default=[64])
    s.add_argument("--eps-exp", type=int, nargs="+", default=[3])
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--output")

    s = add("verify-condenser", cmd_verify_condenser, "certify a condenser or conductor table")
    s.add_argument("--table", help="CND1 table file; default builds a random table")
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--Kp", type=int)
    s.add_argument("--eps-exp", type=int, required=True)
    s.add_argument("--conductor", action="store_true")
    s.add_argument("--mode", choices=["auto", "exact", "sampled"], default="auto")
    s.add_argument("--trials", type=int, default=200)

    s = add("search-conductor", cmd_search_conductor, "search small exact conductors")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--eps-exp", type=int, required=True)
    s.add_argument("--max-D", type=int, default=8)
    s.add_argument("--max-Y", type=int, default=16)
    s.add_argument("--restarts", type=int, default=400)
    s.add_argument("--output")

    s = add("bounds", cmd_bounds, "lower-bound table for compressor configurations")
    s.add_argument("--n", type=int, nargs="+", default=[10, 24])
    s.add_argument("--eps-exp", type=int, nargs="+", default=[2, 3])
    s.add_argument("--m", type=int, nargs="+")

    s = add("demo-line-point", cmd_demo_line_point, "two senders: a line and a point on it")
    s.add_argument("--w", type=int, default=4)
    s.add_argument("--eps-exp", type=int, default=3)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
