"""digitforge command line.

Randomness: every run is driven by numpy's PCG64 seeded through
SeedSequence([seed, chunk]).  Draws are produced in fixed chunks of
CHUNK rows, chunk c using its own stream, so the output does not depend on
how many worker threads (DIGITFORGE_THREADS) process the chunks.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import mpmath
import numpy as np

from .acceptance import SUITES, run_acceptance
from .coupling import Density, PiecewiseDensity, parse_density, sample_coupled_batch
from .errors import DomainError, ResourceError
from .markov import (
    aperiodicity_sufficient,
    build_chain,
    f_inv_density,
    invariant_pmf,
    is_uniformly_ergodic,
)
from .polyatree import PolyaParams, random_density, sample_realization, sample_x_batch, _word
from .readonce import epsilon_t, perfect_remainder_sample, srs_update
from .streams import UniformStream
from .subdivision import digits_of, parse_scheme
from .surd import parse_number

CHUNK = 10_000

EXIT_OK, EXIT_DOMAIN, EXIT_RESOURCE, EXIT_ACCEPTANCE = 0, 2, 3, 4


def fmt(v) -> str:
    """Rationals as p/q, everything else with 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if hasattr(v, "_mpf_"):
        return mpmath.nstr(v, 17, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def fmt_word(w) -> str:
    return "-".join(str(k) for k in w)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DIGITFORGE_THREADS", "1")))
    except ValueError:
        return 1


def _chunked(total: int, work):
    """Run work(chunk_index, size) over fixed chunks; results come back in chunk order."""
    sizes = [min(CHUNK, total - c * CHUNK) for c in range((total + CHUNK - 1) // CHUNK)]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(work, range(len(sizes)), sizes))


def _write(args, header, rows, payload=None):
    buf = io.StringIO()
    if args.format == "json":
        obj = payload if payload is not None else [dict(zip(header, r)) for r in rows]
        buf.write(json.dumps(obj, indent=1))
        buf.write("\n")
    else:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    text = buf.getvalue()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _order(scheme, requested) -> int:
    return requested if requested is not None else max(scheme.memory, 1)


def _density(args, scheme) -> Density:
    if args.density == "invariant":
        return f_inv_density(build_chain(scheme, _order(scheme, args.order)))
    return parse_density(args.density, scheme)


# ---------------------------------------------------------------------------------------


def cmd_expand(args) -> int:
    scheme = parse_scheme(args.scheme)
    x = parse_number(args.x)
    digits = digits_of(scheme, x, args.n, strict=args.strict)
    rows = []
    for i in range(1, args.n + 1):
        a, ell = scheme.cell(digits[:i])
        # endpoints (u = 0) are legitimate here, so no approximation_errors check
        e = scheme.coerce(x) - a
        u = e / ell
        rows.append([i, digits[i - 1], fmt(a), fmt(a + ell), fmt(ell), fmt(e), fmt(u)])
    _write(args, ["level", "digit", "left", "right", "length", "e", "u"], rows)
    return EXIT_OK


def _coupled_rows(density: Density, seed: int):
    scheme = density.scheme
    lengths = {}

    def exact_len(w):
        if w not in lengths:
            lengths[w] = scheme.length(w)
        return lengths[w]

    if isinstance(density, PiecewiseDensity):
        density.table()

    def work(c, size):
        b = sample_coupled_batch(density, UniformStream(seed, c), size)
        out = []
        for j in range(size):
            w = b.s(j)
            out.append([fmt(b.x[j]), int(b.n[j]), fmt_word(w), fmt(b.u[j]), fmt(b.e[j]), fmt(exact_len(w))])
        return out

    return work


def _perfect_rows(density: Density, chain, t, continuation: str, seed: int):
    eps = float(epsilon_t(chain, t, "exact").value) if len(chain.omega) <= 8 else None

    def work(c, size):
        stream = UniformStream(seed, c)
        out = []
        for _ in range(size):
            d = perfect_remainder_sample(density, chain, t, stream, continuation, epsilon=eps)
            cd = d.coupling
            out.append([fmt(cd.x), cd.n, fmt_word(cd.s), fmt(cd.u), fmt(cd.e), fmt(cd.l),
                        d.m1, d.m2, d.m, d.k, fmt_word(d.stationary_state)])
        return out

    return work


def cmd_sample(args) -> int:
    scheme = parse_scheme(args.scheme)
    density = _density(args, scheme)
    header = ["x", "n", "s", "u", "e", "l"]
    if args.mode == "coupled":
        work = _coupled_rows(density, args.seed)
    else:
        chain = build_chain(scheme, _order(scheme, args.order))
        t = args.t if args.t is not None else chain.s
        # build the shared lookup tables before any worker thread touches them
        srs_update(chain, chain.omega[0], 0.5)
        if isinstance(density, PiecewiseDensity):
            density.table()
        work = _perfect_rows(density, chain, t, args.continuation, args.seed)
        header += ["m1", "m2", "m", "k", "window"]
    rows = [r for part in _chunked(args.draws, work) for r in part]
    _write(args, header, rows)
    return EXIT_OK


def cmd_chain(args) -> int:
    scheme = parse_scheme(args.scheme)
    chain = build_chain(scheme, _order(scheme, args.order))
    pi = invariant_pmf(chain)
    rep = is_uniformly_ergodic(chain)
    f_inv = f_inv_density(chain, pi)
    rows = [[fmt_word(w), fmt(p), fmt(float(f_inv.value(w)))] for w, p in zip(chain.omega, pi.weights)]
    payload = json.loads(chain.to_json(pi))
    payload.update({
        "uniformly_ergodic": bool(rep[0]),
        "alpha": float(rep[1]),
        "beta": float(rep[2]),
        "aperiodicity_sufficient": bool(aperiodicity_sufficient(scheme, chain.s)),
        "f_inv": {fmt_word(w): float(f_inv.value(w)) for w in chain.omega},
    })
    _write(args, ["state", "pi_inv", "f_inv"], rows, payload)
    return EXIT_OK


def cmd_epsilon(args) -> int:
    scheme = parse_scheme(args.scheme)
    chain = build_chain(scheme, _order(scheme, args.order))
    stream = UniformStream(args.seed, 0)
    rows = []
    for t in range(max(args.t, chain.s), args.t_max + 1 if args.t_max else max(args.t, chain.s) + 1):
        est = epsilon_t(chain, t, args.mode, args.blocks, stream)
        rows.append([t, t + chain.s - 1, fmt(est.value), fmt(est.half_width), est.mode, est.n])
    _write(args, ["t", "b", "epsilon", "half_width", "mode", "blocks"], rows)
    return EXIT_OK


def cmd_verify(args) -> int:
    echo = (lambda line: print(line, file=sys.stderr)) if not args.quiet else None
    results = run_acceptance(args.suite, args.seed, args.scale, args.only, echo)
    report = {
        "suite": args.suite,
        "seed": args.seed,
        "scale": args.scale,
        "passed": all(r.passed for r in results),
        "criteria": [
            {"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail,
             "values": r.values, "seconds": round(r.seconds, 3)}
            for r in results
        ],
    }
    text = json.dumps(report, indent=1, default=float) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE


def cmd_polya(args) -> int:
    scheme = parse_scheme(args.scheme)
    pmf = [float(v) for v in args.pmf_n.split(",")] if args.pmf_n else [1.0 / (args.depth + 1)] * (args.depth + 1)
    alpha = tuple(float(v) for v in args.alpha.split(","))
    params = PolyaParams(scheme, args.depth, tuple(pmf), default_alpha=alpha)
    real = sample_realization(params, UniformStream(args.seed, 0).rng)
    if args.draws == 0:
        f = random_density(params, real)
        rows = [[fmt_word(w), fmt(float(f.value(w)))] for w in f.words]
        payload = {"params": json.loads(params.to_json()), "realization": json.loads(real.to_json()),
                   "density": {fmt_word(w): float(f.value(w)) for w in f.words}}
        _write(args, ["cell", "density"], rows, payload)
        return EXIT_OK

    def work(c, size):
        x, n, node = sample_x_batch(params, real, UniformStream(args.seed, c + 1), size)
        return [[fmt(x[j]), int(n[j]), fmt_word(_word(int(node[j])))] for j in range(size)]

    rows = [r for part in _chunked(args.draws, work) for r in part]
    _write(args, ["x", "n", "s"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="digitforge",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="exit codes: 0 ok, 2 domain error, 3 resource/budget error, 4 acceptance failure",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    common.add_argument("--scheme", default="base_q:2",
                        help="base_q:Q | pseudo_golden:M | luroth | continued_fraction | gls:L1,..:+,- | JSON")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("expand", parents=[common], help="digits, cells and approximation errors of x")
    e.add_argument("--x", required=True, help='exact number: "1/8", "0.125", "sqrt2-1", "(sqrt5-1)/2"')
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--strict", action="store_true", help="reject points on any cell endpoint")
    e.set_defaults(func=cmd_expand)

    dens_help = 'uniform | gauss | invariant | piecewise:DEPTH:v1,v2,.. | JSON config'
    s = sub.add_parser("sample", parents=[common], help="coupled (X, N) draws or perfect draws with K")
    s.add_argument("--mode", choices=("coupled", "perfect"), default="coupled")
    s.add_argument("--density", default="uniform", help=dens_help)
    s.add_argument("--draws", type=int, default=1000)
    s.add_argument("--order", type=int, default=None, help="Markov order s of the residual chain")
    s.add_argument("--t", type=int, default=None, help="read-once block parameter (default s)")
    s.add_argument("--continuation", choices=("stream", "fresh"), default="stream")
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("chain", parents=[common], help="residual chain, invariant PMF and ergodicity")
    c.add_argument("--order", type=int, default=None)
    c.set_defaults(func=cmd_chain)

    q = sub.add_parser("epsilon", parents=[common], help="coalescence probability of a read-once block")
    q.add_argument("--order", type=int, default=None)
    q.add_argument("--t", type=int, default=1)
    q.add_argument("--t-max", type=int, default=None)
    q.add_argument("--mode", choices=("exact", "monte_carlo"), default="exact")
    q.add_argument("--blocks", type=int, default=100_000)
    q.set_defaults(func=cmd_epsilon)

    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite and write a JSON report")
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--scale", type=float, default=1.0, help="multiply sample sizes (1.0 = full size)")
    v.add_argument("--only", type=int, nargs="*", default=None, help="criterion numbers to run")
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_verify, seed=20240601)

    y = sub.add_parser("polya", parents=[common], help="Pólya-tree mixture: random density or draws")
    y.add_argument("--depth", type=int, default=3)
    y.add_argument("--pmf-n", default=None, help="comma-separated P(N=0..depth) (default uniform)")
    y.add_argument("--alpha", default="1,1", help="default Beta pair a0,a1")
    y.add_argument("--draws", type=int, default=0, help="0 writes the realized density instead")
    y.set_defaults(func=cmd_polya)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"digitforge: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DomainError, ValueError) as exc:
        print(f"digitforge: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
