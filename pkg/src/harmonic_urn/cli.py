"""Command-line front end.

Every subcommand writes one CSV table or one JSON document (``schema: 1``)
to stdout or ``--out``.  Exit status is 0 on success, 1 when a ``verify``
check fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import mpmath
import numpy as np

from . import (asymptotics, embeddings, exact, percolation, quadrant, renewal, urn,
               verify)
from .kappa import KappaSpec
from .precision import PrecisionConfig
from .streams import rng_stream

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# output

def _num(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, mpmath.mpf)):
        return float(v)
    return v


def to_csv(columns: Sequence[str], rows) -> str:
    """RFC-4180 CSV with CRLF line ends."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def to_json(doc: dict) -> str:
    return json.dumps({"schema": 1, **doc}, default=_num, ensure_ascii=False) + "\n"


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _precision(args) -> PrecisionConfig:
    bits = args.prec_bits or 128
    if bits < 64:
        raise UsageError("--prec-bits must be at least 64")
    return PrecisionConfig(bits=bits, target_tol=min(1e-30, 2.0 ** (-bits // 2)))


def _replicas(args, default: int) -> int:
    r = default if args.replicas is None else args.replicas
    if r < 1:
        raise UsageError("--replicas must be at least 1")
    return r


# --------------------------------------------------------------------------
# subcommands

def cmd_simulate(args) -> int:
    n = _replicas(args, 10)
    if args.z0 < 1:
        raise UsageError("--z0 must be positive")
    if args.model == "traverse":
        rows = []
        for i in range(n):
            r = urn.traverse_quadrant(args.z0, rng_stream(args.seed, "cli-traverse", i))
            rows.append((args.seed, i, args.z0, r["z_next"], r["steps"],
                         r["area"].numerator, r["area"].denominator))
        cols = ("seed", "replica", "z", "z_next", "steps", "area_num", "area_den")
        if args.format == "json":
            _emit(args, to_json({"rows": [dict(zip(cols, r)) for r in rows]}))
        else:
            _emit(args, to_csv(cols, rows))
        return EXIT_OK
    recs = []
    for i in range(n):
        g = rng_stream(args.seed, f"cli-{args.model}", i)
        if args.model == "leaky":
            recs.append(urn.simulate_leaky(args.z0, g, step_cap=args.step_cap))
        else:
            recs.append(urn.simulate_noisy(args.z0, KappaSpec.parse(args.kappa), g,
                                           step_cap=args.step_cap))
    if args.format == "json":
        _emit(args, urn.records_to_json(recs, args.seed) + "\n")
    else:
        _emit(args, urn.records_to_csv(recs, args.seed))
    return EXIT_OK


def cmd_exact(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive")
    row = exact.transition_row(args.n, args.tail)
    rows = [(args.n, m, p.numerator, p.denominator) for m, p in sorted(row.probs.items())]
    if args.format == "json":
        _emit(args, to_json({
            "n": args.n, "M": row.M, "tail_bound": row.tail_bound,
            "brackets_one": row.brackets_one(),
            "rows": [{"m": m, "p_num": str(a), "p_den": str(b)} for _, m, a, b in rows],
            "identities": exact.identity_report(args.identity_max, min(args.identity_max, 30)),
        }))
    else:
        _emit(args, to_csv(("n", "m", "p_num", "p_den"), rows))
    return EXIT_OK


def cmd_renewal(args) -> int:
    if args.t <= 0:
        raise UsageError("--t must be positive")
    if args.pairs < 1:
        raise UsageError("--pairs must be positive")
    cfg = _precision(args)
    roots = renewal.char_roots(args.pairs, cfg)
    with mpmath.workprec(cfg.bits):
        fe = renewal.renewal_function_exact(args.t, cfg)
        fa = renewal.renewal_function_asymptotic(args.t, args.pairs, cfg, roots)
        doc = {"t": args.t, "f_exact": mpmath.nstr(fe, 30), "f_asymptotic": mpmath.nstr(fa, 30),
               "difference": float(abs(fe - fa)),
               "roots": [{"index": r.index, "re": mpmath.nstr(r.re, 25),
                          "im": mpmath.nstr(r.im, 25)} for r in roots]}
    m = renewal.count_moments_mc(args.t, _replicas(args, 10**5), args.seed)
    doc["mc"] = {"replicas": m.replicas, "mean": m.mean, "mean_se": m.mean_se,
                 "var": m.variance, "var_se": m.variance_se,
                 "second_moment": m.second_moment, "second_moment_se": m.second_moment_se}
    if args.format == "json":
        _emit(args, to_json(doc))
    else:
        _emit(args, to_csv(("t", "f_exact", "f_asymptotic", "mc_mean", "mc_mean_se", "mc_var",
                            "mc_var_se"),
                           [(args.t, doc["f_exact"], doc["f_asymptotic"], m.mean, m.mean_se,
                             m.variance, m.variance_se)]))
    return EXIT_OK


def cmd_embed(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive")
    doc = {"n": args.n, "mode": args.mode}
    if args.mode == "poly":
        cfg = _precision(args)
        with mpmath.workprec(cfg.bits):
            doc["tau_poly"] = mpmath.nstr(embeddings.tau_f_poly_exact(args.n, cfg), 25)
            doc["area_poly"] = mpmath.nstr(embeddings.area_poly_exact(args.n, cfg), 25)
    elif args.mode == "fast":
        est = embeddings.tau_f_mc(args.n, _replicas(args, 10**4), args.seed)
        doc.update(mc_mean=est["tau"].mean, mc_se=est["tau"].se,
                   mc_sq_dev=est["sq_dev"].mean, replicas=est["tau"].n)
    else:
        v = embeddings.slow_final_many(args.n, _replicas(args, 10**4), args.seed).astype(float)
        doc.update(mc_mean=float(v.mean()), mc_se=float(v.std(ddof=1) / math.sqrt(v.size)),
                   replicas=int(v.size), exact_mean=float(exact.mean_exact(args.n)))
    if args.format == "json":
        _emit(args, to_json(doc))
    else:
        cols = tuple(doc)
        _emit(args, to_csv(cols, [tuple(doc[c] for c in cols)]))
    return EXIT_OK


def cmd_perc(args) -> int:
    n = _replicas(args, 100)
    if args.experiment == "coalesce":
        cols = ("trial", "coalesced", "meet_x", "meet_y", "meet_winding", "steps_1", "steps_2")
        rows = []
        for i, c in enumerate(percolation.coalescence_trials(args.z, args.z2, n, args.seed,
                                                             args.budget)):
            m = c.meet
            rows.append((i, int(not c.exhausted), "" if m is None else m.x,
                         "" if m is None else m.y, "" if m is None else m.winding,
                         c.steps[0], c.steps[1]))
    elif args.experiment == "ingraph":
        cols = ("trial", "x", "y", "size")
        sizes = percolation.in_graph_many(0, args.m, n, args.seed)
        rows = [(i, 0, args.m, "" if s < 0 else int(s)) for i, s in enumerate(sizes)]
    else:
        cols = ("trial", "crossings")
        rows = []
        for i in range(n):
            st = percolation.EdgeStore(int(percolation.store_seed(
                np.uint64(args.seed), np.uint64(7), np.uint64(i))))
            rows.append((i, percolation.dual_crossings(st, args.window)))
    if args.format == "json":
        _emit(args, to_json({"experiment": args.experiment,
                             "rows": [dict(zip(cols, r)) for r in rows]}))
    else:
        _emit(args, to_csv(cols, rows))
    return EXIT_OK


def cmd_classify(args) -> int:
    kap = KappaSpec.parse(args.kappa)
    if not kap.mgf_ok:
        raise UsageError("classification needs a kappa law with exponential moments")
    cfg = asymptotics.ClassifyConfig(moment_samples=args.moment_samples)
    rep = asymptotics.classify(kap, budget=args.budget, rng=args.seed, config=cfg)
    d = rep.to_dict()
    if args.format == "json":
        _emit(args, to_json(d))
    else:
        cols = [k for k in d if k != "config"]
        _emit(args, to_csv(cols, [tuple(d[k] for k in cols)]))
    return EXIT_OK


def cmd_quadrant(args) -> int:
    law = quadrant.IncrementLaw.named(args.law)
    if args.classify:
        v = quadrant.classify_quadrant(law, budget=args.samples, rng=args.seed)
        _emit(args, to_json(v.to_dict()))
        return EXIT_OK
    if not args.a0 > 0:
        raise UsageError("--a0 must be positive")
    n = _replicas(args, 1)
    rows = []
    for i in range(n):
        c = quadrant.simulate_crossings(law, args.a0, args.crossings,
                                        rng_stream(args.seed, "cli-quadrant", i))
        rows.extend((i,) + r for r in c.rows())
    cols = ("replica", "k", "T_k", "R_k")
    if args.format == "json":
        _emit(args, to_json({"law": args.law, "a0": args.a0,
                             "rows": [dict(zip(cols, r)) for r in rows]}))
    else:
        _emit(args, to_csv(cols, rows))
    return EXIT_OK


def cmd_verify(args) -> int:
    crit = None
    if args.criteria:
        try:
            crit = [int(c) for c in args.criteria.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad --criteria: {args.criteria}") from exc
        bad = [c for c in crit if c not in verify.CRITERIA]
        if bad:
            raise UsageError(f"unknown criteria {bad}")

    def progress(res):
        print(res.line(), file=sys.stderr, flush=True)

    rep = verify.run(args.suite, args.seed, crit, progress)
    if args.format == "csv":
        rows = [(c.number, k.check_id, k.anchor, json.dumps(verify._plain(k.expected)),
                 json.dumps(verify._plain(k.observed)), json.dumps(verify._plain(k.tolerance)),
                 int(k.passed)) for c in rep.criteria for k in c.checks]
        _emit(args, to_csv(("criterion", "check_id", "anchor", "expected", "observed",
                            "tolerance", "pass"), rows))
    else:
        _emit(args, to_json({k: v for k, v in rep.to_dict().items() if k != "schema"}))
    return EXIT_OK if rep.passed else EXIT_FAIL


# --------------------------------------------------------------------------
# parser

def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="64-bit master seed")
    p.add_argument("--replicas", type=int, default=d(None), help="Monte Carlo replicas")
    p.add_argument("--out", default=d(None), help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=d(None))
    p.add_argument("--prec-bits", type=int, default=d(None), dest="prec_bits",
                   help="working precision in bits")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="harmonic-urn", description=__doc__.splitlines()[0])
    _add_globals(p, False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, fn, fmt):
        s = sub.add_parser(name, help=help_)
        _add_globals(s, True)
        s.set_defaults(func=fn, default_format=fmt)
        return s

    s = add("simulate", "simulate urn paths", cmd_simulate, "csv")
    s.add_argument("--model", choices=("leaky", "noisy", "traverse"), default="noisy")
    s.add_argument("--z0", type=int, default=5)
    s.add_argument("--kappa", default="point:1")
    s.add_argument("--step-cap", type=int, default=urn.STEP_CAP, dest="step_cap")

    s = add("exact", "exact transition row p(n, .)", cmd_exact, "csv")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--tail", type=float, default=1e-12)
    s.add_argument("--identity-max", type=int, default=20, dest="identity_max")

    s = add("renewal", "renewal function, roots and counting moments", cmd_renewal, "json")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--pairs", type=int, default=40)

    s = add("embed", "continuous-time embeddings and polynomial formulas", cmd_embed, "json")
    s.add_argument("--mode", choices=("fast", "slow", "poly"), default="poly")
    s.add_argument("--n", type=int, required=True)

    s = add("perc", "percolation experiments", cmd_perc, "csv")
    s.add_argument("--experiment", choices=("coalesce", "ingraph", "dual"), default="coalesce")
    s.add_argument("--window", type=int, default=10)
    s.add_argument("--budget", type=int, default=24, help="quadrant crossings per path")
    s.add_argument("--z", type=int, default=5)
    s.add_argument("--z2", type=int, default=9)
    s.add_argument("--m", type=int, default=1)

    s = add("classify", "recurrence class of the noisy urn", cmd_classify, "json")
    s.add_argument("--kappa", required=True)
    s.add_argument("--budget", type=int, default=None, help="return paths")
    s.add_argument("--moment-samples", type=int, default=10**6, dest="moment_samples")

    s = add("quadrant", "random walk across the quadrant", cmd_quadrant, "csv")
    s.add_argument("--law", choices=sorted(quadrant.LAW_CODES), default="exponential")
    s.add_argument("--a0", type=float, default=10.0)
    s.add_argument("--crossings", type=int, default=10)
    s.add_argument("--samples", type=int, default=200_000, help="samples per drift level")
    s.add_argument("--classify", action="store_true")

    s = add("verify", "run acceptance checks", cmd_verify, "json")
    s.add_argument("--suite", choices=tuple(verify.SUITES), default="core")
    s.add_argument("--criteria", default=None, help="comma-separated criterion numbers")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"harmonic-urn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
