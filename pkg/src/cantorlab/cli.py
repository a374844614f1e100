"""Experiment runner: every verification and demo as a subcommand.

Writes reports.json (one top-level array) and summary.csv per run; identical
configuration reproduces both byte for byte.  Exit codes: 0 all asserted
checks pass, 1 a check failed, 2 usage error, 3 a parameter constraint of the
targeted statement is violated, 4 precision budget exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from .approx import CATALOG, verify_jackson, verify_mf_jt
from .cantor import (
    CantorParams,
    ConstraintError,
    build_levels,
    eval_point,
    grid,
    point_fraction,
)
from .extension import (
    ExtensionOperator,
    OperatorConfig,
    interval_demo,
    verify_seom,
    verify_term_decay,
    violation_demo,
)
from .nodes import check_uniform, enumerate_nodes
from .numerics import PrecisionBudgetError, fmt_real, log2_abs, to_real
from .polyops import lebesgue_constant
from .report import Report, write_reports_json, write_summary_csv
from .verify import (
    sweep_exponent_inequalities,
    verify_lebesgue,
    verify_lemma_max,
    verify_markov,
    verify_not_leja,
    verify_pi_bounds,
    verify_qqq,
    verify_leja_trend,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CONSTRAINT = 3
EXIT_BUDGET = 4


def parse_rational(text: str) -> Fraction:
    """Exact rational from '1/4', '0.02' or '1e-4' (never a binary float)."""
    return Fraction(text)


def _int_list(text: str):
    return [int(t) for t in text.split(",") if t]


def _int_range(text: str):
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi) + 1))
    return _int_list(text)


def _params(args) -> CantorParams:
    return CantorParams.create(parse_rational(args.alpha),
                               parse_rational(args.ell1))


def _config_dict(args) -> dict:
    # the output directory is delivery plumbing, not part of the experiment
    skip = {"func", "out"}
    return {k: (str(v) if isinstance(v, Fraction) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _add_common(sp, alpha="2", ell1="1/4"):
    sp.add_argument("--alpha", default=alpha,
                    help="set exponent, exact rational (default %(default)s)")
    sp.add_argument("--ell1", default=ell1,
                    help="first level length, exact rational (default %(default)s)")
    sp.add_argument("--grid-depth", type=int, default=None,
                    help="endpoint-grid depth (default: statement-specific)")
    sp.add_argument("--work-bits", type=int, default=512,
                    help="working mantissa width (default %(default)s)")
    sp.add_argument("--headroom", type=int, default=128,
                    help="extra mantissa bits for point values")
    sp.add_argument("--seed", type=int, default=0,
                    help="seed recorded in the config (sampling is uniform)")
    sp.add_argument("--out", default=".",
                    help="directory for reports.json / summary.csv")


def cmd_levels(args):
    params = _params(args)
    levels = build_levels(params, args.depth)
    rows = []
    for s in range(args.depth + 1):
        row = {"s": s, "ell_log2": log2_abs(levels.ell(s))}
        if s < args.depth:
            row["gap_log2"] = log2_abs(levels.gap(s))
            row["gap_ratio"] = float(levels.gap(s) / levels.ell(s))
        rows.append(row)
    rep = Report(
        statement="levels",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "N": args.depth},
        passed=True,
        computed=f"{args.depth + 1} levels",
        bound="gap ratios nondecreasing (checked at build)",
        width_bits=levels.bits,
        rows=rows,
    )
    return [rep]


def cmd_nodes(args):
    params = _params(args)
    depth = max(2, (args.n - 1).bit_length())
    levels = build_levels(params, depth)
    seq = enumerate_nodes(args.n, levels)
    rep = check_uniform(seq)
    listing = []
    for i, (pt, md) in enumerate(zip(seq.points, seq.meta), start=1):
        value = point_fraction(pt, levels) if levels.exact \
            else eval_point(pt, levels, 128)
        listing.append({"k": i, "type": md.type_level,
                        "value": fmt_real(value, 18)})
    rep.rows = listing + rep.rows
    rep.params["N"] = args.n
    return [rep]


def cmd_lebesgue(args):
    params = _params(args)
    n = args.n
    depth = max((args.grid_depth or 0), (n + 1).bit_length() + 2)
    levels = build_levels(params, depth)
    seq = enumerate_nodes(n, levels)
    gd = args.grid_depth if args.grid_depth is not None else \
        min((n).bit_length() + 1, levels.depth)
    val = lebesgue_constant(seq, grid(levels, gd), args.work_bits)
    rep = Report(
        statement="lebesgue-value",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1), "N": n},
        passed=True,
        computed=fmt_real(val, 18),
        bound="(value run: grid max, lower bound of the sup)",
        width_bits=args.work_bits,
        grid_depth=gd,
    )
    return [rep]


def cmd_markov(args):
    params = _params(args)
    return [verify_markov(args.n, args.p, params=params,
                          grid_depth=args.grid_depth, work=args.work_bits)]


def cmd_verify(args):
    params = _params(args)
    kind = args.statement
    if kind == "pi":
        reps = [verify_pi_bounds(N, params=params, grid_depth=args.grid_depth,
                                 work=args.work_bits, headroom=args.headroom)
                for N in _int_range(args.n)]
    elif kind == "lemma-max":
        reps = [verify_lemma_max(N, params=params, grid_depth=args.grid_depth,
                                 work=args.work_bits, headroom=args.headroom)
                for N in _int_range(args.n)]
    elif kind == "lebesgue":
        reps = [verify_lebesgue(N, params=params, grid_depth=args.grid_depth,
                                work=args.work_bits, headroom=args.headroom)
                for N in _int_range(args.n)]
    elif kind == "markov":
        reps = [verify_markov(N, args.p, params=params,
                              grid_depth=args.grid_depth, work=args.work_bits,
                              headroom=args.headroom)
                for N in _int_range(args.n)]
    elif kind == "qqq":
        reps = [verify_qqq(N, args.q, params=params, work=args.work_bits,
                           headroom=args.headroom)
                for N in _int_range(args.n)]
    elif kind == "exponents":
        reps = [sweep_exponent_inequalities(params, args.n_max,
                                            alphas_extra=args.alphas_extra)]
    elif kind == "not-leja":
        reps = [verify_not_leja(s, params, work=args.work_bits)
                for s in _int_range(args.s)]
    elif kind == "leja-trend":
        reps = [verify_leja_trend(params, args.n_max,
                                  grid_depth=args.grid_depth,
                                  work=args.work_bits)]
    elif kind == "jackson":
        seq = _node_budget(params, max(args.n_list) + args.n_tail + 2)
        reps = [verify_jackson(CATALOG[args.f], w, args.n_list, seq,
                               n_tail=args.n_tail, bits=args.work_bits)
                for w in args.w_list]
    elif kind == "mf-jt":
        seq = _node_budget(params, max(args.n_list) + args.n_tail + 2)
        reps = [verify_mf_jt(CATALOG[args.f], args.p, w, args.n_list, seq,
                             n_tail=args.n_tail, bits=args.work_bits)
                for w in args.w_list]
    elif kind == "seom":
        cfg = OperatorConfig(params, n_max=max(args.n_list),
                             p_max=args.p, work=args.work_bits,
                             headroom=args.headroom,
                             grid_depth=args.grid_depth,
                             collar_samples=args.collar_samples)
        reps = [verify_seom(args.p, cfg, n_list=args.n_list)]
    elif kind == "term-decay":
        cfg = OperatorConfig(params, n_max=args.n_max, p_max=args.p,
                             work=args.work_bits, headroom=args.headroom,
                             grid_depth=args.grid_depth,
                             collar_samples=args.collar_samples)
        csv_path = None
        if args.term_csv:
            os.makedirs(args.out, exist_ok=True)
            csv_path = os.path.join(args.out, "terms.csv")
        reps = [verify_term_decay(CATALOG[args.f], args.p, cfg,
                                  csv_path=csv_path)]
    else:
        raise ValueError(f"unknown statement {kind}")
    return reps


def _node_budget(params, n):
    levels = build_levels(params, max(4, (n - 1).bit_length() + 1))
    return enumerate_nodes(n, levels)


def cmd_demo(args):
    params = None
    if args.statement == "interval":
        return [interval_demo(parse_rational(args.eps),
                              parse_rational(args.delta),
                              work=args.work_bits)]
    params = _params(args)
    return [violation_demo(params, _int_range(args.s_range),
                           q_list=tuple(_int_list(args.q_list)),
                           work=args.work_bits)]


def cmd_extend(args):
    params = _params(args)
    cfg = OperatorConfig(params, n_max=args.n_max, p_max=args.p_max,
                         work=args.work_bits, headroom=args.headroom,
                         grid_depth=args.grid_depth,
                         collar_samples=args.collar_samples)
    op = ExtensionOperator(CATALOG[args.f], cfg)
    rows = []
    ok = True
    for xt in args.x.split(","):
        xv = parse_rational(xt)
        res = op.eval(to_real(xv, op.vbits))
        ok = ok and res.converged
        rows.append({"x": str(xv),
                     "values": [fmt_real(v, 18) for v in res.values],
                     "tail_fraction": res.tail_fraction,
                     "converged": res.converged})
    rep = Report(
        statement="extend",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "N": args.n_max, "p": args.p_max, "f": args.f},
        passed=bool(ok),
        computed=f"{len(rows)} evaluation points",
        bound="term tails below tolerance",
        width_bits=args.work_bits,
        rows=rows,
    )
    return [rep]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cantorlab",
        description="Extended-precision checks of interpolation and smooth "
                    "extension bounds on Cantor-type sets")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("levels", help="level lengths and gaps",
                        description="Build level lengths ell_s = ell_1^(alpha^(s-1)) "
                                    "and gaps h_s = ell_s - 2 ell_{s+1}; checks gap "
                                    "positivity and the nondecreasing gap ratio.")
    _add_common(sp)
    sp.add_argument("--depth", type=int, default=8)
    sp.set_defaults(func=cmd_levels)

    sp = sub.add_parser("nodes", help="node listing and uniformity",
                        description="Enumerate nodes by increase of type and check "
                                    "the uniform-distribution counts (per-interval "
                                    "spread at most 1).")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=8)
    sp.set_defaults(func=cmd_nodes)

    sp = sub.add_parser("lebesgue", help="Lebesgue constant value",
                        description="Grid maximum of the Lebesgue function of the "
                                    "first n nodes.")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=5)
    sp.set_defaults(func=cmd_lebesgue)

    sp = sub.add_parser("markov", help="derivative factor sandwich",
                        description="Sandwich h0^(N-p)/(rho_1..rho_p) <= "
                                    "|w_N^(p)(0)|/max|w_N| <= h0^-N (N+1) N^p /"
                                    "(rho_1..rho_p) for N = 2^s.")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--p", type=int, default=1)
    sp.set_defaults(func=cmd_markov)

    sp = sub.add_parser("verify", help="inequality verifications")
    vsub = sp.add_subparsers(dest="statement", required=True)

    d = vsub.add_parser("pi", description="Product bounds: grid |w_{N+1}| <= "
                        "rho_1..rho_{N+1}, and the h0-power sandwiches at "
                        "x_{N+2} and at the nodes.")
    _add_common(d)
    d.add_argument("--n", default="4", help="N or lo:hi range")
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("lemma-max", description="max_K |a_k| <= h0^-N "
                        "|a_k(x_k)| for every k.")
    _add_common(d)
    d.add_argument("--n", default="16")
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("lebesgue", description="Lebesgue constant of N+1 "
                        "nodes <= h0^-N (N+1).")
    _add_common(d)
    d.add_argument("--n", default="16")
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("markov", description="Derivative factor sandwich at "
                        "N = 2^s (see the markov command).")
    _add_common(d)
    d.add_argument("--n", default="16")
    d.add_argument("--p", type=int, default=1)
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("qqq", description="Witness lower bound "
                        "|w_{N+1}^(q)(0)| >= h0^(N+1-q) rho_q..rho_{N+1}.")
    _add_common(d)
    d.add_argument("--n", default="7")
    d.add_argument("--q", type=int, default=3)
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("exponents", description="Exact exponent-domain "
                        "dominance sweep: partial sums and kept/removed "
                        "product comparisons for every node count.")
    _add_common(d)
    d.add_argument("--n-max", type=int, default=128)
    d.add_argument("--alphas-extra", default=[], nargs="*")
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("not-leja", description="Two-point comparison: the "
                        "enumerated node at ell_1 - ell_s loses to "
                        "y = ell_2 - ell_s by a factor below M sigma1^(2^(s-2)).")
    _add_common(d)
    d.add_argument("--s", default="6", help="s or lo:hi range")
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("leja-trend", description="Does each new node maximize "
                        "the running node polynomial on the set grid?")
    _add_common(d, alpha="3")
    d.add_argument("--n-max", type=int, default=32)
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("jackson", description="E_N tail estimate over "
                        "rho_1..rho_q(N+1) * ||f||_{q1}: finite, non-increasing "
                        "ratios (q = 2^w, q1 = 2^(w+8)+1; alpha >= 2, "
                        "ell1 <= 1/4).")
    _add_common(d)
    d.add_argument("--f", default="exp", choices=sorted(CATALOG))
    d.add_argument("--w-list", type=_int_list, default=[0, 1])
    d.add_argument("--n-list", type=_int_list, default=[15, 31, 63])
    d.add_argument("--n-tail", type=int, default=12)
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("mf-jt", description="Factor bound times E_{N-1} "
                        "against rho_{p+1}..rho_r(N+1) * ||f||_{r1} "
                        "(r = 2^w, r1 = 2^(w+10); alpha = 2, ell1 <= 1/3).")
    _add_common(d)
    d.add_argument("--f", default="exp", choices=sorted(CATALOG))
    d.add_argument("--p", type=int, default=1)
    d.add_argument("--w-list", type=_int_list, default=[3])
    d.add_argument("--n-list", type=_int_list, default=[31, 63, 127])
    d.add_argument("--n-tail", type=int, default=12)
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("seom", description="Cutoff-product seminorm against "
                        "plain derivative seminorms: bounded ratio run "
                        "(alpha = 2, ell1 <= 1/3).")
    _add_common(d)
    d.add_argument("--p", type=int, default=0)
    d.add_argument("--n-list", type=_int_range, default=list(range(2, 33)))
    d.add_argument("--collar-samples", type=int, default=16)
    d.set_defaults(func=cmd_verify)

    d = vsub.add_parser("term-decay", description="Per-term suprema of the "
                        "operator series: Cauchy sums, decreasing past N=16.")
    _add_common(d)
    d.add_argument("--f", default="exp", choices=sorted(CATALOG))
    d.add_argument("--p", type=int, default=2)
    d.add_argument("--n-max", type=int, default=64)
    d.add_argument("--collar-samples", type=int, default=16)
    d.add_argument("--term-csv", action="store_true",
                   help="also write terms.csv (per-term magnitudes)")
    d.set_defaults(func=cmd_verify)

    sp = sub.add_parser("demo", help="failure and interval demonstrations")
    dsub = sp.add_subparsers(dest="statement", required=True)

    d = dsub.add_parser("interval", description="Short-interval cutoff cost: "
                        "measured |x u| and |(x u)''| force the extension "
                        "constant above max(delta/(4 eps), 1/delta).")
    d.add_argument("--eps", default="1e-4")
    d.add_argument("--delta", default="0.02")
    d.add_argument("--work-bits", type=int, default=512)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default=".")
    d.set_defaults(func=cmd_demo)

    d = dsub.add_parser("violation", description="Growth of the cutoff-product "
                        "derivative at z = 1 + theta_p ell_s against every "
                        "fixed-order seminorm (alpha > 2).")
    _add_common(d, alpha="3")
    d.add_argument("--s-range", default="4:6")
    d.add_argument("--q-list", default="3,5")
    d.set_defaults(func=cmd_demo)

    sp = sub.add_parser("extend", help="evaluate the extension operator",
                        description="Truncated operator series at the given "
                                    "points: values, derivatives, tail fractions.")
    _add_common(sp)
    sp.add_argument("--f", default="exp", choices=sorted(CATALOG))
    sp.add_argument("--x", default="1/2")
    sp.add_argument("--n-max", type=int, default=64)
    sp.add_argument("--p-max", type=int, default=2)
    sp.add_argument("--collar-samples", type=int, default=16)
    sp.set_defaults(func=cmd_extend)

    return ap


def run(args) -> int:
    try:
        reports = args.func(args)
    except ConstraintError as exc:
        print(f"constraint violated: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except PrecisionBudgetError as exc:
        print(f"precision budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    cfg = _config_dict(args)
    for rep in reports:
        rep.config = cfg
        flag = "PASS" if rep.passed else "FAIL"
        print(f"[{flag}] {rep.statement} {rep.params} "
              f"computed={rep.computed} bound={rep.bound}")
    os.makedirs(args.out, exist_ok=True)
    write_reports_json(reports, os.path.join(args.out, "reports.json"))
    write_summary_csv(reports, os.path.join(args.out, "summary.csv"))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
