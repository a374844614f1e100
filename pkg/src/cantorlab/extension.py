"""The telescoping extension operator with shrinking cutoffs, and its checks.

The operator is the series sum_N xi_N(f) * w_N * u_{delta_N} with the cutoff
width schedule delta_N = ell_s for 2^s <= N < 2^{s+1} (the N = 0 term shares
delta_1).  Each term's derivatives come from the Leibniz rule over the
incremental product derivatives and the collar bump derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .cantor import CantorParams, LevelData, PointExpr, build_levels, eval_point, grid
from .cutoff import CutoffFn, build_cutoff, build_cutoff_from_components, \
    phi_deriv, theta_constants
from .nodes import NodeSeq, enumerate_nodes
from .numerics import (
    log2_abs,
    real_context,
    required_bits,
    to_real,
)
from .polyops import divided_diffs_upto, product_derivs
from .report import Report
from .approx import whitney_norm

_BINOM_CACHE = {}


def _binom(p, j):
    if (p, j) not in _BINOM_CACHE:
        _BINOM_CACHE[(p, j)] = math.comb(p, j)
    return _BINOM_CACHE[(p, j)]


@dataclass
class OperatorConfig:
    """Truncation, derivative order, widths and sampling for the operator."""

    params: CantorParams
    n_max: int = 255
    p_max: int = 2
    work: int = 512
    headroom: int = 128
    grid_depth: int = None
    collar_samples: int = 64
    domain: tuple = (-2, 2)

    def band(self, N: int) -> int:
        """Cutoff level: delta_N = ell_s with 2^s <= N < 2^{s+1}; N=0 uses 1."""
        return max(N, 1).bit_length() - 1

    @property
    def top_band(self) -> int:
        return self.band(self.n_max)


@dataclass
class ExtensionResult:
    """Operator value and derivatives at one point, with per-term magnitudes."""

    x: object
    values: list
    term_mags: list
    converged: bool
    tail_fraction: float


class ExtensionOperator:
    """Evaluator of the truncated operator series for one function."""

    def __init__(self, f, config: OperatorConfig, levels: LevelData = None,
                 Z: NodeSeq = None, coeffs: list = None):
        self.f = f
        self.config = config
        params = config.params
        s_top = config.top_band
        gd = config.grid_depth if config.grid_depth is not None else \
            min(s_top + 2, 10)
        depth = max(gd, s_top + 2, (config.n_max + 2).bit_length())
        self.levels = levels if levels is not None and levels.depth >= depth \
            else build_levels(params, depth)
        self.grid_depth = gd
        self.Z = Z if Z is not None and len(Z) >= config.n_max + 2 \
            else enumerate_nodes(config.n_max + 2, self.levels)
        if coeffs is not None:
            self.coeffs = coeffs
        elif f is not None:
            self.coeffs = divided_diffs_upto(
                f, self.Z, config.n_max,
                out_bits=max(2 * config.work, self.levels.bits))
        else:
            self.coeffs = None      # geometry-only use
        self.vbits = required_bits(params, depth, config.headroom)
        self.node_vals = [eval_point(p, self.levels, self.vbits)
                          for p in self.Z.points[:config.n_max + 1]]
        self._cutoffs = {}

    def cutoff_for_band(self, s: int) -> CutoffFn:
        if s not in self._cutoffs:
            delta = Fraction(1) if s == 0 else (
                self.levels.ell_frac(s) if self.levels.exact else None)
            if delta is not None:
                self._cutoffs[s] = build_cutoff(self.levels, delta,
                                                self.config.work,
                                                self.config.domain)
            else:
                self._cutoffs[s] = build_cutoff(
                    self.levels, self.levels.ell(s), self.config.work,
                    self.config.domain)
        return self._cutoffs[s]

    def eval(self, x, p_max: int = None, n_max: int = None,
             tail_window: int = 16, tail_tol: float = 1e-6) -> ExtensionResult:
        """Partial sums of the series and derivatives at one point."""
        cfg = self.config
        p_max = cfg.p_max if p_max is None else p_max
        n_max = cfg.n_max if n_max is None else n_max
        with real_context(self.vbits):
            xv = x if isinstance(x, mpfr) else (
                eval_point(x, self.levels, self.vbits)
                if isinstance(x, PointExpr) else to_real(x, self.vbits))
        u_cache = {}
        with real_context(cfg.work):
            acc = [mpfr(0)] * (p_max + 1)
            d = [mpfr(1)] + [mpfr(0)] * p_max
            term_mags = []
            for N in range(n_max + 1):
                s = cfg.band(N)
                if s not in u_cache:
                    u_cache[s] = self.cutoff_for_band(s).u_derivs(
                        xv, p_max, cfg.work)
                u = u_cache[s]
                xi = mpfr(self.coeffs[N].value)
                top = mpfr(0)
                for j in range(p_max + 1):
                    term_j = mpfr(0)
                    for i in range(j + 1):
                        term_j += _binom(j, i) * d[j - i] * u[i]
                    term_j *= xi
                    acc[j] += term_j
                    if abs(term_j) > top:
                        top = abs(term_j)
                term_mags.append(top)
                if N < n_max:
                    t = xv - self.node_vals[N]
                    for j in range(p_max, 0, -1):
                        d[j] = t * d[j] + j * d[j - 1]
                    d[0] = t * d[0]
            window = min(tail_window, max(1, (n_max + 1) // 4))
            total = sum(term_mags)
            tail = sum(term_mags[-window:])
            if total > 0:
                frac = float(tail / total)
            else:
                frac = 0.0
        return ExtensionResult(x, acc, term_mags, frac <= tail_tol, frac)


def w_eval(f, x, config: OperatorConfig, **kw) -> ExtensionResult:
    """One-shot evaluation of the operator for f at x."""
    return ExtensionOperator(f, config).eval(x, **kw)


def _collar_points(op: ExtensionOperator, s: int, m: int) -> list:
    """Sample points of every bump collar of the band-s cutoff (plus one
    plateau point per zero cell), as mpfr at the operator's value width."""
    u = op.cutoff_for_band(s)
    pts = []
    with real_context(op.vbits):
        dv = to_real(u.delta, op.vbits)
        for idx, (kind, anchor) in enumerate(u.regions):
            if kind == "decay-right":
                for i in range(1, m + 1):
                    pts.append(anchor + dv * i / (m + 1))
            elif kind == "decay-left":
                for i in range(1, m + 1):
                    pts.append(anchor - dv * i / (m + 1))
            elif kind == "zero" and 0 < idx < len(u.regions) - 1:
                lo = u.breaks[idx - 1]
                hi = u.breaks[idx]
                pts.append((lo + hi) / 2)
    return pts


def verify_term_decay(f, p: int, config: OperatorConfig,
                      csv_path: str = None) -> Report:
    """Per-term suprema T_N of the p-th derivative over the sampled line.

    Checks that the T_N sums are Cauchy (tiny tail fraction) and compares
    each T_N against ell_s * ||f||_{r1} with the analytic-mode seminorm.
    ``csv_path`` writes the per-term table (N, delta_N, |xi_N|, term sup,
    cumulative) for plotting.
    """
    config.params.require("the term-decay bound", alpha_eq=2, ell1_max="1/3")
    op = ExtensionOperator(f, config)
    cfg = config
    kgrid = grid(op.levels, op.grid_depth)
    with real_context(op.vbits):
        kvals = [eval_point(x, op.levels, op.vbits) for x in kgrid]
    t_list = [to_real(0, cfg.work) for _ in range(cfg.n_max + 1)]
    samples = {s: _collar_points(op, s, cfg.collar_samples)
               for s in range(cfg.top_band + 1)}

    # rolling products per point; collar points only feed their own band
    def sweep(points, n_lo, n_hi):
        with real_context(cfg.work):
            for xv in points:
                u_cache = {}
                d = [mpfr(1)] + [mpfr(0)] * p
                for N in range(n_hi + 1):
                    sb = cfg.band(N)
                    if sb not in u_cache:
                        u_cache[sb] = op.cutoff_for_band(sb).u_derivs(
                            xv, p, cfg.work)
                    if N >= n_lo:
                        u = u_cache[sb]
                        xi = mpfr(op.coeffs[N].value)
                        term = mpfr(0)
                        for i in range(p + 1):
                            term += _binom(p, i) * d[p - i] * u[i]
                        mag = abs(xi * term)
                        if mag > t_list[N]:
                            t_list[N] = mag
                    if N < n_hi:
                        t = xv - op.node_vals[N]
                        for j in range(p, 0, -1):
                            d[j] = t * d[j] + j * d[j - 1]
                        d[0] = t * d[0]

    sweep(kvals, 0, cfg.n_max)
    for s in range(cfg.top_band + 1):
        lo = 1 << s if s else 0
        hi = min((1 << (s + 1)) - 1, cfg.n_max)
        sweep(samples[s], lo, hi)

    with real_context(cfg.work):
        total = sum(t_list)
        tail = sum(t_list[-16:])
        cauchy = total == 0 or tail <= mpfr("1e-6") * total
        # decrease past N=16: every later term sits below T_16, and terms
        # fall monotonically within each cutoff band (the width schedule
        # steps at N = 2^s, where a bounded jump is structural)
        slack = 1 + gmpy2.exp2(-40)
        envelope = True
        within_band = True
        jumps = []
        for N in range(17, cfg.n_max + 1):
            if cfg.n_max >= 16 and t_list[N] > t_list[16] * slack:
                envelope = False
            if cfg.band(N) == cfg.band(N - 1):
                if t_list[N] > t_list[N - 1] * slack:
                    within_band = False
            elif t_list[N] > t_list[N - 1]:
                jumps.append({"N": N,
                              "jump_log2": log2_abs(t_list[N])
                              - log2_abs(t_list[N - 1])})
        decreasing_past_16 = envelope and within_band
    if csv_path is not None:
        import csv as _csv

        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            wr = _csv.writer(fh)
            wr.writerow(["N", "delta_log2", "xi_abs_log2", "term_sup_log2",
                         "cumulative_log2"])
            with real_context(cfg.work):
                running = mpfr(0)
                for N, tn in enumerate(t_list):
                    running += tn
                    dlt = op.levels.ell(cfg.band(N)) if cfg.band(N) else mpfr(1)
                    wr.writerow([N, log2_abs(dlt),
                                 log2_abs(op.coeffs[N].value),
                                 log2_abs(tn), log2_abs(running)])
    # bound comparison rows
    r1 = 1 << 12
    rows = []
    first_below = None
    if getattr(f, "bound", None) is not None:
        norm = whitney_norm(f, r1, mode="analytic", bits=cfg.work)
        with real_context(cfg.work):
            for N in (2 ** s for s in range(1, cfg.top_band + 1)):
                bound = op.levels.ell(cfg.band(N)) * norm
                ok = t_list[N] <= bound
                rows.append({"N": N, "T_N_log2": log2_abs(t_list[N]),
                             "bound_log2": log2_abs(bound), "pass": bool(ok)})
                if ok and first_below is None:
                    first_below = N
    return Report(
        statement="term-decay",
        params={"alpha": str(cfg.params.alpha), "ell1": str(cfg.params.ell1),
                "N": cfg.n_max, "p": p, "f": getattr(f, "name", "f")},
        passed=bool(cauchy and decreasing_past_16),
        computed=f"tail fraction {float(tail / total) if total else 0:.3e}",
        bound="Cauchy sums, decreasing past N=16",
        width_bits=cfg.work,
        grid_depth=op.grid_depth,
        rows=rows,
        notes={"first_N_below_bound": first_below, "r1": r1,
               "T16_log2": log2_abs(t_list[16]) if cfg.n_max >= 16 else None,
               "band_edge_jumps": jumps},
    )


def verify_seom(p: int, config: OperatorConfig, n_list=None) -> Report:
    """Ratio of the cutoff-product seminorm to a plain derivative seminorm.

    For each n: |w_n u_{delta_n}|_p over the collar-sampled line against
    max_{j<=q} |w_n^(j)| on the set grid, q = 2^(2p+6)+1 when q < n, else the
    largest 2^w + 1 < n (marked as reduced).  Reports the running max of the
    ratio as evidence of a uniform constant.
    """
    config.params.require("the simultaneous-extension bound",
                          alpha_eq=2, ell1_max="1/3")
    cfg = config
    op = ExtensionOperator(None, config)
    if n_list is None:
        n_list = list(range(2, cfg.n_max + 1))
    kgrid = grid(op.levels, op.grid_depth)
    with real_context(op.vbits):
        kvals = [eval_point(x, op.levels, op.vbits) for x in kgrid]
    rows = []
    running = to_real(0, cfg.work)
    q_full = (1 << (2 * p + 6)) + 1
    for n in n_list:
        s = cfg.band(n)
        if q_full < n:
            q = q_full
            reduced = False
        else:
            w = max(0, (n - 2).bit_length() - 1)
            q = (1 << w) + 1
            while q >= n and w > 0:
                w -= 1
                q = (1 << w) + 1
            q = min(q, n - 1) if n > 1 else 0
            reduced = True
        u = op.cutoff_for_band(s)
        roots = op.Z.points[:n]
        with real_context(cfg.work):
            # left side: cutoff-product seminorm over K grid and collars
            lhs = mpfr(0)
            pts = list(kvals) + _collar_points(op, s, cfg.collar_samples)
            for xv in pts:
                derivs = product_derivs(roots, xv, p, op.levels, cfg.work)
                uders = u.u_derivs(xv, p, cfg.work)
                for j in range(p + 1):
                    tj = mpfr(0)
                    for i in range(j + 1):
                        tj += _binom(j, i) * derivs.values[j - i] * uders[i]
                    if abs(tj) > lhs:
                        lhs = abs(tj)
            # right side: plain derivative seminorm on the set grid
            rhs = mpfr(0)
            for xv in kvals:
                derivs = product_derivs(roots, xv, q, op.levels, cfg.work)
                for j in range(q + 1):
                    if abs(derivs.values[j]) > rhs:
                        rhs = abs(derivs.values[j])
            ratio = lhs / rhs if rhs > 0 else mpfr("inf")
            if ratio > running:
                running = ratio
        rows.append({"n": n, "q": q, "reduced_q": bool(reduced),
                     "ratio_log2": log2_abs(ratio)})
    return Report(
        statement="seom",
        params={"alpha": str(cfg.params.alpha), "ell1": str(cfg.params.ell1),
                "p": p, "q": q_full, "N": max(n_list)},
        passed=bool(gmpy2.is_finite(running)),
        computed=f"running max ratio 2^{log2_abs(running):.2f}",
        bound="bounded ratio sequence (uniform-constant evidence)",
        width_bits=cfg.work,
        grid_depth=op.grid_depth,
        rows=rows,
    )


def violation_demo(params: CantorParams, s_range, q_list=(3, 5),
                   work: int = 512, collar_check: bool = True) -> Report:
    """Growth of the cutoff-product derivative against every fixed-order
    seminorm when alpha > 2: evaluated at z = 1 + theta_p * ell_s.

    p is the smallest even integer above (2*alpha-3)/(alpha-2).  The reported
    ratio per (s, q) is |(w_N u)^{(p)}(z)| / (N^q prod_{k>q} d_k(1)); growth
    in s demonstrates that no (q, C) pair can dominate.
    """
    params.require("the failure demonstration", alpha_gt=2)
    alpha = params.alpha
    threshold = (2 * alpha - 3) / (alpha - 2)
    p = 2
    while p <= threshold:
        p += 2
    tc = theta_constants(p, bits=max(work, 384))
    s_range = list(s_range)
    depth = max(s_range) + 1
    levels = build_levels(params, depth)
    Z = enumerate_nodes(1 << max(s_range), levels)
    vbits = levels.bits
    rows = []
    ratios = {q: [] for q in q_list}
    with real_context(work):
        phis = [phi_deriv(j, tc.theta, max(work, 384)) for j in range(p + 1)]
    for s in s_range:
        N = 1 << s
        with real_context(vbits):
            ell_s = levels.ell(s)
            z = 1 + tc.theta * ell_s
            node_vals = [eval_point(pt, levels, vbits) for pt in Z.points[:N]]
        with real_context(work):
            derivs = [mpfr(1)] + [mpfr(0)] * p
            for nv in node_vals:
                t = z - nv
                for j in range(p, 0, -1):
                    derivs[j] = t * derivs[j] + j * derivs[j - 1]
                derivs[0] = t * derivs[0]
            wtilde = mpfr(0)
            for j in range(p + 1):
                wtilde += _binom(p, j) * derivs[j] * phis[p - j] \
                    * ell_s ** (-(p - j))
            d1 = sorted([abs(1 - nv) for nv in node_vals])
            row = {"s": s, "p": p, "wtilde_log2": log2_abs(wtilde)}
            for q in q_list:
                denom = mpfr(N) ** q
                for d in d1[q:]:
                    denom *= d
                ratio = abs(wtilde) / denom
                ratios[q].append(ratio)
                row[f"ratio_q{q}_log2"] = log2_abs(ratio)
        rows.append(row)
    growing = all(
        all(ratios[q][i + 1] > ratios[q][i] for i in range(len(s_range) - 1))
        for q in q_list)
    return Report(
        statement="violation-demo",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "p": p, "N": 1 << max(s_range)},
        passed=bool(growing),
        computed="ratios grow with s for every tested q",
        bound="unbounded in s (no uniform constant)",
        width_bits=work,
        rows=rows,
        notes={"theta": float(tc.theta), "q_list": list(q_list)},
    )


def interval_demo(eps, delta, work: int = 512, samples: int = 2048) -> Report:
    """Cutoff-extension cost on a short interval: measured sup norms of x*u
    and (x*u)'' force the extension constant above max(delta/(4 eps), 1/delta).
    """
    eps = Fraction(eps) if not isinstance(eps, Fraction) else eps
    delta = Fraction(delta) if not isinstance(delta, Fraction) else delta
    if not (0 < eps < Fraction(1, 4)) or delta <= 0:
        raise ValueError("need 0 < eps < 1/4 and delta > 0")
    if eps + delta >= 1:
        # cutoff support reaches the domain edge: the sup comparison says
        # nothing about the extension constant
        return Report(
            statement="interval-demo",
            params={"eps": str(eps), "delta": str(delta)},
            passed=True,
            computed="cutoff support reaches the domain edge",
            bound="no constraint",
            notes={"degenerate": True},
        )
    u = build_cutoff_from_components([(-eps, eps)], delta, work,
                                     domain=(-1, 1))
    with real_context(work):
        ev = to_real(eps, work)
        dv = to_real(delta, work)
        sup_q = mpfr(0)
        sup_q2 = mpfr(0)
        for i in range(samples + 1):
            xv = ev + dv * i / samples
            ud = u.u_derivs(xv, 2, work)
            q0 = abs(xv * ud[0])
            q2 = abs(2 * ud[1] + xv * ud[2])
            if q0 > sup_q:
                sup_q = q0
            if q2 > sup_q2:
                sup_q2 = q2
        ok_value = sup_q > dv / 4
        ok_curv = sup_q2 >= mpfr("0.99") / dv
        implied = max(dv / (4 * ev), 1 / dv)
    return Report(
        statement="interval-demo",
        params={"eps": str(eps), "delta": str(delta)},
        passed=bool(ok_value and ok_curv),
        computed=f"|xu| = {float(sup_q):.6e}, |(xu)''| = {float(sup_q2):.6e}",
        bound=f"implied C >= {float(implied):.4f}",
        margin_log2=float(gmpy2.log2(implied)),
        width_bits=work,
        notes={"implied_C": float(implied),
               "value_norm": float(sup_q), "curvature_norm": float(sup_q2)},
    )
