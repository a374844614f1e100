"""Desk-scale numeric verification of the product, maximum, Lebesgue and
derivative-factor bounds, the non-Leja example, and the witness derivative
lower bound.

Value-domain comparisons allow a 2^-60 relative slack on the passing side (an
exact equality case must not fail from the last rounding); margins are logged
in log2.  Exponent-domain comparisons are exact integers for alpha = 2 and
exact rationals for other rational alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .cantor import CantorParams, LevelData, PointExpr, build_levels, eval_point, grid
from .nodes import (
    NodeSeq,
    chain_level,
    enumerate_nodes,
    lambda_profile,
    mu_profile,
    next_node,
    p_removed,
    p_smallest,
)
from .numerics import (
    BigReal,
    LogMag,
    log2_abs,
    logmag_to_bigreal,
    real_context,
    required_bits,
    to_real,
)
from .polyops import product_derivs
from .report import Report

REL_SLACK_LOG2 = -60


def _le_with_slack(a: BigReal, b: BigReal) -> bool:
    """a <= b up to one part in 2^60 (absorbs final roundings, logged)."""
    with real_context(128):
        return a <= b * (1 + gmpy2.exp2(REL_SLACK_LOG2))


def _margin(computed: BigReal, bound: BigReal) -> float:
    """log2(bound / computed); +inf when computed is zero."""
    if computed == 0:
        return math.inf
    if bound == 0:
        return -math.inf
    return log2_abs(bound) - log2_abs(computed)


@dataclass
class NodeSystem:
    """Shared tables for the value-domain checks on one node count.

    Point values are stored at a width covering their full dyadic span (or an
    equivalent accuracy reserve for non-integer alpha), so differences keep
    full relative accuracy; products and comparisons run at ``work`` bits.
    """

    params: CantorParams
    m: int                  # node count of the product polynomial
    grid_depth: int
    levels: LevelData
    Z: NodeSeq
    work: int
    vbits: int
    node_vals: list = field(default_factory=list)
    grid_exprs: list = field(default_factory=list)
    grid_vals: list = field(default_factory=list)
    akk: list = None
    _scan: dict = None

    @property
    def s(self) -> int:
        return chain_level(self.m)


_GRID_CACHE = {}


def make_system(params: CantorParams, m: int, grid_depth: int = None,
                work: int = 512, levels: LevelData = None,
                Z: NodeSeq = None, headroom: int = 128) -> NodeSystem:
    s = chain_level(m)
    gd = grid_depth if grid_depth is not None else s + 2
    need_depth = max(gd, (m + 1).bit_length())
    if levels is None or levels.depth < need_depth:
        levels = build_levels(params, need_depth)
    vbits = required_bits(params, need_depth, headroom)
    if Z is None or len(Z) < m + 1:
        Z = enumerate_nodes(m + 1, levels)
    sys = NodeSystem(params, m, gd, levels, Z, work, vbits)
    sys.node_vals = [eval_point(p, levels, vbits) for p in Z.points[:m + 1]]
    key = (params.alpha, params.ell1, gd, vbits)
    if key not in _GRID_CACHE:
        exprs = grid(levels, gd)
        _GRID_CACHE[key] = (exprs, [eval_point(x, levels, vbits) for x in exprs])
    sys.grid_exprs, sys.grid_vals = _GRID_CACHE[key]
    return sys


def _akk(sys: NodeSystem) -> list:
    """Signed a_k(x_k) over the m-node prefix, at work bits."""
    if sys.akk is None:
        with real_context(sys.work):
            acc = [mpfr(1)] * sys.m
            for j in range(1, sys.m):
                xj = sys.node_vals[j]
                prod_new = mpfr(1)
                for k in range(j):
                    t = sys.node_vals[k] - xj
                    acc[k] *= t
                    prod_new *= -t
                acc[j] = prod_new
        sys.akk = acc
    return sys.akk


def _scan_grid(sys: NodeSystem) -> dict:
    """One pass over the grid: product maxima, Lebesgue max, per-node maxima.

    For a grid point equal to a node the k-th normalized term is taken as its
    limit (1 at the matching node, 0 at the others).
    """
    if sys._scan is not None:
        return sys._scan
    akk = _akk(sys)
    m = sys.m
    leb_max = None
    leb_arg = None
    omega_max = mpfr(0)
    amax = [mpfr(0)] * m
    with real_context(sys.work):
        inv_akk = [1 / abs(a) for a in akk]
        for i, xv in enumerate(sys.grid_vals):
            diffs = [xv - nv for nv in sys.node_vals[:m]]
            node_hit = None
            om = mpfr(1)
            for k, t in enumerate(diffs):
                if t == 0:
                    node_hit = k
                else:
                    om *= t
            absom = abs(om)
            if node_hit is None:
                leb = mpfr(0)
                for k in range(m):
                    r = absom / abs(diffs[k])
                    if r > amax[k]:
                        amax[k] = r
                    leb += r * inv_akk[k]
                if absom > omega_max:
                    omega_max = absom
            else:
                # at node j: |a_j| = |prod of the other diffs|, others vanish
                if absom > amax[node_hit]:
                    amax[node_hit] = absom
                leb = mpfr(1)
            if leb_max is None or leb > leb_max:
                leb_max = leb
                leb_arg = i
    sys._scan = {"omega_max": omega_max, "leb_max": leb_max,
                 "leb_arg": leb_arg, "amax": amax}
    return sys._scan


def _rho_value(params: CantorParams, lm: LogMag, bits: int) -> BigReal:
    return logmag_to_bigreal(lm, params, bits)


def verify_pi_bounds(N: int, sys: NodeSystem = None, params: CantorParams = None,
                     grid_depth: int = None, work: int = 512,
                     headroom: int = 128) -> Report:
    """Product bounds: grid |w_{N+1}| against the sorted-factor product, and
    the two-sided h0-power sandwiches at x_{N+2} and at the nodes."""
    if sys is None:
        sys = make_system(params, N + 1, grid_depth, work, headroom=headroom)
    params = sys.params
    lam, prof = lambda_profile(N + 1, params)
    scan = _scan_grid(sys)
    with real_context(sys.work):
        rho_full = _rho_value(params, p_smallest(prof, N + 1), sys.work)
        h0 = to_real(params.h0, sys.work)
        ok_i = _le_with_slack(scan["omega_max"], rho_full)
        m_i = _margin(scan["omega_max"], rho_full)
        # sandwich at the next node
        xnext = next_node(N, sys.levels)
        xv = eval_point(xnext, sys.levels, sys.vbits)
        om = mpfr(1)
        for nv in sys.node_vals[:N + 1]:
            om *= xv - nv
        lo = h0 ** (N + 1) * rho_full
        ok_ii = _le_with_slack(lo, abs(om)) and _le_with_slack(abs(om), rho_full)
        # per-node sandwich against the exclusion profiles
        akk = _akk(sys)
        ok_iii = True
        worst_iii = math.inf
        for k in range(1, N + 2):
            mu, mprof = mu_profile(k, sys.Z.prefix(N + 1))
            mu_full = _rho_value(params, p_smallest(mprof, N), sys.work)
            v = abs(akk[k - 1])
            if not (_le_with_slack(h0 ** N * mu_full, v)
                    and _le_with_slack(v, mu_full)):
                ok_iii = False
            worst_iii = min(worst_iii, _margin(v, mu_full))
    return Report(
        statement="pi",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1), "N": N},
        passed=bool(ok_i and ok_ii and ok_iii),
        computed=f"grid max |w| 2^{log2_abs(scan['omega_max']):.2f}",
        bound=f"factor product 2^{log2_abs(rho_full):.2f}",
        margin_log2=m_i,
        width_bits=sys.work,
        grid_depth=sys.grid_depth,
        rows=[{"check": "grid-product", "pass": bool(ok_i), "margin_log2": m_i},
              {"check": "next-node-sandwich", "pass": bool(ok_ii),
               "value_log2": log2_abs(om)},
              {"check": "node-sandwich", "pass": bool(ok_iii),
               "worst_upper_margin_log2": worst_iii}],
    )


def verify_lemma_max(N: int, sys: NodeSystem = None,
                     params: CantorParams = None, grid_depth: int = None,
                     work: int = 512, headroom: int = 128) -> Report:
    """Grid max of |a_k| never exceeds h0^-N |a_k(x_k)|, every k."""
    if sys is None:
        sys = make_system(params, N + 1, grid_depth, work, headroom=headroom)
    params = sys.params
    scan = _scan_grid(sys)
    akk = _akk(sys)
    worst_k = None
    worst_margin = math.inf
    ok = True
    with real_context(sys.work):
        cap = to_real(params.h0, sys.work) ** (-N)
        for k in range(N + 1):
            bound = cap * abs(akk[k])
            if not _le_with_slack(scan["amax"][k], bound):
                ok = False
            mg = _margin(scan["amax"][k], bound)
            if mg < worst_margin:
                worst_margin = mg
                worst_k = k + 1
    return Report(
        statement="lemma-max",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1), "N": N},
        passed=bool(ok),
        computed=f"worst k = {worst_k}",
        bound="h0^-N |a_k(x_k)|",
        margin_log2=worst_margin,
        width_bits=sys.work,
        grid_depth=sys.grid_depth,
        notes={"sup_semantics": "grid max, a lower bound of the true sup"},
    )


def verify_lebesgue(N: int, sys: NodeSystem = None,
                    params: CantorParams = None, grid_depth: int = None,
                    work: int = 512, headroom: int = 128) -> Report:
    """Grid Lebesgue constant against h0^-N (N+1)."""
    if sys is None:
        sys = make_system(params, N + 1, grid_depth, work, headroom=headroom)
    params = sys.params
    scan = _scan_grid(sys)
    with real_context(sys.work):
        bound = to_real(params.h0, sys.work) ** (-N) * (N + 1)
        ok = _le_with_slack(scan["leb_max"], bound)
    return Report(
        statement="lebesgue",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1), "N": N},
        passed=bool(ok),
        computed=f"{float(scan['leb_max']):.8e}",
        bound=f"{float(bound):.8e}",
        margin_log2=_margin(scan["leb_max"], bound),
        width_bits=sys.work,
        grid_depth=sys.grid_depth,
        notes={"sup_semantics": "grid max, a lower bound of the true sup"},
    )


def verify_markov(N: int, p: int, sys: NodeSystem = None,
                  params: CantorParams = None, grid_depth: int = None,
                  work: int = 512, headroom: int = 128) -> Report:
    """Sandwich for the p-th derivative ratio of the N-node product at 0.

    Needs N = 2^s so the product vanishes on a full endpoint set.
    """
    if N & (N - 1):
        raise ValueError("N must be a power of two")
    if not (1 <= p < N):
        raise ValueError("need 1 <= p < N")
    if sys is None:
        sys = make_system(params, N, grid_depth, work, headroom=headroom)
    params = sys.params
    scan = _scan_grid(sys)
    lam, prof = lambda_profile(N, params)
    res = product_derivs(sys.Z.points[:N], PointExpr.zero(), p, sys.levels,
                         sys.work)
    with real_context(sys.work):
        rho_p = _rho_value(params, p_smallest(prof, p), sys.work)
        h0 = to_real(params.h0, sys.work)
        ratio = abs(res.deriv(p)) / scan["omega_max"]
        lower = h0 ** (N - p) / rho_p
        upper = h0 ** (-N) * (N + 1) * mpfr(N) ** p / rho_p
        ok = _le_with_slack(lower, ratio) and _le_with_slack(ratio, upper)
    return Report(
        statement="markov",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "N": N, "p": p},
        passed=bool(ok),
        computed=f"ratio 2^{log2_abs(ratio):.2f}",
        bound=f"[2^{log2_abs(lower):.2f}, 2^{log2_abs(upper):.2f}]",
        margin_log2=min(_margin(lower, ratio), _margin(ratio, upper)),
        width_bits=sys.work,
        grid_depth=sys.grid_depth,
        notes={"ratio_semantics":
               "one concrete polynomial: a lower estimate of the factor norm"},
    )


def verify_qqq(N: int, q: int, sys: NodeSystem = None,
               params: CantorParams = None, work: int = 512,
               headroom: int = 128) -> Report:
    """|w_{N+1}^(q)(0)| >= h0^(N+1-q) * rho_q..rho_{N+1} (witness at 0)."""
    if not (1 <= q < N + 1):
        raise ValueError("need 1 <= q < N+1")
    if sys is None:
        sys = make_system(params, N + 1, None, work, headroom=headroom)
    params = sys.params
    lam, prof = lambda_profile(N + 1, params)
    res = product_derivs(sys.Z.points[:N + 1], PointExpr.zero(), q,
                         sys.levels, sys.work)
    with real_context(sys.work):
        rhs = to_real(params.h0, sys.work) ** (N + 1 - q) \
            * _rho_value(params, p_removed(prof, q - 1), sys.work)
        lhs = abs(res.deriv(q))
        ok = _le_with_slack(rhs, lhs)
    return Report(
        statement="qqq",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "N": N, "q": q},
        passed=bool(ok),
        computed=f"2^{log2_abs(lhs):.2f}",
        bound=f">= 2^{log2_abs(rhs):.2f}",
        margin_log2=_margin(rhs, lhs),
        width_bits=sys.work,
    )


def not_leja_constants(params: CantorParams):
    """sigma, sigma_1 = (1+sigma)/2 and M of the two-point comparison."""
    l1, l2 = params.ell1, params.ell1 ** 2
    sigma = ((1 - l1) / (1 - 2 * l1)) * ((1 - 2 * l1 + l2) / (1 - l1)) \
        * ((1 - l2) / (1 + l1 - 2 * l2))
    m_const = 2 / (l1 * (1 - l2))
    return sigma, (1 + sigma) / 2, m_const


def verify_not_leja(s: int, params: CantorParams, work: int = None,
                    r_power: int = 5) -> Report:
    """Two-point comparison defeating the greedy-maximal (Leja) property.

    With N = 2^s + 2, the excluded node sits at ell_1 - ell_s while the
    competitor y = ell_2 - ell_s wins by an exponentially large factor.
    """
    params.require("the non-Leja comparison", alpha_eq=2, ell1_max="1/4")
    if s < 4:
        raise ValueError("need s >= 4")
    N = (1 << s) + 2
    depth = s + 2
    levels = build_levels(params, depth)
    work = work or 512
    Z = enumerate_nodes(N + 1, levels)
    xk = Z.points[N]
    assert xk == PointExpr.from_dict({1: 1, s: -1})
    y = PointExpr.from_dict({2: 1, s: -1})
    vbits = required_bits(params, depth, 128)
    with real_context(vbits):
        xk_v = eval_point(xk, levels, vbits)
        y_v = eval_point(y, levels, vbits)
        node_vals = [eval_point(p, levels, vbits) for p in Z.points[:N]]
    with real_context(work):
        a_xk = mpfr(1)
        a_y = mpfr(1)
        for nv in node_vals:
            a_xk *= xk_v - nv
            a_y *= y_v - nv
        ratio = abs(a_xk) / abs(a_y)
        sigma, sigma1, m_const = not_leja_constants(params)
        bound = to_real(m_const, work) * to_real(sigma1, work) ** (1 << (s - 2))
        ok_ratio = _le_with_slack(ratio, bound)
        # greedy comparison: the chosen next node loses to y
        ok_leja = abs(a_xk) < abs(a_y)
        power_holds = mpfr(N) ** r_power * abs(a_xk) < abs(a_y)
    return Report(
        statement="not-leja",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "N": N, "p": s},
        passed=bool(ok_ratio and ok_leja),
        computed=f"ratio 2^{log2_abs(ratio):.2f}",
        bound=f"M sigma1^(2^(s-2)) = 2^{log2_abs(bound):.2f}",
        margin_log2=_margin(ratio, bound),
        width_bits=work,
        rows=[{"s": s, "sigma": float(to_real(sigma, 128)),
               "ratio_log2": log2_abs(ratio),
               "bound_log2": log2_abs(bound),
               "greedy_defeated": bool(ok_leja),
               f"N^{r_power}_comparison_holds": bool(power_holds)}],
        notes={"r_power": r_power},
    )


def verify_leja_trend(params: CantorParams, n_max: int, grid_depth: int = None,
                      work: int = 512) -> Report:
    """Whether each new node maximizes the running product on the set grid.

    Expected to hold for alpha > 2; for alpha = 2 the first failures appear
    at counts 2^s + 2 (findings are reported either way).
    """
    s_top = n_max.bit_length() - 1
    gd = grid_depth if grid_depth is not None else s_top + 2
    depth = max(gd, s_top + 2)
    levels = build_levels(params, depth)
    Z = enumerate_nodes(n_max + 1, levels)
    vbits = required_bits(params, depth, 128)
    pts = grid(levels, gd)
    index_of = {x: i for i, x in enumerate(pts)}
    violations = []
    with real_context(vbits):
        gvals = [eval_point(x, levels, vbits) for x in pts]
        nvals = [eval_point(p, levels, vbits) for p in Z.points]
    with real_context(work):
        om = [mpfr(1)] * len(pts)
        for n in range(1, n_max + 1):
            for i in range(len(pts)):
                om[i] *= gvals[i] - nvals[n - 1]
            nxt = Z.points[n]
            i_next = index_of.get(nxt)
            chosen = abs(om[i_next]) if i_next is not None else None
            gmax = max(abs(v) for v in om)
            if chosen is None or not _le_with_slack(gmax, chosen):
                violations.append({"n": n, "chosen_log2": log2_abs(chosen),
                                   "max_log2": log2_abs(gmax)})
    expect_greedy = params.alpha > 2
    passed = not violations if expect_greedy else True
    return Report(
        statement="leja-trend",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "N": n_max},
        passed=bool(passed),
        computed=f"{len(violations)} violations <= n = {n_max}",
        bound="greedy-maximal at every step" if expect_greedy
        else "informational sweep",
        width_bits=work,
        grid_depth=gd,
        rows=violations,
        notes={"expected_greedy": bool(expect_greedy)},
    )


def sweep_value_bounds(params: CantorParams, n1_lo: int, n1_hi: int,
                       work: int = 512) -> dict:
    """Product, maximum and Lebesgue bounds for every node count in a range.

    Shares per-band tables: grid values, node/grid difference inverses and
    rolling products, so the whole range costs little more than its largest
    member.  Returns one Report per statement with per-N rows.
    """
    rows_pi = []
    rows_lemma = []
    rows_leb = []
    s_lo = chain_level(n1_lo)
    s_hi = chain_level(n1_hi)
    # incremental per-level node counts for the exclusion profiles
    counts = [dict() for _ in range(s_hi + 2)]
    depth_top = max(s_hi + 2, (n1_hi + 1).bit_length() + 1)
    Z = enumerate_nodes(n1_hi + 1, build_levels(params, depth_top))
    counted = 0
    for s in range(s_lo, s_hi + 1):
        band_lo = max(n1_lo, 1 << s)
        band_hi = min(n1_hi, (1 << (s + 1)) - 1)
        if band_lo > band_hi:
            continue
        gd = s + 2
        depth = max(gd, (band_hi + 1).bit_length() + 1)
        levels = build_levels(params, depth)
        vbits = required_bits(params, depth, 128)
        wts = [params.weight(j) for j in range(s + 1)]
        pts = grid(levels, gd)
        with real_context(vbits):
            gv = [eval_point(x, levels, vbits) for x in pts]
            nv = [eval_point(p, levels, vbits) for p in Z.points[:band_hi + 1]]
        G = len(pts)
        with real_context(work):
            h0 = to_real(params.h0, work)
            diffs = [[gv[i] - nv[k] for k in range(band_hi + 1)]
                     for i in range(G)]
            invd = [[(1 / abs(d) if d != 0 else None) for d in row]
                    for row in diffs]
            node_at = [next((k for k, d in enumerate(row) if d == 0), None)
                       for row in diffs]
            # prefix products and exclusion products up to band_lo
            akk = [mpfr(1)] * band_hi
            for m in range(1, band_lo):
                xm = nv[m]
                prod_new = mpfr(1)
                for k in range(m):
                    t = nv[k] - xm
                    akk[k] *= t
                    prod_new *= -t
                akk[m] = prod_new
            om = [mpfr(1)] * G
            for i in range(G):
                row = diffs[i]
                acc = mpfr(1)
                for k in range(band_lo):
                    acc *= row[k]
                om[i] = acc
            for n1 in range(band_lo, band_hi + 1):
                N = n1 - 1
                if n1 > band_lo:
                    m = n1 - 1          # 0-based index of the newest node
                    xm = nv[m]
                    prod_new = mpfr(1)
                    for k in range(m):
                        t = nv[k] - xm
                        akk[k] *= t
                        prod_new *= -t
                    akk[m] = prod_new
                    for i in range(G):
                        om[i] *= diffs[i][m]
                # update counts with the newest node
                while counted < n1:
                    counted += 1
                    for t in range(s_hi + 2):
                        pth = Z.path_at(counted, t)
                        c = counts[t]
                        c[pth] = c.get(pth, 0) + 1
                invakk = [1 / abs(akk[k]) for k in range(n1)]
                # one pass: per-node maxima of |a_k| and the Lebesgue function
                amax = [mpfr(0)] * n1
                leb_max = mpfr(1)
                om_max = mpfr(0)
                for i in range(G):
                    hit = node_at[i]
                    if hit is not None and hit < n1:
                        a = abs(_excluded_product(diffs[i], n1, hit))
                        if a > amax[hit]:
                            amax[hit] = a
                        continue
                    absom = abs(om[i])
                    if absom > om_max:
                        om_max = absom
                    row = invd[i]
                    leb = mpfr(0)
                    for k in range(n1):
                        r = absom * row[k]
                        if r > amax[k]:
                            amax[k] = r
                        leb += r * invakk[k]
                    if leb > leb_max:
                        leb_max = leb
                # product bounds
                lam, prof = lambda_profile(n1, params)
                rho_full = logmag_to_bigreal(p_smallest(prof, n1), params, work)
                ok_pi_grid = _le_with_slack(om_max, rho_full)
                x_next = mpfr(1)
                for k in range(n1):
                    x_next *= nv[n1] - nv[k]
                lo_bound = h0 ** n1 * rho_full
                ok_pi_next = _le_with_slack(lo_bound, abs(x_next)) and \
                    _le_with_slack(abs(x_next), rho_full)
                # per-node sandwiches and the maximum bound
                ok_mu = True
                ok_lemma = True
                worst_lemma = math.inf
                cap = h0 ** (-N)
                for k in range(1, n1 + 1):
                    mu_row = [counts[t][Z.path_at(k, t)] for t in range(s + 1)]
                    mu = _degrees_mu(mu_row, s)
                    e = 0
                    for j in range(1, s + 1):
                        if mu[j]:
                            e += mu[j] * wts[j]
                    mu_val = logmag_to_bigreal(LogMag(1, e), params, work)
                    v = abs(akk[k - 1])
                    if not (_le_with_slack(h0 ** N * mu_val, v)
                            and _le_with_slack(v, mu_val)):
                        ok_mu = False
                    bound_k = cap * v
                    if not _le_with_slack(amax[k - 1], bound_k):
                        ok_lemma = False
                    mg = _margin(amax[k - 1], bound_k)
                    if mg < worst_lemma:
                        worst_lemma = mg
                leb_bound = cap * n1
                ok_leb = _le_with_slack(leb_max, leb_bound)
                rows_pi.append({"N": N, "pass": bool(ok_pi_grid and ok_pi_next
                                                     and ok_mu),
                                "grid_margin_log2": _margin(om_max, rho_full)})
                rows_lemma.append({"N": N, "pass": bool(ok_lemma),
                                   "worst_margin_log2": worst_lemma})
                rows_leb.append({"N": N, "pass": bool(ok_leb),
                                 "value": float(leb_max),
                                 "bound": float(leb_bound),
                                 "margin_log2": _margin(leb_max, leb_bound)})
    base = {"alpha": str(params.alpha), "ell1": str(params.ell1),
            "N": n1_hi - 1}
    out = {}
    for name, rows in (("pi", rows_pi), ("lemma-max", rows_lemma),
                       ("lebesgue", rows_leb)):
        out[name] = Report(
            statement=name,
            params=dict(base),
            passed=all(r["pass"] for r in rows),
            computed=f"sweep over N+1 in [{n1_lo}, {n1_hi}]",
            bound="per-statement bounds at every N",
            width_bits=work,
            rows=rows,
        )
    return out


def _excluded_product(diff_row, n1, skip):
    acc = mpfr(1)
    for k in range(n1):
        if k != skip:
            acc *= diff_row[k]
    return acc


# -- exact exponent-domain sweep ----------------------------------------------

def _degrees_mu(row, s: int) -> tuple:
    return tuple(row[t] - row[t + 1] for t in range(s)) + (row[s] - 1,)


def _degrees_nu(row, s: int, n0: int) -> tuple:
    out = [row[t] - row[t + 1] for t in range(s)] + [row[s]]
    out[n0] -= 1
    return tuple(out)


def scaled_weights(params: CantorParams, s: int) -> list:
    """Integer level weights a^(j-1) b^(s-j) (alpha = a/b scaled by b^(s-1)).

    Exact for every rational alpha; scaling leaves all exponent comparisons
    unchanged.  Entry 0 is 0 since the level-0 length is 1.
    """
    a = params.alpha.numerator
    b = params.alpha.denominator
    return [0] + [a ** (j - 1) * b ** (s - j) for j in range(1, s + 1)]


def _cums(deg: tuple, w: list):
    """Cumulative counts and scaled exponents by descending level."""
    s = len(deg) - 1
    cc = [0]
    ee = [0]
    for j in range(s, -1, -1):
        cc.append(cc[-1] + deg[j])
        ee.append(ee[-1] + deg[j] * w[j])
    return cc, ee


def _keep_eval(cc, ee, w, s, p, i):
    """E_keep(p) with a monotone segment pointer i; returns (value, i)."""
    n = len(cc) - 1
    while i < n and cc[i + 1] <= p:
        i += 1
    if i >= n:
        return ee[n], i
    return ee[i] + (p - cc[i]) * w[s - i], i


def _keeps_dominated(cc_a, ee_a, cc_b, ee_b, w, s, pmax) -> bool:
    """E_keep_a(p) >= E_keep_b(p) for all integer p in [0, pmax]
    (value-domain: the kept product of a is the smaller one)."""
    bps = sorted({c for c in cc_a + cc_b if c < pmax} | {0, pmax})
    ia = ib = 0
    for p in bps:
        va, ia = _keep_eval(cc_a, ee_a, w, s, p, ia)
        vb, ib = _keep_eval(cc_b, ee_b, w, s, p, ib)
        if va < vb:
            return False
    return True


def _removed_dominated(cc_a, ee_a, cc_b, ee_b, w, s, pmax) -> bool:
    """(prod_a)_p <= (prod_b)_p for all p in [0, pmax]: the exponent left in
    a dominates, i.e. T_a - E_keep_a(p) >= T_b - E_keep_b(p)."""
    cap = ee_a[-1] - ee_b[-1]
    bps = sorted({c for c in cc_a + cc_b if c < pmax} | {0, pmax})
    ia = ib = 0
    for p in bps:
        va, ia = _keep_eval(cc_a, ee_a, w, s, p, ia)
        vb, ib = _keep_eval(cc_b, ee_b, w, s, p, ib)
        if va - vb > cap:
            return False
    return True


def _suffix_dominated(lo: tuple, hi: tuple) -> bool:
    """sum_{j>=i} lo_j <= sum_{j>=i} hi_j for every i >= 1."""
    s = len(lo) - 1
    al = ah = 0
    for j in range(s, 0, -1):
        al += lo[j]
        ah += hi[j]
        if al > ah:
            return False
    return True


def sweep_exponent_inequalities(params: CantorParams, n1_max: int,
                                alphas_extra=()) -> Report:
    """Exact dominance checks for every node count up to n1_max.

    For each N+1: partial sums of the exclusion degrees against the block
    degrees; kept/removed product dominance for all p <= N; and, over every
    node/grid-cell pair, the exclusion-vs-chain dominance.  Degree vectors
    depend on a grid point only through its level-s interval and on the node
    only through its interval chain counts, so pairs are deduplicated by
    (chain-count rows, meet level) before the exact checks run.
    """
    levels = build_levels(params, max(4, n1_max.bit_length() + 1))
    seq = enumerate_nodes(n1_max, levels)
    s_cap = n1_max.bit_length() - 1
    paths = np.zeros((n1_max, s_cap + 1), dtype=np.int64)
    for i in range(1, n1_max + 1):
        for t in range(s_cap + 1):
            paths[i - 1, t] = seq.path_at(i, t)
    bitlen = np.zeros(1 << s_cap, dtype=np.int64)
    for z in range(1, 1 << s_cap):
        bitlen[z] = z.bit_length()
    param_list = [params] + [CantorParams.create(a, params.ell1)
                             for a in alphas_extra]
    checked = {str(p.alpha): 0 for p in param_list}
    failures = []
    counts = [np.zeros(1 << t, dtype=np.int64) for t in range(s_cap + 1)]
    weights = {}
    for n1 in range(1, n1_max + 1):
        for t in range(s_cap + 1):
            counts[t][paths[n1 - 1, t]] += 1
        if n1 < 2:
            continue
        N = n1 - 1
        s = chain_level(n1)
        # chain-count rows for every level-s interval
        rows = np.stack([counts[t][(np.arange(1 << s) >> (s - t))]
                         for t in range(s + 1)], axis=1)
        urows, inv = np.unique(rows, axis=0, return_inverse=True)
        jx = np.arange(1 << s)
        xor = jx[None, :] ^ jx[:, None]
        n0 = s - bitlen[xor]
        nuniq = len(urows)
        keys = (inv[:, None] * nuniq + inv[None, :]) * (s + 1) + n0
        triples = [int(k) for k in np.unique(keys)]
        urow_list = [tuple(int(v) for v in r) for r in urows]
        mu_degs = [_degrees_mu(r, s) for r in urow_list]
        raw_nu = [[r[t] - r[t + 1] for t in range(s)] + [r[s]]
                  for r in urow_list]
        for p in param_list:
            key_w = (p.alpha, s)
            if key_w not in weights:
                weights[key_w] = scaled_weights(p, s)
            w = weights[key_w]
            lam, _ = lambda_profile(n1, p)
            lam_c = _cums(lam.degrees, w)
            mu_cums = [_cums(m, w) for m in mu_degs]
            mu_fail = nu_fail = None
            for ridx in range(nuniq):
                mu = mu_degs[ridx]
                cc_m, ee_m = mu_cums[ridx]
                if not (_suffix_dominated(mu, lam.degrees)
                        and _keeps_dominated(lam_c[0], lam_c[1], cc_m, ee_m,
                                             w, s, N)
                        and _removed_dominated(lam_c[0], lam_c[1], cc_m, ee_m,
                                               w, s, N)):
                    mu_fail = urow_list[ridx]
            for key in triples:
                n0_v = key % (s + 1)
                rest = key // (s + 1)
                rk = rest % nuniq
                rx = rest // nuniq
                mu = mu_degs[rk]
                nu = list(raw_nu[rx])
                nu[n0_v] -= 1
                cc_m, ee_m = mu_cums[rk]
                cc_n, ee_n = _cums(nu, w)
                if not (_suffix_dominated(mu, nu)
                        and _removed_dominated(cc_n, ee_n, cc_m, ee_m,
                                               w, s, N)):
                    nu_fail = (urow_list[rx], urow_list[rk], n0_v)
            checked[str(p.alpha)] += nuniq + len(triples)
            if mu_fail is not None or nu_fail is not None:
                failures.append({"N1": n1, "alpha": str(p.alpha),
                                 "mu_fail": str(mu_fail),
                                 "nu_fail": str(nu_fail)})
    return Report(
        statement="exponent-dominance",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "N": n1_max - 1},
        passed=not failures,
        computed=f"cases per alpha: {checked}",
        bound="exact dominance in the exponent domain",
        rows=failures,
        notes={"alphas": [str(p.alpha) for p in param_list]},
    )
