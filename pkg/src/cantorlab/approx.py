"""Best-approximation estimators, Whitney seminorms, convergence-rate checks.

Two one-sided estimates bracket the best uniform approximation E_N: a tail
bound from the Newton-basis expansion (upper, up to grid resolution of the
sup) and a discrete exchange solve on a finite grid (lower).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import gmpy2
from gmpy2 import mpfr

from .cantor import LevelData, PointExpr, eval_point, grid, point_fraction
from .nodes import NodeSeq, lambda_profile, p_smallest
from .numerics import (
    BigReal,
    LogMag,
    log2_abs,
    logmag_to_bigreal,
    real_context,
    to_real,
)
from .polyops import divided_diffs_upto, product_derivs
from .report import Report


class TailNotConverged(Exception):
    """The expansion tail is not visibly decreasing at the truncation point."""


@dataclass
class JetFn:
    """A smooth function given by value/derivative oracles and bounds.

    ``bound(k)`` dominates |f^(k)| on [0, 1] (the hull of the set, which is
    all the seminorms ever sample).  ``exact_value`` is present when f takes
    exact rational values at rational points.
    """

    name: str
    value: Callable
    deriv: Callable
    bound: Optional[Callable] = None
    exact_value: Optional[Callable] = None

    def __call__(self, x, bits: int) -> BigReal:
        return self.value(x, bits)


def exp_fn(c: int = 1) -> JetFn:
    cf = Fraction(c)

    def val(x, bits):
        with real_context(bits):
            return gmpy2.exp(to_real(cf, bits) * x)

    def der(k, x, bits):
        with real_context(bits):
            return to_real(cf, bits) ** k * gmpy2.exp(to_real(cf, bits) * x)

    def bnd(k):
        return abs(cf) ** k * _exp_upper(cf)

    return JetFn(f"exp({c}x)" if c != 1 else "exp", val, der, bnd)


def _exp_upper(c: Fraction) -> Fraction:
    # rational upper bound for sup exp(c x) on [0,1]
    hi = max(c, 0)
    v = math.exp(float(hi))
    return Fraction(v).limit_denominator(10 ** 12) + Fraction(1, 10 ** 6)


def sin_fn(c: int = 1) -> JetFn:
    cf = Fraction(c)

    def val(x, bits):
        with real_context(bits):
            return gmpy2.sin(to_real(cf, bits) * x)

    def der(k, x, bits):
        with real_context(bits):
            arg = to_real(cf, bits) * x + k * gmpy2.const_pi() / 2
            return to_real(cf, bits) ** k * gmpy2.sin(arg)

    return JetFn(f"sin({c}x)", val, der, lambda k: abs(cf) ** k)


def poly_fn(coeffs, name: str = None) -> JetFn:
    """Polynomial sum coeffs[j] * x^j with exact rational coefficients."""
    cs = [Fraction(c) for c in coeffs]

    def dcoeffs(k):
        out = list(cs)
        for _ in range(k):
            out = [j * c for j, c in enumerate(out)][1:]
        return out

    def horner_exact(x: Fraction, k=0) -> Fraction:
        acc = Fraction(0)
        for c in reversed(dcoeffs(k)):
            acc = acc * x + c
        return acc

    def val(x, bits):
        with real_context(bits):
            acc = mpfr(0)
            for c in reversed(cs):
                acc = acc * x + to_real(c, bits)
            return acc

    def der(k, x, bits):
        with real_context(bits):
            acc = mpfr(0)
            for c in reversed(dcoeffs(k)):
                acc = acc * x + to_real(c, bits)
            return acc

    def bnd(k):
        return sum(abs(c) for c in dcoeffs(k)) or Fraction(0)

    return JetFn(name or f"poly{len(cs) - 1}", val, der, bnd,
                 exact_value=horner_exact)


def inv_shift_fn() -> JetFn:
    """1/(x+2); derivatives (-1)^k k!/(x+2)^(k+1)."""

    def val(x, bits):
        with real_context(bits):
            return 1 / (x + 2)

    def der(k, x, bits):
        with real_context(bits):
            return mpfr((-1) ** k) * gmpy2.factorial(k) / (x + 2) ** (k + 1)

    def bnd(k):
        return Fraction(math.factorial(k), 2 ** (k + 1))

    return JetFn("1/(x+2)", val, der, bnd,
                 exact_value=lambda x: 1 / (x + 2))


def omega_jet(Z: NodeSeq, m: int) -> JetFn:
    """The degree-m node polynomial as a jet (exact at rational points)."""
    levels = Z.levels
    roots = Z.points[:m]

    def val(x, bits):
        return product_derivs(roots, x, 0, levels, bits).value

    def der(k, x, bits):
        return product_derivs(roots, x, k, levels, bits).deriv(k)

    exact = None
    if levels.exact:
        root_fracs = [point_fraction(r, levels) for r in roots]

        def exact(x: Fraction) -> Fraction:
            acc = Fraction(1)
            for r in root_fracs:
                acc *= (x - r)
            return acc

    return JetFn(f"omega_{m}", val, der, exact_value=exact)


CATALOG = {
    "exp": exp_fn(1),
    "sin3": sin_fn(3),
    "poly3": poly_fn([1, -2, 0, Fraction(1, 3)]),
    "invshift": inv_shift_fn(),
}


# -- E_N estimators -----------------------------------------------------------

@dataclass
class TailEstimate:
    """Truncated tail sum_{n>N} |xi_n| * gridmax|w_n| with truncation flags."""

    value: BigReal
    last_term: BigReal
    n_terms: int
    converged: bool


def en_tail_upper(f, N: int, Z: NodeSeq, n_tail: int = 16,
                  grid_depth: int = None, bits: int = None) -> TailEstimate:
    """Tail estimate of E_N from the expansion coefficients past order N.

    The sup of |w_n| is approximated by a grid max (a lower bound of the true
    sup, so the estimate is an upper bound only up to grid resolution).
    """
    levels = Z.levels
    if N + n_tail + 1 > len(Z):
        raise ValueError("node budget: need N + n_tail + 1 nodes")
    bits = bits or levels.bits
    top = N + n_tail
    s_top = top.bit_length() - 1
    gd = grid_depth if grid_depth is not None else min(s_top + 2, levels.depth)
    pts = grid(levels, gd)
    coeffs = divided_diffs_upto(f, Z, top)
    with real_context(bits):
        omega_on_grid = [mpfr(1)] * len(pts)
        xvals = [eval_point(x, levels, bits) for x in pts]
        node_vals = [eval_point(p, levels, bits) for p in Z.points[:top + 1]]
        for n in range(N + 1):
            for i in range(len(pts)):
                omega_on_grid[i] *= xvals[i] - node_vals[n]
        total = mpfr(0)
        last = mpfr(0)
        for n in range(N + 1, top + 1):
            gmax = max(abs(v) for v in omega_on_grid)
            last = abs(mpfr(coeffs[n].value)) * gmax
            total += last
            if n < top:
                for i in range(len(pts)):
                    omega_on_grid[i] *= xvals[i] - node_vals[n]
        if total == 0:
            return TailEstimate(total, last, n_tail, True)
        converged = last < gmpy2.exp2(-32) * total
    if not converged:
        raise TailNotConverged(
            f"tail not converged: last term {float(last):.3e} vs sum "
            f"{float(total):.3e}")
    return TailEstimate(total, last, n_tail, converged)


def en_grid_exchange(f, N: int, grid_pts: list, levels: LevelData,
                     bits: int = None, max_iter: int = 200) -> BigReal:
    """Best uniform approximation of f on a finite grid by degree-N
    polynomials, via single-point exchange; a lower estimate of E_N on the set.
    """
    if len(grid_pts) < N + 2:
        raise ValueError("grid must hold at least N+2 points")
    bits = bits or max(512, levels.bits)
    with real_context(bits):
        xs = [eval_point(x, levels, bits) if isinstance(x, PointExpr)
              else to_real(x, bits) for x in grid_pts]
        fs = [f(x, bits) for x in xs]
        m = len(xs)
        # evenly spread initial reference
        ref = [round(i * (m - 1) / (N + 1)) for i in range(N + 2)]
        h = mpfr(0)
        for _ in range(max_iter):
            t = [xs[i] for i in ref]
            ft = [fs[i] for i in ref]
            # Newton coefficients for f and for the alternating sign vector
            dd_f = _newton_table(t, ft)
            dd_s = _newton_table(t, [mpfr((-1) ** j) for j in range(len(t))])
            # impose the last equation to find the leveled error h
            wN1 = mpfr(1)
            A = mpfr(0)
            B = mpfr(0)
            for n in range(N + 1):
                A += dd_f[n] * wN1
                B += dd_s[n] * wN1
                wN1 *= t[N + 1] - t[n]
            sigma = mpfr((-1) ** (N + 1))
            h = (ft[N + 1] - A) / (sigma - B)
            coeffs = [dd_f[n] - h * dd_s[n] for n in range(N + 1)]
            errs = []
            for i in range(m):
                acc = mpfr(0)
                w = mpfr(1)
                for n in range(N + 1):
                    acc += coeffs[n] * w
                    w *= xs[i] - t[n]
                errs.append(fs[i] - acc)
            worst = max(range(m), key=lambda i: abs(errs[i]))
            if abs(errs[worst]) <= abs(h) * (1 + gmpy2.exp2(-32)):
                return abs(h)
            ref = _exchange(ref, worst, errs)
        return abs(h)   # leveled reference value: still a valid lower estimate


def _newton_table(t, y):
    coeffs = list(y)
    for j in range(1, len(t)):
        for i in range(len(t) - 1, j - 1, -1):
            coeffs[i] = (coeffs[i] - coeffs[i - 1]) / (t[i] - t[i - j])
    return coeffs


def _exchange(ref, new, errs):
    sign_new = 1 if errs[new] >= 0 else -1
    out = list(ref)
    if new < ref[0]:
        if (1 if errs[ref[0]] >= 0 else -1) == sign_new:
            out[0] = new
        else:
            out = [new] + ref[:-1]
    elif new > ref[-1]:
        if (1 if errs[ref[-1]] >= 0 else -1) == sign_new:
            out[-1] = new
        else:
            out = ref[1:] + [new]
    else:
        for i in range(len(ref) - 1):
            if ref[i] <= new <= ref[i + 1]:
                if (1 if errs[ref[i]] >= 0 else -1) == sign_new:
                    out[i] = new
                else:
                    out[i + 1] = new
                break
    return sorted(set(out)) if len(set(out)) == len(ref) else list(ref)


# -- Whitney seminorms --------------------------------------------------------

def whitney_norm(f: JetFn, q: int, grid_pts: list = None,
                 levels: LevelData = None, mode: str = "empirical",
                 bits: int = 320) -> BigReal:
    """The order-q seminorm: derivative sup plus scaled Taylor remainders.

    empirical: maxima over a grid and its pairs (q <= 16).
    analytic:  max_k<=q B_k + B_{q+1} * e from the derivative bound family.
    """
    if mode == "analytic":
        if f.bound is None:
            raise ValueError(f"{f.name} carries no derivative bound family")
        with real_context(bits):
            top = max(to_real(f.bound(k), bits) for k in range(q + 1))
            return top + to_real(f.bound(q + 1), bits) * gmpy2.exp(mpfr(1))
    if mode != "empirical":
        raise ValueError("mode must be 'empirical' or 'analytic'")
    if q > 16:
        raise ValueError("empirical mode supports q <= 16")
    if grid_pts is None or levels is None:
        raise ValueError("empirical mode needs a grid and levels")
    with real_context(bits):
        xs = [eval_point(x, levels, bits) for x in grid_pts]
        derivs = [[f.deriv(k, x, bits) for k in range(q + 2)] for x in xs]
        sup_derivs = max(abs(derivs[i][k])
                         for i in range(len(xs)) for k in range(q + 1))
        fact = [to_real(math.factorial(j), bits) for j in range(q + 1)]
        rem = mpfr(0)
        for iy in range(len(xs)):
            for ix in range(len(xs)):
                if ix == iy:
                    continue
                dxy = xs[ix] - xs[iy]
                for k in range(q + 1):
                    taylor = mpfr(0)
                    for j in range(q - k + 1):
                        taylor += derivs[iy][k + j] * dxy ** j / fact[j]
                    val = abs(derivs[ix][k] - taylor) * abs(dxy) ** (k - q)
                    if val > rem:
                        rem = val
        return sup_derivs + rem


# -- rate verifications --------------------------------------------------------

def verify_jackson(f: JetFn, w: int, N_list, Z: NodeSeq,
                   n_tail: int = 12, bits: int = None) -> Report:
    """Ratio of the E_N tail estimate to rho_1..rho_q(N+1) * ||f||_{q1}.

    q = 2^w, q1 = 2^(w+8)+1.  Requires alpha >= 2 and ell1 <= 1/4.  Passes
    when every ratio is finite and the sequence is non-increasing past its
    first element (trend evidence of a uniform constant).
    """
    params = Z.levels.params
    params.require("the Jackson-rate bound", alpha_min=2, ell1_max="1/4")
    q = 1 << w
    q1 = (1 << (w + 8)) + 1
    bits = bits or Z.levels.bits
    norm = whitney_norm(f, q1, mode="analytic", bits=bits)
    rows = []
    ratios = []
    outside = any((1 << w) >= ((N + 1).bit_length() - 1) - 8 for N in N_list)
    for N in N_list:
        est = en_tail_upper(f, N, Z, n_tail=n_tail, bits=bits)
        _, prof = lambda_profile(N + 1, params)
        denom_lm = p_smallest(prof, q)
        with real_context(bits):
            denom = logmag_to_bigreal(denom_lm, params, bits) * norm
            r = est.value / denom
        ratios.append(r)
        s = (N + 1).bit_length() - 1
        rows.append({"N": N, "ratio": float(r), "E_N_upper": float(est.value),
                     "in_hypothesis": bool(w < s - 8)})
    finite = all(gmpy2.is_finite(r) for r in ratios)
    # non-increasing once the first element is dropped
    trend = all(ratios[i + 1] <= ratios[i] for i in range(1, len(ratios) - 1))
    passed = finite and trend
    return Report(
        statement="jackson",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "q": q, "w": w, "f": f.name, "q1": q1,
                "N": max(N_list)},
        passed=passed,
        computed=f"sup ratio {float(max(ratios)):.6e}",
        bound="finite, non-increasing past first element",
        margin_log2=log2_abs(max(ratios)),
        width_bits=bits,
        rows=rows,
        notes={"norm_q1": float(norm), "outside_hypothesis_rows": outside},
    )


def verify_mf_jt(f: JetFn, p: int, w: int, N_list, Z: NodeSeq,
                 n_tail: int = 12, bits: int = None) -> Report:
    """Product of the differentiation-factor bound and the E_{N-1} estimate
    against rho_{p+1}..rho_r(N+1) * ||f||_{r1}, r = 2^w, r1 = 2^(w+10).

    Requires alpha = 2 and ell1 <= 1/3; records the first N that passes and
    requires every later N in the list to pass as well.
    """
    params = Z.levels.params
    params.require("the factor-rate product bound", alpha_eq=2, ell1_max="1/3")
    r = 1 << w
    if r <= p:
        raise ValueError("need r = 2^w > p")
    r1 = 1 << (w + 10)
    bits = bits or Z.levels.bits
    norm = whitney_norm(f, r1, mode="analytic", bits=bits)
    h0 = to_real(params.h0, bits)
    rows = []
    first_pass = None
    all_after = True
    for N in N_list:
        est = en_tail_upper(f, N - 1, Z, n_tail=n_tail, bits=bits)
        _, prof = lambda_profile(N + 1, params)
        with real_context(bits):
            mf_bound = h0 ** (-N) * (N + 1) * mpfr(N) ** p \
                / logmag_to_bigreal(p_smallest(prof, p), params, bits)
            lhs = mf_bound * est.value
            rhs_lm = LogMag(1, p_smallest(prof, r).exponent
                            - p_smallest(prof, p).exponent)
            rhs = logmag_to_bigreal(rhs_lm, params, bits) * norm
            ok = lhs <= rhs
        rows.append({"N": N, "lhs_log2": log2_abs(lhs),
                     "rhs_log2": log2_abs(rhs), "pass": bool(ok)})
        if ok and first_pass is None:
            first_pass = N
        if first_pass is not None and not ok:
            all_after = False
    passed = first_pass is not None and all_after
    return Report(
        statement="mf-jt",
        params={"alpha": str(params.alpha), "ell1": str(params.ell1),
                "p": p, "q": r, "f": f.name, "N": max(N_list)},
        passed=passed,
        computed=f"first passing N = {first_pass}",
        bound=f"rho_({p + 1}..{r})(N+1) * norm_{r1}",
        width_bits=bits,
        rows=rows,
        notes={"r1": r1, "norm_r1": float(norm)},
    )
