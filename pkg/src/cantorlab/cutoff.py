"""Smooth bump, derivative recursion, gap-adapted cutoffs, edge constants.

phi is 1 left of 0, 0 right of 1, and exp[exp(-1/x)/(x-1)] between.  Its k-th
derivative is phi * tau * (x-x^2)^(-2k) * Q_{k-1}(x, tau) with tau = exp(-1/x)
and Q_k an integer-coefficient polynomial in (x, tau).  The Q recursion is

    Q_k = Q_0*Q_{k-1}*tau + Q_{k-1}*r_k + (x-x^2)^2*dQ_{k-1}/dx
          + (1-x)^2*(dQ_{k-1}/dtau)*tau,
    r_k = (1-x)^2 + 2k*x*(1-x)*(2x-1).

The coefficients of Q_{k-1} depend on x, so the tau chain rule alone is
incomplete; the partial-x term is required.  Every evaluator is cross-checked
against finite differences of phi itself.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .cantor import LevelData
from .numerics import BigReal, real_context, to_real


# -- bivariate integer polynomials in (x, tau) -------------------------------

def _bp_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for key, c in b.items():
        out[key] = out.get(key, 0) + c
        if out[key] == 0:
            del out[key]
    return out


def _bp_mul(a: dict, b: dict) -> dict:
    out = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, 0) + c1 * c2
    return {k: c for k, c in out.items() if c != 0}


def _bp_dx(a: dict) -> dict:
    return {(i - 1, j): c * i for (i, j), c in a.items() if i > 0}


def _bp_dtau(a: dict) -> dict:
    return {(i, j - 1): c * j for (i, j), c in a.items() if j > 0}


def _bp_shift_tau(a: dict) -> dict:
    return {(i, j + 1): c for (i, j), c in a.items()}


_Q0 = {(1, 0): 1, (0, 0): -1, (2, 0): -1}                 # x - 1 - x^2
_ONE_MINUS_X_SQ = {(0, 0): 1, (1, 0): -2, (2, 0): 1}      # (1-x)^2
_X_MINUS_X2_SQ = {(2, 0): 1, (3, 0): -2, (4, 0): 1}       # (x-x^2)^2

_Q_CACHE = [_Q0]


def q_poly(k: int) -> dict:
    """Q_k as a dict (x-degree, tau-degree) -> int coefficient."""
    while len(_Q_CACHE) <= k:
        kk = len(_Q_CACHE)              # building Q_kk from Q_{kk-1}
        prev = _Q_CACHE[-1]
        # r_k = (1-x)^2 + 2k x (1-x)(2x-1) = (1-x)^2 + 2k(-2x^3 + 3x^2 - x)
        rk = _bp_add(_ONE_MINUS_X_SQ,
                     {(3, 0): -4 * kk, (2, 0): 6 * kk, (1, 0): -2 * kk})
        term1 = _bp_shift_tau(_bp_mul(_Q0, prev))
        term2 = _bp_mul(prev, rk)
        term3 = _bp_mul(_X_MINUS_X2_SQ, _bp_dx(prev))
        term4 = _bp_shift_tau(_bp_mul(_ONE_MINUS_X_SQ, _bp_dtau(prev)))
        _Q_CACHE.append(_bp_add(_bp_add(term1, term2), _bp_add(term3, term4)))
    return _Q_CACHE[k]


def q_eval(k: int, xv: BigReal, tauv: BigReal, bits: int) -> BigReal:
    """Q_k(x, tau) at mpfr arguments (Horner in tau, then x)."""
    poly = q_poly(k)
    jmax = max(j for _, j in poly)
    imax = max(i for i, _ in poly)
    rows = [[0] * (imax + 1) for _ in range(jmax + 1)]
    for (i, j), c in poly.items():
        rows[j][i] = c
    with real_context(bits):
        total = mpfr(0)
        for j in range(jmax, -1, -1):
            row = rows[j]
            acc = mpfr(0)
            for i in range(imax, -1, -1):
                acc = acc * xv + row[i]
            total = total * tauv + acc
        return total


# -- phi and its derivatives --------------------------------------------------

def tau(x, bits: int) -> BigReal:
    with real_context(bits):
        return gmpy2.exp(-1 / to_real(x, bits))


def phi(x, bits: int) -> BigReal:
    """The bump: 1 for x <= 0, 0 for x >= 1, exp[exp(-1/x)/(x-1)] between."""
    xv = to_real(x, bits)
    if xv <= 0:
        return to_real(1, bits)
    if xv >= 1:
        return to_real(0, bits)
    with real_context(bits):
        return gmpy2.exp(gmpy2.exp(-1 / xv) / (xv - 1))


def phi_deriv(k: int, x, bits: int) -> BigReal:
    """k-th derivative of phi (identically 0 outside (0,1) for k >= 1)."""
    if k == 0:
        return phi(x, bits)
    xv = to_real(x, bits)
    if xv <= 0 or xv >= 1:
        return to_real(0, bits)
    with real_context(bits):
        tv = gmpy2.exp(-1 / xv)
        base = gmpy2.exp(tv / (xv - 1)) * tv * (xv - xv * xv) ** (-2 * k)
        return base * q_eval(k - 1, xv, tv, bits)


def phi_fd_check(k: int, x, bits: int = 512, step: Fraction = Fraction(1, 10 ** 8)):
    """(recursion value, 5-point finite difference of phi^(k-1)) at x."""
    with real_context(bits):
        h = to_real(step, bits)
        xv = to_real(x, bits)
        f = lambda t: phi_deriv(k - 1, t, bits)
        fd = (f(xv - 2 * h) - 8 * f(xv - h) + 8 * f(xv + h) - f(xv + 2 * h)) / (12 * h)
        return phi_deriv(k, xv, bits), fd


def phi_deriv_max(j: int, bits: int = 320, samples: int = 201) -> BigReal:
    """Sample max of |phi^(j)| over (0,1): the width-free derivative scale c_j."""
    best = to_real(0, bits)
    for i in range(1, samples + 1):
        t = Fraction(i, samples + 1)
        v = abs(phi_deriv(j, t, bits))
        if v > best:
            best = v
    return best


# -- edge constants -----------------------------------------------------------

@dataclass
class ThetaConstants:
    """Threshold point and scale constants near the right edge, order k even."""

    k: int
    eta_k: BigReal
    eta_km1: BigReal
    theta: BigReal
    a_k: BigReal
    bits: int


def _q_at_one(k: int, bits: int) -> BigReal:
    with real_context(bits):
        return q_eval(k, mpfr(1), gmpy2.exp(mpfr(-1)), bits)


def _eta(k: int, bits: int, scan: int = 256) -> BigReal:
    """Smallest eta with |Q_k(tau(x)) - Q_k(tau(1))| <= 1/(2e^k) on [eta, 1].

    Bisection on the sampled outermost sign change; the defining property is
    re-verified on a fine sample afterwards since monotonicity near 1 is not
    guaranteed a priori.
    """
    with real_context(bits):
        target = q_eval(k, mpfr(1), gmpy2.exp(mpfr(-1)), bits)
        bound = gmpy2.exp(mpfr(-k)) / 2

        def excess(xv):
            return abs(q_eval(k, xv, gmpy2.exp(-1 / xv), bits) - target) - bound

        lo = 1 - 1 / (2 * gmpy2.sqrt(k * gmpy2.exp(mpfr(1))))
        while excess(lo) <= 0:
            lo = 1 - 2 * (1 - lo)
            if lo <= 0:
                return mpfr(0)      # the bound holds on all of (0, 1]
        # outermost sign change between lo and 1
        bad = lo
        good = mpfr(1)
        step = (good - bad) / scan
        t = bad
        for i in range(1, scan):
            xv = bad + i * step
            if excess(xv) > 0:
                t = xv
        lo_b, hi_b = t, good
        for _ in range(bits // 2):
            mid = (lo_b + hi_b) / 2
            if excess(mid) > 0:
                lo_b = mid
            else:
                hi_b = mid
        eta = hi_b
        for i in range(scan + 1):
            xv = eta + (1 - eta) * i / scan
            if excess(xv) > 0:
                raise ArithmeticError(
                    f"edge bound fails inside [eta, 1] at order {k}")
        return eta


def theta_constants(k: int, bits: int = 512) -> ThetaConstants:
    """eta_k, eta_{k-1}, theta_k, A_k for an even order k >= 2."""
    if k < 2 or k % 2:
        raise ValueError("order must be even and >= 2")
    eta_k = _eta(k, bits)
    eta_km1 = _eta(k - 1, bits)
    with real_context(bits):
        floor = 1 - 1 / (4 * gmpy2.sqrt(k * gmpy2.exp(mpfr(1))))
        theta = max(eta_k, eta_km1, floor)
        tv = gmpy2.exp(-1 / theta)
        lhs = theta * q_eval(k - 1, theta, tv, bits) \
            - 2 * k * (theta - theta ** 2) ** 2 * abs(q_eval(k - 2, theta, tv, bits))
        if not lhs > gmpy2.exp(mpfr(-k)) / 2:
            raise ArithmeticError(f"edge inequality fails at order {k}")
        a_k = phi(theta, bits) * tv * (theta - theta ** 2) ** (-2 * k) \
            * gmpy2.exp(mpfr(-k)) / 2
    return ThetaConstants(k, eta_k, eta_km1, theta, a_k, bits)


# -- the gap-adapted cutoff ---------------------------------------------------

REGION_ONE = "one"
REGION_ZERO = "zero"
REGION_DECAY_RIGHT = "decay-right"    # u = phi((x - anchor)/delta)
REGION_DECAY_LEFT = "decay-left"      # u = phi((anchor - x)/delta)


@dataclass
class CutoffFn:
    """Piecewise description of u_delta: 1 on the set, bump collars in gaps."""

    delta: BigReal
    bits: int
    breaks: list          # region boundaries, ascending mpfr
    regions: list         # (kind, anchor) per cell, len(breaks) + 1
    components: list      # closed [lo, hi] mpfr pairs where u = 1

    def region_at(self, x) -> tuple:
        xv = to_real(x, self.bits)
        return self.regions[bisect_right(self.breaks, xv)]

    def u_derivs(self, x, jmax: int, bits: int = None) -> list:
        """[u(x), u'(x), ..., u^(jmax)(x)]."""
        bits = bits or self.bits
        kind, anchor = self.region_at(x)
        if kind == REGION_ONE:
            return [to_real(1, bits)] + [to_real(0, bits)] * jmax
        if kind == REGION_ZERO:
            return [to_real(0, bits)] * (jmax + 1)
        with real_context(bits):
            xv = to_real(x, bits)
            if kind == REGION_DECAY_RIGHT:
                t = (xv - anchor) / self.delta
                sgn = 1
            else:
                t = (anchor - xv) / self.delta
                sgn = -1
            out = []
            for j in range(jmax + 1):
                v = phi_deriv(j, t, bits) * self.delta ** (-j)
                out.append(v if (j % 2 == 0 or sgn > 0) else -v)
            return out

    def value(self, x, bits: int = None) -> BigReal:
        return self.u_derivs(x, 0, bits)[0]


def build_cutoff_from_components(components, delta, bits: int,
                                 domain=(-2, 2)) -> CutoffFn:
    """Cutoff for a union of closed intervals: collars of width delta in every
    gap at least 2*delta wide, 1 across narrower gaps, bump collars outside."""
    with real_context(bits):
        dv = to_real(delta, bits)
        comps = [(to_real(a, bits), to_real(b, bits)) for a, b in components]
        lo_dom = to_real(domain[0], bits)
        hi_dom = to_real(domain[1], bits)
        breaks = []
        regions = []
        first_lo = comps[0][0]
        regions.append((REGION_ZERO, None))
        breaks.append(first_lo - dv)
        regions.append((REGION_DECAY_LEFT, first_lo))
        breaks.append(first_lo)
        for idx, (a, b) in enumerate(comps):
            regions.append((REGION_ONE, None))
            if idx + 1 < len(comps):
                nxt = comps[idx + 1][0]
                if nxt - b < 2 * dv:
                    continue                    # gap bridged: u stays 1
                breaks.append(b)
                regions.append((REGION_DECAY_RIGHT, b))
                breaks.append(b + dv)
                regions.append((REGION_ZERO, None))
                breaks.append(nxt - dv)
                regions.append((REGION_DECAY_LEFT, nxt))
                breaks.append(nxt)
        last_hi = comps[-1][1]
        breaks.append(last_hi)
        regions.append((REGION_DECAY_RIGHT, last_hi))
        breaks.append(last_hi + dv)
        regions.append((REGION_ZERO, None))
        if not (lo_dom < first_lo and last_hi < hi_dom):
            raise ValueError("components must lie strictly inside the domain")
    return CutoffFn(dv, bits, breaks, regions, comps)


def cutoff_resolution_level(levels: LevelData, delta) -> int:
    """First level whose gap is narrower than 2*delta."""
    dv = to_real(delta, levels.bits)
    for s in range(levels.depth):
        if levels.gap(s) < 2 * dv:
            return s
    raise ValueError(
        "cutoff needs levels deeper than available: every gap exceeds 2*delta")


def build_cutoff(levels: LevelData, delta, bits: int = None,
                 domain=(-2, 2)) -> CutoffFn:
    """Cutoff equal to 1 on the set, supported within distance delta of it."""
    from .cantor import basic_interval, eval_point

    bits = bits or levels.bits
    depth = cutoff_resolution_level(levels, delta)
    comps = []
    for j in range(1, 2 ** depth + 1):
        iv = basic_interval(j, depth, levels)
        comps.append((eval_point(iv.a, levels, bits),
                      eval_point(iv.b, levels, bits)))
    return build_cutoff_from_components(comps, delta, bits, domain)
