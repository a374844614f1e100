"""Node polynomials, their derivatives, divided differences, Lebesgue functions.

The node polynomial over m points is w_m(x) = prod (x - x_k); a_k drops the
k-th factor.  Derivatives come from incremental factor multiplication: when a
partial product (P, P', ..., P^(p)) picks up a linear factor t = x - r, the
new j-th derivative is t*P^(j) + j*P^(j-1).  Divided differences use the
explicit sum over nodes divided by a_k(x_k); the recursive table is avoided
because it divides by point differences as small as a deep level length at
every layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from .cantor import LevelData, PointExpr, eval_point, point_fraction
from .nodes import NodeSeq
from .numerics import (
    BigReal,
    BUDGET_BITS,
    UnstableComputationError,
    real_context,
    to_real,
)


@dataclass
class PolyEvalResult:
    """Polynomial value and derivatives d^0..d^p at one point."""

    values: list

    @property
    def value(self) -> BigReal:
        return self.values[0]

    def deriv(self, j: int) -> BigReal:
        return self.values[j]


def _realize(x, levels: LevelData, bits: int) -> BigReal:
    if isinstance(x, PointExpr):
        return eval_point(x, levels, bits)
    return to_real(x, bits)


def _diff(x, r, levels: LevelData, bits: int) -> BigReal:
    # exact cancellation at the expression level, then one rounded evaluation
    if isinstance(x, PointExpr) and isinstance(r, PointExpr):
        return eval_point(x - r, levels, bits)
    with real_context(bits):
        return _realize(x, levels, bits) - _realize(r, levels, bits)


def product_derivs(factors, x, p_max: int, levels: LevelData,
                   bits: int) -> PolyEvalResult:
    """Derivatives d^0..d^p_max of prod (x - r) over the factor roots at x.

    Orders past the degree come out exactly zero.
    """
    diffs = [_diff(x, r, levels, bits) for r in factors]
    with real_context(bits):
        d = [mpfr(1)] + [mpfr(0)] * p_max
        for t in diffs:
            for j in range(p_max, 0, -1):
                d[j] = t * d[j] + j * d[j - 1]
            d[0] = t * d[0]
    return PolyEvalResult(d)


def a_k_eval(k: int, Z: NodeSeq, x, p_max: int, bits: int) -> PolyEvalResult:
    """Derivatives of a_k(x) = prod_{i != k} (x - x_i) over the nodes of Z."""
    if not (1 <= k <= len(Z)):
        raise ValueError("node index out of range")
    factors = [p for i, p in enumerate(Z.points, start=1) if i != k]
    return product_derivs(factors, x, p_max, Z.levels, bits)


def node_values(Z: NodeSeq, bits: int) -> list:
    return [eval_point(p, Z.levels, bits) for p in Z.points]


def a_kk_values(Z: NodeSeq, bits: int, n: int = None) -> list:
    """a_k(x_k) for every node of the length-n prefix (signed values)."""
    n = len(Z) if n is None else n
    vals = node_values(Z, bits)[:n]
    with real_context(bits):
        acc = [mpfr(1)] * n
        for m in range(1, n):
            xm = vals[m]
            prod_new = mpfr(1)
            for k in range(m):
                t = vals[k] - xm
                acc[k] *= t
                prod_new *= -t
            acc[m] = prod_new
    return acc


@dataclass
class DividedDiff:
    """Divided difference of order n over the first n+1 nodes."""

    order: int
    value: BigReal
    bits: int
    exact: bool = False


def _exact_divided_diffs(f, Z: NodeSeq, N: int) -> list:
    levels = Z.levels
    xs = [point_fraction(p, levels) for p in Z.points[:N + 2]]
    fs = [f.exact_value(v) for v in xs]
    out = []
    acc = [Fraction(1)] * (N + 2)
    for m in range(N + 1):
        if m > 0:
            xm = xs[m]
            prod_new = Fraction(1)
            for k in range(m):
                t = xs[k] - xm
                acc[k] *= t
                prod_new *= -t
            acc[m] = prod_new
        out.append(sum(fs[k] / acc[k] for k in range(m + 1)))
    return out


def divided_diffs_upto(f, Z: NodeSeq, N: int, rel_tol: Fraction = None,
                       start_bits: int = None, max_bits: int = BUDGET_BITS,
                       out_bits: int = None) -> list:
    """xi_0..xi_N for f over the node sequence, each width-stabilized.

    All orders are escalated together: widths double until every coefficient
    either agrees to rel_tol with its previous-width value or is consistent
    with exact zero at two successive widths.
    """
    if N + 1 > len(Z):
        raise ValueError("node budget exceeded")
    if getattr(f, "exact_value", None) is not None and Z.levels.exact:
        vals = _exact_divided_diffs(f, Z, N)
        bits = out_bits or Z.levels.bits
        return [DividedDiff(n, to_real(v, bits), bits, exact=True)
                for n, v in enumerate(vals)]

    if rel_tol is None:
        rel_tol = Fraction(1, 1 << 64)
    bits = start_bits or max(192, Z.levels.bits)

    def one_pass(b):
        xs = node_values(Z, b)[:N + 1]
        with real_context(b):
            fs = [f(x, b) for x in xs]
            acc = [mpfr(1)] * (N + 1)
            out, scales = [], []
            for m in range(N + 1):
                if m > 0:
                    xm = xs[m]
                    prod_new = mpfr(1)
                    for k in range(m):
                        t = xs[k] - xm
                        acc[k] *= t
                        prod_new *= -t
                    acc[m] = prod_new
                terms = [fs[k] / acc[k] for k in range(m + 1)]
                out.append(sum(terms))
                scales.append(max(abs(t) for t in terms))
        return out, scales

    prev = None
    prev_zero = [False] * (N + 1)
    while True:
        cur, scales = one_pass(bits)
        if prev is not None:
            with real_context(128):
                tol = mpfr(rel_tol.numerator) / rel_tol.denominator
                done = True
                zero_now = [False] * (N + 1)
                for n in range(N + 1):
                    a, b = prev[n], cur[n]
                    if abs(a - b) <= tol * max(abs(a), abs(b)):
                        continue
                    floor = scales[n] * gmpy2.exp2(64 - bits)
                    zero_now[n] = abs(b) <= floor
                    if not (zero_now[n] and prev_zero[n]):
                        done = False
            if done:
                return [DividedDiff(n, v, bits) for n, v in enumerate(cur)]
            prev_zero = zero_now
        else:
            with real_context(128):
                prev_zero = [abs(cur[n]) <= scales[n] * gmpy2.exp2(64 - bits)
                             for n in range(N + 1)]
        prev = cur
        bits *= 2
        if bits > max_bits:
            raise UnstableComputationError(
                f"divided differences unstable up to {bits // 2} bits",
                prev, cur)


def divided_difference(f, Z: NodeSeq, n: int, **kw) -> DividedDiff:
    """xi_n(f), the coefficient of the degree-n node polynomial."""
    return divided_diffs_upto(f, Z, n, **kw)[n]


def lebesgue_function(Z: NodeSeq, x, bits: int, n: int = None) -> BigReal:
    """Sum of |a_k(x)/a_k(x_k)| over the length-n node prefix."""
    n = len(Z) if n is None else n
    levels = Z.levels
    akk = a_kk_values(Z, bits, n)
    xv = _realize(x, levels, bits)
    with real_context(bits):
        total = mpfr(0)
        for k in range(n):
            num = mpfr(1)
            for i in range(n):
                if i != k:
                    num *= _diff(x, Z.points[i], levels, bits)
            total += abs(num) / abs(akk[k])
    return total


def lebesgue_constant(Z: NodeSeq, grid_pts, bits: int, n: int = None) -> BigReal:
    """Max of the Lebesgue function over the grid (a lower bound for the sup)."""
    n = len(Z) if n is None else n
    best = None
    for x in grid_pts:
        v = lebesgue_function(Z, x, bits, n)
        if best is None or v > best:
            best = v
    return best


def newton_partial_sum(f, N: int, x, p_max: int, Z: NodeSeq,
                       bits: int = None, coeffs: list = None) -> PolyEvalResult:
    """S_N(f) = sum_{n<=N} xi_n(f) w_n and derivatives at x.

    ``coeffs`` may carry precomputed divided differences (DividedDiff list).
    """
    if coeffs is None:
        coeffs = divided_diffs_upto(f, Z, N)
    bits = bits or Z.levels.bits
    levels = Z.levels
    with real_context(bits):
        acc = [mpfr(0)] * (p_max + 1)
        d = [mpfr(1)] + [mpfr(0)] * p_max
        for n in range(N + 1):
            xi = mpfr(coeffs[n].value)
            for j in range(p_max + 1):
                acc[j] += xi * d[j]
            if n < N:
                t = _diff(x, Z.points[n], levels, bits)
                for j in range(p_max, 0, -1):
                    d[j] = t * d[j] + j * d[j - 1]
                d[0] = t * d[0]
    return PolyEvalResult(acc)


def sorted_distances(Z: NodeSeq, x, bits: int, n: int = None) -> list:
    """|x - x_k| over the length-n prefix, sorted nondecreasing."""
    n = len(Z) if n is None else n
    with real_context(bits):
        ds = [abs(_diff(x, Z.points[k], Z.levels, bits)) for k in range(n)]
    return sorted(ds)
