"""Geometry of the Cantor-type set: levels, gaps, basic intervals, exact endpoints.

The set lives in [0, 1].  Level s consists of 2^s closed basic intervals of
length ell_s = ell_1^(alpha^(s-1)); each splits into two children separated by
the gap h_s = ell_s - 2*ell_{s+1}.  Endpoints are kept exact as integer
combinations sum_j c_j * ell_j; floating point enters only at evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import gmpy2
from gmpy2 import mpfr, mpq

from .numerics import (
    BigReal,
    DEFAULT_HEADROOM,
    real_context,
    required_bits,
    to_real,
)


class ConstraintError(Exception):
    """A parameter constraint required by some statement is violated."""


class PointLocationError(Exception):
    """Point is not in the set at the requested depth."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class CantorParams:
    """Set parameters alpha > 1 and ell1 in (0, 1/2) with 2*ell1^(alpha-1) < 1."""

    alpha: Fraction
    ell1: Fraction

    @staticmethod
    def create(alpha, ell1) -> "CantorParams":
        alpha = _as_fraction(alpha)
        ell1 = _as_fraction(ell1)
        if alpha <= 1:
            raise ConstraintError(f"alpha must exceed 1, got {alpha}")
        if not (0 < ell1 < Fraction(1, 2)):
            raise ConstraintError(f"ell1 must lie in (0, 1/2), got {ell1}")
        # standing assumption 2 * ell1^(alpha-1) < 1, checked with upward rounding
        with gmpy2.context(precision=160, round=gmpy2.RoundUp):
            v = 2 * mpfr(mpq(ell1)) ** mpfr(mpq(alpha - 1))
            if v >= 1:
                raise ConstraintError(
                    f"2*ell1^(alpha-1) = {float(v):.6f} >= 1 for alpha={alpha}, ell1={ell1}")
        return CantorParams(alpha, ell1)

    @property
    def integer_alpha(self) -> bool:
        return self.alpha.denominator == 1

    @property
    def h0(self) -> Fraction:
        return 1 - 2 * self.ell1

    def weight(self, j: int):
        """Exponent weight of level j: ell_j = ell1^weight(j); weight(0) = 0.

        Exact int for integer alpha, Fraction otherwise (realized to mpfr by
        the log-domain helpers).
        """
        if j == 0:
            return 0
        w = self.alpha ** (j - 1)
        return w.numerator if w.denominator == 1 else w

    def require(self, statement: str, *, alpha_eq=None, alpha_min=None,
                alpha_gt=None, ell1_max=None) -> None:
        """Raise ConstraintError naming the violated hypothesis, if any."""
        if alpha_eq is not None and self.alpha != Fraction(alpha_eq):
            raise ConstraintError(
                f"{statement} requires alpha = {alpha_eq}, got {self.alpha}")
        if alpha_min is not None and self.alpha < Fraction(alpha_min):
            raise ConstraintError(
                f"{statement} requires alpha >= {alpha_min}, got {self.alpha}")
        if alpha_gt is not None and self.alpha <= Fraction(alpha_gt):
            raise ConstraintError(
                f"{statement} requires alpha > {alpha_gt}, got {self.alpha}")
        if ell1_max is not None and self.ell1 > Fraction(ell1_max):
            raise ConstraintError(
                f"{statement} requires ell1 <= {ell1_max}, got {self.ell1}")


@dataclass(frozen=True)
class PointExpr:
    """Exact endpoint expression sum_j coeffs[j] * ell_j (ell_0 = 1).

    Canonical: coefficient pairs sorted by level, zero entries dropped, so
    two expressions are equal iff their coefficient tuples are equal.
    """

    coeffs: tuple

    @staticmethod
    def from_dict(d: dict) -> "PointExpr":
        return PointExpr(tuple(sorted((j, c) for j, c in d.items() if c != 0)))

    @staticmethod
    def zero() -> "PointExpr":
        return PointExpr(())

    @staticmethod
    def unit(level: int, c: int = 1) -> "PointExpr":
        return PointExpr.from_dict({level: c})

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def max_level(self) -> int:
        return max((j for j, _ in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "PointExpr") -> "PointExpr":
        d = self.as_dict()
        for j, c in other.coeffs:
            d[j] = d.get(j, 0) + c
        return PointExpr.from_dict(d)

    def __sub__(self, other: "PointExpr") -> "PointExpr":
        d = self.as_dict()
        for j, c in other.coeffs:
            d[j] = d.get(j, 0) - c
        return PointExpr.from_dict(d)

    def __neg__(self) -> "PointExpr":
        return PointExpr(tuple((j, -c) for j, c in self.coeffs))

    def shift(self, level: int, c: int) -> "PointExpr":
        d = self.as_dict()
        d[level] = d.get(level, 0) + c
        return PointExpr.from_dict(d)


@dataclass
class LevelData:
    """Lengths ell_0..ell_depth and gaps h_0..h_{depth-1} at a fixed width."""

    params: CantorParams
    depth: int
    bits: int
    lengths: list           # mpfr, ell_0 .. ell_depth
    gaps: list              # mpfr, h_0 .. h_{depth-1}
    lengths_frac: Optional[list] = None   # exact Fractions for integer alpha
    gaps_frac: Optional[list] = None

    def ell(self, j: int) -> BigReal:
        return self.lengths[j]

    def gap(self, j: int) -> BigReal:
        return self.gaps[j]

    def ell_frac(self, j: int) -> Fraction:
        if self.lengths_frac is None:
            raise ValueError("exact lengths unavailable for non-integer alpha")
        return self.lengths_frac[j]

    @property
    def exact(self) -> bool:
        return self.lengths_frac is not None


def build_levels(params: CantorParams, depth: int, bits: int = None,
                 headroom: int = DEFAULT_HEADROOM) -> LevelData:
    """Level lengths and gaps to the given depth; checks the gap invariants."""
    if bits is None:
        bits = required_bits(params, depth, headroom)
    alpha, ell1 = params.alpha, params.ell1
    lengths_frac = gaps_frac = None
    if params.integer_alpha:
        a = alpha.numerator
        lengths_frac = [Fraction(1), ell1][:depth + 1]
        for s in range(2, depth + 1):
            lengths_frac.append(lengths_frac[-1] ** a)
        gaps_frac = [lengths_frac[s] - 2 * lengths_frac[s + 1]
                     for s in range(depth)]
        with real_context(bits):
            lengths = [mpfr(mpq(v)) for v in lengths_frac]
            gaps = [mpfr(mpq(v)) for v in gaps_frac]
    else:
        with real_context(bits):
            base = mpfr(mpq(ell1))
            lengths = [mpfr(1)]
            for s in range(1, depth + 1):
                e = alpha ** (s - 1)
                lengths.append(base ** mpfr(mpq(e)))
            gaps = [lengths[s] - 2 * lengths[s + 1] for s in range(depth)]
    prev_ratio = None
    for s in range(depth):
        if not gaps[s] > 0:
            raise ConstraintError(f"gap h_{s} is not positive at these parameters")
        ratio = gaps[s] / lengths[s]
        if prev_ratio is not None and ratio < prev_ratio:
            raise ConstraintError(f"gap ratio h_{s}/ell_{s} decreased")
        prev_ratio = ratio
    return LevelData(params, depth, bits, lengths, gaps, lengths_frac, gaps_frac)


def eval_point(x: PointExpr, levels: LevelData, bits: int = None) -> BigReal:
    """Realize sum_j c_j * ell_j at the requested width."""
    if bits is None:
        bits = levels.bits
    if x.max_level() > levels.depth:
        raise ValueError(f"level {x.max_level()} beyond depth {levels.depth}")
    if levels.exact:
        acc = Fraction(0)
        for j, c in x.coeffs:
            acc += c * levels.lengths_frac[j]
        return to_real(acc, bits)
    with real_context(bits):
        acc = mpfr(0)
        for j, c in x.coeffs:   # level order: largest magnitude first
            acc += c * levels.lengths[j]
        return acc


def point_fraction(x: PointExpr, levels: LevelData) -> Fraction:
    """Exact rational value (integer alpha only)."""
    acc = Fraction(0)
    for j, c in x.coeffs:
        acc += c * levels.ell_frac(j)
    return acc


def _sign_of(x: PointExpr, levels: LevelData) -> int:
    """Exact sign of a point expression (0 only for the empty expression)."""
    if x.is_zero():
        return 0
    if levels.exact:
        v = point_fraction(x, levels)
        return (v > 0) - (v < 0)
    v = eval_point(x, levels)
    if v == 0:
        # cancellation below width: escalate once, then trust the sign
        v = eval_point(x, levels, bits=4 * levels.bits)
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class BasicInterval:
    """Closed basic interval number j (1-based) at level s."""

    j: int
    s: int
    a: PointExpr
    b: PointExpr


def basic_interval(j: int, s: int, levels: LevelData) -> BasicInterval:
    """Endpoints of I_{j,s} by the recursive construction."""
    if not (1 <= j <= 2 ** s):
        raise ValueError(f"interval index {j} out of range at level {s}")
    if s > levels.depth:
        raise ValueError(f"level {s} beyond depth {levels.depth}")
    a = PointExpr.zero()
    b = PointExpr.unit(0)
    for t in range(1, s + 1):
        bit = (j - 1) >> (s - t) & 1
        if bit == 0:
            b = a.shift(t, 1)          # left child keeps a
        else:
            a = b.shift(t, -1)         # right child keeps b
    return BasicInterval(j, s, a, b)


def grid(levels: LevelData, depth: int) -> list:
    """All 2^(depth+1) endpoints of the level-``depth`` intervals, ascending."""
    if depth > levels.depth:
        raise ValueError(f"depth {depth} beyond available {levels.depth}")
    out = []

    def emit(a: PointExpr, b: PointExpr, t: int) -> None:
        if t == depth:
            out.append(a)
            out.append(b)
            return
        emit(a, a.shift(t + 1, 1), t + 1)
        emit(b.shift(t + 1, -1), b, t + 1)

    emit(PointExpr.zero(), PointExpr.unit(0), 0)
    return out


def grid_with_paths(levels: LevelData, depth: int) -> list:
    """Grid points paired with their 0-based interval path at level ``depth``."""
    pts = grid(levels, depth)
    return [(x, i // 2) for i, x in enumerate(pts)]


def locate_chain(x: PointExpr, levels: LevelData, s: int) -> list:
    """Chain of (interval index, level) containing x, from level s down to 0."""
    if s > levels.depth:
        raise ValueError(f"level {s} beyond depth {levels.depth}")
    lo = _sign_of(x, levels)
    hi = _sign_of(x - PointExpr.unit(0), levels)
    if lo < 0 or hi > 0:
        raise PointLocationError("not in set at this depth")
    a = PointExpr.zero()
    b = PointExpr.unit(0)
    j = 1
    chain = [(1, 0)]
    for t in range(1, s + 1):
        left_hi = a.shift(t, 1)
        right_lo = b.shift(t, -1)
        if _sign_of(x - left_hi, levels) <= 0:
            b = left_hi
            j = 2 * j - 1
        elif _sign_of(x - right_lo, levels) >= 0:
            a = right_lo
            j = 2 * j
        else:
            raise PointLocationError("not in set at this depth")
        chain.append((j, t))
    chain.reverse()
    return chain
