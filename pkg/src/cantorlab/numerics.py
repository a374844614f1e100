"""Extended-precision floating point, log-domain magnitudes, precision escalation.

Every operation carries its mantissa width explicitly; there is no module-level
precision state.  Values are gmpy2 ``mpfr`` instances (aliased ``BigReal``),
computed under a thread-local context that each helper installs for the
duration of one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import gmpy2
from gmpy2 import mpfr, mpq

BigReal = mpfr

MIN_BITS = 64
DEFAULT_HEADROOM = 128
DEFAULT_REL_TOL_LOG2 = -64
BUDGET_BITS = 1 << 24

Real = Union[int, float, Fraction, mpfr]


class PrecisionBudgetError(Exception):
    """Requested mantissa width exceeds the desk-scale precision budget."""


class UnstableComputationError(Exception):
    """adaptive_eval failed to stabilize; carries both candidate values."""

    def __init__(self, message, low, high):
        super().__init__(message)
        self.low = low
        self.high = high


class MagnitudeRangeError(Exception):
    """Underflow beyond the representable exponent range."""


def real_context(bits: int) -> gmpy2.context:
    """Context for arithmetic at the given mantissa width (>= 64 bits)."""
    if bits < MIN_BITS:
        raise ValueError(f"mantissa width {bits} below minimum {MIN_BITS}")
    return gmpy2.context(precision=bits)


def to_real(x: Real, bits: int) -> BigReal:
    """Round x (int/float/Fraction/mpfr) to an mpfr at the given width."""
    with real_context(bits):
        if isinstance(x, Fraction):
            return mpfr(mpq(x.numerator, x.denominator))
        return mpfr(x)


def required_bits(params, depth: int, headroom: int = DEFAULT_HEADROOM,
                  budget: int = BUDGET_BITS) -> int:
    """Mantissa width ceil(alpha^depth * log2(1/ell1)) + headroom.

    Enough for full relative accuracy of the level-``depth`` length and of any
    integer combination of lengths up to that level.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    alpha = Fraction(params.alpha)
    ell1 = Fraction(params.ell1)
    scale = alpha ** depth
    inv = 1 / ell1
    if inv.denominator == 1 and (inv.numerator & (inv.numerator - 1)) == 0:
        # 1/ell1 a power of two: exact integer ceiling
        span = scale * (inv.numerator.bit_length() - 1)
        need = -((-span.numerator) // span.denominator)
    else:
        with gmpy2.context(precision=160, round=gmpy2.RoundUp):
            t = mpfr(mpq(scale.numerator, scale.denominator)) * gmpy2.log2(
                mpfr(mpq(inv.numerator, inv.denominator)))
            need = int(gmpy2.ceil(t))
    bits = need + headroom
    if bits > budget:
        raise PrecisionBudgetError(
            f"precision budget exceeded: {bits} bits needed, budget {budget}")
    return bits


def adaptive_eval(computation: Callable[[int], BigReal],
                  rel_tol: Real = None,
                  start_bits: int = 192,
                  max_bits: int = BUDGET_BITS,
                  scale_hint: Real = None) -> BigReal:
    """Run ``computation(bits)`` at doubling widths until stable.

    Stops when two successive results agree to relative ``rel_tol``
    (default 2^-64).  When ``scale_hint`` gives the magnitude of the largest
    intermediate, a result consistent with exact zero at two successive widths
    is accepted as converged; without a hint an exact zero never stabilizes
    and the escalation cap raises ``UnstableComputationError``.
    """
    bits = max(MIN_BITS, start_bits)
    prev = None
    prev_bits = 0
    prev_zero_ok = False
    while True:
        cur = computation(bits)
        if prev is not None:
            with real_context(128):
                tol = mpfr(rel_tol) if rel_tol is not None else gmpy2.exp2(
                    DEFAULT_REL_TOL_LOG2)
                diff = abs(prev - cur)
                if diff <= tol * max(abs(prev), abs(cur)):
                    return cur
                zero_ok = False
                if scale_hint is not None:
                    floor = abs(mpfr(scale_hint)) * gmpy2.exp2(64 - bits)
                    zero_ok = abs(cur) <= floor
                if zero_ok and prev_zero_ok:
                    return cur
                prev_zero_ok = zero_ok
        else:
            if scale_hint is not None:
                with real_context(128):
                    floor = abs(mpfr(scale_hint)) * gmpy2.exp2(64 - bits)
                    prev_zero_ok = abs(cur) <= floor
        prev, prev_bits = cur, bits
        bits *= 2
        if bits > max_bits:
            raise UnstableComputationError(
                f"unstable computation: no agreement up to {prev_bits} bits",
                prev, cur)


@dataclass(frozen=True)
class LogMag:
    """Signed magnitude ell1^exponent, held in the exponent (log) domain.

    ``exponent`` is an exact int when alpha = 2, an mpfr otherwise.  Since
    ell1 < 1, a larger exponent means a smaller magnitude.
    """

    sign: int
    exponent: Real

    def __mul__(self, other: "LogMag") -> "LogMag":
        if self.sign == 0 or other.sign == 0:
            return LogMag(0, 0)
        return LogMag(self.sign * other.sign, self.exponent + other.exponent)

    @staticmethod
    def one() -> "LogMag":
        return LogMag(1, 0)


def logmag_compare(a: LogMag, b: LogMag) -> int:
    """Sign of (a - b) for the realized values (ell1 < 1 assumed)."""
    if a.sign != b.sign:
        return 1 if a.sign > b.sign else -1
    if a.sign == 0:
        return 0
    if a.exponent == b.exponent:
        return 0
    # positive values: smaller exponent <=> larger value
    smaller_exp_bigger = a.exponent < b.exponent
    if a.sign > 0:
        return 1 if smaller_exp_bigger else -1
    return -1 if smaller_exp_bigger else 1


def logmag_to_bigreal(m: LogMag, params, bits: int) -> BigReal:
    """Realize sign * ell1^exponent as an mpfr at the given width."""
    if m.sign == 0:
        return to_real(0, bits)
    ell1 = Fraction(params.ell1)
    with real_context(max(bits, 128)):
        log2mag = mpfr(m.exponent) * gmpy2.log2(
            mpfr(mpq(ell1.numerator, ell1.denominator)))
        ctx = gmpy2.get_context()
        if log2mag < ctx.emin + 64 or log2mag > ctx.emax - 64:
            raise MagnitudeRangeError(
                f"underflow beyond representable range: 2^{log2mag}")
    with real_context(bits):
        value = mpfr(mpq(ell1.numerator, ell1.denominator)) ** mpfr(m.exponent)
        return value if m.sign > 0 else -value


def logmag_log2(m: LogMag, params) -> float:
    """log2 of the magnitude of m (float; for margins and reports)."""
    if m.sign == 0:
        return -math.inf
    ell1 = Fraction(params.ell1)
    with real_context(128):
        return float(mpfr(m.exponent) * gmpy2.log2(
            mpfr(mpq(ell1.numerator, ell1.denominator))))


def fmt_real(x: Real, ndigits: int = 24) -> str:
    """Deterministic decimal string for reports (value only, not width)."""
    if isinstance(x, (int,)):
        return str(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        x = to_real(x, MIN_BITS)
    if gmpy2.is_nan(x):
        return "nan"
    if not gmpy2.is_finite(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    digs, exp, _ = x.digits(10, ndigits)
    sign = "-" if digs.startswith("-") else ""
    mantissa = digs.lstrip("-")
    return f"{sign}0.{mantissa}e{exp:+d}"


def log2_abs(x: BigReal) -> float:
    """float log2|x|, -inf at zero; for margin bookkeeping."""
    if x == 0:
        return -math.inf
    with real_context(MIN_BITS):
        return float(gmpy2.log2(abs(x)))
