"""Width policy, adaptive evaluation, and log-domain magnitude checks."""

from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from cantorlab.cantor import CantorParams
from cantorlab.numerics import (
    LogMag,
    PrecisionBudgetError,
    UnstableComputationError,
    adaptive_eval,
    fmt_real,
    logmag_compare,
    logmag_to_bigreal,
    real_context,
    required_bits,
    to_real,
)

P24 = CantorParams.create(2, "1/4")
P3 = CantorParams.create(3, "1/4")


def test_required_bits_formula():
    assert required_bits(P24, 5, headroom=128) == 192
    assert required_bits(P24, 0, headroom=64) == 66
    assert required_bits(P3, 8, headroom=128) == 13250


def test_required_bits_budget():
    with pytest.raises(PrecisionBudgetError):
        required_bits(P24, 40, headroom=128)
    with pytest.raises(ValueError):
        required_bits(P24, -1)


def test_real_context_floor():
    with pytest.raises(ValueError):
        real_context(32)


def test_adaptive_eval_zero_with_scale_hint():
    def comp(bits):
        with real_context(bits):
            third = mpfr(1) / 3
            return third + third + third - 1

    v = adaptive_eval(comp, rel_tol=Fraction(1, 2 ** 64), scale_hint=1)
    assert abs(v) <= to_real(Fraction(1, 2 ** 64), 64)


def test_adaptive_eval_nonzero():
    def comp(bits):
        with real_context(bits):
            return gmpy2.exp(-2 * gmpy2.exp(mpfr(-2)))

    v = adaptive_eval(comp, rel_tol=Fraction(1, 2 ** 64))
    # exp(-2*exp(-2)), frozen from an independent mpmath evaluation
    with real_context(192):
        ref = mpfr("0.7628677692336271773341823733296975517433")
        assert abs(v - ref) < mpfr("1e-30")
    assert v > 0.5


def test_adaptive_eval_idempotent_width():
    def comp(bits):
        with real_context(bits):
            return gmpy2.exp(mpfr(1))

    v = adaptive_eval(comp, rel_tol=Fraction(1, 2 ** 64))
    again = comp(v.precision)
    assert v == again and v.precision == again.precision


def test_adaptive_eval_unstable_raises():
    calls = []

    def comp(bits):
        # value flips sign with width: never stabilizes
        calls.append(bits)
        with real_context(bits):
            return mpfr(len(calls) % 2 * 2 - 1)

    with pytest.raises(UnstableComputationError) as ei:
        adaptive_eval(comp, rel_tol=Fraction(1, 2 ** 64), max_bits=4096)
    assert ei.value.low is not None and ei.value.high is not None


def test_logmag_examples():
    one = logmag_to_bigreal(LogMag(1, 0), P24, 128)
    assert one == 1
    quarter = logmag_to_bigreal(LogMag(1, 1), P24, 128)
    assert quarter == to_real(Fraction(1, 4), 128)
    # profile for a 4-node set keeps ell_2 * ell_1 as its two smallest factors
    v = logmag_to_bigreal(LogMag(1, 2 + 1), P24, 128)
    assert v == to_real(Fraction(1, 64), 128)


def test_logmag_underflow_range_guard():
    from cantorlab.numerics import MagnitudeRangeError

    with pytest.raises(MagnitudeRangeError):
        logmag_to_bigreal(LogMag(1, 10 ** 12), P24, 128)


def test_logmag_product_is_exponent_sum():
    a = LogMag(1, 3)
    b = LogMag(-1, 4)
    c = a * b
    assert c.sign == -1 and c.exponent == 7
    assert (a * LogMag(0, 0)).sign == 0


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 400), st.integers(0, 400),
       st.sampled_from([1, -1]), st.sampled_from([1, -1]))
def test_logmag_compare_matches_realization(ea, eb, sa, sb):
    a, b = LogMag(sa, ea), LogMag(sb, eb)
    va = logmag_to_bigreal(a, P24, 192)
    vb = logmag_to_bigreal(b, P24, 192)
    want = (va > vb) - (va < vb)
    assert logmag_compare(a, b) == want


def test_fmt_real_deterministic():
    with real_context(200):
        v = gmpy2.exp(mpfr(1))
    assert fmt_real(v) == fmt_real(v)
    assert fmt_real(v).startswith("0.2718281828459045")
    assert fmt_real(to_real(0, 64)) == "0"
    assert fmt_real(Fraction(1, 3)) == "1/3"
