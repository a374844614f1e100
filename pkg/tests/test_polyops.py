"""Product derivatives, divided differences, Lebesgue function machinery."""

from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from cantorlab.approx import exp_fn, omega_jet, poly_fn
from cantorlab.cantor import CantorParams, PointExpr, build_levels, grid, point_fraction
from cantorlab.nodes import enumerate_nodes
from cantorlab.numerics import real_context, to_real
from cantorlab.polyops import (
    a_k_eval,
    a_kk_values,
    divided_diffs_upto,
    divided_difference,
    lebesgue_constant,
    lebesgue_function,
    newton_partial_sum,
    product_derivs,
    sorted_distances,
)

P24 = CantorParams.create(2, "1/4")


@pytest.fixture(scope="module")
def levels():
    return build_levels(P24, 10)


@pytest.fixture(scope="module")
def nodes(levels):
    return enumerate_nodes(80, levels)


def test_product_derivs_square(levels):
    # (x)(x-1) at 1/2: value -1/4, slope 0, curvature 2
    res = product_derivs([PointExpr.zero(), PointExpr.unit(0)],
                         Fraction(1, 2), 2, levels, 192)
    assert res.value == to_real(Fraction(-1, 4), 192)
    assert res.deriv(1) == 0
    assert res.deriv(2) == 2


def test_product_derivs_chebyshev_slope(levels):
    # the degree-8 Chebyshev polynomial has slope N^2 = 64 at 1
    bits = 256
    with real_context(bits):
        roots = [gmpy2.cos((2 * k - 1) * gmpy2.const_pi() / 16)
                 for k in range(1, 9)]
        res = product_derivs(roots, mpfr(1), 1, levels, bits)
        lead = mpfr(128)
        assert abs(lead * res.deriv(1) - 64) < mpfr("1e-60")


def test_product_derivs_vs_direct_product(levels, nodes):
    x6 = nodes.points[5]    # 15/16
    res = product_derivs(nodes.points[:4], x6, 0, levels, 256)
    direct = to_real(1, 256)
    with real_context(256):
        for p in nodes.points[:4]:
            direct *= to_real(point_fraction(x6 - p, levels), 256)
    assert res.value == direct


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1 << 20), min_size=1, max_size=32, unique=True),
       st.integers(0, 1 << 20), st.integers(0, 5))
def test_product_derivs_vs_coefficient_expansion(numerators, xnum, p):
    levels = build_levels(P24, 4)
    roots = [Fraction(n, 1 << 20) for n in numerators]
    x = Fraction(xnum, 1 << 20)
    # symbolic oracle: expand coefficients, differentiate, evaluate exactly
    coeffs = [Fraction(1)]
    for r in roots:
        shifted = [Fraction(0)] + coeffs            # poly * x
        scaled = [-r * c for c in coeffs] + [Fraction(0)]
        coeffs = [a + b for a, b in zip(shifted, scaled)]
    res = product_derivs(roots, x, p, levels, 320)
    dc = list(coeffs)
    for k in range(p + 1):
        exact = Fraction(0)
        for j, c in reversed(list(enumerate(dc))):
            exact = exact * x + c
        got = res.deriv(k)
        ref = to_real(exact, 320)
        with real_context(320):
            assert abs(got - ref) <= abs(ref) * gmpy2.exp2(-64) + gmpy2.exp2(-250)
        dc = [j * c for j, c in enumerate(dc)][1:] or [Fraction(0)]


def test_a_k_values(levels, nodes):
    # a_1 over two nodes is x - 1
    z2 = nodes.prefix(2)
    assert a_k_eval(1, z2, PointExpr.unit(0), 0, 192).value == 0
    z4 = nodes.prefix(4)
    v = a_k_eval(1, z4, PointExpr.zero(), 0, 192).value
    assert v == to_real(Fraction(-3, 16), 192)


def test_akk_equals_derivative_of_full_product(levels, nodes):
    z8 = nodes.prefix(8)
    akk = a_kk_values(z8, 256)
    for k in range(1, 9):
        via_deriv = product_derivs(z8.points, z8.points[k - 1], 1, levels, 256)
        with real_context(256):
            assert abs(via_deriv.deriv(1) - akk[k - 1]) <= \
                abs(akk[k - 1]) * gmpy2.exp2(-200)


def test_divided_differences_polynomials(levels, nodes):
    one = poly_fn([1])
    dd = divided_diffs_upto(one, nodes, 4)
    assert dd[0].value == 1 and dd[0].exact
    assert all(d.value == 0 for d in dd[1:])
    sq = poly_fn([0, 0, 1])
    dd = divided_diffs_upto(sq, nodes, 3)
    assert dd[2].value == 1
    assert dd[3].value == 0


def test_divided_difference_numeric_zero_detection(levels, nodes):
    # degree-1 function fed as an opaque numeric oracle: xi_2 is an exact zero
    f = lambda x, b: x
    dd = divided_diffs_upto(f, nodes, 2)
    assert dd[1].value == 1
    assert abs(dd[2].value) < to_real(Fraction(1, 1 << 100), 64)


def test_divided_difference_exp_stable(levels, nodes):
    f = exp_fn(1)
    got = divided_difference(f, nodes, 8)
    # oracle: the same explicit sum, forced to four times the width
    ref = divided_diffs_upto(f, nodes, 8, start_bits=4 * got.bits)[8]
    with real_context(256):
        assert abs(got.value - ref.value) <= abs(ref.value) * gmpy2.exp2(-64)


def test_biorthogonality(levels, nodes):
    # exact-path coefficients of the node polynomials up to order 64
    for m in list(range(0, 33, 4)) + [47, 64]:
        om = omega_jet(nodes, m)
        dd = divided_diffs_upto(om, nodes, 64)
        for n, d in enumerate(dd):
            if n == m:
                assert d.value == 1
            else:
                assert abs(d.value) <= to_real(Fraction(1, 1 << 64), 64)


def test_partition_of_unity(levels, nodes):
    z8 = nodes.prefix(8)
    akk = a_kk_values(z8, 320)
    for x in grid(levels, 4):
        with real_context(320):
            total = mpfr(0)
            for k in range(1, 9):
                total += a_k_eval(k, z8, x, 0, 320).value / akk[k - 1]
            assert abs(total - 1) <= gmpy2.exp2(-64)


def test_derivative_distance_bound(levels, nodes):
    # |w_M^(p)(x)| <= M^p * prod_{k>p} d_k(x) over sample points
    M = 16
    zM = nodes.prefix(M)
    for x in grid(levels, 5)[::5]:
        ds = sorted_distances(zM, x, 320)
        res = product_derivs(zM.points, x, 4, levels, 320)
        with real_context(320):
            for p in range(1, 5):
                bound = mpfr(M) ** p
                for d in ds[p:]:
                    bound *= d
                assert abs(res.deriv(p)) <= bound * (1 + gmpy2.exp2(-64))


def test_lebesgue_trivial_cases(levels, nodes):
    z1 = nodes.prefix(1)
    pts = grid(levels, 3)
    assert lebesgue_constant(z1, pts, 256) == 1
    z2 = nodes.prefix(2)
    with real_context(256):
        assert abs(lebesgue_constant(z2, pts, 256) - 1) <= gmpy2.exp2(-200)


def test_lebesgue_five_nodes_bounded(levels, nodes):
    z5 = nodes.prefix(5)
    val = lebesgue_constant(z5, grid(levels, 7), 320)
    assert 1 <= val <= 80


def test_lebesgue_function_at_node_is_one(levels, nodes):
    z5 = nodes.prefix(5)
    v = lebesgue_function(z5, z5.points[2], 256)
    assert v == 1


def test_newton_sum_reproduces_polynomials(levels, nodes):
    f = poly_fn([1, -2, 0, Fraction(1, 3)])
    for x in grid(levels, 3):
        res = newton_partial_sum(f, 5, x, 0, nodes, 320)
        want = f.exact_value(point_fraction(x, levels))
        with real_context(320):
            assert abs(res.value - to_real(want, 320)) <= gmpy2.exp2(-250)


def test_newton_sum_interpolates(levels, nodes):
    f = exp_fn(1)
    coeffs = divided_diffs_upto(f, nodes, 16)
    for k in (1, 5, 9, 17):
        x = nodes.points[k - 1]
        res = newton_partial_sum(f, 16, x, 0, nodes, 320, coeffs=coeffs)
        with real_context(320):
            want = f(to_real(point_fraction(x, levels), 320), 320)
            assert abs(res.value - want) <= abs(want) * gmpy2.exp2(-64)


def test_newton_sum_error_shrinks(levels, nodes):
    f = exp_fn(1)
    coeffs = divided_diffs_upto(f, nodes, 16)
    pts = grid(levels, 5)

    def sup_err(N):
        worst = to_real(0, 320)
        for x in pts:
            res = newton_partial_sum(f, N, x, 0, nodes, 320, coeffs=coeffs)
            with real_context(320):
                err = abs(res.value - f(to_real(point_fraction(x, levels), 320), 320))
            if err > worst:
                worst = err
        return worst

    assert sup_err(16) < sup_err(8)
