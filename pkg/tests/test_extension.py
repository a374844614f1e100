"""The telescoping operator: interpolation, smoothness, decay, demos."""

from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr

from cantorlab.approx import exp_fn, poly_fn
from cantorlab.cantor import CantorParams, ConstraintError, grid, point_fraction
from cantorlab.cutoff import phi_deriv_max
from cantorlab.extension import (
    ExtensionOperator,
    OperatorConfig,
    interval_demo,
    verify_seom,
    verify_term_decay,
    violation_demo,
    w_eval,
)
from cantorlab.numerics import real_context, to_real
from cantorlab.polyops import newton_partial_sum, product_derivs

P24 = CantorParams.create(2, "1/4")
P3 = CantorParams.create(3, "1/4")


@pytest.fixture(scope="module")
def op32():
    cfg = OperatorConfig(P24, n_max=32, p_max=2, collar_samples=8, grid_depth=6)
    return ExtensionOperator(exp_fn(1), cfg)


def test_interpolation_at_nodes(op32):
    f = exp_fn(1)
    for k in (1, 2, 7, 20, 33):
        x = op32.Z.points[k - 1]
        res = op32.eval(x, p_max=0)
        with real_context(512):
            want = f(to_real(point_fraction(x, op32.levels), 512), 512)
            assert abs(res.values[0] - want) <= abs(want) * gmpy2.exp2(-64)
        assert res.converged


def test_polynomial_reproduction_on_set():
    f = poly_fn([2, 0, -1, Fraction(1, 5)])
    cfg = OperatorConfig(P24, n_max=16, p_max=1, collar_samples=4, grid_depth=5)
    op = ExtensionOperator(f, cfg)
    for x in grid(op.levels, 3):
        res = op.eval(x, p_max=0)
        want = f.exact_value(point_fraction(x, op.levels))
        with real_context(512):
            assert abs(res.values[0] - to_real(want, 512)) <= gmpy2.exp2(-400)


def test_matches_plain_partial_sum_on_set(op32):
    # cutoffs are identically 1 on the set, so the operator value there is
    # the plain truncated expansion
    f = exp_fn(1)
    for x in grid(op32.levels, 3)[::3]:
        res = op32.eval(x, p_max=0)
        plain = newton_partial_sum(f, 32, x, 0, op32.Z, 512,
                                   coeffs=op32.coeffs)
        with real_context(512):
            assert abs(res.values[0] - plain.value) <= \
                abs(plain.value) * gmpy2.exp2(-300)


def test_zero_deep_in_gap_beyond_support(op32):
    # far inside the central gap every cutoff with small delta vanishes;
    # only the wide-delta early terms contribute
    res = op32.eval(Fraction(1, 2), p_max=0)
    assert res.values[0] != 0          # early terms with delta = 1 survive
    late = max(abs(m) for m in res.term_mags[4:])
    assert late == 0


def test_smoothness_witness_across_gap_edge(op32):
    # one-sided finite differences across the right edge of [0, 1/4]
    a = point_fraction(op32.Z.points[2], op32.levels)   # 1/4
    assert a == Fraction(1, 4)
    with real_context(768):
        w_a = op32.eval(to_real(a, op32.vbits), p_max=1)
        prev_err = None
        for e in (12, 16, 20):
            h = to_real(Fraction(1, 1 << e), op32.vbits)
            w_ah = op32.eval(to_real(a, op32.vbits) + h, p_max=0)
            fd = (w_ah.values[0] - w_a.values[0]) / h
            err = abs(fd - w_a.values[1])
            if prev_err is not None:
                assert err < prev_err
            prev_err = err
        assert err <= abs(w_a.values[1]) * mpfr("1e-3")


def test_term_bound_triangle_consistency(op32):
    # |G_N^(p)| at collar points stays below the Leibniz majorant with the
    # sampled bump-derivative scales
    p = 2
    cj = [phi_deriv_max(j, bits=320, samples=41) for j in range(p + 1)]
    from cantorlab.extension import _collar_points, _binom
    N = 20
    s = op32.config.band(N)
    delta = op32.levels.ell(s)
    pts = _collar_points(op32, s, 6)[:12]
    kgrid = [to_real(point_fraction(x, op32.levels), op32.vbits)
             for x in grid(op32.levels, 6)]
    with real_context(512):
        xi = abs(mpfr(op32.coeffs[N].value))
        # grid maxima of each derivative order of the node polynomial
        gmax = [mpfr(0)] * (p + 1)
        for xv in kgrid + pts:
            res = product_derivs(op32.Z.points[:N], xv, p, op32.levels, 512)
            for j in range(p + 1):
                if abs(res.values[j]) > gmax[j]:
                    gmax[j] = abs(res.values[j])
        for xv in pts:
            res = op32.eval(xv, p_max=p)
            term = abs(res.term_mags[N])
            majorant = mpfr(0)
            for j in range(p + 1):
                majorant += _binom(p, j) * cj[j] * delta ** (-j) \
                    * gmax[p - j] * xi
            assert term <= majorant * (1 + gmpy2.exp2(-40))


def test_term_decay_exp():
    cfg = OperatorConfig(P24, n_max=40, p_max=2, collar_samples=8,
                         grid_depth=6)
    for p in (0, 1, 2):
        rep = verify_term_decay(exp_fn(1), p, cfg)
        assert rep.passed, p


def test_term_decay_polynomial_cuts_off():
    cfg = OperatorConfig(P24, n_max=24, p_max=2, collar_samples=4,
                         grid_depth=5)
    rep = verify_term_decay(poly_fn([1, -2, 0, 1]), 1, cfg)
    assert rep.passed
    assert rep.computed.startswith("tail fraction 0")


def test_term_decay_hypothesis_gate():
    cfg = OperatorConfig(CantorParams.create(3, "1/4"), n_max=16)
    with pytest.raises(ConstraintError):
        verify_term_decay(exp_fn(1), 1, cfg)


def test_seom_bounded_and_reduced_q():
    cfg = OperatorConfig(P24, n_max=32, p_max=2, collar_samples=6,
                         grid_depth=6)
    rep = verify_seom(0, cfg, n_list=[4, 8, 16, 32])
    assert rep.passed
    assert all(r["reduced_q"] for r in rep.rows if r["n"] <= 65)


def test_violation_demo_alpha3():
    rep = violation_demo(P3, [3, 4, 5], q_list=(3, 5))
    assert rep.passed
    assert rep.params["p"] == 4          # smallest even above (2a-3)/(a-2) = 3
    r3 = [r[f"ratio_q3_log2"] for r in rep.rows]
    assert r3[0] < r3[1] < r3[2]


def test_violation_demo_gate():
    with pytest.raises(ConstraintError):
        violation_demo(P24, [3, 4])


def test_interval_demo_canonical():
    rep = interval_demo(Fraction(1, 10 ** 4), Fraction(1, 50))
    assert rep.passed
    assert rep.notes["implied_C"] == 50.0
    assert rep.notes["value_norm"] > 0.005          # delta/4
    assert rep.notes["curvature_norm"] >= 49.5      # 0.99/delta


def test_interval_demo_degenerate():
    rep = interval_demo(Fraction(24, 100), Fraction(80, 100))
    assert rep.passed
    assert rep.notes.get("degenerate")
    with pytest.raises(ValueError):
        interval_demo(Fraction(1, 2), Fraction(1, 50))


def test_w_eval_wrapper():
    cfg = OperatorConfig(P24, n_max=12, p_max=1, collar_samples=4,
                         grid_depth=4)
    res = w_eval(exp_fn(1), Fraction(1, 4), cfg)
    assert res.converged
    assert len(res.values) == 2
