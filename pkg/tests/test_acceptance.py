"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Canonical parameters alpha = 2, ell1 = 1/4; secondary runs at alpha = 5/2 and
alpha = 3 where a criterion names them.  Every tolerance is pinned here.
"""

import random
from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr

from cantorlab.approx import exp_fn, verify_jackson
from cantorlab.cantor import CantorParams, build_levels, point_fraction
from cantorlab.cutoff import build_cutoff, phi, phi_deriv_max, phi_fd_check
from cantorlab.extension import (
    ExtensionOperator,
    OperatorConfig,
    interval_demo,
    verify_term_decay,
    violation_demo,
)
from cantorlab.nodes import enumerate_nodes, next_node, sweep_uniform_prefixes
from cantorlab.numerics import real_context, to_real
from cantorlab.report import reports_json
from cantorlab.verify import (
    sweep_exponent_inequalities,
    sweep_value_bounds,
    verify_markov,
    verify_not_leja,
)

P24 = CantorParams.create(2, "1/4")
P3 = CantorParams.create(3, "1/4")


def _line(num, name, ok, detail=""):
    flag = "PASS" if ok else "FAIL"
    print(f"[{flag}] criterion {num:2d}: {name} {detail}")
    return ok


def test_criterion_01_node_combinatorics():
    levels = build_levels(P24, 12)
    first_bad = sweep_uniform_prefixes(4096, levels)
    seq = enumerate_nodes(4096, levels)
    next_ok = all(next_node(N, levels) == seq.points[N + 1]
                  for N in range(0, 4095))
    want = [Fraction(v) for v in
            ("0", "1", "1/4", "3/4", "1/16", "15/16", "3/16", "13/16")]
    listing_ok = [point_fraction(x, levels) for x in seq.points[:8]] == want
    ok = first_bad == 0 and next_ok and listing_ok
    assert _line(1, "node combinatorics exact to n = 4096", ok,
                 f"(first uniformity violation: {first_bad or 'none'})")


def test_criterion_02_exponent_inequalities():
    rep = sweep_exponent_inequalities(P24, 1026, alphas_extra=["5/2"])
    ok = rep.passed
    assert _line(2, "exponent dominance, N+1 <= 1026, alpha in {2, 5/2}", ok,
                 rep.computed)


@pytest.fixture(scope="module")
def value_sweep():
    return sweep_value_bounds(P24, 2, 257)


def test_criterion_03_max_bound(value_sweep):
    rep = value_sweep["lemma-max"]
    worst = min(r["worst_margin_log2"] for r in rep.rows)
    ok = rep.passed and len(rep.rows) == 256
    assert _line(3, "grid max |a_k| <= h0^-N |a_k(x_k)|, N+1 in 2..257", ok,
                 f"(worst margin 2^{worst:.2f})")


def test_criterion_04_lebesgue_bound(value_sweep):
    rep = value_sweep["lebesgue"]
    ok = rep.passed and len(rep.rows) == 256
    worst = min(r["margin_log2"] for r in rep.rows)
    assert _line(4, "Lebesgue constant <= h0^-N (N+1), N+1 in 2..257", ok,
                 f"(worst margin 2^{worst:.2f})")


def test_criterion_05_factor_sandwich():
    ok = True
    for s in range(1, 8):
        N = 1 << s
        for p in range(1, min(5, N)):
            rep = verify_markov(N, p, params=P24)
            ok = ok and rep.passed
    assert _line(5, "derivative factor sandwich, N = 2^s <= 128, p <= 4", ok)


def test_criterion_06_two_point_comparison():
    sigma_ok = None
    ok = True
    for s in range(6, 11):
        rep = verify_not_leja(s, P24)
        row = rep.rows[0]
        if sigma_ok is None:
            sigma_ok = abs(row["sigma"] - 0.9375) <= 1e-10
        ok = ok and rep.passed and row["greedy_defeated"]
    ok = ok and sigma_ok
    assert _line(6, "two-point comparison, s in 6..10, sigma = 0.9375", ok)


def test_criterion_07_cutoff_correctness():
    bits = 512
    levels = build_levels(P24, 6)
    # derivative recursion against finite differences, 100 points, k <= 6
    random.seed(7)
    fd_ok = True
    pts = [Fraction(random.randint(5, 95), 100) for _ in range(100)]
    for k in range(1, 7):
        for x in pts[:17 if k > 2 else 100]:
            got, fd = phi_fd_check(k, x, bits=bits)
            with real_context(256):
                scale = max(abs(fd), mpfr(1))
                if abs(got - fd) > scale * mpfr("1e-4"):
                    fd_ok = False
    half_ok = phi(Fraction(1, 2), 256) > Fraction(1, 2)
    # range of the cutoff on 10^4 random points
    u = build_cutoff(levels, levels.ell_frac(2), bits=320)
    random.seed(11)
    range_ok = True
    for _ in range(10 ** 4):
        x = Fraction(random.randint(-2 * 10 ** 9, 2 * 10 ** 9), 10 ** 9)
        v = u.value(x)
        if not (0 <= v <= 1):
            range_ok = False
    # scale-free derivative magnitudes across three collar widths: sample the
    # outer-left collar (x below the set, decaying toward breaks[1])
    sup_ref = [phi_deriv_max(j, bits=320, samples=64) for j in range(7)]
    scale_ok = True
    for srt in (1, 2, 3):
        delta = levels.ell_frac(srt)
        usr = build_cutoff(levels, delta, bits=320)
        with real_context(320):
            dv = to_real(delta, 320)
            a = usr.breaks[1]
            for j in range(7):
                worst = mpfr(0)
                for i in range(1, 65):
                    x = a - dv * i / 65
                    d = usr.u_derivs(x, j)
                    scaled = abs(d[j]) * dv ** j
                    if scaled > worst:
                        worst = scaled
                if not (worst <= 2 * sup_ref[j] and
                        (j == 0 or 2 * worst >= sup_ref[j])):
                    scale_ok = False
    ok = fd_ok and half_ok and range_ok and scale_ok
    assert _line(7, "cutoff: recursion FD-checked, range, scale-free derivs",
                 ok)


def test_criterion_08_rate_trend():
    levels = build_levels(P24, 10)
    seq = enumerate_nodes(280, levels)
    ok = True
    for w in (0, 1):
        rep = verify_jackson(exp_fn(1), w, [15, 31, 63, 127, 255], seq,
                             n_tail=10)
        ratios = [r["ratio"] for r in rep.rows]
        finite = all(r == r and r != float("inf") for r in ratios)
        noninc = all(ratios[i + 1] <= ratios[i]
                     for i in range(1, len(ratios) - 1))
        ok = ok and rep.passed and finite and noninc
    assert _line(8, "rate trend for exp, w in {0,1}, N in 15..255", ok)


def test_criterion_09_operator_terms_and_interpolation():
    cfg = OperatorConfig(P24, n_max=255, p_max=2, collar_samples=8,
                         grid_depth=8)
    op = ExtensionOperator(exp_fn(1), cfg)
    decay_ok = True
    for p in (0, 1, 2):
        rep = verify_term_decay(exp_fn(1), p, cfg)
        decay_ok = decay_ok and rep.passed
    # interpolation at every node to relative 2^-64
    f = exp_fn(1)
    interp_ok = True
    with real_context(512):
        for k in range(1, 257):
            x = op.Z.points[k - 1]
            res = op.eval(x, p_max=0)
            want = f(to_real(point_fraction(x, op.levels), 512), 512)
            if abs(res.values[0] - want) > abs(want) * gmpy2.exp2(-64):
                interp_ok = False
    ok = decay_ok and interp_ok
    assert _line(9, "operator terms decay, sums Cauchy, interpolation exact",
                 ok)


def test_criterion_10_failure_demo():
    rep = violation_demo(P3, [4, 5, 6], q_list=(3, 5))
    ok = rep.passed and rep.params["p"] == 4
    for q in (3, 5):
        vals = [r[f"ratio_q{q}_log2"] for r in rep.rows]
        ok = ok and vals[0] < vals[1] < vals[2]
    assert _line(10, "cutoff-product growth at alpha = 3, q in {3,5}", ok)


def test_criterion_11_interval_demo():
    rep = interval_demo(Fraction(1, 10 ** 4), Fraction(1, 50))
    implied = rep.notes["implied_C"]
    ok = rep.passed and abs(implied - 50.0) <= 0.5
    assert _line(11, "interval demo: implied constant 50 within 1%", ok,
                 f"(implied C = {implied})")


def test_criterion_12_determinism():
    a = verify_markov(16, 2, params=P24)
    b = verify_markov(16, 2, params=P24)
    c = verify_not_leja(6, P24)
    d = verify_not_leja(6, P24)
    ok = reports_json([a, c]) == reports_json([b, d])
    assert _line(12, "byte-identical reports on identical configuration", ok)
