"""Set geometry: levels, endpoints, basic intervals, grids, chains."""

from fractions import Fraction

import pytest

from cantorlab.cantor import (
    CantorParams,
    ConstraintError,
    PointExpr,
    PointLocationError,
    basic_interval,
    build_levels,
    eval_point,
    grid,
    locate_chain,
    point_fraction,
)
from cantorlab.numerics import to_real

P24 = CantorParams.create(2, "1/4")


@pytest.fixture(scope="module")
def levels():
    return build_levels(P24, 12)


def test_level_lengths(levels):
    assert levels.ell_frac(2) == Fraction(1, 16)
    assert levels.ell_frac(3) == Fraction(1, 256)
    assert levels.gaps_frac[0] == Fraction(1, 2)
    assert levels.gaps_frac[1] == Fraction(1, 8)
    assert levels.gaps_frac[2] == Fraction(7, 128)


def test_gap_ratios_nondecreasing(levels):
    ratios = [levels.gaps_frac[s] / levels.lengths_frac[s]
              for s in range(levels.depth)]
    assert ratios[:3] == [Fraction(1, 2), Fraction(1, 2), Fraction(7, 8)]
    assert all(ratios[i] <= ratios[i + 1] for i in range(len(ratios) - 1))


def test_param_validation():
    with pytest.raises(ConstraintError):
        CantorParams.create(1, "1/4")
    with pytest.raises(ConstraintError):
        CantorParams.create(2, "1/2")
    with pytest.raises(ConstraintError):
        CantorParams.create("101/100", "49/100")   # 2*ell1^(alpha-1) >= 1


def test_general_alpha_levels():
    p = CantorParams.create("5/2", "1/4")
    lv = build_levels(p, 6, bits=256)
    assert lv.lengths_frac is None
    assert lv.ell(1) == to_real(Fraction(1, 4), 256)
    for s in range(lv.depth):
        assert lv.gap(s) > 0


def test_eval_point_examples(levels):
    x = PointExpr.from_dict({0: 1, 1: -1})
    assert eval_point(x, levels, 128) == to_real(Fraction(3, 4), 128)
    assert eval_point(PointExpr.unit(2), levels, 128) == to_real(Fraction(1, 16), 128)
    y = PointExpr.from_dict({0: 1, 1: -1, 2: 1})
    assert point_fraction(y, levels) == Fraction(13, 16)


def test_point_expr_algebra():
    a = PointExpr.from_dict({0: 1, 1: -1})
    b = PointExpr.from_dict({0: 1, 1: -1, 2: 1})
    assert (b - a) == PointExpr.unit(2)
    assert (a - a).is_zero()
    assert a + PointExpr.zero() == a
    # canonical form drops zero coefficients
    assert PointExpr.from_dict({3: 0, 1: 2}) == PointExpr.from_dict({1: 2})


def test_basic_interval_examples(levels):
    i0 = basic_interval(1, 0, levels)
    assert point_fraction(i0.a, levels) == 0
    assert point_fraction(i0.b, levels) == 1
    i21 = basic_interval(2, 1, levels)
    assert point_fraction(i21.a, levels) == Fraction(3, 4)
    assert point_fraction(i21.b, levels) == 1
    i32 = basic_interval(3, 2, levels)
    assert point_fraction(i32.a, levels) == Fraction(3, 4)
    assert point_fraction(i32.b, levels) == Fraction(13, 16)
    with pytest.raises(ValueError):
        basic_interval(5, 2, levels)


def test_interval_length_is_level_length(levels):
    for s in range(0, 7):
        for j in range(1, 2 ** s + 1):
            iv = basic_interval(j, s, levels)
            assert point_fraction(iv.b - iv.a, levels) == levels.ell_frac(s)


def test_grid_examples(levels):
    g0 = [point_fraction(x, levels) for x in grid(levels, 0)]
    assert g0 == [0, 1]
    g1 = [point_fraction(x, levels) for x in grid(levels, 1)]
    assert g1 == [0, Fraction(1, 4), Fraction(3, 4), 1]
    g2 = grid(levels, 2)
    assert len(g2) == 8
    assert point_fraction(g2[3], levels) == Fraction(1, 4)


def test_grid_sorted_strictly(levels):
    for d in (3, 6):
        vals = [point_fraction(x, levels) for x in grid(levels, d)]
        assert len(vals) == 2 ** (d + 1)
        assert all(a < b for a, b in zip(vals, vals[1:]))


def test_locate_chain_examples(levels):
    assert locate_chain(PointExpr.zero(), levels, 2) == [(1, 2), (1, 1), (1, 0)]
    assert locate_chain(PointExpr.unit(0), levels, 2) == [(4, 2), (2, 1), (1, 0)]
    x = PointExpr.from_dict({0: 1, 1: -1, 2: 1})   # 13/16
    assert locate_chain(x, levels, 2) == [(3, 2), (2, 1), (1, 0)]


def test_locate_chain_rejects_gap_points(levels):
    mid = PointExpr.from_dict({1: 2})   # 1/2, in the central gap
    with pytest.raises(PointLocationError):
        locate_chain(mid, levels, 1)
    with pytest.raises(PointLocationError):
        locate_chain(PointExpr.from_dict({0: 2}), levels, 0)


def test_chains_nested_over_grid(levels):
    for depth in list(range(0, 8)) + [10]:
        for x in grid(levels, depth):
            chain = locate_chain(x, levels, depth)
            assert chain[-1] == (1, 0)
            for (j_lo, s_lo), (j_hi, s_hi) in zip(chain, chain[1:]):
                assert s_lo == s_hi + 1
                assert (j_lo + 1) // 2 == j_hi


def test_general_alpha_chain_agrees_with_dyadic_structure():
    p = CantorParams.create("5/2", "1/4")
    lv = build_levels(p, 6, bits=384)
    for depth in (2, 4):
        for i, x in enumerate(grid(lv, depth)):
            chain = locate_chain(x, lv, depth)
            assert chain[0][0] - 1 == i // 2


def test_general_alpha_grid_strictly_increasing():
    p = CantorParams.create("5/2", "1/4")
    lv = build_levels(p, 6, bits=384)
    vals = [eval_point(x, lv, 384) for x in grid(lv, 5)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
