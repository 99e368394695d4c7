import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisotorus.bounds import (
    BoundReport, ExponentPair, accelerate, aitken, appendix_bound_Lt, appendix_bound_Mt, kitaev_disc_radius,
    prop_bound_L1, prop_bound_L12, rho_infty, rho_one, thm_bound_L, thm_bound_M,
)
from anisotorus.torus import ConjugacyDiffeo, SmoothToralMap, midpoint_grid

from oracles import CAT, LAM, NU, RHO_M1_1, RHO_M2_2

LIN = SmoothToralMap.linear(CAT)
SHEAR = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.shear(0.03))
NONVP = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.from_sines([(0, (1, 0), 0.02), (1, (0, 1), 0.02),
                                                                   (0, (1, 1), 0.015)]))


def test_exponent_pair():
    with pytest.raises(ValueError):
        ExponentPair(0.5, 1)
    with pytest.raises(ValueError):
        ExponentPair(-1, 0)
    e = ExponentPair(-1, 3)
    assert e.q == 4 and e.dual() == ExponentPair(-3, 1)


def test_report_validation():
    with pytest.raises(ValueError):
        rho_infty(LIN, (-1, 1), n_max=1)
    with pytest.raises(ValueError):
        rho_infty(LIN, (-1, 1), grid=8)
    with pytest.raises(ValueError):
        thm_bound_L(LIN, (-1, 1), 1.0)
    r = rho_infty(LIN, (-1, 1), n_max=3)
    with pytest.raises(ValueError):
        BoundReport("nope", -1, 1, None, 32, r.n, r.values, r.accelerated, r.values, r.accelerated)


@pytest.mark.parametrize("exps,expect", [((-1, 1), RHO_M1_1), ((-2, 2), RHO_M2_2)])
def test_linear_closed_forms(exps, expect):
    for fn in (rho_infty, rho_one):
        r = fn(LIN, exps)
        assert np.allclose(r.values, expect, rtol=1e-12, atol=0)
        assert np.allclose(r.values_refined, expect, rtol=1e-12, atol=0)
        assert r.limit == pytest.approx(expect, rel=1e-12)
    # unit Jacobian: thm1 and thm2 reduce to rho_infty at (p, s) and at (-s, -p)
    assert thm_bound_L(LIN, exps, 2.0).limit == pytest.approx(expect, rel=1e-12)
    p, s = exps
    dual = max(LAM ** p, NU ** s)     # same value, by lam * nu = 1 and the symmetric pair
    assert thm_bound_M(LIN, exps, 3.0).limit == pytest.approx(dual, rel=1e-12)


def test_linear_prop_forms():
    for p, s in ((-1, 1), (-2, 2), (-3, 1)):
        expect = max(LAM ** p, NU ** s) * LAM
        u = prop_bound_L1(LIN, (p, s), 2.0)
        v = prop_bound_L1(LIN, (p, s), 2.0, form="stable-det")
        assert np.allclose(u.values, expect, rtol=1e-12) and np.allclose(v.values, expect, rtol=1e-12)
        assert prop_bound_L12(LIN, (p, s), 2.0).limit == pytest.approx(max(LAM ** -s, LAM ** p) * LAM, rel=1e-12)
    assert prop_bound_L12(LIN, (-1, 1), 2.0).limit == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        prop_bound_L1(LIN, (-1, 1), 2.0, form="other")


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, -0.25), st.floats(0.25, 3))
def test_mean_below_sup(p, s):
    a = rho_one(SHEAR, (p, s), n_max=4, grid=16)
    b = rho_infty(SHEAR, (p, s), n_max=4, grid=16)
    assert np.all(a.values <= b.values * (1 + 1e-13))
    assert np.all(a.values_refined <= b.values_refined * (1 + 1e-13))


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, -0.5), st.floats(0.1, 0.5), st.floats(0.5, 3))
def test_monotone_in_exponents(p, dp, s):
    lo = rho_infty(NONVP, (p, s), n_max=3, grid=16).values
    hi_p = rho_infty(NONVP, (p + dp, s), n_max=3, grid=16).values
    lo_s = rho_infty(NONVP, (p, s + dp), n_max=3, grid=16).values
    assert np.all(lo <= hi_p * (1 + 1e-13))
    assert np.all(lo_s <= lo * (1 + 1e-13))


def test_eps_continuity_and_zero_eps_identity():
    for eps in (1.0, 0.5, 0.25, 0.125):
        T = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.shear(0.03).scaled(eps))
        assert abs(rho_infty(T, (-2, 2)).limit - RHO_M2_2) < 1e-4 * eps
    Z = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.zero())
    for fn in (rho_infty, rho_one):
        assert np.array_equal(fn(Z, (-2, 2)).values, fn(LIN, (-2, 2)).values)
    assert np.array_equal(thm_bound_L(Z, (-2, 2), 2.0).values, thm_bound_L(LIN, (-2, 2), 2.0).values)


def test_prefactor_decreases_with_t():
    pre = [thm_bound_L(NONVP, (-2, 2), t).extra["prefactor_refined"][-1] for t in (1.25, 2, 4, 8)]
    assert all(a > b for a, b in zip(pre, pre[1:])) and pre[-1] > 1
    # volume preserving: no prefactor
    assert np.all(thm_bound_L(SHEAR, (-2, 2), 1.25).extra["prefactor"] == 1.0)


def test_dual_exponents_match_inverse_map():
    for T in (SHEAR, NONVP):
        a = rho_infty(T.inverse(), (-2, 2)).limit
        b = rho_infty(T, ExponentPair(-2, 2).dual()).limit
        assert a == pytest.approx(b, rel=5e-3)
        assert appendix_bound_Mt(T, (-2, 2)).limit == b
        assert appendix_bound_Lt(T, (-2, 2)).limit == rho_infty(T, (-2, 2)).limit


def test_prop_forms_agree_in_the_limit():
    for T in (SHEAR, NONVP):
        u = prop_bound_L1(T, (-2, 2), 2.0, n_max=10).limit
        v = prop_bound_L1(T, (-2, 2), 2.0, n_max=10, form="stable-det").limit
        assert abs(u - v) <= 1e-3 * u


def test_kitaev_radius():
    assert kitaev_disc_radius(LIN, (-1, 1)) == pytest.approx(LAM, rel=1e-12)
    assert kitaev_disc_radius(LIN, (-2, 2)) == pytest.approx(LAM ** 2, rel=1e-12)


def test_accelerate_exact_on_geometric():
    n = np.arange(1, 11)
    I = 7.5 * 0.3 ** n
    acc = accelerate(I)
    assert np.allclose(acc[1:], 0.3, rtol=1e-12)
    assert abs(I[-1] ** (1 / 10) - 0.3) > 1e-2     # the plain n-th root is far off


def test_aitken():
    x = [0.3 + 0.5 ** k for k in range(3)]
    assert aitken(*x) == pytest.approx(0.3, rel=1e-14)
    assert aitken(1.0, 2.0, 1.5) == 1.5             # not monotone
    assert aitken(1.0, 1.0, 1.0) == 1.0


def test_rows_layout():
    r = rho_one(LIN, (-1, 1), n_max=3, grid=16)
    rows = r.rows()
    assert len(rows) == 6 and rows[0][3] == 16 and rows[-1][3] == 32 and rows[0][4] == "rho_one"


def test_dual_exponents_pointwise_on_inverse_map():
    # at y = T^n x the inverse map expands by 1/nu(x) and contracts by 1/lam(x),
    # so max(lam'^p, nu'^s)(y) = max(lam^-s, nu^-p)(x) exactly
    x = midpoint_grid(16)
    p, s = -2.0, 3.0
    for T in (SHEAR, NONVP):
        for n in (1, 3, 5):
            d = T.local_data(x, n)
            e = T.inverse().local_data(T.evaluate(x, n), n)
            lhs = np.maximum(e["lam"] ** p, e["nu"] ** s)
            rhs = np.maximum(d["lam"] ** -s, d["nu"] ** -p)
            assert np.max(np.abs(lhs - rhs) / rhs) < 1e-10
