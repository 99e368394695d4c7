import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisotorus.fourier import (
    AliasingWarning, AnisoParams, TrigPoly, aniso_norm, apply_multiplier, box_wavevectors, parseval_norm,
    pullback, pushforward, quadrature_grid, random_trigpoly, symbol_box, symbol_value,
)
from anisotorus.io import read_trigpoly, write_trigpoly
from anisotorus.torus import ConjugacyDiffeo

from oracles import SYMBOL_P2Q2_K03, symbol_formula

CAT_ES = (0.5257311121191336, -0.85065080835204)
PHI = ConjugacyDiffeo.from_sines([(0, (1, 0), 0.02), (1, (0, 1), 0.02), (0, (1, 1), 0.015)])


def test_params_validation():
    for t in (1.0, 0.5, np.inf):
        with pytest.raises(ValueError):
            AnisoParams(-1, 2, t)
    with pytest.raises(ValueError):
        AnisoParams(-1, 2, 2.0, (1.0, 1.0))
    assert AnisoParams(-1, 3).s == 2


def test_symbol_examples():
    pr = AnisoParams(-2, 2, 2.0, (1.0, 0.0))
    assert symbol_value(pr, (0, 0)) == 1.0
    assert symbol_value(pr, (3, 0)) == pytest.approx(1.0, rel=1e-14)
    assert symbol_value(pr, (0, 3)) == pytest.approx(SYMBOL_P2Q2_K03, rel=1e-14)
    assert SYMBOL_P2Q2_K03 == pytest.approx(2.80657e-3, rel=1e-5)


@settings(max_examples=60, deadline=None)
@given(st.floats(-4, 0), st.floats(0, 6), st.floats(-4, 0), st.floats(0, 6),
       st.integers(-20, 20), st.integers(-20, 20))
def test_symbol_multiplicative_and_monotone(p, q, p2, q2, k1, k2):
    a = AnisoParams(p, q, 2.0, CAT_ES)
    b = AnisoParams(p2, q2, 2.0, CAT_ES)
    ab = AnisoParams(p + p2, q + q2, 2.0, CAT_ES)
    k = (k1, k2)
    assert symbol_value(a, k) > 0
    assert symbol_value(a, k) * symbol_value(b, k) == pytest.approx(symbol_value(ab, k), rel=1e-13)
    assert symbol_value(a, k) == pytest.approx(symbol_formula(p, q, CAT_ES, k), rel=1e-13)
    hi = AnisoParams(max(p, p2), max(q, q2), 2.0, CAT_ES)
    assert symbol_value(a, k) <= symbol_value(hi, k) * (1 + 1e-14)


def test_trigpoly_grid_round_trip():
    rng = np.random.default_rng(1)
    f = random_trigpoly(10, rng, real=False)
    g = TrigPoly.from_grid(f.to_grid(21), 10)
    assert np.max(np.abs(g.coeffs - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))
    x = rng.random((50, 2))
    G = 64
    idx = np.floor(x * G).astype(int)
    grid = f.to_grid(G)
    assert np.allclose(f.evaluate(idx / G), grid[idx[:, 0], idx[:, 1]], atol=1e-12)
    assert random_trigpoly(6, rng).is_real() and not f.is_real()


def test_trigpoly_arithmetic_and_io(tmp_path):
    f = TrigPoly.mode((1, -2), value=2.0)
    g = TrigPoly.constant(1.0, 3)
    h = f + g - 0.5 * g
    assert h.N == 3 and h.coeffs[3, 3] == 0.5 and h.coeffs[4, 1] == 2.0
    with pytest.raises(ValueError):
        TrigPoly.mode((4, 0), N=3)
    path = tmp_path / "f.csv"
    f = random_trigpoly(3, np.random.default_rng(0))
    write_trigpoly(path, f)
    lines = path.read_text().splitlines()
    assert lines[0] == "k1,k2,re,im" and lines[1].startswith("-3,-3,")
    assert np.array_equal(read_trigpoly(path).coeffs, f.coeffs)


def test_multiplier_round_trip():
    rng = np.random.default_rng(2)
    pr = AnisoParams(-2, 4, 2.0, CAT_ES)
    f = random_trigpoly(16, rng)
    back = apply_multiplier(apply_multiplier(f, pr), pr, "inverse")
    assert np.max(np.abs(back.coeffs - f.coeffs) / np.abs(f.coeffs)) < 1e-13
    one = TrigPoly.constant(1.0, 4)
    assert np.array_equal(apply_multiplier(one, pr).coeffs, one.coeffs)
    assert np.array_equal(apply_multiplier(f, AnisoParams(0, 0)).coeffs, f.coeffs)
    with pytest.raises(ValueError):
        apply_multiplier(f, pr, "sideways")


def test_norm_examples():
    pr = AnisoParams(-2, 3, 2.0, CAT_ES)
    for t in (1.5, 2.0, 5.0):
        assert aniso_norm(TrigPoly.constant(-3.0, 4), pr.replace(t=t)) == pytest.approx(3.0, rel=1e-14)
    f = TrigPoly.mode((2, -3), N=5)
    assert aniso_norm(f, pr) == pytest.approx(symbol_value(pr, (2, -3)), rel=1e-13)


def test_parseval_quadrature_agreement():
    rng = np.random.default_rng(3)
    pr = AnisoParams(-1.5, 3.0, 2.0, CAT_ES)
    for _ in range(100):
        f = random_trigpoly(int(rng.integers(1, 12)), rng, real=bool(rng.integers(2)))
        assert aniso_norm(f, pr) == pytest.approx(parseval_norm(f, pr), rel=1e-10)


def test_norm_quadrature_converges_for_t_not_2():
    rng = np.random.default_rng(4)
    f = random_trigpoly(8, rng)
    pr = AnisoParams(-1, 2, 3.0, CAT_ES)
    vals = [aniso_norm(f, pr, grid=quadrature_grid(8, m)) for m in (4, 8, 16)]
    assert abs(vals[1] - vals[2]) <= 1e-6 * vals[2]
    assert abs(vals[0] - vals[2]) <= 1e-3 * vals[2]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.2, 6.0), st.complex_numbers(max_magnitude=10, allow_nan=False))
def test_norm_axioms(seed, t, c):
    rng = np.random.default_rng(seed)
    pr = AnisoParams(-1, 2, t, CAT_ES)
    f, g = random_trigpoly(5, rng), random_trigpoly(5, rng)
    nf = aniso_norm(f, pr)
    assert aniso_norm(c * f, pr) == pytest.approx(abs(c) * nf, rel=1e-12, abs=1e-300)
    assert aniso_norm(f + g, pr) <= nf + aniso_norm(g, pr) + 1e-10
    assert aniso_norm(f, pr.replace(p=-2)) <= nf * (1 + 1e-12)


def test_pullback_identity_and_constants():
    f = random_trigpoly(6, np.random.default_rng(5))
    same = pullback(f, ConjugacyDiffeo.zero(), 6)
    assert np.max(np.abs(same.coeffs - f.coeffs)) < 1e-12
    c = pullback(TrigPoly.constant(2.5), PHI, 4)
    assert abs(c.coeffs[4, 4] - 2.5) < 1e-14
    assert np.max(np.abs(np.delete(c.coeffs.ravel(), 40))) < 1e-14


def test_pullback_pushforward_round_trip():
    N = 3
    f = random_trigpoly(N, np.random.default_rng(6))
    with pytest.warns(AliasingWarning):
        pushforward(f, PHI, N)   # f o Phi has an infinite spectrum
    g = pushforward(f, PHI, 8 * N, oversample=2)
    back = pullback(g, PHI, 4 * N).resized(N)
    assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-8


def test_box_wavevectors_layout():
    K = box_wavevectors(2)
    assert K.shape == (5, 5, 2)
    assert tuple(K[0, 4]) == (-2, 2)
    flat = K.reshape(-1, 2)
    n = len(flat)
    assert all(tuple(flat[n - 1 - i]) == tuple(-flat[i]) for i in range(n))
    assert symbol_box(AnisoParams(-1, 1), 2).shape == (5, 5)
