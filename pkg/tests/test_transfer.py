import numpy as np
import pytest

from anisotorus.fourier import AnisoParams, TrigPoly, random_trigpoly, symbol_box, symbol_value
from anisotorus.io import dump_matrix, load_matrix, write_eigenvalues, read_csv
from anisotorus.torus import ConjugacyDiffeo, SmoothToralMap
from anisotorus.transfer import (
    L, M, L_t, M_t, MemoryBudgetError, OperatorKind, apply_operator, assemble_galerkin, closed_form_linear,
    eigenpairs, essential_radius_check, orbit_escape_lengths, spectrum,
)

from oracles import CAT, escapes_box

LIN = SmoothToralMap.linear(CAT)
SHEAR = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.shear(0.03))
NONVP = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.from_sines([(0, (1, 0), 0.02), (1, (0, 1), 0.02),
                                                                   (0, (1, 1), 0.015)]))


def params(tmap, p=-2.0, s=2.0, t=2.0):
    return AnisoParams.from_ps(tmap, p, s, t)


def test_kinds():
    assert str(L_t(1.5)) == "L_t(1.5)" and M_t(3).uses_inverse and not L.uses_inverse
    with pytest.raises(ValueError):
        OperatorKind("L_t")
    with pytest.raises(ValueError):
        OperatorKind("L", 2.0)
    with pytest.raises(ValueError):
        OperatorKind("Q")


def test_apply_operator_constants():
    one = TrigPoly.constant(1.0, 2)
    for T in (LIN, SHEAR, NONVP):
        assert np.allclose(apply_operator(L, T, one).coeffs, one.coeffs, atol=1e-13)
    assert np.allclose(apply_operator(M, LIN, one).coeffs, one.coeffs, atol=1e-13)
    assert np.allclose(apply_operator(M, SHEAR, one).coeffs, one.coeffs, atol=1e-13)
    out = apply_operator(M, NONVP, one, N_out=12)
    assert np.max(np.abs(out.coeffs - out.resized(0).resized(12).coeffs)) > 1e-3   # not constant
    assert abs(out.coeffs[12, 12] - 1.0) < 1e-10                                    # but mass-preserving


def test_mass_identity_for_M():
    f = random_trigpoly(4, np.random.default_rng(0))
    for T in (SHEAR, NONVP):
        g = apply_operator(M, T, f, N_out=16)
        assert abs(g.coeffs[16, 16] - f.coeffs[4, 4]) < 1e-10


def test_apply_operator_single_mode_linear():
    k = np.array([2, -1])
    out = apply_operator(L, LIN, TrigPoly.mode(k, N=4), N_out=4)
    img = np.array(CAT).T @ k
    expect = TrigPoly.mode(img, N=4)
    assert np.max(np.abs(out.coeffs - expect.coeffs)) < 1e-13
    with pytest.raises(ValueError):
        apply_operator(L, LIN, TrigPoly.mode(k, N=4), grid_size=10)


def test_closed_form_structure():
    N = 5
    pr = params(LIN, -2, 2)
    G = closed_form_linear(LIN, pr, N)
    assert np.max(np.count_nonzero(G, axis=0)) == 1
    n = 2 * N + 1
    col = (1 + N) * n + (0 + N)
    row = (2 + N) * n + (1 + N)
    assert np.count_nonzero(G[:, col]) == 1
    assert G[row, col] == pytest.approx(symbol_value(pr, (2, 1)) / symbol_value(pr, (1, 0)), rel=1e-14)
    P = assemble_galerkin(L, LIN, AnisoParams(0, 0), N).matrix
    assert set(np.unique(P)) <= {0, 1}


def test_fft_matches_closed_form():
    N = 8
    pr = params(LIN, -2, 2)
    fft = assemble_galerkin(L, LIN, pr, N, method="fft").matrix
    closed = assemble_galerkin(L, LIN, pr, N, method="closed").matrix
    a = symbol_box(pr, N).ravel()
    ratio = a[:, None] / a[None, :]
    # entries are compared relative to the symbol ratio that scales them
    assert np.max(np.abs(fft - closed) / ratio) <= 1e-12


def test_zero_conjugation_matches_linear():
    Z = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.zero())
    pr = params(LIN)
    assert np.array_equal(assemble_galerkin(L, Z, pr, 6).matrix, assemble_galerkin(L, LIN, pr, 6).matrix)


def test_memory_guard():
    with pytest.raises(MemoryBudgetError):
        assemble_galerkin(L, LIN, params(LIN), 49)


@pytest.mark.parametrize("N", [4, 8])
def test_linear_spectrum_collapse(N):
    assert escapes_box(CAT, N)
    assert all(v is not None for v in orbit_escape_lengths(CAT, N).values())
    for p, s in ((-1, 1), (-2, 2), (-3, 1)):
        sp = spectrum(assemble_galerkin(L, LIN, params(LIN, p, s), N))
        assert abs(sp.eigenvalues[0] - 1) < 1e-10
        assert np.all(sp.moduli[1:] < 1e-8)
        assert np.nanmax(sp.residuals) < 1e-8


def test_orbit_oracle_detects_cycles():
    lengths = orbit_escape_lengths([[0, 1], [1, 0]], 2)   # a permutation, not hyperbolic
    assert any(v is None for v in lengths.values())


def test_linear_refinement_stability():
    pr = params(LIN)
    a = spectrum(assemble_galerkin(L, LIN, pr, 8)).moduli[:5]
    b = spectrum(assemble_galerkin(L, LIN, pr, 16)).moduli[:5]
    assert np.max(np.abs(a - b)) < 1e-6


def test_M_equals_L_of_inverse():
    pr = params(SHEAR)
    m = assemble_galerkin(M, SHEAR, pr, 6)
    l_inv = assemble_galerkin(L, SHEAR.inverse(), pr, 6)
    assert np.max(np.abs(m.matrix - l_inv.matrix)) < 1e-10 * np.max(np.abs(m.matrix))
    a, b = spectrum(m).eigenvalues, spectrum(l_inv).eigenvalues
    assert np.max(np.abs(a[:3] - b[:3])) < 1e-10


def test_adjoint_duality():
    unit = AnisoParams(0, 0)
    Lm = assemble_galerkin(L, SHEAR, unit, 6).matrix
    Mm = assemble_galerkin(M, SHEAR, unit, 6).matrix
    assert np.max(np.abs(Mm - Lm.conj().T)) < 1e-10


def test_conjugated_spectrum_and_radius_check():
    pr = params(SHEAR)
    sp = spectrum(assemble_galerkin(L, SHEAR, pr, 8))
    ref = spectrum(assemble_galerkin(L, SHEAR, pr, 16))
    chk = essential_radius_check(sp, 0.146, 0.05, ref)
    assert chk.passed and len(chk.outliers) == 1 and abs(chk.outliers[0] - 1) < 2e-3
    assert "PASS" in chk.summary()
    # threshold >= 1 leaves at most the eigenvalue 1
    deg = essential_radius_check(sp, 0.146, 1 - 0.146, ref)
    assert all(abs(z - 1) < 1e-8 for z in deg.outliers)
    # an unstable outlier fails
    bad = essential_radius_check(np.array([1.0, 0.5]), 0.1, 0.05, np.array([1.0, 0.3]))
    assert not bad.passed


def test_galerkin_continuous_in_eps():
    pr = params(LIN)
    G0 = assemble_galerkin(L, LIN, pr, 8).matrix
    dist = []
    for eps in (1.0, 0.5, 0.25, 0.125):
        T = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.shear(0.03).scaled(eps))
        gm = assemble_galerkin(L, T, pr, 8)
        assert abs(spectrum(gm).eigenvalues[0] - 1) < 1e-12
        dist.append(np.linalg.norm(gm.matrix - G0, 2))
    # each halving of eps at least halves the distance to the linear matrix
    assert all(a > 1.8 * b for a, b in zip(dist, dist[1:]))


def test_eigenpairs_are_eigenvectors():
    gm = assemble_galerkin(L_t(2.0), NONVP, params(NONVP), 5)
    w, VR, VL = eigenpairs(gm)
    A = gm.matrix
    assert np.linalg.norm(A @ VR[:, 0] - w[0] * VR[:, 0]) < 1e-10
    assert np.linalg.norm(VL[:, 0].conj() @ A - w[0] * VL[:, 0].conj()) < 1e-10


def test_spectrum_requires_t2():
    gm = assemble_galerkin(L, LIN, params(LIN, t=3.0), 4)
    with pytest.raises(ValueError):
        spectrum(gm)


def test_eigenvalue_csv_and_matrix_dump(tmp_path):
    gm = assemble_galerkin(L, SHEAR, params(SHEAR), 3)
    sp = spectrum(gm)
    write_eigenvalues(tmp_path / "e.csv", sp, 3, L, -2.0, 4.0, 2.0)
    head, rows = read_csv(tmp_path / "e.csv")
    assert head == ["re", "im", "modulus", "residual", "N", "kind", "p", "q", "t"]
    assert len(rows) == 49 and complex(float(rows[0][0]), float(rows[0][1])) == sp.eigenvalues[0]
    dump_matrix(tmp_path / "m.bin", gm)
    raw = (tmp_path / "m.bin").read_bytes()
    assert len(raw) == 32 + 16 * 49 * 49
    A, head = load_matrix(tmp_path / "m.bin")
    assert np.array_equal(A, gm.matrix) and head["N"] == 3 and head["q"] == 4.0
