"""Walk through the toolkit on the cat map and a shear conjugate of it.

Run with ``python demos/cat_map_tour.py``; takes about ten seconds.
"""

import numpy as np

from anisotorus.bounds import kitaev_disc_radius, rho_infty, rho_one
from anisotorus.determinant import determinant_series, resonance_match, zeros_in_disc
from anisotorus.fourier import AnisoParams
from anisotorus.lasota_yorke import bound_comparison, norm_growth
from anisotorus.torus import ConjugacyDiffeo, SmoothToralMap
from anisotorus.transfer import L, assemble_galerkin, essential_radius_check, spectrum

CAT = [[2, 1], [1, 1]]
lin = SmoothToralMap.linear(CAT)
shear = SmoothToralMap.conjugated(CAT, ConjugacyDiffeo.shear(0.03))
exps = (-2.0, 2.0)

print("hyperbolicity radii at (p, s) = (-2, 2)")
for name, T in (("linear", lin), ("shear", shear)):
    a, b = rho_infty(T, exps), rho_one(T, exps)
    print(f"  {name:6s} rho_infty {a.limit:.10f}   rho_one {b.limit:.10f}")

# a linear map permutes Fourier modes, so the finite section is nilpotent off the constants
params = AnisoParams.from_ps(lin, *exps, 2.0)
sp = spectrum(assemble_galerkin(L, lin, params, 12))
print(f"\nlinear, N=12: leading eigenvalue {sp.eigenvalues[0]:.12f}, next modulus {sp.moduli[1]:.1e}")

# conjugation keeps the eigenvalue 1 and adds small point spectrum
params = AnisoParams.from_ps(shear, *exps, 2.0)
sp = spectrum(assemble_galerkin(L, shear, params, 12))
ref = spectrum(assemble_galerkin(L, shear, params, 20), n_residual=0)
bound = rho_infty(shear, exps)
print("\nshear, N=12 vs N=20:")
print(essential_radius_check(sp, bound, 0.05, ref).summary())
print("  largest moduli:", np.round(sp.moduli[:6], 5))

# the determinant sees only periodic orbits, and their weights do not change under conjugation
series = determinant_series(shear, 10)
radius = kitaev_disc_radius(shear, exps)
zeros = zeros_in_disc(series, radius)
print(f"\ndeterminant: traces {np.round(series.traces[:4], 12)}, disc radius {radius:.4f}")
for z in zeros:
    print(f"  zero {z.z:.12f} +- {z.error:.1e}")
match = resonance_match(zeros, sp, radius)
print("  pairs (zero, eigenvalue, gap):", [(round(z.real, 9), round(g.real, 9), f"{d:.1e}") for z, g, d in match.pairs])

# norm growth with the constant mode projected out
rec = norm_growth(L, shear, params, N=12, n_max=16, seed=0)
print("\nnorm growth:", bound_comparison(rec, bound).summary())
