"""Small-t and large-t regimes on a conjugate that does not preserve area.

For L_t with t near 1 the bound is rho_infty at (p, s); for M_t with t
large it is rho_infty at (-s, -p).  The finite sections of both have a
leading eigenvalue near 1, which is deflated before the growth rate is
fitted.

Run with ``python demos/appendix_regimes.py``; takes about fifteen seconds.
"""

import numpy as np

from anisotorus.bounds import ExponentPair, appendix_bound_Lt, appendix_bound_Mt, thm_bound_L
from anisotorus.fourier import AnisoParams
from anisotorus.lasota_yorke import bound_comparison, norm_growth
from anisotorus.torus import ConjugacyDiffeo, SmoothToralMap
from anisotorus.transfer import L_t, M_t

phi = ConjugacyDiffeo.from_sines([(0, (1, 0), 0.02), (1, (0, 1), 0.02), (0, (1, 1), 0.015)])
T = SmoothToralMap.conjugated([[2, 1], [1, 1]], phi)
exps = ExponentPair(-2.0, 2.0)
det = T.det_jacobian(np.random.default_rng(0).random((4096, 2)), 1)
print(f"Jacobian of T ranges over [{det.min():.4f}, {det.max():.4f}]")

# the n = 8 Jacobian prefactor of the general bound fades as t grows; for a
# conjugate det DT^n is a coboundary, so its n-th root tends to 1 in any case
for t in (1.25, 2.0, 8.0, 64.0):
    r = thm_bound_L(T, exps, t)
    print(f"  t={t:<5g} prefactor {r.extra['prefactor_refined'][-1]:.6f}  bound {r.limit:.6f}")

for kind, report in ((L_t(1.25), appendix_bound_Lt(T, exps)), (M_t(8.0), appendix_bound_Mt(T, exps))):
    params = AnisoParams.from_ps(T, exps.p, exps.s, kind.t)
    rec = norm_growth(kind, T, params, N=12, n_max=14, seed=0, deflate_above=report.limit)
    print(f"\n{kind}: bound {report.limit:.6f}")
    print("  strong norms:", np.array2string(rec.strong[::2], precision=3))
    print(" ", bound_comparison(rec, report).summary())
