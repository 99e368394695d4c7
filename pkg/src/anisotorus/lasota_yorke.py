"""
Norm growth of iterated transfer operators and two-norm (Lasota-Yorke type) fits.

Iterates act on coefficient vectors through the plain finite section
``<Op e_k, e_j>`` on the box, so every step re-truncates to the box.  Norms
are anisotropic ``L^t`` norms computed by quadrature; the weak norm lowers
``p`` by one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .fourier import AnisoParams, TrigPoly, aniso_norm, random_trigpoly
from .transfer import assemble_galerkin, eigenpairs

PROJECTIONS = ("none", "constant", "spectral")
TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class GrowthRecord:
    kind: str
    params: AnisoParams
    n: np.ndarray
    strong: np.ndarray
    weak: np.ndarray
    raw_strong: np.ndarray
    slope: float
    raw_slope: float
    projection: str
    descriptor: str
    deflated: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    bound: float | None = None

    def rows(self):
        return [(int(n), float(s), float(w)) for n, s, w in zip(self.n, self.strong, self.weak)]


def finite_section(kind, tmap, N, grid=None):
    """Unweighted finite section of ``kind`` on box ``N`` (unit symbol)."""
    unit = AnisoParams(0.0, 0.0, 2.0, tuple(tmap.base.stable_direction))
    return assemble_galerkin(kind, tmap, unit, N, grid=grid).matrix


def fit_slope(norms):
    """Least-squares slope of log norm over steps ``[n_max/2, n_max]``.

    ``norms[i]`` is the norm after ``i`` steps.  If the iterate vanishes
    exactly at step ``v`` (a nilpotent block), the window is shifted to end
    at ``v`` with that norm floored at the smallest positive double, so the
    slope stays finite and strongly negative.
    """
    norms = np.asarray(norms, dtype=float)
    n_max = len(norms) - 1
    if n_max < 1:
        raise ValueError("need at least one step")
    lo = (n_max + 1) // 2
    width = n_max - lo
    zero = np.nonzero(norms <= TINY)[0]
    hi = n_max
    if len(zero) and zero[0] <= n_max:
        hi = int(zero[0])
        if hi == 0:
            return 0.0
        lo = max(0, min(lo, hi - max(width, 1)))
    k = np.arange(lo, hi + 1)
    if len(k) < 2:
        k = np.arange(max(hi - 1, 0), hi + 1)
    y = np.log(np.maximum(norms[k], TINY))
    return float(np.polyfit(k, y, 1)[0])


def _spectral_projector(A, threshold):
    """I - sum v w^H / (w^H v) over eigenvalues of modulus above ``threshold``."""
    w, VR, VL = eigenpairs(A)
    keep = np.abs(w) > threshold
    n = A.shape[0]
    P = np.eye(n, dtype=complex)
    for i in np.nonzero(keep)[0]:
        v, u = VR[:, i], VL[:, i]
        P -= np.outer(v, u.conj()) / (u.conj() @ v)
    return P, w[keep]


def _constant_projector(n):
    c = (n - 1) // 2
    d = np.ones(n)
    d[c] = 0.0
    return d


def norm_growth(kind, tmap, params, f=None, n_max=20, grid=None, N=None, projection=None,
                deflate_above=0.5, seed=0, matrix=None):
    """Strong and weak norms of ``Op^n f`` for n = 0..n_max.

    ``projection`` defaults to ``"constant"`` for L (the mean is removed
    before and after each step) and ``"spectral"`` otherwise (eigenpairs of
    the finite section with modulus above ``deflate_above`` are projected
    out with their left eigenvectors).  The unprojected strong norms are
    kept as ``raw_strong``.
    """
    if f is None:
        f = random_trigpoly(N or 12, np.random.default_rng(seed))
        descriptor = f"random(seed={seed}, N={f.N}, decay=3)"
    else:
        descriptor = f"TrigPoly(N={f.N})"
    N = f.N if N is None else N
    f = f.resized(N)
    if projection is None:
        projection = "constant" if kind.name == "L" else "spectral"
    if projection not in PROJECTIONS:
        raise ValueError(f"projection must be one of {PROJECTIONS}")
    A = finite_section(kind, tmap, N, grid) if matrix is None else matrix
    n = A.shape[0]
    shape = f.coeffs.shape
    weak_params = params.replace(p=params.p - 1.0)

    deflated = np.zeros(0, dtype=complex)
    if projection == "constant":
        d = _constant_projector(n)
        project = lambda x: x * d  # noqa: E731
    elif projection == "spectral":
        P, deflated = _spectral_projector(A, deflate_above)
        project = lambda x: P @ x  # noqa: E731
    else:
        project = lambda x: x  # noqa: E731

    def norms(x):
        g = TrigPoly(x.reshape(shape))
        return aniso_norm(g, params), aniso_norm(g, weak_params)

    x_raw = f.coeffs.ravel().copy()
    x = project(x_raw)
    strong, weak, raw = [], [], []
    for step in range(n_max + 1):
        if step:
            x = project(A @ x)
            x_raw = A @ x_raw
        s, w = norms(x)
        strong.append(s)
        weak.append(w)
        raw.append(aniso_norm(TrigPoly(x_raw.reshape(shape)), params))
    strong, weak, raw = map(np.array, (strong, weak, raw))
    return GrowthRecord(
        str(kind), params, np.arange(n_max + 1), strong, weak, raw,
        fit_slope(strong), fit_slope(raw), projection, descriptor, deflated,
    )


@dataclass(frozen=True)
class Verdict:
    passed: bool
    growth_rate: float
    raw_growth_rate: float
    bound: float
    margin: float
    note: str

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}: exp(slope)={self.growth_rate:.6g} (raw {self.raw_growth_rate:.6g}) "
                f"vs bound {self.bound:.6g} + {self.margin:g}; {self.note}")


def bound_comparison(record, bound, margin=0.05):
    """PASS iff exp(projected slope) <= bound + margin.

    ``bound`` is a float or a report with a ``limit``.  The raw slope is
    reported alongside: without projection the leading eigenvalues (1 for
    L) dominate generic functions.
    """
    b = float(getattr(bound, "limit", bound))
    rate = float(np.exp(record.slope))
    raw = float(np.exp(record.raw_slope))
    note = f"projection={record.projection}"
    if len(record.deflated):
        note += ", deflated " + " ".join(f"{z.real:.6g}{z.imag:+.3g}i" for z in record.deflated)
    return Verdict(rate <= b + margin, rate, raw, b, margin, note)


@dataclass(frozen=True)
class LYFit:
    c_strong: float
    c_weak: np.ndarray
    residual: float

    @property
    def feasible(self):
        return self.residual < 0.05


def ly_fit(records, strong0, weak0, rates):
    """Fit ``|Op^n f|_s ~ C_s rho_n |f|_s + C_w(n) |f|_w`` by nonnegative least squares.

    ``records`` are strong-norm sequences (one row per test function,
    columns n = 1..n_max), ``strong0`` and ``weak0`` the initial norms and
    ``rates[n-1]`` the n-step hyperbolicity rate.  ``C_s`` is shared by all
    n.  The residual is the relative l2 misfit ``|Xc - y| / |y|``.
    """
    Y = np.asarray(records, dtype=float)
    m, n_max = Y.shape
    s0 = np.asarray(strong0, dtype=float)
    w0 = np.asarray(weak0, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if len(rates) != n_max:
        raise ValueError(f"need {n_max} rates, got {len(rates)}")
    X = np.zeros((m * n_max, 1 + n_max))
    for j in range(n_max):
        rows = slice(j * m, (j + 1) * m)
        X[rows, 0] = rates[j] * s0
        X[rows, 1 + j] = w0
    y = Y.T.ravel()
    c, res = nnls(X, y)
    return LYFit(float(c[0]), c[1:], float(res / np.linalg.norm(y)))


def ly_ensemble(kind, tmap, params, rates, n_funcs=20, N=16, seed=0, grid=None, projection="none"):
    """Growth of ``n_funcs`` random functions (unprojected by default) and their LY fit."""
    rng = np.random.default_rng(seed)
    A = finite_section(kind, tmap, N, grid)
    n_max = len(rates)
    Y, s0, w0 = [], [], []
    for _ in range(n_funcs):
        f = random_trigpoly(N, rng)
        rec = norm_growth(kind, tmap, params, f, n_max, projection=projection, matrix=A)
        Y.append(rec.strong[1:])
        s0.append(rec.strong[0])
        w0.append(rec.weak[0])
    return ly_fit(Y, s0, w0, rates)


__all__ = [
    "GrowthRecord", "Verdict", "LYFit", "finite_section", "fit_slope", "norm_growth",
    "bound_comparison", "ly_fit", "ly_ensemble",
]
