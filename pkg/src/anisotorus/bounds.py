"""
Hyperbolicity radii and the essential-spectral-radius bounds built on them.

Every bound is a limit ``lim_n (I_n)^(1/n)`` where ``I_n`` is a sup or a
Lebesgue integral over the torus of a pointwise expression in the local
exponents and Jacobians of ``T^n``.  Reports carry the raw per-n n-th
roots on two grids (G and 2G) together with an accelerated sequence (see
:func:`accelerate`) that removes the ``C^(1/n)`` prefactor error of the
n-th roots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .torus import midpoint_grid

FORMULAS = (
    "rho_infty", "rho_one", "thm1", "thm2",
    "propL1_u", "propL1_s", "propL12", "appendix_Lt", "appendix_Mt",
)


@dataclass(frozen=True)
class ExponentPair:
    p: float
    s: float

    def __post_init__(self):
        if not (self.p < 0 and self.s > 0):
            raise ValueError(f"need p < 0 < s, got p={self.p}, s={self.s}")

    @property
    def q(self):
        return self.s - self.p

    def dual(self):
        """(-s, -p): the exponents governing T^-1."""
        return ExponentPair(-self.s, -self.p)


def _pair(exps):
    return exps if isinstance(exps, ExponentPair) else ExponentPair(*exps)


def aitken(x0, x1, x2):
    """Aitken delta-squared extrapolation; returns x2 unless the triple is strictly monotone."""
    d1, d2 = x1 - x0, x2 - x1
    if d1 * d2 <= 0 or abs(d2) <= 1e-14 * abs(x2):
        return x2
    denom = d2 - d1
    if denom == 0:
        return x2
    out = x2 - d2 * d2 / denom
    return out if out > 0 else x2


def accelerate(I):
    """Accelerated estimates of lim I_n^(1/n) from the un-rooted sequence ``I``.

    Entry n is ``exp(slope)`` of a least-squares line through ``log I_k``
    for ``k`` in the upper half ``[ceil(n/2), n]``.  For ``I_n = C rho^n``
    this is exact at every n >= 2, while the n-th root carries a
    ``C^(1/n)`` error.
    """
    I = np.asarray(I, dtype=float)
    logI = np.log(I)
    acc = np.empty_like(I)
    acc[0] = I[0]
    for n in range(2, len(I) + 1):
        k = np.arange((n + 1) // 2, n + 1)
        if len(k) < 2:
            k = np.arange(n - 1, n + 1)
        slope = np.polyfit(k, logI[k - 1], 1)[0]
        acc[n - 1] = np.exp(slope)
    return acc


@dataclass(frozen=True)
class BoundReport:
    formula: str
    p: float
    s: float
    t: float | None
    grid: int
    n: np.ndarray
    values: np.ndarray
    accelerated: np.ndarray
    values_refined: np.ndarray
    accelerated_refined: np.ndarray
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.formula not in FORMULAS:
            raise ValueError(f"unknown formula {self.formula!r}")

    @property
    def refined_grid(self):
        return 2 * self.grid

    @property
    def raw_limit(self):
        return float(self.values_refined[-1])

    @property
    def limit(self):
        """Extrapolated limit from the refined grid."""
        return float(self.accelerated_refined[-1])

    def rows(self):
        """(n, raw_value, accelerated_value, grid, formula_id) records, coarse grid first."""
        out = []
        for g, raw, acc in ((self.grid, self.values, self.accelerated),
                            (self.refined_grid, self.values_refined, self.accelerated_refined)):
            for n, r, a in zip(self.n, raw, acc):
                out.append((int(n), float(r), float(a), g, self.formula))
        return out


def _pointwise(tmap, pts, n):
    """Local data of T^n at ``pts``; adds ``det_s`` = |det on E^s| = nu."""
    d = tmap.local_data(pts, n)
    d["det_s"] = d["nu"]
    return d


def _sequence(tmap, n_max, grid, reducer, integrand):
    pts = midpoint_grid(grid)
    I = np.empty(n_max)
    for n in range(1, n_max + 1):
        vals = integrand(_pointwise(tmap, pts, n))
        # fixed-order reductions keep results bit-reproducible
        I[n - 1] = np.max(vals) if reducer == "sup" else np.mean(vals)
    return I


def _report(formula, tmap, exps, t, n_max, grid, reducer, integrand, extra=None):
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    if grid < 16:
        raise ValueError("grid must be at least 16")
    ns = np.arange(1, n_max + 1)
    seqs = []
    for g in (grid, 2 * grid):
        I = _sequence(tmap, n_max, g, reducer, integrand)
        seqs.append((I ** (1.0 / ns), accelerate(I)))
    (v, a), (vr, ar) = seqs
    return BoundReport(formula, exps.p, exps.s, t, grid, ns, v, a, vr, ar, extra or {})


def _hyp(exps):
    p, s = exps.p, exps.s
    return lambda d: np.maximum(d["lam"] ** p, d["nu"] ** s)


def rho_infty(tmap, exps, n_max=8, grid=32):
    exps = _pair(exps)
    return _report("rho_infty", tmap, exps, None, n_max, grid, "sup", _hyp(exps))


def rho_one(tmap, exps, n_max=8, grid=32):
    exps = _pair(exps)
    return _report("rho_one", tmap, exps, None, n_max, grid, "mean", _hyp(exps))


def _prefactor(tmap, power, n_max, grid):
    """(sup_grid |det DT^n|^power)^(1/n) for n = 1..n_max."""
    pts = midpoint_grid(grid)
    ns = np.arange(1, n_max + 1)
    sups = np.array([np.max(tmap.det_jacobian(pts, n) ** power) for n in ns])
    return sups ** (1.0 / ns)


def _product_report(formula, tmap, exps, t, n_max, grid, power, rho_exps):
    """Per-n product of a Jacobian prefactor and rho_infty at ``rho_exps``."""
    base = rho_infty(tmap, rho_exps, n_max, grid)
    ns = np.arange(1, n_max + 1)
    seqs = []
    for g, raw in ((grid, base.values), (2 * grid, base.values_refined)):
        pre = _prefactor(tmap, power, n_max, g)
        vals = pre * raw
        seqs.append((pre, vals, accelerate(vals ** ns)))
    (pre, v, a), (pre_r, vr, ar) = seqs
    extra = {"prefactor": pre, "prefactor_refined": pre_r, "rho": base}
    return BoundReport(formula, exps.p, exps.s, t, grid, ns, v, a, vr, ar, extra)


def thm_bound_L(tmap, exps, t, n_max=8, grid=32):
    """lim sup_X |det DT^n|^(-1/(tn)) * rho_infty^(p,s)."""
    if not t > 1:
        raise ValueError("t must exceed 1")
    exps = _pair(exps)
    return _product_report("thm1", tmap, exps, t, n_max, grid, -1.0 / t, exps)


def thm_bound_M(tmap, exps, t, n_max=8, grid=32):
    """lim sup_X |det DT^n|^(-(t-1)/(tn)) * rho_infty^(-s,-p)."""
    if not t > 1:
        raise ValueError("t must exceed 1")
    exps = _pair(exps)
    return _product_report("thm2", tmap, exps, t, n_max, grid, -(t - 1.0) / t, exps.dual())


def appendix_bound_Lt(tmap, exps, n_max=8, grid=32):
    """rho_infty^(p,s): the small-t bound for L_t."""
    exps = _pair(exps)
    r = rho_infty(tmap, exps, n_max, grid)
    return BoundReport("appendix_Lt", exps.p, exps.s, None, grid, r.n, r.values, r.accelerated,
                       r.values_refined, r.accelerated_refined)


def appendix_bound_Mt(tmap, exps, n_max=8, grid=32):
    """rho_infty^(-s,-p): the large-t bound for M_t."""
    exps = _pair(exps)
    r = rho_infty(tmap, exps.dual(), n_max, grid)
    return BoundReport("appendix_Mt", exps.p, exps.s, None, grid, r.n, r.values, r.accelerated,
                       r.values_refined, r.accelerated_refined)


def prop_bound_L1(tmap, exps, t, n_max=8, grid=32, form="unstable-det"):
    """Averaged bound for L, in either of its two equivalent integrand forms."""
    exps = _pair(exps)
    hyp = _hyp(exps)
    if form == "unstable-det":
        def integrand(d):
            return hyp(d) * d["det_u"] * d["det"] ** (-1.0 / t)
        formula = "propL1_u"
    elif form == "stable-det":
        def integrand(d):
            return hyp(d) / d["det_s"] * d["det"] ** (1.0 - 1.0 / t)
        formula = "propL1_s"
    else:
        raise ValueError("form must be 'unstable-det' or 'stable-det'")
    return _report(formula, tmap, exps, t, n_max, grid, "mean", integrand)


def prop_bound_L12(tmap, exps, t, n_max=8, grid=32):
    """Averaged bound for M with exponents (-s, -p)."""
    exps = _pair(exps)
    hyp = _hyp(exps.dual())

    def integrand(d):
        return hyp(d) * d["det_u"] * d["det"] ** (-(t - 1.0) / t)

    return _report("propL12", tmap, exps, t, n_max, grid, "mean", integrand)


def kitaev_disc_radius(tmap, exps, n_max=8, grid=32):
    """1 / rho_one: radius of the disc where the determinant is holomorphic."""
    return 1.0 / rho_one(tmap, exps, n_max, grid).limit
