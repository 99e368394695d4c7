"""
Periodic points, trace sums and the dynamical Fredholm determinant

    d(z) = exp( - sum_n z^n/n  sum_{T^n x = x} 1/|det(DT^n(x) - I)| ).

Fixed points of ``A^n`` are enumerated exactly from the Smith normal form
of ``B = A^n - I``: with ``U B V = diag(d1, d2)`` the solutions of
``B x in Z^2`` are ``x = V (a/d1, b/d2)`` for ``0 <= a < d1, 0 <= b < d2``.
Fixed points of a conjugate ``Phi^-1 A Phi`` are their images under
``Phi^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_decomp

from .torus import reduce_mod1

MAX_PERIOD = 12
MAX_POINTS = 10_000_000


class PeriodicOrbitError(RuntimeError):
    pass


def smith_decomposition(B):
    """(U, S, V) with ``U B V = S`` diagonal, as int64 arrays."""
    S, U, V = smith_normal_decomp(Matrix(np.asarray(B, dtype=object).tolist()), domain=ZZ)
    conv = lambda m: np.array(m.tolist(), dtype=np.int64)  # noqa: E731
    return conv(U), conv(S), conv(V)


@dataclass(frozen=True)
class PeriodicOrbitData:
    period: int
    points: np.ndarray
    differentials: np.ndarray
    weights: np.ndarray
    residual: float

    @property
    def count(self):
        return len(self.points)


def periodic_point_count(matrix, n):
    """|det(M^n - I)| in exact integer arithmetic."""
    B = Matrix(np.asarray(matrix, dtype=object).tolist()) ** n - Matrix.eye(2)
    return abs(int(B.det()))


def linear_periodic_points(base, n):
    """Fixed points of ``A^n`` on the torus, shape (|det(A^n - I)|, 2)."""
    B = Matrix(base.matrix.astype(object).tolist()) ** n - Matrix.eye(2)
    count = abs(int(B.det()))
    if count > MAX_POINTS:
        raise PeriodicOrbitError(f"{count} fixed points of A^{n} exceed the enumeration guard {MAX_POINTS}")
    U, S, V = smith_decomposition(np.array(B.tolist(), dtype=object))
    d1, d2 = abs(int(S[0, 0])), abs(int(S[1, 1]))
    a, b = np.meshgrid(np.arange(d1), np.arange(d2), indexing="ij")
    y = np.stack([a.ravel() / d1, b.ravel() / d2], axis=-1)
    return reduce_mod1(y @ V.T.astype(float))


def _torus_distance(x, y):
    d = np.abs(x - y) % 1.0
    return np.max(np.minimum(d, 1.0 - d), axis=-1)


def enumerate_periodic(tmap, n, max_period=MAX_PERIOD):
    """All fixed points of T^n with their differentials and determinant weights."""
    if n < 1 or n > max_period:
        raise ValueError(f"period must lie in 1..{max_period}")
    pts = linear_periodic_points(tmap.base, n)
    if not tmap.is_linear:
        pts = tmap.conjugacy.inverse(pts, tol=1e-15)
    D = tmap.differential(pts, n)
    dets = np.linalg.det(D - np.eye(2))
    if np.any(np.abs(dets) < 1e-12):
        raise PeriodicOrbitError("det(DT^n - I) vanishes at a periodic point")
    residual = float(np.max(_torus_distance(tmap.evaluate(pts, n), pts), initial=0.0))
    return PeriodicOrbitData(n, pts, D, 1.0 / np.abs(dets), residual)


def trace_sum(tmap, n):
    """sum over T^n x = x of 1/|det(D_x T^n - I)|."""
    return float(np.sum(enumerate_periodic(tmap, n).weights))


@dataclass(frozen=True)
class DeterminantSeries:
    traces: np.ndarray
    coeffs: np.ndarray
    tail_ratio: float
    tail_scale: float

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, z):
        """Taylor polynomial of d at ``z``."""
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def exp_partial(self, z):
        """exp(-sum_{n<=N} t_n z^n / n), the truncated exponential form."""
        n = np.arange(1, len(self.traces) + 1)
        z = np.asarray(z, dtype=complex)
        return np.exp(-np.sum(self.traces * z[..., None] ** n / n, axis=-1))

    def tail_bound(self, r):
        """Estimated |d(z) - polynomial(z)| on |z| = r from the geometric tail model."""
        if self.tail_ratio == 0:
            return self.tail_scale
        x = self.tail_ratio * r
        if x >= 1:
            return np.inf
        N = self.degree
        return self.tail_scale * r ** (N + 1) * self.tail_ratio ** (N + 1) / (1 - x)


def determinant_coeffs(traces, N_tr=None):
    """Taylor coefficients of d(z) by the Newton recursion.

    ``c_0 = 1`` and ``c_m = -(1/m) sum_{n=1}^{m} t_n c_{m-n}``.
    """
    t = np.asarray(traces, dtype=float)
    N = len(t) if N_tr is None else N_tr
    if len(t) < N:
        raise ValueError(f"need {N} trace sums, got {len(t)}")
    t = t[:N]
    c = np.zeros(N + 1)
    c[0] = 1.0
    for m in range(1, N + 1):
        c[m] = -np.dot(t[:m], c[m - 1::-1][:m]) / m
    ratio, scale = _tail_model(t, c)
    return DeterminantSeries(t, c, ratio, scale)


def _tail_model(t, c):
    """Geometric model |c_m| <= scale * ratio^m for m > N.

    The ratio comes from the last three coefficient ratios when those are
    above the rounding floor; coefficients at the floor give a floor-sized
    tail; with too few coefficients the trace growth rate max |t_n|^(1/n)
    stands in for the ratio.
    """
    N = len(c) - 1
    if N == 0:
        return 0.0, 0.0
    floor = 64 * np.finfo(float).eps * max(np.max(np.abs(c)), 1.0) * N
    growth = float(np.max(np.abs(t) ** (1.0 / np.arange(1, len(t) + 1)))) if len(t) else 0.0
    last = np.abs(c[-3:]) if N >= 3 else np.array([])
    if N >= 3 and np.all(last <= floor):
        # converged to rounding: the tail is a rounding-level perturbation
        return 0.0, floor
    if N >= 3 and np.all(last > floor):
        ratio = float(np.max(last[1:] / last[:-1]))
        return ratio, float(abs(c[-1]) / ratio ** N) if ratio > 0 else 0.0
    ratio = max(growth, 1.0)
    return ratio, max(float(abs(c[-1])), 1.0) / ratio ** N


@dataclass(frozen=True)
class DeterminantZero:
    z: complex
    error: float
    ill_conditioned: bool = False


def zeros_in_disc(series, radius, safety=0.1):
    """Zeros of the Taylor polynomial inside ``|z| < radius (1 - safety)``.

    Each zero carries an error bar ``tail(|z|) / |P'(z)|`` plus a rounding
    term; zeros whose bars overlap are flagged as ill-conditioned.
    """
    c = np.array(series.coeffs, dtype=float)
    scale = np.max(np.abs(c))
    keep = np.nonzero(np.abs(c) > 1e-14 * scale)[0]
    top = keep[-1] if len(keep) else 0
    c = c[:top + 1]
    if top == 0:
        return []
    roots = np.polynomial.polynomial.polyroots(c).astype(complex)
    dP = np.polynomial.polynomial.polyder(series.coeffs)
    P = series.coeffs
    out = []
    limit = radius * (1 - safety)
    for z in roots:
        for _ in range(3):
            d = np.polynomial.polynomial.polyval(z, dP)
            if d == 0:
                break
            z = z - np.polynomial.polynomial.polyval(z, P) / d
        if abs(z) >= limit:
            continue
        deriv = abs(np.polynomial.polynomial.polyval(z, dP))
        rounding = 1e-14 * np.sum(np.abs(P) * abs(z) ** np.arange(len(P)))
        err = (series.tail_bound(abs(z)) + rounding) / deriv if deriv > 0 else np.inf
        out.append([complex(z), float(err)])
    out.sort(key=lambda e: (abs(e[0]), e[0].real, e[0].imag))
    flags = [False] * len(out)
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            if abs(out[i][0] - out[j][0]) < out[i][1] + out[j][1]:
                flags[i] = flags[j] = True
    return [DeterminantZero(z, e, f) for (z, e), f in zip(out, flags)]


@dataclass(frozen=True)
class ResonanceMatch:
    pairs: list
    mismatches: list
    unmatched: list


def resonance_match(zeros, eigs, radius, tol=1e-6):
    """Pair each zero z with the eigenvalue nearest to 1/z.

    Eigenvalues of modulus above ``1/radius`` that no zero claims are
    reported as unmatched.
    """
    values = np.asarray(getattr(eigs, "eigenvalues", eigs), dtype=complex)
    pairs, mismatches = [], []
    used = set()
    for zero in zeros:
        z = zero.z if isinstance(zero, DeterminantZero) else complex(zero)
        if not len(values):
            break
        j = int(np.argmin(np.abs(values - 1.0 / z)))
        gap = float(abs(values[j] - 1.0 / z))
        pairs.append((z, complex(values[j]), gap))
        used.add(j)
        if gap > tol:
            mismatches.append((z, complex(values[j]), gap))
    unmatched = [complex(v) for j, v in enumerate(values) if j not in used and abs(v) > 1.0 / radius]
    return ResonanceMatch(pairs, mismatches, unmatched)


def determinant_series(tmap, N_tr=10):
    traces = [trace_sum(tmap, n) for n in range(1, N_tr + 1)]
    return determinant_coeffs(traces, N_tr)
