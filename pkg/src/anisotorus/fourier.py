"""
Trigonometric polynomials on the torus and anisotropic Sobolev norms.

Functions are stored as Fourier coefficients on the box ``|k1|, |k2| <= N``
with the convention ``f(x) = sum_k c_k exp(2 pi i k.x)``.  The symbol

    a_{p,q}(xi, eta) = (1 + xi^2 + eta^2)^(p/2) (1 + xi^2)^(q/2)

is evaluated at ``xi = 2 pi e_s.k`` and ``eta = 2 pi e_s_perp.k`` where
``e_s`` is the stable direction of the global foliated chart.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi
ALIASING_TOL = 1e-8


class AliasingWarning(UserWarning):
    """The resolved spectrum of a resampled function has a significant tail."""


@dataclass(frozen=True)
class AnisoParams:
    p: float
    q: float
    t: float = 2.0
    stable_dir: tuple = (1.0, 0.0)

    def __post_init__(self):
        if not (1.0 < self.t < np.inf):
            raise ValueError(f"t must lie in (1, inf), got {self.t}")
        e = np.asarray(self.stable_dir, dtype=float)
        if e.shape != (2,) or abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise ValueError("stable_dir must be a unit 2-vector")
        object.__setattr__(self, "stable_dir", (float(e[0]), float(e[1])))

    @property
    def s(self):
        return self.p + self.q

    @classmethod
    def for_map(cls, tmap, p, q, t=2.0):
        """Parameters in the chart frame of ``tmap`` (stable direction of its base automorphism)."""
        return cls(p, q, t, tuple(tmap.base.stable_direction))

    @classmethod
    def from_ps(cls, tmap, p, s, t=2.0):
        return cls.for_map(tmap, p, s - p, t)

    def replace(self, **changes):
        kw = dict(p=self.p, q=self.q, t=self.t, stable_dir=self.stable_dir)
        kw.update(changes)
        return AnisoParams(**kw)


def box_wavevectors(N):
    """All k in the box, shape (2N+1, 2N+1, 2), indexed [k1+N, k2+N]."""
    r = np.arange(-N, N + 1)
    K1, K2 = np.meshgrid(r, r, indexing="ij")
    return np.stack([K1, K2], axis=-1)


def symbol_value(params, k):
    """a_{p,q} at wavevector(s) ``k`` (last axis of length 2)."""
    k = np.asarray(k, dtype=float)
    es = np.asarray(params.stable_dir)
    es_perp = np.array([-es[1], es[0]])
    xi = TWO_PI * (k @ es)
    eta = TWO_PI * (k @ es_perp)
    return (1.0 + xi * xi + eta * eta) ** (params.p / 2.0) * (1.0 + xi * xi) ** (params.q / 2.0)


def symbol_box(params, N):
    return symbol_value(params, box_wavevectors(N))


class TrigPoly:
    """Fourier coefficients on the box of half-width ``N``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] % 2 != 1:
            raise ValueError("coefficient array must be (2N+1, 2N+1)")
        c.setflags(write=False)
        self.coeffs = c

    @property
    def N(self):
        return (self.coeffs.shape[0] - 1) // 2

    @classmethod
    def zeros(cls, N):
        return cls(np.zeros((2 * N + 1, 2 * N + 1), dtype=complex))

    @classmethod
    def constant(cls, value, N=0):
        c = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
        c[N, N] = value
        return cls(c)

    @classmethod
    def mode(cls, k, N=None, value=1.0):
        """``value * exp(2 pi i k.x)`` on the smallest box holding ``k`` (or box ``N``)."""
        k1, k2 = int(k[0]), int(k[1])
        if N is None:
            N = max(abs(k1), abs(k2))
        if max(abs(k1), abs(k2)) > N:
            raise ValueError(f"mode {k} outside box N={N}")
        c = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
        c[k1 + N, k2 + N] = value
        return cls(c)

    @classmethod
    def from_grid(cls, values, N):
        """Coefficients of samples on the uniform grid ``x_j = j / G``."""
        poly, _ = _fit_grid(values, N)
        return poly

    @classmethod
    def from_function(cls, func, N, grid=None):
        G = grid or 2 * (2 * N + 1)
        x = np.arange(G) / G
        X, Y = np.meshgrid(x, x, indexing="ij")
        return cls.from_grid(func(np.stack([X, Y], axis=-1)), N)

    def resized(self, N):
        """Zero-pad or truncate to box ``N``."""
        M = self.N
        out = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
        m = min(M, N)
        out[N - m:N + m + 1, N - m:N + m + 1] = self.coeffs[M - m:M + m + 1, M - m:M + m + 1]
        return TrigPoly(out)

    def is_real(self, tol=1e-12):
        c = self.coeffs
        return bool(np.max(np.abs(c - np.conj(c[::-1, ::-1])), initial=0.0) <= tol * max(1.0, np.max(np.abs(c))))

    def to_grid(self, G):
        """Values on the uniform ``G x G`` grid ``x_j = j / G`` (G >= 2N+1)."""
        N = self.N
        if G < 2 * N + 1:
            raise ValueError(f"grid {G} cannot hold box N={N}")
        F = np.zeros((G, G), dtype=complex)
        idx = np.arange(-N, N + 1) % G
        F[np.ix_(idx, idx)] = self.coeffs
        return sfft.ifft2(F, norm="forward")

    def evaluate(self, w):
        """Direct mode summation at arbitrary points ``w`` of shape (..., 2)."""
        w = np.asarray(w, dtype=float)
        r = np.arange(-self.N, self.N + 1)
        E1 = np.exp(1j * TWO_PI * w[..., 0, None] * r)
        E2 = np.exp(1j * TWO_PI * w[..., 1, None] * r)
        return np.einsum("...a,ab,...b->...", E1, self.coeffs, E2)

    def __add__(self, other):
        N = max(self.N, other.N)
        return TrigPoly(self.resized(N).coeffs + other.resized(N).coeffs)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return TrigPoly(scalar * self.coeffs)

    __rmul__ = __mul__

    def __repr__(self):
        return f"TrigPoly(N={self.N})"


def _fit_grid(values, N, warn=True):
    """FFT grid samples, truncate to box N; returns (poly, relative tail).

    The tail is the l2 energy of resolved coefficients outside the box
    relative to the total.
    """
    values = np.asarray(values)
    G = values.shape[0]
    if G < 2 * N + 1:
        raise ValueError(f"grid {G} cannot resolve box N={N}")
    F = sfft.fft2(values, norm="forward")
    idx = np.arange(-N, N + 1) % G
    inner = F[np.ix_(idx, idx)]
    energy = np.abs(F) ** 2
    total = np.sum(energy)
    outside = np.ones(G, dtype=bool)
    outside[idx] = False
    # summed directly: total - kept would cancel to rounding level
    out = np.sum(energy[outside, :]) + np.sum(energy[np.ix_(~outside, outside)])
    tail = float(np.sqrt(out / total)) if total > 0 else 0.0
    if warn and tail > ALIASING_TOL:
        warnings.warn(f"spectral tail {tail:.2e} outside box N={N}", AliasingWarning, stacklevel=3)
    return TrigPoly(inner), tail


def apply_multiplier(f, params, direction="forward"):
    """Multiply coefficients by the symbol (``forward``) or its reciprocal (``inverse``)."""
    a = symbol_box(params, f.N)
    if direction == "forward":
        return TrigPoly(f.coeffs * a)
    if direction == "inverse":
        return TrigPoly(f.coeffs / a)
    raise ValueError(f"direction must be 'forward' or 'inverse', not {direction!r}")


def quadrature_grid(N, oversample=4):
    return max(oversample * N, 2 * N + 1, 4)


def aniso_norm(f, params, grid=None):
    """||f||_{p,q,t}: L^t norm of a^Op f on the unit torus, by quadrature."""
    if not (1.0 < params.t < np.inf):
        raise ValueError("t must lie in (1, inf)")
    g = np.abs(apply_multiplier(f, params).to_grid(grid or quadrature_grid(f.N)))
    top = np.max(g)
    if top == 0:
        return 0.0
    # scaled so that |g|^t cannot underflow or overflow
    return float(top * np.mean((g / top) ** params.t) ** (1.0 / params.t))


def parseval_norm(f, params):
    """The t = 2 norm computed on coefficients."""
    return float(np.sqrt(np.sum(np.abs(symbol_box(params, f.N) * f.coeffs) ** 2)))


def _resample(f, chart, N_out, oversample):
    G = sfft.next_fast_len(oversample * (2 * N_out + 1))
    x = np.arange(G) / G
    X, Y = np.meshgrid(x, x, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    return _fit_grid(f.evaluate(chart(pts)), N_out)[0]


def pullback(f, phi, N_out, oversample=2):
    """Coefficients of ``f o Phi^-1`` on box ``N_out``.

    This is the representation of ``f`` in the global foliated chart, so
    ``aniso_norm(pullback(f, phi, N), params)`` is the chart norm on the
    conjugated torus.
    """
    return _resample(f, phi.inverse, N_out, oversample)


def pushforward(f, phi, N_out, oversample=2):
    """Coefficients of ``f o Phi`` on box ``N_out``."""
    return _resample(f, phi.forward, N_out, oversample)


def random_trigpoly(N, rng, decay=3.0, real=True):
    """Random coefficients with envelope 1/(1+|k|^decay); Hermitian when ``real``."""
    K = box_wavevectors(N)
    env = 1.0 / (1.0 + np.linalg.norm(K, axis=-1) ** decay)
    c = (rng.standard_normal(env.shape) + 1j * rng.standard_normal(env.shape)) * env
    if real:
        c = 0.5 * (c + np.conj(c[::-1, ::-1]))
    return TrigPoly(c)
