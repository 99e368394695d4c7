"""
Hyperbolic diffeomorphisms of the 2-torus with smooth foliations.

Two classes of maps are supported: linear automorphisms ``w -> M w mod 1``
and smooth conjugates ``T = Phi^-1 o A o Phi`` of such an automorphism by a
near-identity diffeomorphism ``Phi(w) = w + u(w)``.  Both invariant
foliations of a conjugate are images of straight lines under ``Phi^-1``, so
they are C-infinity by construction.

All point arguments are arrays of shape ``(..., 2)``; every method is
vectorized over the leading axes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi

# Φ⁻¹ fixed-point iteration controls
INVERSE_TOL = 1e-14
INVERSE_MAX_ITER = 200


class HyperbolicityWarning(UserWarning):
    """Issued when (rem0)-type contraction fails at a small iterate."""


class InverseIterationError(RuntimeError):
    """The fixed-point iteration for Phi^-1 did not converge."""


def reduce_mod1(w):
    """Reduce coordinates to [0, 1); values within 1e-15 of 1 map to 0."""
    r = np.mod(np.asarray(w, dtype=float), 1.0)
    r[r >= 1.0 - 1e-15] = 0.0
    return r


def midpoint_grid(size):
    """Midpoint-rule nodes of a ``size x size`` grid, shape (size*size, 2)."""
    x = (np.arange(size) + 0.5) / size
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=-1)


def _inv2(D):
    """Inverse of a stack of 2x2 matrices."""
    a, b = D[..., 0, 0], D[..., 0, 1]
    c, d = D[..., 1, 0], D[..., 1, 1]
    det = a * d - b * c
    out = np.empty_like(D)
    out[..., 0, 0] = d / det
    out[..., 0, 1] = -b / det
    out[..., 1, 0] = -c / det
    out[..., 1, 1] = a / det
    return out


def _det2(D):
    return D[..., 0, 0] * D[..., 1, 1] - D[..., 0, 1] * D[..., 1, 0]


def _matvec(D, v):
    return np.einsum("...ij,...j->...i", D, v)


def _normalize(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class ToralAutomorphism:
    """A hyperbolic element of GL(2, Z) acting on the torus."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=np.int64)
        if M.shape != (2, 2):
            raise ValueError("toral automorphism must be a 2x2 integer matrix")
        if not np.array_equal(M, np.asarray(self.matrix)):
            raise ValueError("matrix entries must be integers")
        det = int(round(np.linalg.det(M)))
        if abs(det) != 1:
            raise ValueError(f"|det M| must be 1, got {det}")
        if abs(int(np.trace(M))) <= 2:
            raise ValueError("|trace M| must exceed 2 for hyperbolicity")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def det(self):
        M = self.matrix
        return int(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])

    @cached_property
    def eigenvalues(self):
        """(unstable, stable) eigenvalues, real with |unstable| > 1."""
        tr = float(np.trace(self.matrix))
        disc = np.sqrt(tr * tr - 4.0 * self.det)
        mu1, mu2 = (tr + disc) / 2.0, (tr - disc) / 2.0
        if abs(mu1) > abs(mu2):
            return mu1, mu2
        return mu2, mu1

    def _eigvec(self, mu):
        a, b = self.matrix[0]
        # b != 0 for any hyperbolic element of GL(2, Z)
        v = np.array([float(b), mu - a])
        v /= np.linalg.norm(v)
        return v if v[0] > 0 else -v

    @cached_property
    def unstable_direction(self):
        return self._eigvec(self.eigenvalues[0])

    @cached_property
    def stable_direction(self):
        return self._eigvec(self.eigenvalues[1])

    def power(self, n):
        """Integer matrix M**n for any signed n."""
        M = self.matrix
        if n < 0:
            a, b = M[0]
            c, d = M[1]
            M = self.det * np.array([[d, -b], [-c, a]], dtype=np.int64)
            n = -n
        return np.linalg.matrix_power(M, n)

    def inverse(self):
        return ToralAutomorphism(self.power(-1))


@dataclass(frozen=True)
class ConjugacyDiffeo:
    """Near-identity diffeomorphism ``Phi(w) = w + u(w) mod 1``.

    ``u`` is a real trigonometric polynomial given by integer wavevectors
    ``wavevectors`` (shape (m, 2)) and complex coefficients ``coeffs``
    (shape (m, 2), one column per displacement component).  The coefficient
    set must be Hermitian-symmetric so that ``u`` is real.
    """

    wavevectors: np.ndarray
    coeffs: np.ndarray
    kappa_max: float = 0.5
    validation_grid: int = 64

    def __post_init__(self):
        ks = np.asarray(self.wavevectors, dtype=np.int64).reshape(-1, 2)
        cs = np.asarray(self.coeffs, dtype=complex).reshape(-1, 2)
        if len(ks) != len(cs):
            raise ValueError("one coefficient pair per wavevector is required")
        if len({tuple(k) for k in ks}) != len(ks):
            raise ValueError("duplicate wavevectors in displacement")
        lookup = {tuple(k): c for k, c in zip(ks, cs)}
        for k, c in lookup.items():
            partner = lookup.get((-k[0], -k[1]))
            if partner is None or not np.allclose(partner, np.conj(c), rtol=0, atol=1e-15):
                raise ValueError(f"displacement is not real: coefficient at {k} has no conjugate partner")
        ks.setflags(write=False)
        cs.setflags(write=False)
        object.__setattr__(self, "wavevectors", ks)
        object.__setattr__(self, "coeffs", cs)
        if not self.is_zero:
            kappa = self.max_derivative_norm()
            if kappa > self.kappa_max:
                raise ValueError(
                    f"sup |Du| = {kappa:.4f} exceeds kappa_max = {self.kappa_max}; Phi may fail to be a diffeomorphism"
                )

    @classmethod
    def zero(cls):
        return cls(np.zeros((0, 2), dtype=np.int64), np.zeros((0, 2), dtype=complex))

    @classmethod
    def from_sines(cls, terms, **kwargs):
        """Build from ``(component, (k1, k2), amplitude)`` triples.

        Each triple adds ``amplitude * sin(2 pi k.w)`` to displacement
        component ``component`` (0 or 1).
        """
        acc = {}
        for comp, k, amp in terms:
            k = (int(k[0]), int(k[1]))
            if k == (0, 0):
                raise ValueError("sin of the zero mode vanishes")
            for kk, c in ((k, -0.5j * amp), ((-k[0], -k[1]), 0.5j * amp)):
                acc.setdefault(kk, np.zeros(2, dtype=complex))[comp] += c
        ks = sorted(acc)
        return cls(np.array(ks, dtype=np.int64).reshape(-1, 2),
                   np.array([acc[k] for k in ks]).reshape(-1, 2), **kwargs)

    @classmethod
    def shear(cls, amplitude, mode=1, **kwargs):
        """Area-preserving shear ``(x, y) -> (x + a sin(2 pi m y), y)``."""
        return cls.from_sines([(0, (0, mode), amplitude)], **kwargs)

    @property
    def is_zero(self):
        return len(self.coeffs) == 0 or not np.any(self.coeffs)

    def scaled(self, eps):
        return ConjugacyDiffeo(self.wavevectors, eps * self.coeffs, self.kappa_max, self.validation_grid)

    def _modes(self, w):
        w = np.asarray(w, dtype=float)
        return np.exp(1j * TWO_PI * (w @ self.wavevectors.T.astype(float)))

    def displacement(self, w):
        """u(w), shape (..., 2)."""
        w = np.asarray(w, dtype=float)
        if self.is_zero:
            return np.zeros_like(w)
        return np.real(self._modes(w) @ self.coeffs)

    def jacobian(self, w):
        """D Phi(w) = I + Du(w), shape (..., 2, 2)."""
        w = np.asarray(w, dtype=float)
        J = np.broadcast_to(np.eye(2), w.shape[:-1] + (2, 2)).copy()
        if self.is_zero:
            return J
        E = self._modes(w)
        # du_j/dw_l = Re sum_k c_kj 2 pi i k_l e_k
        dk = 1j * TWO_PI * self.coeffs[:, :, None] * self.wavevectors[:, None, :]
        J += np.real(np.einsum("...m,mjl->...jl", E, dk))
        return J

    def forward(self, w):
        return reduce_mod1(np.asarray(w, dtype=float) + self.displacement(w))

    def inverse(self, z, tol=INVERSE_TOL, max_iter=INVERSE_MAX_ITER):
        """Phi^-1(z) by the contraction w <- z - u(w)."""
        z = np.asarray(z, dtype=float)
        if self.is_zero:
            return reduce_mod1(z)
        w = z.copy()
        for _ in range(max_iter):
            w_new = z - self.displacement(w)
            step = np.max(np.abs(w_new - w)) if w.size else 0.0
            w = w_new
            if step <= tol:
                break
        else:
            raise InverseIterationError(
                f"Phi^-1 iteration did not reach {tol:g} in {max_iter} steps (last step {step:.3g})"
            )
        return reduce_mod1(w)

    def max_derivative_norm(self, grid=None):
        """sup over a validation grid of the spectral norm of Du."""
        pts = midpoint_grid(grid or self.validation_grid)
        Du = self.jacobian(pts) - np.eye(2)
        return float(np.max(np.linalg.norm(Du, ord=2, axis=(-2, -1))))

    def sup_norm(self, grid=None):
        """sup |u| over a validation grid."""
        pts = midpoint_grid(grid or self.validation_grid)
        return float(np.max(np.linalg.norm(self.displacement(pts), axis=-1)))

    def is_area_preserving(self, grid=None, tol=1e-12):
        pts = midpoint_grid(grid or self.validation_grid)
        return bool(np.max(np.abs(_det2(self.jacobian(pts)) - 1.0)) < tol)


@dataclass(frozen=True)
class DifferentialBlocks:
    """D_w T^n in foliation-adapted coordinates.

    The chart basis at a point ``z`` is ``(e_s(z), c)`` with ``e_s`` the
    unit stable direction and ``c`` the (constant) unstable eigendirection
    of the base automorphism.  In these bases the differential is upper
    triangular ``[[A, B], [0, D]]``.
    """

    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    lower_left: np.ndarray
    basis_det_ratio: np.ndarray
    nu: np.ndarray
    lam: np.ndarray

    @property
    def rem_ratio(self):
        """|B v| / |D v| for unit v in the transversal direction."""
        return np.abs(self.B) / np.abs(self.D)

    @property
    def rem0_ok(self):
        """|A| <= sup nu < 1 and |D^-1| <= sup lambda^-1 < 1 over the sample."""
        nu_sup = np.max(self.nu)
        lam_inv_sup = np.max(1.0 / self.lam)
        a_ok = np.all(np.abs(self.A) <= nu_sup * (1 + 1e-12)) and nu_sup < 1
        d_ok = np.all(1.0 / np.abs(self.D) < 1.0) and lam_inv_sup < 1
        return bool(a_ok and d_ok)


@dataclass(frozen=True)
class SmoothToralMap:
    """A linear automorphism or a smooth conjugate ``Phi^-1 o A o Phi``."""

    base: ToralAutomorphism
    conjugacy: ConjugacyDiffeo | None = field(default=None)

    @classmethod
    def linear(cls, matrix):
        return cls(ToralAutomorphism(matrix))

    @classmethod
    def conjugated(cls, matrix, conjugacy):
        base = matrix if isinstance(matrix, ToralAutomorphism) else ToralAutomorphism(matrix)
        return cls(base, conjugacy)

    @property
    def _phi(self):
        # a zero displacement is the identity chart and takes the linear code path
        c = self.conjugacy
        return None if c is None or c.is_zero else c

    @property
    def is_linear(self):
        return self._phi is None

    def is_volume_preserving(self):
        return self.is_linear or self._phi.is_area_preserving()

    def inverse(self):
        return SmoothToralMap(self.base.inverse(), self.conjugacy)

    def evaluate(self, w, n=1):
        """T^n(w) reduced to [0, 1)."""
        w = np.asarray(w, dtype=float)
        An = self.base.power(n).astype(float)
        phi = self._phi
        if phi is None:
            return reduce_mod1(_matvec(An, w))
        return phi.inverse(reduce_mod1(_matvec(An, phi.forward(w))))

    def differential(self, w, n=1):
        """D_w T^n, shape (..., 2, 2).

        Exactly ``M**n`` for linear maps; for conjugates the chain rule
        telescopes to ``D Phi(T^n w)^-1 A^n D Phi(w)``.
        """
        w = np.asarray(w, dtype=float)
        An = self.base.power(n).astype(float)
        phi = self._phi
        if phi is None:
            return np.broadcast_to(An, w.shape[:-1] + (2, 2)).copy()
        Tw = self.evaluate(w, n)
        return _inv2(phi.jacobian(Tw)) @ An @ phi.jacobian(w)

    def det_jacobian(self, w, n=1):
        """|det D_w T^n|."""
        w = np.asarray(w, dtype=float)
        phi = self._phi
        if phi is None:
            return np.ones(w.shape[:-1])
        Tw = self.evaluate(w, n)
        return np.abs(_det2(phi.jacobian(w)) / _det2(phi.jacobian(Tw)))

    def foliation_directions(self, w):
        """Unit (stable, unstable) vectors at ``w``, each shape (..., 2)."""
        w = np.asarray(w, dtype=float)
        es, eu = self.base.stable_direction, self.base.unstable_direction
        phi = self._phi
        shape = w.shape[:-1] + (2,)
        if phi is None:
            return np.broadcast_to(es, shape).copy(), np.broadcast_to(eu, shape).copy()
        Jinv = _inv2(phi.jacobian(w))
        return _normalize(_matvec(Jinv, es)), _normalize(_matvec(Jinv, eu))

    def local_data(self, w, n=1):
        """One-pass local data of T^n at ``w``.

        Returns a dict with the image ``Tw``, differential ``Dn``, unit
        foliation vectors at both ends, the exponents ``lam``/``nu``,
        ``det`` (= |det Dn|) and ``det_u`` (= |Dn v_u(w)|).
        """
        w = np.asarray(w, dtype=float)
        Tw = self.evaluate(w, n)
        An = self.base.power(n).astype(float)
        phi = self._phi
        shape = w.shape[:-1]
        if phi is None:
            mu_u, mu_s = self.base.eigenvalues
            lam = np.full(shape, abs(mu_u) ** n)
            nu = np.full(shape, abs(mu_s) ** n)
            Dn = np.broadcast_to(An, shape + (2, 2))
            es, eu = self.foliation_directions(w)
            return {"Tw": Tw, "Dn": Dn, "es": es, "eu": eu, "es_end": es, "eu_end": eu,
                    "lam": lam, "nu": nu, "det": np.ones(shape), "det_u": lam}
        J0, J1 = phi.jacobian(w), phi.jacobian(Tw)
        J0inv, J1inv = _inv2(J0), _inv2(J1)
        Dn = J1inv @ An @ J0
        base_s, base_u = self.base.stable_direction, self.base.unstable_direction
        es, eu = _normalize(_matvec(J0inv, base_s)), _normalize(_matvec(J0inv, base_u))
        es_end, eu_end = _normalize(_matvec(J1inv, base_s)), _normalize(_matvec(J1inv, base_u))
        nu = np.linalg.norm(_matvec(Dn, es), axis=-1)
        lam = 1.0 / np.linalg.norm(_matvec(_inv2(Dn), eu_end), axis=-1)
        det = np.abs(_det2(J0) / _det2(J1))
        det_u = np.linalg.norm(_matvec(Dn, eu), axis=-1)
        return {"Tw": Tw, "Dn": Dn, "es": es, "eu": eu, "es_end": es_end, "eu_end": eu_end,
                "lam": lam, "nu": nu, "det": det, "det_u": det_u}

    def local_exponents(self, w, n=1, check=False):
        """(lambda_w(T^n), nu_w(T^n)).

        ``nu = |D_w T^n v_s(w)|`` and ``1/lambda = |D_{T^n w} T^-n v_u(T^n w)|``;
        both bundles are one-dimensional so the suprema are attained on a
        single unit vector.
        """
        d = self.local_data(w, n)
        lam, nu = d["lam"], d["nu"]
        if check and (np.any(nu >= 1) or np.any(lam <= 1)):
            warnings.warn(f"contraction fails at n={n}: max nu={np.max(nu):.4f}, min lambda={np.min(lam):.4f}",
                          HyperbolicityWarning, stacklevel=2)
        return lam, nu

    def block_decomposition(self, w, n=1):
        d = self.local_data(w, n)
        c = self.base.unstable_direction

        def basis(es):
            P = np.empty(es.shape[:-1] + (2, 2))
            P[..., :, 0] = es
            P[..., :, 1] = c
            return P

        P0, P1 = basis(d["es"]), basis(d["es_end"])
        det0, det1 = _det2(P0), _det2(P1)
        if np.any(np.abs(det0) < 1e-12) or np.any(np.abs(det1) < 1e-12):
            raise ValueError("degenerate chart basis: stable direction parallel to the transversal")
        Bk = _inv2(P1) @ d["Dn"] @ P0
        return DifferentialBlocks(
            A=Bk[..., 0, 0], B=Bk[..., 0, 1], D=Bk[..., 1, 1], lower_left=Bk[..., 1, 0],
            basis_det_ratio=det1 / det0, nu=d["nu"], lam=d["lam"],
        )

    def rem0_onset(self, grid=32, n_max=30):
        """Smallest n with max nu < 1 and min lambda > 1 on a grid (None if not reached)."""
        pts = midpoint_grid(grid)
        for n in range(1, n_max + 1):
            lam, nu = self.local_exponents(pts, n)
            if np.max(nu) < 1 and np.min(lam) > 1:
                return n
        return None
