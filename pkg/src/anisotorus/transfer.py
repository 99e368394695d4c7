"""
Fourier-Galerkin finite sections of the transfer operators.

For a map ``T`` the pointwise form of each operator is
``(Op phi)(x) = weight(x) * phi(S(x))`` with

    L      S = T       weight = 1
    L_t    S = T       weight = |det DT(x)|^(1/t)
    M      S = T^-1    weight = |det DT^-1(x)|
    M_t    S = T^-1    weight = |det DT^-1(x)|^(1 - 1/t)

(``|det DT| o T^-1 = 1 / |det DT^-1|`` gives the last two rows.)  The
Galerkin matrix is the symbol-conjugated operator ``a^Op Op (a^Op)^-1``
truncated to the box: ``G[j, k] = a(j) <Op e_k, e_j> / a(k)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .fourier import ALIASING_TOL, AliasingWarning, AnisoParams, TrigPoly, _fit_grid, box_wavevectors, symbol_box
from .torus import midpoint_grid

TWO_PI = 2.0 * np.pi
MAX_N = 48
_KIND_IDS = {"L": 0, "M": 1, "L_t": 2, "M_t": 3}


class MemoryBudgetError(RuntimeError):
    """Requested truncation exceeds the dense-matrix budget."""


class AliasingError(RuntimeError):
    """Aliasing stayed above tolerance after enlarging the grid."""


@dataclass(frozen=True)
class OperatorKind:
    name: str
    t: float | None = None

    def __post_init__(self):
        if self.name not in _KIND_IDS:
            raise ValueError(f"unknown operator kind {self.name!r}")
        weighted = self.name in ("L_t", "M_t")
        if weighted and (self.t is None or not 1.0 < self.t < np.inf):
            raise ValueError(f"{self.name} needs t in (1, inf)")
        if not weighted and self.t is not None:
            raise ValueError(f"{self.name} takes no t")

    @property
    def uses_inverse(self):
        return self.name in ("M", "M_t")

    @property
    def id(self):
        return _KIND_IDS[self.name]

    def __str__(self):
        return self.name if self.t is None else f"{self.name}({self.t:g})"


L = OperatorKind("L")
M = OperatorKind("M")


def L_t(t):
    return OperatorKind("L_t", t)


def M_t(t):
    return OperatorKind("M_t", t)


def pointwise_form(kind, tmap, pts):
    """(S(x), weight(x)) at grid points ``pts``."""
    n = -1 if kind.uses_inverse else 1
    S = tmap.evaluate(pts, n)
    if kind.name == "L":
        weight = None
    elif kind.name == "L_t":
        weight = tmap.det_jacobian(pts, 1) ** (1.0 / kind.t)
    elif kind.name == "M":
        weight = tmap.det_jacobian(pts, -1)
    else:
        weight = tmap.det_jacobian(pts, -1) ** (1.0 - 1.0 / kind.t)
    if weight is not None and tmap.is_linear:
        weight = None
    return S, weight


def _stretch(kind, tmap):
    """Max column sum of DS over a probe grid: bounds |DS^T k|_inf / |k|_inf."""
    pts = midpoint_grid(32)
    DS = tmap.differential(pts, -1 if kind.uses_inverse else 1)
    return float(np.max(np.sum(np.abs(DS), axis=-2)))


def spectral_extent(kind, tmap, N, floor=1e-13):
    """Largest |j|_inf carrying relative amplitude above ``floor`` in the images of the box modes.

    For L and M of a linear map the image of e_k is the single mode
    ``A^T k`` and the bound ``stretch * N`` is exact.  Otherwise a few
    extreme columns (the box corners and edge midpoints) are transformed on
    a generous probe grid and their measured extent is returned.
    """
    stretch = _stretch(kind, tmap)
    if tmap.is_linear:
        return int(np.ceil(stretch * N - 1e-9))
    G = sfft.next_fast_len(int(4 * (stretch * N + 16)))
    pts = _uniform_points(G)
    S, weight = pointwise_form(kind, tmap, pts)
    freq = np.abs(sfft.fftfreq(G, 1.0 / G))
    extent = 0
    for k in ((N, N), (N, -N), (N, 0), (0, N)):
        vals = np.exp(1j * TWO_PI * (S @ np.array(k, dtype=float)))
        if weight is not None:
            vals = vals * weight
        F = np.abs(sfft.fft2(vals, norm="forward"))
        big = F > floor * np.max(F)
        j = np.maximum(freq[:, None], freq[None, :])[big]
        extent = max(extent, int(np.max(j)))
    return extent


def bandwidth_grid(kind, tmap, N_in, N_out, margin=1.15):
    """FFT grid size resolving ``Op e_k`` for |k| <= N_in and rows |j| <= N_out.

    The grid keeps the measured spectral extent below ``3G/8`` (with a
    safety ``margin``), so the outer band used as the aliasing monitor is
    empty up to rounding.
    """
    extent = spectral_extent(kind, tmap, N_in)
    G = max(int(np.ceil(8.0 / 3.0 * margin * extent)), 2 * (2 * N_out + 1) + 2)
    return sfft.next_fast_len(G)


def _uniform_points(G):
    x = np.arange(G) / G
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.stack([X, Y], axis=-1)


def apply_operator(kind, tmap, f, grid_size=None, N_out=None, return_tail=False):
    """Op f as a TrigPoly on box ``N_out`` (default ``f.N``).

    ``f`` is evaluated at the mapped grid points by direct mode summation,
    weighted, and transformed back.
    """
    N_out = f.N if N_out is None else N_out
    G = grid_size or bandwidth_grid(kind, tmap, f.N, N_out)
    if G < 2 * (2 * N_out + 1):
        raise ValueError(f"grid_size {G} below 2(2N+1) = {2 * (2 * N_out + 1)}")
    pts = _uniform_points(G)
    S, weight = pointwise_form(kind, tmap, pts)
    vals = f.evaluate(S)
    if weight is not None:
        vals = vals * weight
    out, tail = _fit_grid(vals, N_out, warn=False)
    if tail > ALIASING_TOL and not return_tail:
        warnings.warn(f"resolved tail {tail:.2e} outside box N={N_out}", AliasingWarning, stacklevel=2)
    return (out, tail) if return_tail else out


@dataclass(frozen=True, eq=False)
class GalerkinMatrix:
    matrix: np.ndarray
    N: int
    kind: OperatorKind
    params: AnisoParams
    tmap: object = field(repr=False)
    grid: int | None = None
    max_tail: float = 0.0

    @property
    def wavevectors(self):
        """Flat wavevector list matching row/column order."""
        return box_wavevectors(self.N).reshape(-1, 2)

    @property
    def spectral(self):
        return self.params.t == 2.0


def _check_budget(N, max_N):
    if N > max_N:
        raise MemoryBudgetError(f"N={N} exceeds the dense budget N <= {max_N} ({(2 * N + 1) ** 4} entries)")


def _raw_columns(kind, tmap, N, G, batch):
    """Unweighted finite section <Op e_k, e_j> by FFT; returns (matrix, max tail)."""
    n = 2 * N + 1
    pts = _uniform_points(G).reshape(-1, 2)
    S, weight = pointwise_form(kind, tmap, pts)
    r = np.arange(-N, N + 1)
    E1 = np.exp(1j * TWO_PI * np.outer(S[:, 0], r))
    E2 = np.exp(1j * TWO_PI * np.outer(S[:, 1], r))
    if weight is not None:
        E1 = E1 * weight[:, None]
    idx = r % G
    m = n * n
    out = np.empty((m, m), dtype=complex)
    max_tail = 0.0
    # S and the weight are real, so column -k is the conjugate of column k with rows
    # reflected; only the first half (through k = 0) is transformed
    cols = [(a, b) for a in range(n) for b in range(n)][:(m + 1) // 2]
    for start in range(0, len(cols), batch):
        chunk = cols[start:start + batch]
        a = np.fromiter((c[0] for c in chunk), dtype=int)
        b = np.fromiter((c[1] for c in chunk), dtype=int)
        vals = (E1[:, a] * E2[:, b]).T.reshape(len(chunk), G, G)
        F = sfft.fft2(vals, norm="forward", overwrite_x=True)
        inner = F[:, idx][:, :, idx]
        total = np.sum(np.abs(F) ** 2, axis=(1, 2))
        # content beyond the box is legitimate; aliasing originates in the outer band of the grid
        band = _outer_band(F, G)
        max_tail = max(max_tail, float(np.max(np.sqrt(band / total))))
        out[:, start:start + len(chunk)] = inner.reshape(len(chunk), -1).T
    half = (m + 1) // 2
    out[:, half:] = np.conj(out[::-1, :m - half][:, ::-1])
    return out, max_tail


def _outer_band(F, G):
    """Energy in frequencies with |j|_inf > 3G/8, where aliasing would originate."""
    freq = np.abs(sfft.fftfreq(G, 1.0 / G))
    outer = freq > 3 * G / 8
    mask = outer[:, None] | outer[None, :]
    return np.sum(np.abs(F[:, mask]) ** 2, axis=1)


def closed_form_linear(tmap, params, N, kind=L):
    """Weighted permutation matrix of L (or M = L for T^-1) for a linear map.

    Column k holds ``a(M^T k) / a(k)`` at row ``M^T k`` when that lies in the box.
    """
    if not tmap.is_linear or kind.name not in ("L", "M"):
        raise ValueError("closed form exists for L and M of linear maps only")
    A = tmap.base.power(-1 if kind.uses_inverse else 1)
    n = 2 * N + 1
    K = box_wavevectors(N).reshape(-1, 2)
    img = K @ A  # row k -> (A^T k)^T
    inside = np.all(np.abs(img) <= N, axis=1)
    rows = (img[inside, 0] + N) * n + (img[inside, 1] + N)
    cols = np.nonzero(inside)[0]
    a = symbol_box(params, N).ravel()
    out = np.zeros((n * n, n * n), dtype=complex)
    out[rows, cols] = a[rows] / a[cols]
    return out


def assemble_galerkin(kind, tmap, params, N, method="auto", grid=None, max_N=MAX_N, batch=64):
    """Finite section of ``a^Op Op (a^Op)^-1`` on box ``N``.

    ``method='closed'`` (the default for L/M of linear maps) writes the
    weighted permutation directly; ``'fft'`` samples every basis image on a
    bandwidth-sized grid.  Aliasing above tolerance triggers one retry on a
    doubled grid, then :class:`AliasingError`.
    """
    _check_budget(N, max_N)
    if method == "auto":
        method = "closed" if tmap.is_linear and kind.name in ("L", "M") else "fft"
    if method == "closed":
        return GalerkinMatrix(closed_form_linear(tmap, params, N, kind), N, kind, params, tmap)
    G = grid or bandwidth_grid(kind, tmap, N, N)
    raw, tail = _raw_columns(kind, tmap, N, G, batch)
    if tail > ALIASING_TOL:
        G = sfft.next_fast_len(2 * G)
        raw, tail = _raw_columns(kind, tmap, N, G, batch)
        if tail > ALIASING_TOL:
            raise AliasingError(f"outer-band energy {tail:.2e} on grid {G}")
    a = symbol_box(params, N).ravel()
    raw *= a[:, None]
    raw /= a[None, :]
    return GalerkinMatrix(raw, N, kind, params, tmap, G, tail)


def _to_real_basis(A):
    """Unitary change to the cos/sin basis; returns the (complex) transformed matrix.

    Rows/columns are ordered [k=0, cos(k) for k < 0 half, sin(k) ...] using
    the flat index symmetry ``index(-k) = n - 1 - index(k)``.
    """
    n = A.shape[0]
    c = (n - 1) // 2
    h = 1.0 / np.sqrt(2.0)
    P, Nn = A[:c], A[::-1][:c]
    R = np.concatenate([A[c:c + 1], (P + Nn) * h, 1j * (P - Nn) * h], axis=0)
    P, Nn = R[:, :c], R[:, ::-1][:, :c]
    return np.concatenate([R[:, c:c + 1], (P + Nn) * h, -1j * (P - Nn) * h], axis=1)


def _from_real_basis_vectors(V):
    """Map eigenvectors from the cos/sin basis back to Fourier coefficients."""
    n = V.shape[0]
    c = (n - 1) // 2
    h = 1.0 / np.sqrt(2.0)
    zero, cos, sin = V[:1], V[1:c + 1], V[c + 1:]
    pos = (cos - 1j * sin) * h
    neg = (cos + 1j * sin) * h
    return np.concatenate([pos, zero, neg[::-1]], axis=0)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    real_form: bool

    @property
    def moduli(self):
        return np.abs(self.eigenvalues)

    def __len__(self):
        return len(self.eigenvalues)


def spectrum(gm, n_residual=4, full_vectors_below=1500):
    """Eigenvalues of the finite section, sorted by descending modulus.

    Matrices of real maps are conjugate-symmetric in the Fourier basis and
    become real in the cos/sin basis, which makes the dense solve about four
    times cheaper.  Residuals ``|Av - lambda v| / |v|`` are computed for all
    eigenvalues when the matrix is small, otherwise for the leading
    ``n_residual`` by two steps of inverse iteration.
    """
    if isinstance(gm, GalerkinMatrix):
        if not gm.spectral:
            raise ValueError("spectral interpretation requires t = 2")
        A = gm.matrix
    else:
        A = np.asarray(gm)
    R = _to_real_basis(A)
    scale = max(np.max(np.abs(R)), 1.0)
    real_form = bool(np.max(np.abs(R.imag)) <= 1e-12 * scale)
    W = np.ascontiguousarray(R.real) if real_form else R
    n = W.shape[0]
    try:
        if n <= full_vectors_below:
            w, V = sla.eig(W, check_finite=False)
            res = np.linalg.norm(W @ V - V * w, axis=0) / np.linalg.norm(V, axis=0)
        else:
            w = sla.eigvals(W, check_finite=False)
            res = np.full(n, np.nan)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigensolver failed; cond estimate {np.linalg.cond(W):.3g}") from exc
    order = np.argsort(-np.abs(w), kind="stable")
    w, res = w[order], res[order]
    if n > full_vectors_below:
        for i in range(min(n_residual, n)):
            res[i] = _inverse_iteration_residual(W, w[i])
    return Spectrum(w, res, real_form)


def _inverse_iteration_residual(W, lam):
    n = W.shape[0]
    shift = lam + 1e-10 * max(abs(lam), 1.0)
    x = np.random.default_rng(0).standard_normal(n)
    lu = sla.lu_factor(W - shift * np.eye(n), check_finite=False)
    for _ in range(2):
        x = sla.lu_solve(lu, x, check_finite=False)
        x = x / np.linalg.norm(x)
    return float(np.linalg.norm(W @ x - lam * x))


def eigenpairs(gm):
    """Eigenvalues with right and left eigenvectors in the Fourier basis (small matrices)."""
    A = gm.matrix if isinstance(gm, GalerkinMatrix) else np.asarray(gm)
    R = _to_real_basis(A)
    real = np.max(np.abs(R.imag)) <= 1e-12 * max(np.max(np.abs(R)), 1.0)
    w, VL, VR = sla.eig(R.real if real else R, left=True, right=True)
    order = np.argsort(-np.abs(w), kind="stable")
    return w[order], _from_real_basis_vectors(VR[:, order]), _from_real_basis_vectors(VL[:, order])


@dataclass(frozen=True)
class RadiusCheck:
    threshold: float
    outliers: np.ndarray
    outlier_residuals: np.ndarray
    refined_matches: np.ndarray
    modulus_changes: np.ndarray
    margin: float
    passed: bool

    def summary(self):
        lines = [f"threshold {self.threshold:.6f}, {len(self.outliers)} outlier(s): {'PASS' if self.passed else 'FAIL'}"]
        for z, dz in zip(self.outliers, self.modulus_changes):
            lines.append(f"  {z.real:+.10f}{z.imag:+.10f}i  |d|lambda||={dz:.2e}")
        return "\n".join(lines)


def essential_radius_check(eigs, bound, margin, refined_eigs):
    """Outliers beyond ``bound + margin`` must persist under refinement.

    ``bound`` is a float or a report with a ``limit``; ``eigs`` and
    ``refined_eigs`` are Spectrum objects or eigenvalue arrays at N and N+8.
    PASS iff every outlier has a refined counterpart whose modulus differs
    by less than ``margin / 4``.
    """
    bound = float(getattr(bound, "limit", bound))
    values = getattr(eigs, "eigenvalues", np.asarray(eigs))
    residuals = getattr(eigs, "residuals", np.full(len(values), np.nan))
    refined = getattr(refined_eigs, "eigenvalues", np.asarray(refined_eigs))
    threshold = bound + margin
    mask = np.abs(values) > threshold
    outliers = values[mask]
    matches = np.empty(len(outliers), dtype=complex)
    changes = np.empty(len(outliers))
    for i, z in enumerate(outliers):
        j = int(np.argmin(np.abs(refined - z)))
        matches[i] = refined[j]
        changes[i] = abs(abs(refined[j]) - abs(z))
    passed = bool(np.all(changes < margin / 4.0))
    return RadiusCheck(threshold, outliers, residuals[mask], matches, changes, margin, passed)


def orbit_escape_lengths(matrix, N):
    """Longest in-box chain k, A^T k, ... for every k != 0; None where a cycle is found.

    Used to certify that the truncated weighted permutation of a linear map
    is nilpotent off the constant mode.
    """
    A = np.asarray(matrix, dtype=np.int64)
    K = box_wavevectors(N).reshape(-1, 2)
    limit = (2 * N + 1) ** 2
    lengths = {}
    for k in map(tuple, K):
        if k == (0, 0):
            continue
        seen = {k}
        cur = np.array(k)
        steps = 0
        while True:
            cur = cur @ A
            if np.max(np.abs(cur)) > N:
                break
            steps += 1
            key = tuple(cur)
            if key in seen or steps > limit:
                steps = None
                break
            seen.add(key)
        lengths[k] = steps
    return lengths
