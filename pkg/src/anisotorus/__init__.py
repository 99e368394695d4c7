"""Anisotropic Sobolev spaces and transfer operators for smooth Anosov maps of the 2-torus."""

__version__ = "0.1.0"

from .torus import ConjugacyDiffeo, SmoothToralMap, ToralAutomorphism  # noqa: E402
from .fourier import AnisoParams, TrigPoly, aniso_norm, symbol_value  # noqa: E402
from .transfer import L, M, L_t, M_t, OperatorKind, assemble_galerkin, spectrum  # noqa: E402
from .bounds import ExponentPair, rho_infty, rho_one  # noqa: E402
from .determinant import determinant_series, enumerate_periodic, trace_sum, zeros_in_disc  # noqa: E402
from .lasota_yorke import bound_comparison, norm_growth  # noqa: E402

__all__ = [
    "ConjugacyDiffeo", "SmoothToralMap", "ToralAutomorphism",
    "AnisoParams", "TrigPoly", "aniso_norm", "symbol_value",
    "L", "M", "L_t", "M_t", "OperatorKind", "assemble_galerkin", "spectrum",
    "ExponentPair", "rho_infty", "rho_one",
    "determinant_series", "enumerate_periodic", "trace_sum", "zeros_in_disc",
    "bound_comparison", "norm_growth",
]
