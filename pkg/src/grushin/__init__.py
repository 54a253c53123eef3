"""Cut loci of Grushin spaces ``G^{n+1}_alpha`` from closed-form geodesics."""
from __future__ import annotations

__version__ = "0.1.0"

from .gentrig import (DomainError, TrigParams, eta, gangle, garcsin, gcos, gcot, grushin_params,
                      gsin, gsincos, gtan, half_period, pi_alpha, rho)
from .geoflow import (GeodesicPath, MultiIndex, conserved_R, covector_to_spherical, embed,
                      eval_geodesic, hamiltonian, is_riemannian, make_index,
                      normalize_covector, spherical_to_covector)
from .jacobian import det_cartesian_3d, det_fd, det_spherical, first_conjugate_time, tan_roots
from .synthesis import (CutLocus, CutReport, LocusPolyline, PointType, classify_point,
                        cut_locus_3d, cut_report, fiber_radius, t_star, t_star_star, tau_j)
from .oracle import CutEstimate, brute_cut_time, integrate_hamilton

__all__ = [
    "__version__",
    "DomainError", "TrigParams", "grushin_params", "half_period", "pi_alpha",
    "gsin", "gcos", "gsincos", "gtan", "gcot", "eta", "rho", "garcsin", "gangle",
    "MultiIndex", "GeodesicPath", "make_index", "hamiltonian", "conserved_R",
    "normalize_covector", "is_riemannian", "spherical_to_covector", "covector_to_spherical",
    "eval_geodesic", "embed",
    "det_spherical", "det_fd", "det_cartesian_3d", "first_conjugate_time", "tan_roots",
    "CutReport", "cut_report", "tau_j", "PointType", "classify_point", "fiber_radius",
    "LocusPolyline", "CutLocus", "cut_locus_3d", "t_star", "t_star_star",
    "CutEstimate", "brute_cut_time", "integrate_hamilton",
]
