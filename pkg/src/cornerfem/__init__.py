"""Finite element L2 convergence studies on domains with corners."""
from .errors import FLUX_GAMMA, L2_OMEGA, L2_STRIP, flux_error, l2_error, observed_rates, strip_l2_error
from .exact import CornerSingular2D, Polynomial, SmoothFichera3D, besov_regularity, parse_solution
from .fem import apply_dirichlet_nodal, assemble_load, assemble_stiffness, build_space, solve_cg
from .mesh import DomainTag, Mesh, build_coarse_mesh, domain, refine_red, refined
from .rates import predict_flux, predict_l2_global, predict_l2_local, predict_strip
from .study import StudyConfig, emit_table, load_config, parse_config, run_study, verdict

__version__ = "0.1.0"

__all__ = [
    "FLUX_GAMMA",
    "L2_OMEGA",
    "L2_STRIP",
    "flux_error",
    "l2_error",
    "observed_rates",
    "strip_l2_error",
    "CornerSingular2D",
    "Polynomial",
    "SmoothFichera3D",
    "besov_regularity",
    "parse_solution",
    "apply_dirichlet_nodal",
    "assemble_load",
    "assemble_stiffness",
    "build_space",
    "solve_cg",
    "DomainTag",
    "Mesh",
    "build_coarse_mesh",
    "domain",
    "refine_red",
    "refined",
    "predict_flux",
    "predict_l2_global",
    "predict_l2_local",
    "predict_strip",
    "StudyConfig",
    "emit_table",
    "load_config",
    "parse_config",
    "run_study",
    "verdict",
]
