"""Weak Galerkin finite elements for the 2D Brinkman equations (k >= 1, triangles)."""
from .analysis import (ErrorReport, ErrorRow, artificial_flux, convergence_study,
                       errors_vs_exact, pressure_seminorm, triple_bar_norm)
from .assembly import BrinkmanProblem, SaddleSystem, assemble, local_a, local_b
from .benchmarks import example1_pressure, example1_problem, example1_velocity, lid_problem
from .exceptions import (ConfigError, InternalError, InvalidArgument, InvalidData,
                         InvalidProblem, NoConvergence, ParseError, SingularSystem, WGError)
from .fespace import (DofMap, PressureField, WgVelocity, project_pressure, project_Q0,
                      project_Qb, weak_divergence_local, weak_gradient_local)
from .mesh import Mesh, boundary_edges, build_structured
from .permeability import PermeabilitySpec, load_raster
from .solver import SolveOptions, SolveReport, solve

__version__ = "0.1.0"


def __getattr__(name):
    # keep scikit-learn an import-time cost only for users of the facade
    if name == "WGBrinkmanSolver":
        from .estimator import WGBrinkmanSolver
        return WGBrinkmanSolver
    raise AttributeError(name)
