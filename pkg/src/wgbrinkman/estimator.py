"""scikit-learn style facade over mesh construction, assembly and solve."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .assembly import BrinkmanProblem, assemble
from .exceptions import InvalidArgument
from .fespace import evaluate_interior, evaluate_pressure
from .mesh import build_structured
from .solver import SolveOptions, solve


class WGBrinkmanSolver(BaseEstimator):
    """Weak Galerkin discretization of a :class:`BrinkmanProblem` on an ``n x n`` grid.

    ``fit(problem)`` assembles and solves; ``predict(X)`` evaluates the
    interior velocity ``u_0`` at points ``X`` of shape (m, 2) and
    ``predict_pressure(X)`` the pressure. The problem's own ``order`` and
    stabilizer flag are overridden by the estimator parameters.

    Attributes set by ``fit``: ``mesh_``, ``system_``, ``velocity_``,
    ``pressure_``, ``report_``.
    """

    def __init__(self, n=16, order=1, diagonal="ne_sw", stab_visc_scaling=True,
                 method="krylov_minres", tol=1e-10, max_iter=20000,
                 preconditioner="diag_A_pressure_mass"):
        self.n = n
        self.order = order
        self.diagonal = diagonal
        self.stab_visc_scaling = stab_visc_scaling
        self.method = method
        self.tol = tol
        self.max_iter = max_iter
        self.preconditioner = preconditioner

    def _problem(self, problem):
        if not isinstance(problem, BrinkmanProblem):
            raise InvalidArgument(f"fit expects a BrinkmanProblem, got {type(problem).__name__}")
        if int(self.order) < 1:
            raise InvalidArgument(f"order must be >= 1, got {self.order}")
        from dataclasses import replace
        return replace(problem, order=int(self.order), stab_visc_scaling=bool(self.stab_visc_scaling))

    def fit(self, problem, y=None):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise InvalidArgument(f"n must be a positive integer, got {self.n!r}")
        options = SolveOptions(self.method, self.tol, self.max_iter, self.preconditioner)
        self.problem_ = self._problem(problem)
        self.mesh_ = build_structured(int(self.n), self.diagonal)
        self.system_ = assemble(self.problem_, self.mesh_)
        self.velocity_, self.pressure_, self.report_ = solve(self.system_, options)
        return self

    def _points(self, X):
        check_is_fitted(self, "velocity_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2:
            raise InvalidArgument(f"X must have 2 columns (x, y), got {X.shape[1]}")
        if np.any(X < -1e-12) or np.any(X > 1 + 1e-12):
            raise InvalidArgument("points must lie in the unit square")
        return np.clip(X, 0.0, 1.0)

    def predict(self, X):
        """Velocity ``u_0`` at each row of ``X``; shape (m, 2)."""
        X = self._points(X)
        return evaluate_interior(self.velocity_, X)

    def predict_pressure(self, X):
        X = self._points(X)
        return evaluate_pressure(self.pressure_, X)
