"""Quadrature on the reference triangle and the unit interval.

Triangle rules are collapsed (Duffy) tensor products of Gauss-Jacobi and
Gauss-Legendre rules; points are returned in barycentric coordinates and the
weights are normalised to sum to one, so that ``|T| * sum(w * f)`` integrates
``f`` over a physical triangle ``T``.
"""
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .exceptions import InternalError, InvalidArgument


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights plus the polynomial degree integrated exactly.

    ``points`` has shape ``(m, 3)`` (barycentric) for triangles and ``(m,)``
    (parameter in [0, 1]) for intervals.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int
    domain: str

    def __len__(self):
        return len(self.weights)


def _npoints(degree):
    return max(1, (degree + 2) // 2)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    if degree < 0:
        raise InvalidArgument(f"quadrature degree must be >= 0, got {degree}")
    m = _npoints(degree)
    xl, wl = roots_legendre(m)
    xj, wj = roots_jacobi(m, 1.0, 0.0)
    s = (xl + 1.0) / 2.0
    t = (xj + 1.0) / 2.0
    # x = t, y = (1 - t) s on the triangle (0,0)-(1,0)-(0,1)
    x = np.repeat(t, m)
    y = np.outer(1.0 - t, s).ravel()
    w = np.outer(wj, wl).ravel() / 8.0
    w = w * 2.0  # normalise reference area 1/2 -> 1
    bary = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(bary, w, degree, "triangle")


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadratureRule:
    if degree < 0:
        raise InvalidArgument(f"quadrature degree must be >= 0, got {degree}")
    x, w = roots_legendre(_npoints(degree))
    return QuadratureRule((x + 1.0) / 2.0, w / 2.0, degree, "interval")


def _check_triangle(rule, tol):
    lam1, lam2 = rule.points[:, 1], rule.points[:, 2]
    worst = 0.0
    for a in range(rule.degree + 1):
        for b in range(rule.degree + 1 - a):
            exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)
            approx = np.dot(rule.weights, lam1**a * lam2**b)
            worst = max(worst, abs(approx - exact))
    return worst


def _check_edge(rule, tol):
    worst = 0.0
    for a in range(rule.degree + 1):
        approx = np.dot(rule.weights, rule.points**a)
        worst = max(worst, abs(approx - 1.0 / (a + 1)))
    return worst


def self_test(max_degree=12, tol=1e-13):
    """Check every rule up to ``max_degree`` against exact monomial integrals.

    Returns the largest absolute discrepancy; raises ``InternalError`` if any
    rule misses ``tol``.
    """
    worst = 0.0
    for d in range(max_degree + 1):
        for rule, check in ((triangle_rule(d), _check_triangle), (edge_rule(d), _check_edge)):
            if abs(rule.weights.sum() - 1.0) > tol:
                raise InternalError(f"{rule.domain} rule degree {d}: weights do not sum to 1")
            err = check(rule, tol)
            if err > tol:
                raise InternalError(f"{rule.domain} rule degree {d} not exact (error {err:.3e})")
            worst = max(worst, err)
    return worst
