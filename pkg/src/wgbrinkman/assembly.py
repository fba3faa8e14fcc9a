"""Global saddle-point system for the weak Galerkin Brinkman scheme.

The discrete problem is: find ``u_h`` with prescribed boundary trace and a
mean-zero ``p_h`` such that::

    a(u_h, v) - b(v, p_h) = (f, v0)   for all v with zero boundary trace
    b(u_h, q)             = 0         for all q

with ``a = mu (grad_w, grad_w) + mu kappa_inv (v0, w0) + stab`` and
``b(v, q) = (div_w v, q)``. The mean-zero condition is imposed with one
Lagrange multiplier, so the assembled matrix stays symmetric.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import quadrature
from .exceptions import InternalError, InvalidProblem
from .fespace import (DofMap, eval_scalar, eval_vector, local_operators,
                      project_Qb, scaled_monomials)

KAPPA_SAMPLING = ("centroid", "quadrature")


def _zero_vector(x, y):
    return np.zeros((2,) + np.shape(x))


@dataclass
class BrinkmanProblem:
    """Data of ``-mu lap u + grad p + mu kappa_inv u = f``, ``div u = 0``, ``u = g``.

    Parameters
    ----------
    mu : float
        Viscosity, must be positive.
    kappa_inv : callable
        Inverse permeability ``kappa_inv(x, y)`` (scalar field).
    force, boundary : callable
        Vector fields ``f`` and ``g``.
    order : int
        Polynomial degree ``k`` of the velocity space.
    stab_visc_scaling : bool
        Multiply the stabilizer by ``mu`` (True) or not.
    kappa_sampling : {"centroid", "quadrature"}
        How ``kappa_inv`` enters the mass term: one value per element taken
        at the centroid, or the pointwise field under quadrature.
    """

    mu: float = 1.0
    kappa_inv: Callable = None
    force: Callable = _zero_vector
    boundary: Callable = _zero_vector
    order: int = 1
    stab_visc_scaling: bool = True
    kappa_sampling: str = "centroid"
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not (self.mu > 0):
            raise InvalidProblem(f"viscosity must be positive, got {self.mu}")
        if self.kappa_inv is None:
            self.kappa_inv = lambda x, y: np.ones(np.shape(x))
        if self.kappa_sampling not in KAPPA_SAMPLING:
            raise InvalidProblem(f"kappa_sampling must be one of {KAPPA_SAMPLING}")
        if int(self.order) < 1:
            raise InvalidProblem(f"order must be >= 1, got {self.order}")

    def stabilizer_coefficient(self, mesh):
        """Per-element stabilizer weight ``mu_s / h_T``."""
        scale = self.mu if self.stab_visc_scaling else 1.0
        return scale / mesh.diameters

    def element_kappa_inv(self, mesh):
        """kappa_inv at element centroids; raises on non-positive samples."""
        c = mesh.centroids
        vals = np.array(eval_scalar(self.kappa_inv, c[:, 0], c[:, 1]), dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            bad = int(np.flatnonzero(~(vals > 0))[0])
            raise InvalidProblem(f"kappa_inv must be positive; element {bad} samples {vals[bad]}")
        return vals

    def ellipticity_bounds(self, mesh):
        """Observed ``(lambda_1, lambda_2)`` over the element samples."""
        vals = self.element_kappa_inv(mesh)
        return float(vals.min()), float(vals.max())


def kappa_mass(problem, ops):
    """(ne, n0, n0) matrices ``(kappa_inv phi_a, phi_b)_T``."""
    mesh = ops.mesh
    if problem.kappa_sampling == "centroid":
        return problem.element_kappa_inv(mesh)[:, None, None] * ops.mass0
    pts = ops.quad_points
    kq = eval_scalar(problem.kappa_inv, pts[..., 0], pts[..., 1])
    if np.any(kq <= 0):
        raise InvalidProblem("kappa_inv must be positive at quadrature points")
    return np.einsum("tq,tq,tqa,tqb->tab", ops.quad_weights, kq, ops.phi, ops.phi)


def stabilizer_scalar(ops):
    """(ne, ns, ns) scalar matrices ``<v0 - vb, w0 - wb>_{dT}``."""
    d = ops.dofmap
    n0, nb = d.n0, d.nb
    ne = ops.mesh.n_elements
    me = len(ops.edge_rule)
    D = np.zeros((ne, 3, me, ops.ns))
    D[..., :n0] = ops.phi_edge
    for j in range(3):
        D[:, j, :, n0 + j * nb:n0 + (j + 1) * nb] = -ops.edge_basis[:, j]
    return np.einsum("tjq,tjqa,tjqb->tab", ops.edge_weights, D, D)


def local_a(problem, mesh, elements=None):
    """Dense local matrices of ``a(., .)`` in the local velocity layout.

    Returns an (ne, nloc, nloc) array, or the rows for ``elements``.
    """
    ops = local_operators(mesh, problem.order)
    d = ops.dofmap
    n0 = d.n0
    mu = problem.mu
    As = mu * np.einsum("tia,tib->tab", ops.R, ops.G)
    As += problem.stabilizer_coefficient(mesh)[:, None, None] * stabilizer_scalar(ops)
    As[:, :n0, :n0] += mu * kappa_mass(problem, ops)
    idx = d.scalar_to_local()
    out = np.zeros((mesh.n_elements, d.n_local, d.n_local))
    for c in range(2):
        out[:, idx[c][:, None], idx[c][None, :]] = As
    return out if elements is None else out[elements]


def local_b(problem, mesh, elements=None):
    """Local ``b`` matrices: ``(div_w phi_j, psi_i)_T``, shape (ne, nq, nloc)."""
    ops = local_operators(mesh, problem.order)
    out = ops.divergence_rhs
    return out if elements is None else out[elements]


def local_load(problem, mesh, degree=8):
    """(ne, nloc) load vectors ``(f, phi_0)``; trace entries are zero."""
    d = DofMap(mesh, problem.order)
    rule = quadrature.triangle_rule(max(degree, 2 * problem.order + 2))
    X = mesh.vertices[mesh.elements]
    pts = np.einsum("qi,tid->tqd", rule.points, X)
    w = mesh.areas[:, None] * rule.weights
    phi = scaled_monomials(pts[..., 0], pts[..., 1], mesh.centroids[:, 0, None],
                           mesh.centroids[:, 1, None], mesh.diameters[:, None], problem.order)
    fv = eval_vector(problem.force, pts[..., 0], pts[..., 1])
    out = np.zeros((mesh.n_elements, d.n_local))
    out[:, :2 * d.n0] = np.einsum("tq,ctq,tqa->tca", w, fv, phi).reshape(mesh.n_elements, -1)
    return out


def _scatter(local, rows, cols, shape):
    r = np.broadcast_to(rows[:, :, None], local.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], local.shape).ravel()
    m = sp.coo_matrix((local.ravel(), (r, c)), shape=shape).tocsr()
    m.eliminate_zeros()
    m.sort_indices()
    return m


@dataclass(eq=False)
class SaddleSystem:
    """Assembled blocks plus the constrained system actually solved.

    ``A`` and ``B`` act on all velocity DOFs (boundary included);
    ``matrix``/``rhs`` are the reduced symmetric system in the unknowns
    ``[u_free, p, multiplier]``.
    """

    problem: BrinkmanProblem
    dofmap: DofMap
    A: sp.csr_matrix
    B: sp.csr_matrix
    constraint: np.ndarray
    load: np.ndarray
    boundary_dofs: np.ndarray
    boundary_values: np.ndarray

    @cached_property
    def free_dofs(self):
        mask = np.ones(self.dofmap.n_velocity, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.flatnonzero(mask)

    @property
    def n_unknowns(self):
        return len(self.free_dofs) + self.dofmap.n_pressure + 1

    @cached_property
    def matrix(self):
        f, b = self.free_dofs, self.boundary_dofs
        A_ff = self.A[f][:, f]
        B_f = self.B[:, f]
        c = sp.csr_matrix(self.constraint.reshape(-1, 1))
        K = sp.bmat([[A_ff, -B_f.T, None],
                     [-B_f, None, c],
                     [None, c.T, None]], format="csr")
        K.sort_indices()
        return K

    @cached_property
    def rhs(self):
        f, b = self.free_dofs, self.boundary_dofs
        g = self.boundary_values
        r_u = self.load[f] - self.A[f][:, b] @ g
        r_p = self.B[:, b] @ g
        return np.concatenate([r_u, r_p, [0.0]])

    def split(self, x):
        """Full velocity vector, pressure coefficients, multiplier."""
        nf = len(self.free_dofs)
        u = np.zeros(self.dofmap.n_velocity)
        u[self.free_dofs] = x[:nf]
        u[self.boundary_dofs] = self.boundary_values
        p = x[nf:nf + self.dofmap.n_pressure]
        return u, p, x[-1]

    def asymmetry(self):
        """Relative asymmetry ``max|A - A^T| / max|A|``."""
        diff = abs(self.A - self.A.T)
        return float(diff.max() / abs(self.A).max()) if diff.nnz else 0.0


def assemble(problem, mesh, dofmap=None):
    """Assemble the saddle-point system for ``problem`` on ``mesh``."""
    dofmap = dofmap or DofMap(mesh, problem.order)
    if dofmap.mesh is not mesh or dofmap.order != problem.order:
        raise InternalError("DofMap does not match mesh/order")
    vdofs = dofmap.element_velocity_dofs
    pdofs = dofmap.element_pressure_dofs
    A = _scatter(local_a(problem, mesh), vdofs, vdofs, (dofmap.n_velocity,) * 2)
    B = _scatter(local_b(problem, mesh), pdofs, vdofs, (dofmap.n_pressure, dofmap.n_velocity))
    load = np.zeros(dofmap.n_velocity)
    np.add.at(load, vdofs.ravel(), local_load(problem, mesh).ravel())

    ops = local_operators(mesh, problem.order)
    constraint = ops.pressure_integrals.ravel()

    bedges = np.flatnonzero(mesh.boundary_mask)
    gb = project_Qb(problem.boundary, mesh, problem.order, edges=bedges)
    if gb.shape[0] != len(bedges) or not np.all(np.isfinite(gb)):
        raise InternalError("boundary data projection failed on some boundary edge")
    bdofs = (dofmap.trace_offsets[bedges, None] + np.arange(2 * dofmap.nb)).ravel()
    return SaddleSystem(problem, dofmap, A, B, constraint, load, bdofs, gb.ravel())
