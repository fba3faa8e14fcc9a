"""Norms, error tables and diagnostics for weak Galerkin solutions.

The norms here are evaluated from function values at quadrature points,
not from the assembled matrices, so comparing them against the assembled
quadratic forms is a genuine cross-check of the assembly.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import quadrature
from .assembly import assemble
from .exceptions import InvalidArgument, WGError
from .fespace import (DofMap, PressureField, WgVelocity, edge_powers, eval_scalar,
                      eval_vector, local_operators, project_pressure,
                      project_tensor, project_velocity, scaled_monomials)
from .mesh import build_structured
from .solver import SolveOptions, solve

logger = logging.getLogger(__name__)


# -- velocity norms ------------------------------------------------------

def _interior_at(v, pts):
    """v0 evaluated at per-element points ``pts`` (ne, ..., 2) -> (ne, ..., 2)."""
    mesh = v.dofmap.mesh
    shape = (-1,) + (1,) * (pts.ndim - 2)
    phi = scaled_monomials(pts[..., 0], pts[..., 1],
                           mesh.centroids[:, 0].reshape(shape), mesh.centroids[:, 1].reshape(shape),
                           mesh.diameters.reshape(shape), v.dofmap.order)
    return np.einsum("tca,t...a->t...c", v.interior, phi)


def _trace_at(v, ops):
    """vb on every element's edges at the edge quadrature points: (ne, 3, me, 2)."""
    mesh = v.dofmap.mesh
    tr = v.trace[mesh.element_edges]  # (ne, 3, 2, nb)
    return np.einsum("tjcb,tjqb->tjqc", tr, ops.edge_basis)


def energy_components(v, problem):
    """Squared contributions to ``|||v|||^2``.

    Returns a dict with ``gradient`` (``mu ||grad_w v||^2``), ``mass``
    (``mu (kappa_inv v0, v0)``) and ``stabilizer`` (``mu_s sum h_T^-1
    ||v0 - vb||^2_dT``).
    """
    mesh = v.dofmap.mesh
    ops = local_operators(mesh, v.dofmap.order)
    g = ops.weak_gradient(v)  # (ne, 2, 2, nq)
    grad = np.einsum("tcda,tab,tcdb->", g, ops.massq, g)

    vals = _interior_at(v, ops.quad_points)
    if problem.kappa_sampling == "centroid":
        kinv = problem.element_kappa_inv(mesh)[:, None]
    else:
        kinv = eval_scalar(problem.kappa_inv, ops.quad_points[..., 0], ops.quad_points[..., 1])
    mass = np.sum(ops.quad_weights * kinv * np.sum(vals**2, axis=-1))

    diff = _interior_at(v, ops.edge_points) - _trace_at(v, ops)
    per_elem = np.einsum("tjq,tjqc->t", ops.edge_weights, diff**2)
    stab = np.dot(problem.stabilizer_coefficient(mesh), per_elem)
    return {"gradient": problem.mu * grad, "mass": problem.mu * mass, "stabilizer": stab}


def triple_bar_norm(v, problem, mesh=None):
    """Energy norm ``|||v|||``, the norm induced by ``a(., .)``."""
    return math.sqrt(max(sum(energy_components(v, problem).values()), 0.0))


def discrete_h1_norm(v):
    """``||v||_{1,h}``: weak gradient plus unweighted stabilizer, no mu or kappa."""
    mesh = v.dofmap.mesh
    ops = local_operators(mesh, v.dofmap.order)
    g = ops.weak_gradient(v)
    grad = np.einsum("tcda,tab,tcdb->", g, ops.massq, g)
    diff = _interior_at(v, ops.edge_points) - _trace_at(v, ops)
    stab = np.dot(1.0 / mesh.diameters, np.einsum("tjq,tjqc->t", ops.edge_weights, diff**2))
    return math.sqrt(grad + stab)


def b_form(v, q):
    """``b(v, q) = sum_T (div_w v, q)_T``."""
    ops = local_operators(v.dofmap.mesh, v.dofmap.order)
    div = ops.weak_divergence(v)
    return float(np.einsum("ta,tab,tb->", div, ops.massq, q.coeffs))


# -- pressure norms and the artificial flux ------------------------------

def _pressure_on_edges(q, edge_ids, elems):
    """Values of ``q|_elems`` at edge quadrature points of ``edge_ids``."""
    mesh = q.dofmap.mesh
    k = q.dofmap.order
    rule = quadrature.edge_rule(2 * k + 2)
    E = mesh.vertices[mesh.edges[edge_ids]]
    pts = E[:, None, 0] + rule.points[None, :, None] * (E[:, None, 1] - E[:, None, 0])
    psi = scaled_monomials(pts[..., 0], pts[..., 1], mesh.centroids[elems, 0, None],
                           mesh.centroids[elems, 1, None], mesh.diameters[elems, None], k - 1)
    return np.einsum("ea,eqa->eq", q.coeffs[elems], psi), rule


def _element_kappa(problem, mesh):
    return 1.0 / problem.element_kappa_inv(mesh)


def pressure_seminorm(q, problem, mesh=None):
    """``|q|_{1,h}``: kappa-weighted broken gradient plus ``h^-1`` jumps.

    Jumps are taken on interior edges only and ``h`` is the global mesh
    size. For piecewise constants only the jump part survives.
    """
    mesh = q.dofmap.mesh
    ops = local_operators(mesh, q.dofmap.order)
    total = 0.0
    if q.dofmap.nq > 1:
        pts = ops.quad_points
        _, dpsi = scaled_monomials(pts[..., 0], pts[..., 1], mesh.centroids[:, 0, None],
                                   mesh.centroids[:, 1, None], mesh.diameters[:, None],
                                   q.dofmap.order - 1, grad=True)
        gq = np.einsum("ta,tqad->tqd", q.coeffs, dpsi)
        total += np.sum(_element_kappa(problem, mesh)[:, None] * ops.quad_weights * np.sum(gq**2, -1))
    interior = np.flatnonzero(~mesh.boundary_mask)
    left, right = mesh.edge_elements[interior].T
    ql, rule = _pressure_on_edges(q, interior, left)
    qr, _ = _pressure_on_edges(q, interior, right)
    jumps = np.einsum("q,eq->e", rule.weights, (ql - qr) ** 2) * mesh.edge_lengths[interior]
    total += jumps.sum() / mesh.h
    return math.sqrt(total)


def artificial_flux(q, problem, mesh=None):
    """``F(q) = {-kappa grad q, h^-1 [q] n_e}``.

    ``[q]`` is taken so that ``[q] n_e`` does not depend on the edge
    orientation: the value on the side whose outward normal is ``n_e``
    minus the other. Boundary traces are zero.
    """
    mesh = q.dofmap.mesh
    d = q.dofmap
    k = d.order
    ops = local_operators(mesh, k)
    interior = np.zeros((mesh.n_elements, 2, d.n0))
    if d.nq > 1:
        # -kappa grad q lies in P_{k-2} so the L2 projection onto P_k is exact
        pts = ops.quad_points
        _, dpsi = scaled_monomials(pts[..., 0], pts[..., 1], mesh.centroids[:, 0, None],
                                   mesh.centroids[:, 1, None], mesh.diameters[:, None], k - 1, grad=True)
        flux = -_element_kappa(problem, mesh)[:, None, None] * np.einsum("ta,tqad->tqd", q.coeffs, dpsi)
        rhs = np.einsum("tq,tqd,tqa->tda", ops.quad_weights, flux, ops.phi)
        interior = np.linalg.solve(ops.mass0[:, None], rhs[..., None])[..., 0]

    # jump as a polynomial along each edge, accumulated with element signs
    rule = ops.edge_rule
    jump = np.zeros((mesh.n_edges, len(rule)))
    q_on_edges = np.einsum("ta,tjqa->tjq", q.coeffs, ops.psi_edge)
    np.add.at(jump, mesh.element_edges.ravel(),
              (mesh.element_signs[:, :, None] * q_on_edges).reshape(-1, len(rule)))
    jump[mesh.boundary_mask] = 0.0
    B = edge_powers(rule.points - 0.5, k)
    M = np.einsum("q,qa,qb->ab", rule.weights, B, B)
    jc = np.linalg.solve(M, np.einsum("q,eq,qa->ea", rule.weights, jump, B).T).T  # (nE, nb)
    trace = jc[:, None, :] * mesh.edge_normals[:, :, None] / mesh.h
    return WgVelocity.from_parts(d, interior, trace)


# -- error tables --------------------------------------------------------

COLUMNS = ("e_tbar", "e_l2proj", "e_l2", "e_press")


@dataclass
class ErrorRow:
    h: float
    e_tbar: float
    e_l2proj: float
    e_l2: float
    e_press: float
    e_weighted: float = float("nan")
    n: Optional[int] = None


@dataclass
class ErrorReport:
    """Rows of errors for a mesh sequence and their observed rates."""

    rows: List[ErrorRow] = field(default_factory=list)
    complete: bool = True
    failure: str = ""
    label: str = ""

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def rates(self, name):
        """``ln(e_{i-1}/e_i) / ln(h_{i-1}/h_i)``; None for the first row."""
        e = self.column(name)
        h = self.column("h")
        out = [None]
        for i in range(1, len(e)):
            with np.errstate(divide="ignore", invalid="ignore"):
                out.append(float(np.log(e[i - 1] / e[i]) / np.log(h[i - 1] / h[i])))
        return out

    def final_rates(self):
        return {c: self.rates(c)[-1] for c in COLUMNS} if len(self.rows) > 1 else {}


def mesh_size(mesh):
    return 1.0 / mesh.n if mesh.n else mesh.h


def errors_vs_exact(u_h, p_h, u_exact, p_exact, problem, mesh=None, degree=10):
    """One :class:`ErrorRow` comparing a discrete solution to exact fields.

    ``u_exact`` is a vector field callable and ``p_exact`` a scalar one.
    """
    mesh = u_h.dofmap.mesh
    d = u_h.dofmap
    if degree < 8:
        raise InvalidArgument("error quadrature must be exact to degree >= 8")
    ops = local_operators(mesh, d.order)
    Qu = project_velocity(u_exact, mesh, d.order, dofmap=d)
    e = WgVelocity(Qu.coeffs - u_h.coeffs, d)
    e_tbar = triple_bar_norm(e, problem)
    ei = e.interior
    e_l2proj = math.sqrt(max(np.einsum("tca,tab,tcb->", ei, ops.mass0, ei), 0.0))

    rule = quadrature.triangle_rule(degree)
    X = mesh.vertices[mesh.elements]
    pts = np.einsum("qi,tid->tqd", rule.points, X)
    w = mesh.areas[:, None] * rule.weights
    diff = eval_vector(u_exact, pts[..., 0], pts[..., 1]).transpose(1, 2, 0) - _interior_at(u_h, pts)
    sq = np.sum(diff**2, axis=-1)
    e_l2 = math.sqrt(np.sum(w * sq))
    if problem.kappa_sampling == "centroid":
        kinv = problem.element_kappa_inv(mesh)[:, None]
    else:
        kinv = eval_scalar(problem.kappa_inv, pts[..., 0], pts[..., 1])
    e_weighted = math.sqrt(np.sum(w * kinv * sq))

    Qp = project_pressure(p_exact, mesh, d.order, dofmap=d)
    ep = Qp.coeffs - p_h.coeffs
    e_press = math.sqrt(max(np.einsum("ta,tab,tb->", ep, ops.massq, ep), 0.0))
    return ErrorRow(mesh_size(mesh), e_tbar, e_l2proj, e_l2, e_press, e_weighted, mesh.n)


def convergence_study(problem, sizes, u_exact, p_exact, options=None, diagonal="ne_sw",
                      on_row: Optional[Callable] = None):
    """Solve on structured ``n x n`` meshes for each ``n`` in ``sizes``.

    A failing solve stops the sweep; the partial report comes back with
    ``complete = False`` and the reason in ``failure``.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise InvalidArgument("mesh sizes must be positive integers")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InvalidArgument("mesh sizes must be strictly increasing (h strictly decreasing)")
    report = ErrorReport(label=problem.name)
    for n in sizes:
        mesh = build_structured(n, diagonal)
        try:
            system = assemble(problem, mesh)
            u_h, p_h, info = solve(system, options)
        except WGError as exc:
            report.complete = False
            report.failure = f"n={n}: {exc}"
            logger.error("convergence study aborted at n=%d: %s", n, exc)
            break
        row = errors_vs_exact(u_h, p_h, u_exact, p_exact, problem)
        report.rows.append(row)
        logger.info("n=%d: %s (%d iterations)", n, row, info.iterations)
        if on_row is not None:
            on_row(row, info)
    return report


# -- diagnostics ---------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (tol {self.tolerance:.1e}) {self.detail}".rstrip()


def random_polynomial_field(order, rng):
    """Random global vector polynomial of degree ``order`` and its gradient."""
    from .fespace import exponents
    exps = exponents(order)
    coef = rng.uniform(-1, 1, size=(2, len(exps)))

    def field(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return np.stack([sum(c * x**a * y**b for c, (a, b) in zip(coef[i], exps)) for i in range(2)])

    def grad(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        def dx(i):
            return sum(c * a * x**(a - 1) * y**b for c, (a, b) in zip(coef[i], exps) if a) + 0 * x
        def dy(i):
            return sum(c * b * x**a * y**(b - 1) for c, (a, b) in zip(coef[i], exps) if b) + 0 * x
        return np.array([[dx(0), dy(0)], [dx(1), dy(1)]])
    return field, grad


def commutativity_discrepancy(mesh, order, field, grad):
    """Max coefficient gaps ``grad_w(Q_h v) - Q_h(grad v)`` and the divergence analogue.

    Returns ``(grad_gap, div_gap, worst_element)``.
    """
    ops = local_operators(mesh, order)
    v = project_velocity(field, mesh, order, dofmap=ops.dofmap)
    gw = ops.weak_gradient(v)
    gp = project_tensor(grad, mesh, order)
    gap = np.abs(gw - gp).reshape(mesh.n_elements, -1).max(axis=1)
    dw = gw[:, 0, 0] + gw[:, 1, 1]
    dp = project_pressure(lambda x, y: grad(x, y)[0][0] + grad(x, y)[1][1], mesh, order).coeffs
    dgap = np.abs(dw - dp).max(axis=1)
    worst = int(np.argmax(np.maximum(gap, dgap)))
    return float(gap.max()), float(dgap.max()), worst


def verify_commutativity(mesh, order=1, trials=100, rng=None, tol=1e-11):
    rng = np.random.default_rng(rng)
    worst = (0.0, 0.0, -1)
    for _ in range(trials):
        g, dv, el = commutativity_discrepancy(mesh, order, *random_polynomial_field(order, rng))
        if max(g, dv) >= max(worst[0], worst[1]):
            worst = (g, dv, el)
    value = max(worst[0], worst[1])
    return CheckResult(f"commutativity (k={order}, {trials} trials)", value <= tol, value, tol,
                       f"grad {worst[0]:.1e}, div {worst[1]:.1e}, worst element {worst[2]}")


def random_pressure(dofmap, rng, mean_zero=True):
    q = PressureField(rng.standard_normal((dofmap.mesh.n_elements, dofmap.nq)), dofmap)
    if mean_zero:
        q.coeffs[:, 0] -= q.mean()
    return q


def verify_flux_identity(problem, mesh, trials=50, rng=None, tol=1e-10):
    """``b(F(q), q) = |q|_{1,h}^2`` for random pressures.

    Also reports the largest observed ``h ||F(q)||_{1,h} / |q|_{1,h}``.
    """
    rng = np.random.default_rng(rng)
    dofmap = DofMap(mesh, problem.order)
    worst, worst_trial, C = 0.0, -1, 0.0
    for i in range(trials):
        q = random_pressure(dofmap, rng)
        lhs = b_form(artificial_flux(q, problem), q)
        rhs = pressure_seminorm(q, problem) ** 2
        rel = abs(lhs - rhs) / max(abs(rhs), np.finfo(float).tiny)
        if rel > worst:
            worst, worst_trial = rel, i
        C = max(C, mesh.h * discrete_h1_norm(artificial_flux(q, problem)) / math.sqrt(rhs))
    return CheckResult(f"artificial flux identity ({trials} trials)", worst <= tol, worst, tol,
                       f"worst trial {worst_trial}; observed C = {C:.3g}")


def random_velocity(dofmap, rng, homogeneous=False):
    c = rng.standard_normal(dofmap.n_velocity)
    if homogeneous:
        c[dofmap.boundary_dofs] = 0.0
    return WgVelocity(c, dofmap, homogeneous)


def verify_coercivity(problem, mesh, trials=200, rng=None, tol=1e-10, system=None):
    """``a(v, v) = |||v|||^2`` and ``|a(v, w)| <= |||v||| |||w|||`` for random v, w."""
    rng = np.random.default_rng(rng)
    system = system or assemble(problem, mesh)
    worst, bound_violation = 0.0, 0.0
    for _ in range(trials):
        v = random_velocity(system.dofmap, rng)
        w = random_velocity(system.dofmap, rng)
        quad = v.coeffs @ (system.A @ v.coeffs)
        nv = triple_bar_norm(v, problem)
        nw = triple_bar_norm(w, problem)
        worst = max(worst, abs(quad - nv**2) / nv**2)
        bound_violation = max(bound_violation, abs(w.coeffs @ (system.A @ v.coeffs)) / (nv * nw) - 1.0)
    ok = worst <= tol and bound_violation <= tol
    return CheckResult(f"coercivity identity ({trials} trials)", ok, worst, tol,
                       f"max |a(v,w)|/(|||v||| |||w|||) - 1 = {bound_violation:.1e}")


def verify_divergence_free(problem, mesh, options=None, factor=100.0):
    """Solve once and check ``max_q |b(u_h, q)|`` against the residual contract.

    The threshold scales with the solver tolerance and the right-hand side.
    """
    options = options or SolveOptions()
    system = assemble(problem, mesh)
    _, _, report = solve(system, options)
    scale = max(np.linalg.norm(system.rhs), 1.0)
    tol = factor * options.tol * scale
    return CheckResult("discrete divergence-free", report.divergence_residual <= tol,
                       report.divergence_residual, tol,
                       f"{report.iterations} iterations, residual {report.residual:.1e}")


def verify_quadrature(max_degree=12, tol=1e-13):
    try:
        worst = quadrature.self_test(max_degree, tol)
        return CheckResult(f"quadrature exactness (degree <= {max_degree})", True, worst, tol)
    except WGError as exc:
        return CheckResult(f"quadrature exactness (degree <= {max_degree})", False, float("inf"), tol, str(exc))
