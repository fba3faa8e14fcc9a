"""Weak Galerkin spaces, L2 projections and discrete weak operators.

Velocity functions are pairs ``{v0, vb}``: a vector polynomial of degree ``k``
inside every triangle and a vector polynomial of degree ``k`` on every edge.
Pressures are discontinuous polynomials of degree ``k - 1``.

Bases
-----
* element: scaled monomials ``((x - xc) / h_T) ** a * ((y - yc) / h_T) ** b``
  with ``a + b <= k``, centred at the centroid and scaled by the diameter;
* edge: powers ``s ** i``, ``i <= k``, of the parameter ``s in [-1/2, 1/2]``
  running from the lower-indexed to the higher-indexed vertex, so each edge
  trace is stored once regardless of which neighbour looks at it.

Local velocity DOF layout (``nloc = 2 * n0 + 3 * 2 * nb``)::

    [v0_x (n0), v0_y (n0), e0_x (nb), e0_y (nb), e1_x, e1_y, e2_x, e2_y]

Vector fields are callables ``f(x, y)`` returning something of shape
``(2,) + x.shape``; scalar fields return ``x.shape`` (constants broadcast).
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import quadrature
from .exceptions import InternalError, InvalidArgument

quadrature.self_test(max_degree=12)


def exponents(k):
    """Monomial exponents ``(a, b)`` with ``a + b <= k``, graded order."""
    return [(d - b, b) for d in range(k + 1) for b in range(d + 1)]


def dim_P(k):
    return (k + 1) * (k + 2) // 2 if k >= 0 else 0


def eval_vector(f, x, y):
    v = np.asarray(f(x, y), dtype=float)
    return np.broadcast_to(v, (2,) + np.shape(x)) if v.shape != (2,) + np.shape(x) else v


def eval_scalar(f, x, y):
    return np.broadcast_to(np.asarray(f(x, y), dtype=float), np.shape(x))


def scaled_monomials(x, y, xc, yc, h, k, grad=False):
    """Values (and optionally gradients) of the scaled monomial basis.

    ``xc, yc, h`` broadcast against ``x, y``; the basis index is appended as
    the last axis (and the derivative direction after it for gradients).
    """
    X = (x - xc) / h
    Y = (y - yc) / h
    pw_x = [np.ones_like(X)]
    pw_y = [np.ones_like(Y)]
    for _ in range(k):
        pw_x.append(pw_x[-1] * X)
        pw_y.append(pw_y[-1] * Y)
    exps = exponents(k)
    vals = np.stack([pw_x[a] * pw_y[b] for a, b in exps], axis=-1)
    if not grad:
        return vals
    zero = np.zeros_like(X)
    hh = np.broadcast_to(h, X.shape)
    gx = [a * pw_x[a - 1] * pw_y[b] / hh if a else zero for a, b in exps]
    gy = [b * pw_x[a] * pw_y[b - 1] / hh if b else zero for a, b in exps]
    grads = np.stack([np.stack(gx, axis=-1), np.stack(gy, axis=-1)], axis=-1)
    return vals, grads


def edge_powers(s, k):
    return np.stack([s**i for i in range(k + 1)], axis=-1)


class DofMap:
    """Global numbering of velocity (interior, trace) and pressure DOFs.

    Interior velocity DOFs of element ``t`` occupy
    ``[2*n0*t, 2*n0*(t+1))``, trace DOFs of edge ``e`` follow all interior
    ones in blocks of ``2*nb``; pressures are numbered separately from zero.
    """

    def __init__(self, mesh, order=1):
        if order < 1:
            raise InvalidArgument(f"order must be >= 1, got {order}")
        self.mesh = mesh
        self.order = k = int(order)
        self.n0 = dim_P(k)
        self.nb = k + 1
        self.nq = dim_P(k - 1)
        ne, nE = mesh.n_elements, mesh.n_edges
        self.n_interior = 2 * self.n0 * ne
        self.n_trace = 2 * self.nb * nE
        self.n_velocity = self.n_interior + self.n_trace
        self.n_pressure = self.nq * ne
        self.interior_offsets = 2 * self.n0 * np.arange(ne)
        self.trace_offsets = self.n_interior + 2 * self.nb * np.arange(nE)
        self.pressure_offsets = self.nq * np.arange(ne)

    @property
    def n_local(self):
        return 2 * self.n0 + 6 * self.nb

    @cached_property
    def boundary_dofs(self):
        be = np.flatnonzero(self.mesh.boundary_mask)
        return (self.trace_offsets[be, None] + np.arange(2 * self.nb)).ravel()

    @cached_property
    def element_velocity_dofs(self):
        """(ne, nloc) global velocity indices in the local layout."""
        mesh = self.mesh
        interior = self.interior_offsets[:, None] + np.arange(2 * self.n0)
        trace = (self.trace_offsets[mesh.element_edges][:, :, None]
                 + np.arange(2 * self.nb)).reshape(mesh.n_elements, -1)
        return np.hstack([interior, trace])

    @cached_property
    def element_pressure_dofs(self):
        return self.pressure_offsets[:, None] + np.arange(self.nq)

    def scalar_to_local(self):
        """(2, ns) map from (component, scalar local index) to local index.

        Scalar local layout is ``[v0 (n0), e0 (nb), e1 (nb), e2 (nb)]``.
        """
        n0, nb = self.n0, self.nb
        out = np.empty((2, n0 + 3 * nb), dtype=np.int64)
        for c in range(2):
            out[c, :n0] = c * n0 + np.arange(n0)
            for j in range(3):
                out[c, n0 + j * nb:n0 + (j + 1) * nb] = 2 * n0 + j * 2 * nb + c * nb + np.arange(nb)
        return out


@dataclass
class WgVelocity:
    """Weak velocity ``{v0, vb}`` stored as one coefficient vector."""

    coeffs: np.ndarray
    dofmap: DofMap
    homogeneous: bool = False

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.dofmap.n_velocity,):
            raise InvalidArgument(
                f"expected {self.dofmap.n_velocity} velocity coefficients, got {self.coeffs.shape}")
        if self.homogeneous and np.any(self.coeffs[self.dofmap.boundary_dofs] != 0):
            raise InvalidArgument("homogeneous velocity has nonzero boundary trace")

    @classmethod
    def from_parts(cls, dofmap, interior, trace, homogeneous=False):
        ne, nE = dofmap.mesh.n_elements, dofmap.mesh.n_edges
        c = np.concatenate([np.asarray(interior, float).reshape(ne * 2 * dofmap.n0),
                            np.asarray(trace, float).reshape(nE * 2 * dofmap.nb)])
        return cls(c, dofmap, homogeneous)

    @classmethod
    def zeros(cls, dofmap):
        return cls(np.zeros(dofmap.n_velocity), dofmap)

    @property
    def interior(self):
        """(ne, 2, n0) view of the element coefficients."""
        d = self.dofmap
        return self.coeffs[:d.n_interior].reshape(-1, 2, d.n0)

    @property
    def trace(self):
        """(nE, 2, nb) view of the edge coefficients."""
        d = self.dofmap
        return self.coeffs[d.n_interior:].reshape(-1, 2, d.nb)

    def local(self):
        """(ne, nloc) coefficients gathered per element."""
        return self.coeffs[self.dofmap.element_velocity_dofs]

    def __sub__(self, other):
        return WgVelocity(self.coeffs - other.coeffs, self.dofmap)


@dataclass
class PressureField:
    """Piecewise P_{k-1} pressure, ``coeffs`` shaped (ne, nq)."""

    coeffs: np.ndarray
    dofmap: DofMap

    def __post_init__(self):
        d = self.dofmap
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(d.mesh.n_elements, d.nq)

    def element_integrals(self, ops=None):
        ops = ops or local_operators(self.dofmap.mesh, self.dofmap.order)
        return np.einsum("tq,tq->t", self.coeffs, ops.pressure_integrals)

    def mean(self, ops=None):
        return float(self.element_integrals(ops).sum() / self.dofmap.mesh.areas.sum())


class LocalOperators:
    """Per-element quadrature data and local weak-operator matrices.

    Everything is computed for all elements at once; arrays carry the
    element index as their first axis.
    """

    def __init__(self, mesh, order=1, tri_degree=None, edge_degree=None):
        self.mesh = mesh
        self.dofmap = DofMap(mesh, order)
        k = self.order = self.dofmap.order
        n0, nb, nq = self.dofmap.n0, self.dofmap.nb, self.dofmap.nq
        self.tri_rule = quadrature.triangle_rule(tri_degree or 2 * k + 2)
        self.edge_rule = quadrature.edge_rule(edge_degree or 2 * k + 2)

        X = mesh.vertices[mesh.elements]
        xc = mesh.centroids[:, 0, None]
        yc = mesh.centroids[:, 1, None]
        h = mesh.diameters[:, None]
        if np.any(mesh.areas <= 0):
            raise InternalError("degenerate or clockwise element")

        # element quadrature
        pts = np.einsum("qi,tid->tqd", self.tri_rule.points, X)
        self.quad_points = pts
        self.quad_weights = mesh.areas[:, None] * self.tri_rule.weights
        phi, dphi = scaled_monomials(pts[..., 0], pts[..., 1], xc, yc, h, k, grad=True)
        psi, dpsi = scaled_monomials(pts[..., 0], pts[..., 1], xc, yc, h, k - 1, grad=True)
        self.phi, self.psi = phi, psi
        w = self.quad_weights
        self.mass0 = np.einsum("tq,tqa,tqb->tab", w, phi, phi)
        self.massq = np.einsum("tq,tqa,tqb->tab", w, psi, psi)
        self.pressure_integrals = np.einsum("tq,tqa->ta", w, psi)

        # edge quadrature in the global edge frame
        E = mesh.vertices[mesh.edges[mesh.element_edges]]  # (ne, 3, 2, 2)
        t = self.edge_rule.points
        epts = E[:, :, None, 0, :] + t[None, None, :, None] * (E[:, :, None, 1, :] - E[:, :, None, 0, :])
        self.edge_points = epts  # (ne, 3, me, 2)
        lengths = mesh.edge_lengths[mesh.element_edges]
        self.edge_weights = lengths[:, :, None] * self.edge_rule.weights
        self.normals = mesh.element_outward_normals()  # (ne, 3, 2)
        self.edge_basis = np.broadcast_to(edge_powers(t - 0.5, k), epts.shape[:3] + (nb,))
        xc3, yc3, h3 = xc[:, :, None], yc[:, :, None], h[:, :, None]
        self.phi_edge = scaled_monomials(epts[..., 0], epts[..., 1], xc3, yc3, h3, k)
        self.psi_edge = scaled_monomials(epts[..., 0], epts[..., 1], xc3, yc3, h3, k - 1)

        # R[(d, beta), scalar local index]: right-hand side of the weak gradient
        ne = mesh.n_elements
        ns = n0 + 3 * nb
        R = np.zeros((ne, 2, nq, ns))
        R[:, :, :, :n0] = -np.einsum("tq,tqa,tqbd->tdba", w, phi, dpsi)
        we = self.edge_weights
        edge_part = np.einsum("tjq,tjqi,tjqb,tjd->tdbji", we, self.edge_basis, self.psi_edge, self.normals)
        R[:, :, :, n0:] = edge_part.reshape(ne, 2, nq, 3 * nb)
        self.R = R.reshape(ne, 2 * nq, ns)
        Mbd = np.zeros((ne, 2 * nq, 2 * nq))
        Mbd[:, :nq, :nq] = self.massq
        Mbd[:, nq:, nq:] = self.massq
        self.massq_block = Mbd
        # scalar weak gradient: coefficients in [P_{k-1}]^2 of grad_w of a scalar
        self.G = np.linalg.solve(Mbd, self.R)
        self.ns = ns

    # -- weak operators --------------------------------------------------
    def _scalar_parts(self, local):
        """Split (ne, nloc) local vector coeffs into (ne, 2, ns) scalar coeffs."""
        return local[:, self.dofmap.scalar_to_local()]

    def weak_gradient(self, v):
        """(ne, 2, 2, nq) coefficients: ``[t, c, d]`` is d/dx_d of component c."""
        s = self._scalar_parts(v.local())
        g = np.einsum("tij,tcj->tci", self.G, s)
        return g.reshape(len(g), 2, 2, self.dofmap.nq)

    def weak_divergence(self, v):
        """(ne, nq) coefficients of the weak divergence."""
        g = self.weak_gradient(v)
        return g[:, 0, 0] + g[:, 1, 1]

    @cached_property
    def divergence_rhs(self):
        """(ne, nq, nloc): (div_w phi_j, psi_i)_T in local velocity layout."""
        nq = self.dofmap.nq
        R = self.R.reshape(-1, 2, nq, self.ns)
        out = np.zeros((len(R), nq, self.dofmap.n_local))
        idx = self.dofmap.scalar_to_local()
        for c in range(2):
            out[:, :, idx[c]] = R[:, c]
        return out


_CACHE = {}


def local_operators(mesh, order=1):
    """Cached :class:`LocalOperators` for ``(mesh, order)``."""
    key = (id(mesh), order)
    hit = _CACHE.get(key)
    if hit is None or hit.mesh is not mesh:
        if len(_CACHE) > 16:
            _CACHE.clear()
        hit = _CACHE[key] = LocalOperators(mesh, order)
    return hit


# -- local (single element) operator API --------------------------------

def _local_vector(ops, element, v0, vb):
    d = ops.dofmap
    v0 = np.asarray(v0, float).reshape(2, d.n0)
    vb = np.asarray(vb, float).reshape(3, 2, d.nb)
    return np.concatenate([v0.ravel(), vb.ravel()])


def weak_gradient_local(ops, element, v0, vb):
    """Weak gradient on one element.

    ``v0`` has shape (2, n0); ``vb`` (3, 2, nb) holds the traces on the
    element's edges in its local edge order. Returns (2, 2, nq).
    """
    loc = _local_vector(ops, element, v0, vb)
    s = loc[ops.dofmap.scalar_to_local()]
    g = ops.G[element] @ s.T
    return g.T.reshape(2, 2, ops.dofmap.nq)


def weak_divergence_local(ops, element, v0, vb):
    g = weak_gradient_local(ops, element, v0, vb)
    return g[0, 0] + g[1, 1]


# -- projections ---------------------------------------------------------

def project_Q0(f, mesh, order=1, degree=None):
    """Element-wise L2 projection of a vector field onto [P_k(T)]^2.

    Returns an (ne, 2, n0) coefficient array.
    """
    k = order
    rule = quadrature.triangle_rule(degree or max(2 * k + 6, 8))
    X = mesh.vertices[mesh.elements]
    pts = np.einsum("qi,tid->tqd", rule.points, X)
    w = mesh.areas[:, None] * rule.weights
    phi = scaled_monomials(pts[..., 0], pts[..., 1], mesh.centroids[:, 0, None],
                           mesh.centroids[:, 1, None], mesh.diameters[:, None], k)
    M = np.einsum("tq,tqa,tqb->tab", w, phi, phi)
    fv = eval_vector(f, pts[..., 0], pts[..., 1])  # (2, ne, m)
    rhs = np.einsum("tq,ctq,tqa->tac", w, fv, phi)
    try:
        return np.linalg.solve(M, rhs).transpose(0, 2, 1)
    except np.linalg.LinAlgError as exc:
        raise InternalError("singular element mass matrix") from exc


def project_Qb(f, mesh, order=1, degree=None, edges=None):
    """Edge-wise L2 projection of a vector field onto [P_k(e)]^2.

    Returns an (nE, 2, nb) array (or rows for ``edges`` only).
    """
    k = order
    rule = quadrature.edge_rule(degree or max(2 * k + 6, 8))
    edges = np.arange(mesh.n_edges) if edges is None else np.asarray(edges)
    E = mesh.vertices[mesh.edges[edges]]
    pts = E[:, None, 0] + rule.points[None, :, None] * (E[:, None, 1] - E[:, None, 0])
    B = edge_powers(rule.points - 0.5, k)  # (m, nb)
    M = np.einsum("q,qa,qb->ab", rule.weights, B, B)
    fv = eval_vector(f, pts[..., 0], pts[..., 1])  # (2, nE, m)
    rhs = np.einsum("q,ceq,qa->eca", rule.weights, fv, B)
    return np.linalg.solve(M, rhs.reshape(-1, k + 1).T).T.reshape(len(edges), 2, k + 1)


def project_velocity(f, mesh, order=1, dofmap=None):
    """``Q_h f = {Q_0 f, Q_b f}`` as a :class:`WgVelocity`."""
    dofmap = dofmap or DofMap(mesh, order)
    return WgVelocity.from_parts(dofmap, project_Q0(f, mesh, order), project_Qb(f, mesh, order))


def project_pressure(p, mesh, order=1, degree=None, dofmap=None):
    """Element-wise L2 projection onto P_{k-1}; element averages for k = 1."""
    k = order
    dofmap = dofmap or DofMap(mesh, order)
    rule = quadrature.triangle_rule(degree or max(2 * k + 6, 8))
    X = mesh.vertices[mesh.elements]
    pts = np.einsum("qi,tid->tqd", rule.points, X)
    w = mesh.areas[:, None] * rule.weights
    psi = scaled_monomials(pts[..., 0], pts[..., 1], mesh.centroids[:, 0, None],
                           mesh.centroids[:, 1, None], mesh.diameters[:, None], k - 1)
    M = np.einsum("tq,tqa,tqb->tab", w, psi, psi)
    rhs = np.einsum("tq,tq,tqa->ta", w, eval_scalar(p, pts[..., 0], pts[..., 1]), psi)
    return PressureField(np.linalg.solve(M, rhs[..., None])[..., 0], dofmap)


def project_tensor(F, mesh, order=1, degree=None):
    """L2 projection of a 2x2 tensor field onto [P_{k-1}(T)]^{2x2}.

    ``F(x, y)`` returns shape ``(2, 2) + x.shape``; result is (ne, 2, 2, nq).
    """
    comps = []
    for c in range(2):
        row = []
        for d in range(2):
            pc = project_pressure(lambda x, y, c=c, d=d: np.broadcast_to(F(x, y)[c][d], np.shape(x)),
                                  mesh, order, degree)
            row.append(pc.coeffs)
        comps.append(np.stack(row, axis=1))
    return np.stack(comps, axis=1)


# -- evaluation ----------------------------------------------------------

def evaluate_interior(v, points, elements=None):
    """Values of ``v0`` at ``points`` (m, 2); returns (m, 2)."""
    mesh = v.dofmap.mesh
    points = np.asarray(points, float)
    elements = mesh.locate(points) if elements is None else np.asarray(elements)
    if np.any(elements < 0):
        raise InvalidArgument("points outside the mesh")
    phi = scaled_monomials(points[:, 0], points[:, 1], mesh.centroids[elements, 0],
                           mesh.centroids[elements, 1], mesh.diameters[elements], v.dofmap.order)
    return np.einsum("mca,ma->mc", v.interior[elements], phi)


def evaluate_pressure(q, points, elements=None):
    mesh = q.dofmap.mesh
    points = np.asarray(points, float)
    elements = mesh.locate(points) if elements is None else np.asarray(elements)
    if np.any(elements < 0):
        raise InvalidArgument("points outside the mesh")
    psi = scaled_monomials(points[:, 0], points[:, 1], mesh.centroids[elements, 0],
                           mesh.centroids[elements, 1], mesh.diameters[elements], q.dofmap.order - 1)
    return np.einsum("ma,ma->m", q.coeffs[elements], psi)


def element_average(v, ops=None):
    """(ne, 2) element means of ``v0``."""
    ops = ops or local_operators(v.dofmap.mesh, v.dofmap.order)
    integrals = np.einsum("tq,tqa->ta", ops.quad_weights, ops.phi)
    return np.einsum("tca,ta->tc", v.interior, integrals) / v.dofmap.mesh.areas[:, None]
