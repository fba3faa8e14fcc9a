"""Structured triangular meshes of the unit square with edge connectivity."""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exceptions import InvalidArgument

DIAGONALS = ("ne_sw", "nw_se")


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with oriented edges.

    Attributes
    ----------
    vertices : (nv, 2) float array
    elements : (ne, 3) int array, counterclockwise vertex triples
    edges : (nE, 2) int array, ``edges[e, 0] < edges[e, 1]``
    element_edges : (ne, 3) int array
        Local edge ``j`` of element ``t`` joins ``elements[t, j]`` and
        ``elements[t, (j + 1) % 3]``.
    element_signs : (ne, 3) int array
        +1 where the element's outward normal on that edge equals the global
        edge normal, -1 otherwise.
    edge_elements : (nE, 2) int array
        Incident elements, second column -1 on boundary edges.
    """

    vertices: np.ndarray
    elements: np.ndarray
    edges: np.ndarray
    element_edges: np.ndarray
    element_signs: np.ndarray
    edge_elements: np.ndarray
    n: Optional[int] = None
    diagonal: Optional[str] = None
    # derived geometry
    areas: np.ndarray = field(init=False, repr=False)
    diameters: np.ndarray = field(init=False, repr=False)
    centroids: np.ndarray = field(init=False, repr=False)
    edge_lengths: np.ndarray = field(init=False, repr=False)
    edge_normals: np.ndarray = field(init=False, repr=False)
    edge_midpoints: np.ndarray = field(init=False, repr=False)
    boundary_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = self.vertices[self.elements]  # (ne, 3, 2)
        d1 = X[:, 1] - X[:, 0]
        d2 = X[:, 2] - X[:, 0]
        areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        sides = np.linalg.norm(X[:, [1, 2, 0]] - X, axis=2)
        E = self.vertices[self.edges]
        t = E[:, 1] - E[:, 0]
        lengths = np.linalg.norm(t, axis=1)
        normals = np.column_stack([t[:, 1], -t[:, 0]]) / lengths[:, None]
        set_ = object.__setattr__
        set_(self, "areas", _frozen(areas))
        set_(self, "diameters", _frozen(sides.max(axis=1)))
        set_(self, "centroids", _frozen(X.mean(axis=1)))
        set_(self, "edge_lengths", _frozen(lengths))
        set_(self, "edge_normals", _frozen(normals))
        set_(self, "edge_midpoints", _frozen(E.mean(axis=1)))
        set_(self, "boundary_mask", _frozen(self.edge_elements[:, 1] < 0))
        for name in ("vertices", "elements", "edges", "element_edges",
                     "element_signs", "edge_elements"):
            set_(self, name, _frozen(getattr(self, name)))

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def h(self):
        """Global mesh size, the largest element diameter."""
        return float(self.diameters.max())

    def element_outward_normals(self):
        """(ne, 3, 2) outward unit normals per local edge."""
        return self.element_signs[:, :, None] * self.edge_normals[self.element_edges]

    def locate(self, points):
        """Index of an element containing each point (-1 if outside)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.n is not None:
            return self._locate_structured(points)
        return self._locate_brute(points)

    def _locate_structured(self, points):
        n = self.n
        x, y = points[:, 0], points[:, 1]
        inside = (x >= 0) & (x <= 1) & (y >= 0) & (y <= 1)
        ix = np.clip(np.floor(x * n).astype(int), 0, n - 1)
        iy = np.clip(np.floor(y * n).astype(int), 0, n - 1)
        fx = x * n - ix
        fy = y * n - iy
        if self.diagonal == "ne_sw":
            upper = fy > fx
        else:
            upper = fx + fy > 1.0
        out = 2 * (iy * n + ix) + upper.astype(int)
        out[~inside] = -1
        return out

    def _locate_brute(self, points, tol=1e-12):
        out = -np.ones(len(points), dtype=np.int64)
        all_elems = np.arange(self.n_elements)
        for i, p in enumerate(points):
            lam = self.barycentric(np.broadcast_to(p, (self.n_elements, 2)), all_elems)
            hit = np.flatnonzero((lam >= -tol).all(axis=1))
            if hit.size:
                out[i] = hit[0]
        return out

    def barycentric(self, points, elems):
        """Barycentric coordinates of ``points[i]`` in element ``elems[i]``."""
        points = np.asarray(points, dtype=float)
        X = self.vertices[self.elements[np.asarray(elems)]]
        d1 = X[..., 1, :] - X[..., 0, :]
        d2 = X[..., 2, :] - X[..., 0, :]
        r = points - X[..., 0, :]
        det = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        l1 = (r[..., 0] * d2[..., 1] - r[..., 1] * d2[..., 0]) / det
        l2 = (d1[..., 0] * r[..., 1] - d1[..., 1] * r[..., 0]) / det
        return np.stack([1 - l1 - l2, l1, l2], axis=-1)

    def with_flipped_sign(self, element, local_edge):
        """Copy with one element-edge sign negated (fault injection only)."""
        signs = np.array(self.element_signs)
        signs[element, local_edge] *= -1
        return replace(self, element_signs=signs)


def from_triangles(vertices, elements, n=None, diagonal=None):
    """Build connectivity for a counterclockwise triangle list."""
    vertices = np.asarray(vertices, dtype=float)
    elements = np.asarray(elements, dtype=np.int64)
    ne = len(elements)
    a = elements
    b = elements[:, [1, 2, 0]]
    lo = np.minimum(a, b).ravel()
    hi = np.maximum(a, b).ravel()
    keys = lo * len(vertices) + hi
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    # keep edges in order of first appearance for a readable numbering
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    edge_id = rank[inverse]
    edges = np.column_stack([lo[first[order]], hi[first[order]]])
    element_edges = edge_id.reshape(ne, 3)
    element_signs = np.where(a.ravel() == lo, 1, -1).reshape(ne, 3)

    edge_elements = -np.ones((len(edges), 2), dtype=np.int64)
    counts = np.zeros(len(edges), dtype=np.int64)
    for t in range(ne):
        for j in range(3):
            e = element_edges[t, j]
            if counts[e] >= 2:
                raise InvalidArgument(f"edge {tuple(edges[e])} shared by more than two elements")
            edge_elements[e, counts[e]] = t
            counts[e] += 1
    return Mesh(vertices, elements, edges, element_edges, element_signs,
                edge_elements, n=n, diagonal=diagonal)


def build_structured(n: int, diagonal: str = "ne_sw") -> Mesh:
    """Uniform ``n x n`` triangulation of the unit square.

    Each square is split along its lower-left/upper-right diagonal
    (``"ne_sw"``) or its upper-left/lower-right diagonal (``"nw_se"``).
    Element ``2*(iy*n + ix)`` is the lower triangle of square ``(ix, iy)``
    and the next index the upper one.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    if diagonal not in DIAGONALS:
        raise InvalidArgument(f"diagonal must be one of {DIAGONALS}, got {diagonal!r}")
    n = int(n)
    g = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(g, g)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])
    iy, ix = np.divmod(np.arange(n * n), n)
    v00 = iy * (n + 1) + ix
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    if diagonal == "ne_sw":
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
    else:
        lower = np.column_stack([v00, v10, v01])
        upper = np.column_stack([v10, v11, v01])
    elements = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return from_triangles(vertices, elements, n=n, diagonal=diagonal)


def boundary_edges(mesh: Mesh) -> np.ndarray:
    return np.flatnonzero(mesh.boundary_mask)
