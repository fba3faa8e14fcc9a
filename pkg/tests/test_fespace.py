import numpy as np
import pytest

from wgbrinkman import (DofMap, InvalidArgument, WgVelocity, build_structured, project_pressure,
                        project_Q0, project_Qb, weak_divergence_local, weak_gradient_local)
from wgbrinkman.benchmarks import example1_velocity
from wgbrinkman.fespace import (evaluate_interior, local_operators, project_velocity)
from wgbrinkman.mesh import from_triangles

from oracles import duffy_rule, outward_normal, segment_integral, tri_integral

REF = from_triangles(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))


def _oracle_weak_gradient(mesh, t, v0fun, vbfun, k):
    """Weak gradient on element t with a plain monomial basis and adaptive quadrature.

    ``v0fun(x, y)`` -> (2,), ``vbfun(j, s, x, y)`` -> (2,) with s the global
    edge parameter in [-1/2, 1/2]. Returns a callable (x, y) -> (2, 2).
    """
    verts = mesh.vertices[mesh.elements[t]]
    exps = [(a - b, b) for a in range(k) for b in range(a + 1)]
    nq = len(exps)

    def mono(x, y):
        return np.array([x**a * y**b for a, b in exps])

    def dmono(x, y):
        dx = [a * x**(a - 1) * y**b if a else 0.0 for a, b in exps]
        dy = [b * x**a * y**(b - 1) if b else 0.0 for a, b in exps]
        return np.array([dx, dy])  # [dir, basis]

    M = np.array([[tri_integral(lambda x, y: mono(x, y)[i] * mono(x, y)[j], verts) for j in range(nq)]
                  for i in range(nq)])
    coef = np.zeros((2, 2, nq))
    for c in range(2):
        for d in range(2):
            rhs = np.zeros(nq)
            for i in range(nq):
                # tau = e_c (x) e_d times monomial i: div tau has component c = d_d m_i
                rhs[i] = -tri_integral(lambda x, y: v0fun(x, y)[c] * dmono(x, y)[d, i], verts)
                for j in range(3):
                    a, b = mesh.elements[t, j], mesh.elements[t, (j + 1) % 3]
                    P, Q = mesh.vertices[a], mesh.vertices[b]
                    nrm = outward_normal(P, Q)
                    lo = min(a, b)
                    flip = lo != a

                    def f(tt, x, y, j=j, flip=flip):
                        s = (1.0 - tt if flip else tt) - 0.5
                        return vbfun(j, s, x, y)[c] * mono(x, y)[i] * nrm[d]
                    rhs[i] += segment_integral(f, P, Q)
            coef[c, d] = np.linalg.solve(M, rhs)
    return lambda x, y: coef @ mono(x, y)


def _eval_tensor(mesh, t, g, x, y, k):
    """Evaluate our (2, 2, nq) scaled-monomial coefficients at (x, y)."""
    xc, yc = mesh.centroids[t]
    h = mesh.diameters[t]
    X, Y = (x - xc) / h, (y - yc) / h
    exps = [(a - b, b) for a in range(k) for b in range(a + 1)]
    basis = np.array([X**a * Y**b for a, b in exps])
    return g @ basis


# -- projections ---------------------------------------------------------

def test_Q0_constant_and_linear_exact():
    m = build_structured(3)
    pts = np.random.default_rng(0).uniform(0, 1, (50, 2))
    for f in (lambda x, y: np.stack([np.ones_like(x), np.ones_like(x)]),
              lambda x, y: np.stack([x, y]),
              lambda x, y: np.stack([2 * x - y + 1, 3 * y])):
        v = project_velocity(f, m, 1)
        np.testing.assert_allclose(evaluate_interior(v, pts), f(pts[:, 0], pts[:, 1]).T, atol=1e-13)


def _projection_error(n):
    m = build_structured(n)
    v = project_velocity(example1_velocity, m, 1)
    pts, w = duffy_rule(12)
    total = 0.0
    for t in range(m.n_elements):
        A, B, C = m.vertices[m.elements[t]]
        xy = A + pts[:, :1] * (B - A) + pts[:, 1:] * (C - A)
        d = example1_velocity(xy[:, 0], xy[:, 1]).T - evaluate_interior(v, xy, np.full(len(xy), t))
        total += 2 * m.areas[t] * np.sum(w * np.sum(d**2, axis=1))
    return np.sqrt(total)


def test_Q0_sine_error_quarters():
    e8, e16, e32 = (_projection_error(n) for n in (8, 16, 32))
    assert 3.6 < e8 / e16 < 4.4
    assert 3.8 < e16 / e32 < 4.2


def test_Qb_constant_and_linear_exact():
    m = build_structured(2)
    c = project_Qb(lambda x, y: np.stack([3 + 0 * x, -1 + 0 * x]), m, 1)
    np.testing.assert_allclose(c[:, :, 0], np.tile([3.0, -1.0], (m.n_edges, 1)), atol=1e-14)
    np.testing.assert_allclose(c[:, :, 1], 0.0, atol=1e-14)
    lin = project_Qb(lambda x, y: np.stack([x + 2 * y, x]), m, 1)
    for e, (lo, hi) in enumerate(m.edges):
        P, Q = m.vertices[lo], m.vertices[hi]
        for s in (-0.5, 0.0, 0.5):
            x, y = P + (s + 0.5) * (Q - P)
            np.testing.assert_allclose(lin[e, :, 0] + lin[e, :, 1] * s, [x + 2 * y, x], atol=1e-13)


def test_Qb_matches_dense_least_squares():
    m = build_structured(16)
    target = {(0.0, 0.0), (1 / 16, 0.0)}
    e = next(i for i, ed in enumerate(m.edges)
             if {tuple(np.round(m.vertices[v], 14)) for v in ed} == {(0.0, 0.0), (round(1 / 16, 14), 0.0)})
    assert {tuple(m.vertices[v]) for v in m.edges[e]} == target
    coeffs = project_Qb(example1_velocity, m, 1, edges=[e])[0]
    # dense midpoint sampling of the parameter, ordinary least squares
    N = 20000
    s = (np.arange(N) + 0.5) / N - 0.5
    P, Q = m.vertices[m.edges[e]]
    xy = P + (s[:, None] + 0.5) * (Q - P)
    vals = example1_velocity(xy[:, 0], xy[:, 1]).T
    A = np.stack([np.ones(N), s], axis=1)
    ref = np.linalg.lstsq(A, vals, rcond=None)[0].T
    np.testing.assert_allclose(coeffs, ref, atol=1e-10)


def test_pressure_projection_exact_integrals():
    m = build_structured(1)
    p = lambda x, y: x**2 * y**2 - 1 / 9
    q = project_pressure(p, m, 1)
    for t in range(2):
        verts = m.vertices[m.elements[t]]
        ref = tri_integral(p, verts) / m.areas[t]
        assert abs(q.coeffs[t, 0] - ref) < 1e-13
    assert np.allclose(project_pressure(lambda x, y: 4.5 + 0 * x, m, 1).coeffs, 4.5)


def test_pressure_projection_preserves_mean():
    m = build_structured(5)
    q = project_pressure(lambda x, y: np.cos(np.pi * x) * np.cos(np.pi * y) + 0 * x, m, 1)
    assert abs(q.mean()) < 1e-12


# -- weak operators ----------------------------------------------------------

def _interp(m, f, k):
    return project_Q0(f, m, k)[0], project_Qb(f, m, k, edges=m.element_edges[0])


@pytest.mark.parametrize("k", [1, 2])
def test_weak_gradient_of_constant_vanishes(k):
    ops = local_operators(REF, k)
    v0, vb = _interp(REF, lambda x, y: np.stack([2.0 + 0 * x, -3.0 + 0 * x]), k)
    assert np.abs(weak_gradient_local(ops, 0, v0, vb)).max() < 1e-13
    assert np.abs(weak_divergence_local(ops, 0, v0, vb)).max() < 1e-13


def test_weak_gradient_of_x():
    m = build_structured(3)
    ops = local_operators(m, 1)
    v = project_velocity(lambda x, y: np.stack([x, 0 * x]), m, 1)
    g = ops.weak_gradient(v)
    np.testing.assert_allclose(g[:, :, :, 0], np.tile([[1.0, 0.0], [0.0, 0.0]], (m.n_elements, 1, 1)),
                               atol=1e-13)


def test_weak_divergence_of_xy():
    m = build_structured(3)
    ops = local_operators(m, 1)
    v = project_velocity(lambda x, y: np.stack([x, y]), m, 1)
    np.testing.assert_allclose(ops.weak_divergence(v)[:, 0], 2.0, atol=1e-13)


@pytest.mark.parametrize("j,comp,mode", [(0, 0, 0), (1, 1, 1), (2, 0, 1), (2, 1, 0)])
def test_weak_gradient_edge_basis_oracle(j, comp, mode):
    k = 1
    ops = local_operators(REF, k)
    v0 = np.zeros((2, 3))
    vb = np.zeros((3, 2, 2))
    vb[j, comp, mode] = 1.0
    ours = weak_gradient_local(ops, 0, v0, vb)

    def vbfun(jj, s, x, y):
        out = np.zeros(2)
        if jj == j:
            out[comp] = s**mode
        return out
    ref = _oracle_weak_gradient(REF, 0, lambda x, y: np.zeros(2), vbfun, k)
    np.testing.assert_allclose(_eval_tensor(REF, 0, ours, 0.3, 0.2, k), ref(0.3, 0.2), atol=1e-12)


def test_weak_gradient_k2_random_oracle():
    k = 2
    rng = np.random.default_rng(7)
    m = build_structured(1)
    ops = local_operators(m, k)
    v0 = rng.standard_normal((2, 6))
    vb = rng.standard_normal((3, 2, 3))
    ours = weak_gradient_local(ops, 1, v0, vb)
    xc, yc = m.centroids[1]
    h = m.diameters[1]
    exps = [(d - b, b) for d in range(k + 1) for b in range(d + 1)]

    def v0fun(x, y):
        X, Y = (x - xc) / h, (y - yc) / h
        return v0 @ np.array([X**a * Y**b for a, b in exps])

    def vbfun(jj, s, x, y):
        return vb[jj] @ np.array([s**i for i in range(k + 1)])
    ref = _oracle_weak_gradient(m, 1, v0fun, vbfun, k)
    for x, y in [(0.6, 0.7), (0.2, 0.9), (0.4, 0.5)]:
        np.testing.assert_allclose(_eval_tensor(m, 1, ours, x, y, k), ref(x, y), atol=1e-10)


def test_weak_divergence_random_vb_oracle():
    rng = np.random.default_rng(11)
    m = build_structured(2, "nw_se")
    ops = local_operators(m, 1)
    for t in (0, 5):
        vb = rng.standard_normal((3, 2, 2))
        ours = weak_divergence_local(ops, t, rng.standard_normal((2, 3)), vb)[0]
        total = 0.0
        for j in range(3):
            a, b = m.elements[t, j], m.elements[t, (j + 1) % 3]
            P, Q = m.vertices[a], m.vertices[b]
            nrm = outward_normal(P, Q)
            flip = a > b
            total += segment_integral(
                lambda tt, x, y: (vb[j] @ np.array([1.0, (1 - tt if flip else tt) - 0.5])) @ nrm, P, Q)
        assert abs(ours - total / m.areas[t]) < 1e-12


def test_weak_operators_linear():
    rng = np.random.default_rng(5)
    m = build_structured(2)
    ops = local_operators(m, 2)
    a, b = rng.standard_normal(2)
    x0, y0 = rng.standard_normal((2, 2, 6))
    xb, yb = rng.standard_normal((2, 3, 2, 3))
    lhs = weak_gradient_local(ops, 3, a * x0 + b * y0, a * xb + b * yb)
    rhs = a * weak_gradient_local(ops, 3, x0, xb) + b * weak_gradient_local(ops, 3, y0, yb)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


# -- DOF bookkeeping ---------------------------------------------------------

@pytest.mark.parametrize("k", [1, 2])
def test_dofmap_partition(k):
    m = build_structured(3)
    d = DofMap(m, k)
    if k == 1:
        assert (2 * d.n0, 2 * d.nb, d.nq) == (6, 4, 1)
    seen = np.zeros(d.n_velocity, dtype=int)
    for t in range(m.n_elements):
        seen[d.interior_offsets[t]:d.interior_offsets[t] + 2 * d.n0] += 1
    for e in range(m.n_edges):
        seen[d.trace_offsets[e]:d.trace_offsets[e] + 2 * d.nb] += 1
    assert np.all(seen == 1)
    assert d.n_pressure == d.nq * m.n_elements
    assert len(d.boundary_dofs) == 4 * 3 * 2 * d.nb


def test_wg_velocity_homogeneous_flag():
    d = DofMap(build_structured(2), 1)
    c = np.zeros(d.n_velocity)
    WgVelocity(c, d, homogeneous=True)
    c[d.boundary_dofs[0]] = 1.0
    with pytest.raises(InvalidArgument):
        WgVelocity(c, d, homogeneous=True)
    with pytest.raises(InvalidArgument):
        WgVelocity(np.zeros(3), d)


def test_trace_single_valued_per_edge():
    m = build_structured(4)
    v = project_velocity(example1_velocity, m, 1)
    loc = v.local()
    d = v.dofmap
    # two neighbours read identical trace coefficients for a shared edge
    e = int(np.flatnonzero(~m.boundary_mask)[0])
    t0, t1 = m.edge_elements[e]
    j0 = list(m.element_edges[t0]).index(e)
    j1 = list(m.element_edges[t1]).index(e)
    sl = lambda j: slice(2 * d.n0 + j * 2 * d.nb, 2 * d.n0 + (j + 1) * 2 * d.nb)
    np.testing.assert_array_equal(loc[t0, sl(j0)], loc[t1, sl(j1)])
