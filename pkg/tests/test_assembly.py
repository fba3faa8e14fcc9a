import numpy as np
import pytest

from wgbrinkman import (BrinkmanProblem, DofMap, InternalError, InvalidProblem, assemble,
                        build_structured, local_a, local_b)
from wgbrinkman.benchmarks import example1_problem
from wgbrinkman.fespace import project_velocity
from wgbrinkman.mesh import from_triangles

from oracles import outward_normal, segment_integral, tri_integral

REF = from_triangles(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]))


def _unit_problem(**kw):
    return BrinkmanProblem(mu=kw.pop("mu", 1.0), kappa_inv=lambda x, y: 1.0 + 0 * x, **kw)


def _const_local(c, d):
    """Local vector of v0 = vb = c (constant modes only)."""
    v = np.zeros(d.n_local)
    for comp in range(2):
        v[comp * d.n0] = c[comp]
        for j in range(3):
            v[2 * d.n0 + j * 2 * d.nb + comp * d.nb] = c[comp]
    return v


def test_constant_velocity_only_mass_survives():
    m = build_structured(2)
    p = _unit_problem()
    A = local_a(p, m)
    d = DofMap(m, 1)
    c = np.array([0.7, -1.3])
    v = _const_local(c, d)
    vals = np.einsum("a,tab,b->t", v, A, v)
    np.testing.assert_allclose(vals, m.areas * (c @ c), rtol=1e-13)


def _oracle_diag_interior(mesh, i, comp, mu, kinv, mu_s):
    """a(phi, phi) for interior basis phi (scaled monomial i in component comp)."""
    verts = mesh.vertices[mesh.elements[0]]
    xc, yc = verts.mean(axis=0)
    h = max(np.linalg.norm(verts[a] - verts[b]) for a in range(3) for b in range(3))
    exps = [(0, 0), (1, 0), (0, 1)]
    a, b = exps[i]

    def phi(x, y):
        return ((x - xc) / h) ** a * ((y - yc) / h) ** b
    # for k = 1 the weak gradient of an interior-only function is zero
    mass = mu * kinv * tri_integral(lambda x, y: phi(x, y) ** 2, verts)
    stab = 0.0
    for j in range(3):
        P, Q = verts[j], verts[(j + 1) % 3]
        stab += segment_integral(lambda t, x, y: phi(x, y) ** 2, P, Q)
    return mass + mu_s / h * stab


@pytest.mark.parametrize("i", [0, 1, 2])
def test_local_a_interior_diagonal_oracle(i):
    p = _unit_problem()
    A = local_a(p, REF)[0]
    for comp in range(2):
        idx = comp * 3 + i
        assert abs(A[idx, idx] - _oracle_diag_interior(REF, i, comp, 1.0, 1.0, 1.0)) < 1e-12


def test_local_a_edge_diagonal_oracle():
    # trace basis: constant x-mode on local edge 1; weak gradient is (1/|T|) int_e n
    p = _unit_problem(mu=2.0)
    A = local_a(p, REF)[0]
    d = DofMap(REF, 1)
    idx = 2 * d.n0 + 1 * 2 * d.nb
    verts = REF.vertices[REF.elements[0]]
    P, Q = verts[1], verts[2]
    L = np.linalg.norm(Q - P)
    n = outward_normal(P, Q)
    G = np.array([n * L, [0.0, 0.0]]) / 0.5  # grad_w (1, 0) on that edge only
    grad = 2.0 * 0.5 * np.sum(G**2)
    h = np.sqrt(2.0)
    stab = 2.0 / h * L
    assert abs(A[idx, idx] - (grad + stab)) < 1e-12


def test_local_a_symmetric_psd():
    p = example1_problem(10.0, 1.0)
    A = local_a(p, build_structured(3))
    assert np.abs(A - A.transpose(0, 2, 1)).max() < 1e-12 * np.abs(A).max()
    assert np.linalg.eigvalsh(A).min() > 0  # kappa mass removes the constant kernel


def test_mu_homogeneity():
    m = build_structured(2)
    p1 = example1_problem(10.0, 1.0, stab_visc_scaling=True)
    p10 = example1_problem(10.0, 10.0, stab_visc_scaling=True)
    np.testing.assert_allclose(local_a(p10, m), 10 * local_a(p1, m), rtol=1e-13, atol=1e-13)


def test_stabilizer_switch():
    m = build_structured(2)
    on = example1_problem(10.0, 0.01, stab_visc_scaling=True)
    off = example1_problem(10.0, 0.01, stab_visc_scaling=False)
    np.testing.assert_allclose(on.stabilizer_coefficient(m) * 100, off.stabilizer_coefficient(m))


def test_local_b_constant_and_linear():
    m = build_structured(2)
    d = DofMap(m, 1)
    B = local_b(_unit_problem(), m)
    v = _const_local([1.0, 2.0], d)
    assert np.abs(B @ v).max() < 1e-14
    w = project_velocity(lambda x, y: np.stack([x, y]), m, 1).local()
    np.testing.assert_allclose(np.einsum("tqa,ta->tq", B, w)[:, 0], 2 * m.areas, rtol=1e-13)


def test_local_b_random_trace_oracle():
    rng = np.random.default_rng(2)
    m = build_structured(1)
    d = DofMap(m, 1)
    B = local_b(_unit_problem(), m)
    for t in range(2):
        v = rng.standard_normal(d.n_local)
        ref = 0.0
        for j in range(3):
            a, b = m.elements[t, j], m.elements[t, (j + 1) % 3]
            P, Q = m.vertices[a], m.vertices[b]
            coef = v[2 * d.n0 + j * 4: 2 * d.n0 + (j + 1) * 4].reshape(2, 2)
            nrm = outward_normal(P, Q)
            flip = a > b
            ref += segment_integral(
                lambda s, x, y: (coef @ np.array([1.0, (1 - s if flip else s) - 0.5])) @ nrm, P, Q)
        assert abs(B[t, 0] @ v - ref) < 1e-13


def test_system_dimension_n1():
    m = build_structured(1)
    sysm = assemble(example1_problem(), m)
    # exhaustive enumeration of unknowns
    dofs = [("v0", t, c, a) for t in range(m.n_elements) for c in range(2) for a in range(3)]
    dofs += [("vb", e, c, a) for e in range(m.n_edges) for c in range(2) for a in range(2)]
    dofs += [("p", t) for t in range(m.n_elements)] + [("lambda",)]
    fixed = [x for x in dofs if x[0] == "vb" and m.boundary_mask[x[1]]]
    assert len(dofs) == 35 and len(fixed) == 16
    assert sysm.matrix.shape == (19, 19) == (sysm.n_unknowns,) * 2


def test_zero_data_zero_rhs():
    sysm = assemble(_unit_problem(), build_structured(4))
    assert not np.any(sysm.rhs)


def test_example1_symmetry():
    sysm = assemble(example1_problem(10.0, 1.0), build_structured(16))
    assert sysm.asymmetry() <= 1e-12
    K = sysm.matrix
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()


def test_b_rows_couple_own_traces_only():
    m = build_structured(3)
    sysm = assemble(example1_problem(), m)
    d = sysm.dofmap
    for t in range(m.n_elements):
        cols = set(sysm.B[t].indices)
        own = set(d.element_velocity_dofs[t, 2 * d.n0:])
        assert cols <= own


def test_assembly_deterministic():
    m = build_structured(5)
    s1, s2 = assemble(example1_problem(), m), assemble(example1_problem(), m)
    for a, b in ((s1.A, s2.A), (s1.B, s2.B), (s1.matrix, s2.matrix)):
        np.testing.assert_array_equal(a.indptr, b.indptr)
        np.testing.assert_array_equal(a.indices, b.indices)
        np.testing.assert_array_equal(a.data, b.data)
    np.testing.assert_array_equal(s1.rhs, s2.rhs)


def test_nonpositive_kappa_rejected():
    bad = BrinkmanProblem(kappa_inv=lambda x, y: x - 0.5)
    with pytest.raises(InvalidProblem):
        assemble(bad, build_structured(2))
    with pytest.raises(InvalidProblem):
        BrinkmanProblem(mu=0.0)


def test_mismatched_dofmap():
    m = build_structured(2)
    with pytest.raises(InternalError):
        assemble(example1_problem(), m, DofMap(build_structured(2), 1))


def test_ellipticity_bounds():
    lo, hi = example1_problem(10.0).ellipticity_bounds(build_structured(8))
    assert 0 < lo <= hi <= 21.0
