import numpy as np
import pytest

from wgbrinkman import (BrinkmanProblem, InvalidArgument, NoConvergence, SolveOptions, assemble,
                        build_structured, solve)
from wgbrinkman.benchmarks import example1_problem
from wgbrinkman.solver import block_preconditioner, minres, solve_linear


def test_zero_data_gives_zero_solution():
    sysm = assemble(BrinkmanProblem(), build_structured(4))
    u, p, rep = solve(sysm)
    assert rep.iterations == 0
    assert not np.any(u.coeffs) and not np.any(p.coeffs)


def test_minres_matches_dense_oracle_n1():
    sysm = assemble(example1_problem(), build_structured(1))
    K = sysm.matrix
    assert K.shape == (19, 19)
    rng = np.random.default_rng(0)
    b = rng.standard_normal(K.shape[0])
    x, it, res, _ = minres(K, b, block_preconditioner(sysm), tol=1e-12, max_iter=500)
    ref = np.linalg.solve(K.toarray(), b)
    np.testing.assert_allclose(x, ref, atol=1e-8 * np.abs(ref).max())
    eig = np.linalg.eigvalsh(K.toarray())
    assert eig.min() < 0 < eig.max()  # indefinite


@pytest.mark.parametrize("n", [2, 4, 8])
def test_methods_agree(n):
    sysm = assemble(example1_problem(10.0, 1.0), build_structured(n))
    x1 = solve_linear(sysm, SolveOptions("direct"))[0]
    x2 = solve_linear(sysm, SolveOptions("krylov_minres"))[0]
    assert np.linalg.norm(x1 - x2) <= 10 * 1e-10 * np.linalg.norm(x1)


@pytest.mark.parametrize("method", ["krylov_minres", "direct"])
def test_residual_contract_and_postconditions(method):
    p = example1_problem(10.0, 0.01)
    sysm = assemble(p, build_structured(8))
    opts = SolveOptions(method)
    u, q, rep = solve(sysm, opts)
    x = np.concatenate([u.coeffs[sysm.free_dofs], q.coeffs.ravel(), [0.0]])
    assert rep.residual <= opts.tol
    assert abs(rep.pressure_mean) <= 1e-10
    np.testing.assert_array_equal(u.coeffs[sysm.boundary_dofs], sysm.boundary_values)
    # the stored pressure differs from the solver's by a constant at most
    r = sysm.rhs - sysm.matrix @ x
    assert np.linalg.norm(r[:len(sysm.free_dofs)]) <= 1e-9 * np.linalg.norm(sysm.rhs)


def test_history_monotone():
    sysm = assemble(example1_problem(10.0, 1.0), build_structured(8))
    hist = solve(sysm)[2].history
    assert np.all(np.diff(hist) <= 1e-10)


def test_no_convergence_carries_best():
    sysm = assemble(example1_problem(), build_structured(4))
    with pytest.raises(NoConvergence) as info:
        solve(sysm, SolveOptions(max_iter=5))
    assert info.value.residual > 1e-10
    assert info.value.x is not None and len(info.value.x) == sysm.n_unknowns


def test_unpreconditioned_minres():
    sysm = assemble(example1_problem(), build_structured(3))
    u, p, rep = solve(sysm, SolveOptions(preconditioner="none", max_iter=5000))
    assert rep.residual <= 1e-10


@pytest.mark.parametrize("kw", [dict(method="cg"), dict(tol=0.0), dict(tol=1.0), dict(max_iter=0),
                                dict(preconditioner="ilu")])
def test_options_validation(kw):
    with pytest.raises(InvalidArgument):
        SolveOptions(**kw)
