"""Solvers for the symmetric indefinite saddle-point system."""
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import InvalidArgument, NoConvergence, SingularSystem
from .fespace import PressureField, WgVelocity, local_operators

logger = logging.getLogger(__name__)

METHODS = ("krylov_minres", "direct")
PRECONDITIONERS = ("none", "diag_A_pressure_mass")


@dataclass
class SolveOptions:
    method: str = "krylov_minres"
    tol: float = 1e-10
    max_iter: int = 20000
    preconditioner: str = "diag_A_pressure_mass"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgument(f"method must be one of {METHODS}, got {self.method!r}")
        if self.preconditioner not in PRECONDITIONERS:
            raise InvalidArgument(f"preconditioner must be one of {PRECONDITIONERS}")
        if not (0.0 < self.tol < 1.0):
            raise InvalidArgument(f"tol must lie in (0, 1), got {self.tol}")
        if int(self.max_iter) < 1:
            raise InvalidArgument(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float
    wall_time: float
    divergence_residual: float
    pressure_mean: float = 0.0
    history: list = field(default_factory=list, repr=False)


def minres(A, b, psolve=None, tol=1e-10, max_iter=10000, check_every=10):
    """Preconditioned MINRES for symmetric ``A`` and SPD preconditioner.

    ``psolve(r)`` applies the inverse preconditioner. Iteration stops when
    the *unpreconditioned* relative residual ``|b - A x| / |b|`` drops below
    ``tol``; it is evaluated every ``check_every`` steps and at every step
    once close. Returns ``(x, iterations, residual, history)`` where
    ``history`` holds the monotone preconditioned residual estimates.
    """
    psolve = psolve or (lambda r: r)
    n = len(b)
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0, 0.0, [0.0]
    eps = np.finfo(float).eps

    r1 = b.copy()
    y = psolve(r1)
    beta1 = np.dot(r1, y)
    if beta1 <= 0:
        raise InvalidArgument("preconditioner is not positive definite")
    beta1 = np.sqrt(beta1)
    oldb, beta, dbar, epsln, phibar = 0.0, beta1, 0.0, 0.0, beta1
    cs, sn = -1.0, 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    r2 = r1
    history = [1.0]
    true_res = 1.0
    best = (np.inf, x)

    for itn in range(1, max_iter + 1):
        v = y / beta
        y = A @ v
        if itn >= 2:
            y = y - (beta / oldb) * r1
        alfa = np.dot(v, y)
        y = y - (alfa / beta) * r2
        r1, r2 = r2, y
        y = psolve(r2)
        oldb = beta
        beta2 = np.dot(r2, y)
        if beta2 < 0:
            raise InvalidArgument("preconditioner is not positive definite")
        beta = np.sqrt(beta2)
        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.hypot(gbar, beta), eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar
        w1, w2 = w2, w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        history.append(phibar / beta1)

        if itn % check_every == 0 or true_res < 1e3 * tol or beta < eps * beta1:
            true_res = np.linalg.norm(b - A @ x) / bnorm
            if true_res < best[0]:
                best = (true_res, x.copy())
            if true_res <= tol:
                return x, itn, true_res, history
            if beta < eps * beta1:
                # Krylov space exhausted; nothing left to gain
                break
    raise NoConvergence(
        f"MINRES stopped after {itn} iterations at relative residual {best[0]:.3e}",
        residual=best[0], x=best[1], history=history)


def block_preconditioner(system):
    """Inverse of blockdiag(diag(A_ff), M_p / mu, mu |Omega|) as a callable."""
    mu = system.problem.mu
    nf = len(system.free_dofs)
    dA = system.matrix.diagonal()[:nf]
    ops = local_operators(system.dofmap.mesh, system.dofmap.order)
    Minv = np.linalg.inv(ops.massq)
    Pinv = sp.block_diag(list(mu * Minv), format="csr") if Minv.shape[1] > 1 else \
        sp.diags(mu * Minv[:, 0, 0])
    inv_dA = 1.0 / dA
    area = system.dofmap.mesh.areas.sum()
    lam = 1.0 / (mu * area)

    def apply(r):
        out = np.empty_like(r)
        out[:nf] = inv_dA * r[:nf]
        out[nf:-1] = Pinv @ r[nf:-1]
        out[-1] = lam * r[-1]
        return out
    return apply


def _direct(system, tol):
    """Sparse LU of the system with the multiplier dropped and one pressure pinned.

    The dense mean-value row ruins fill-reducing orderings, so it is removed;
    for compatible boundary data the multiplier is zero and the dropped
    continuity row is implied by the others. The caller checks the residual
    against the full system.
    """
    K, r = system.matrix, system.rhs
    nf = len(system.free_dofs)
    keep = np.r_[0:nf, nf + 1:K.shape[0] - 1]
    K0 = K[keep][:, keep].tocsc()
    err = None
    for kwargs in ({}, dict(options=dict(SymmetricMode=True), diag_pivot_thresh=0.0)):
        x = np.zeros(K.shape[0])
        try:
            lu = spla.splu(K0, permc_spec="COLAMD", **kwargs)
        except RuntimeError as exc:
            err = exc
            continue
        y = lu.solve(r[keep])
        y += lu.solve(r[keep] - K0 @ y)  # one refinement step
        if np.all(np.isfinite(y)):
            x[keep] = y
            _remove_pressure_mean(system, x)
            if np.linalg.norm(r - K @ x) <= tol * np.linalg.norm(r):
                return x
        err = None
    if err is not None:
        raise SingularSystem(str(err)) from err
    return x


def _remove_pressure_mean(system, x):
    nf, nq = len(system.free_dofs), system.dofmap.nq
    p = x[nf:-1]
    c = system.constraint
    ones = np.zeros_like(p)
    ones[::nq] = 1.0  # constant basis function of every element
    p -= ones * (c @ p) / (c @ ones)


def solve_linear(system, options=None):
    """Solve ``system.matrix x = system.rhs``; returns ``(x, iterations, residual, history)``."""
    options = options or SolveOptions()
    K, r = system.matrix, system.rhs
    rnorm = np.linalg.norm(r)
    if rnorm == 0.0:
        return np.zeros(len(r)), 0, 0.0, [0.0]
    if options.method == "direct":
        x = _direct(system, options.tol)
        res = np.linalg.norm(r - K @ x) / rnorm
        if res > options.tol:
            raise NoConvergence(f"direct solve residual {res:.3e} exceeds {options.tol:.1e}",
                                residual=res, x=x)
        return x, 1, res, [res]
    psolve = None
    if options.preconditioner == "diag_A_pressure_mass":
        psolve = block_preconditioner(system)
    return minres(K, r, psolve, tol=options.tol, max_iter=int(options.max_iter))


def solve(system, options=None):
    """Solve an assembled :class:`~wgbrinkman.assembly.SaddleSystem`.

    Returns ``(velocity, pressure, report)``; the velocity carries the
    prescribed boundary trace and the pressure has zero mean.
    """
    options = options or SolveOptions()
    t0 = time.perf_counter()
    x, iters, res, history = solve_linear(system, options)
    u, p, _ = system.split(x)
    dofmap = system.dofmap
    velocity = WgVelocity(u, dofmap)
    pressure = PressureField(p, dofmap)
    ops = local_operators(dofmap.mesh, dofmap.order)
    # constants lie in the kernel of B^T on free DOFs, so this shift is exact
    mean = pressure.mean(ops)
    pressure.coeffs[:, 0] -= mean  # first basis function is the constant 1
    div_res = float(np.max(np.abs(system.B @ u))) if system.B.shape[0] else 0.0
    report = SolveReport(options.method, iters, float(res), time.perf_counter() - t0,
                         div_res, pressure.mean(ops), history)
    logger.info("solve: %s, %d iterations, residual %.2e, %.2fs",
                options.method, iters, res, report.wall_time)
    return velocity, pressure, report

