"""Reference problems: a manufactured smooth solution and lid-driven flow."""
import numpy as np

from .assembly import BrinkmanProblem

TWO_PI = 2.0 * np.pi


def sine_kappa_inv(a):
    """``kappa_inv(x, y) = a (sin(2 pi x) + 1.1)``."""
    def kappa_inv(x, y):
        return a * (np.sin(TWO_PI * np.asarray(x)) + 1.1) + 0.0 * np.asarray(y)
    return kappa_inv


def example1_velocity(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return np.stack([np.sin(TWO_PI * x) * np.cos(TWO_PI * y),
                     -np.cos(TWO_PI * x) * np.sin(TWO_PI * y)])


def example1_velocity_gradient(x, y):
    """``[c][d] = d u_c / d x_d``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    sx, cx = np.sin(TWO_PI * x), np.cos(TWO_PI * x)
    sy, cy = np.sin(TWO_PI * y), np.cos(TWO_PI * y)
    return TWO_PI * np.array([[cx * cy, -sx * sy],
                              [sx * sy, -cx * cy]])


def example1_pressure(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return x**2 * y**2 - 1.0 / 9.0


def example1_problem(a=10.0, mu=1.0, order=1, stab_visc_scaling=True,
                     kappa_sampling="centroid"):
    """Divergence-free trigonometric velocity, polynomial pressure.

    The body force is ``mu (8 pi^2 + kappa_inv) u + grad p`` since
    ``-lap u = 8 pi^2 u`` for this velocity.
    """
    kinv = sine_kappa_inv(a)

    def force(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        u = example1_velocity(x, y)
        grad_p = np.stack([2 * x * y**2, 2 * x**2 * y])
        return mu * (2 * TWO_PI**2 + kinv(x, y)) * u + grad_p

    return BrinkmanProblem(mu=mu, kappa_inv=kinv, force=force, boundary=example1_velocity,
                           order=order, stab_visc_scaling=stab_visc_scaling,
                           kappa_sampling=kappa_sampling, name=f"example1(a={a:g}, mu={mu:g})")


def lid_boundary(speed=1.0, top_only=False):
    """``g = (speed, 0)`` on the whole boundary, or on ``y = 1`` only."""
    def g(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        ux = np.full(np.broadcast(x, y).shape, float(speed))
        if top_only:
            ux = np.where(np.isclose(y, 1.0), ux, 0.0)
        return np.stack([ux, np.zeros_like(ux)])
    return g


def lid_problem(kappa_inv, mu=0.01, speed=1.0, top_only=False, order=1,
                stab_visc_scaling=True):
    """Porous-media flow with ``f = 0`` and constant boundary velocity."""
    return BrinkmanProblem(mu=mu, kappa_inv=kappa_inv, boundary=lid_boundary(speed, top_only),
                           order=order, stab_visc_scaling=stab_visc_scaling, name="lid_flow")
