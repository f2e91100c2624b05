"""Coordinate and field maps between Minkowski space, its inversion image and
double-null coordinates.

Points are numpy arrays whose last axis holds the n+1 components
``(x^0, x^1, ..., x^n)``; every function broadcasts over leading axes.
The double-null pair is ``(y, x)`` with ``x = tau + rho`` and
``y = tau - rho + 1/a`` where ``tau = y^0`` and ``rho = |(y^1..y^n)|``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveOmega, OnLightCone, OutOfDomain

CONE_EPS = 1e-10


@dataclass(frozen=True)
class ConeGeometry:
    """Spatial dimension ``n``, cone offset ``a`` and incoming-cone parameter ``lam``.

    The Goursat domain is ``[0, y0] x [x0, 0)`` with ``x0 = lam`` and
    ``y0 = lam + 1/a``.
    """

    n: int
    a: float
    lam: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not (-1.0 / self.a < self.lam < 0):
            raise ValueError(f"lam must lie in (-1/a, 0), got {self.lam}")

    @property
    def x0(self):
        return self.lam

    @property
    def y0(self):
        return self.lam + 1.0 / self.a

    def rho(self, y, x):
        return 0.5 * (1.0 / self.a + x - y)

    def tau(self, y, x):
        return 0.5 * (y + x - 1.0 / self.a)

    def contains(self, y, x):
        y = np.asarray(y)
        x = np.asarray(x)
        return (y >= 0) & (y <= self.y0) & (x >= self.x0) & (x < 0) & (self.rho(y, x) > 0)


def minkowski_dot(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return -u[..., 0] * v[..., 0] + np.sum(u[..., 1:] * v[..., 1:], axis=-1)


def lower_index(p):
    """``p_mu = eta_{mu nu} p^nu``."""
    out = np.array(p, dtype=float, copy=True)
    out[..., 0] *= -1.0
    return out


def _invert(p):
    p = np.asarray(p, dtype=float)
    q = minkowski_dot(p, p)
    tol = CONE_EPS * (1.0 + np.sum(p * p, axis=-1))
    if np.any(np.abs(q) <= tol):
        raise OnLightCone("point lies on the light cone of the origin")
    return p / q[..., None]


def compactify(p):
    """Inversion ``y^a = x^a / eta(x, x)``; raises OnLightCone on the null cone."""
    return _invert(p)


def decompactify(q):
    """Inverse of :func:`compactify` (the inversion is an involution)."""
    return _invert(q)


def omega(q):
    """Conformal factor ``-eta(y, y)``; positive inside timelike directions."""
    return -minkowski_dot(q, q)


def omega_dn(y, x, g):
    """Conformal factor in double-null coordinates, ``-x (1/a - y)``."""
    return -np.asarray(x, dtype=float) * (1.0 / g.a - np.asarray(y, dtype=float))


def to_double_null(q, g, domain="image"):
    """Map a compactified point to ``(y, x)``.

    ``domain="image"`` only requires the point to lie in the closure of the
    image of the cone interior (``y >= 0``, ``x <= 0``, ``rho >= 0``);
    ``domain="D"`` additionally requires the Goursat box ``[0, y0] x [x0, 0)``.
    """
    q = np.asarray(q, dtype=float)
    tau = q[..., 0]
    rho = np.sqrt(np.sum(q[..., 1:] ** 2, axis=-1))
    ynull = tau - rho + 1.0 / g.a
    xnull = tau + rho
    tol = 1e-12 * (1.0 + 1.0 / g.a)
    bad = (ynull < -tol) | (xnull > tol)
    if domain == "D":
        bad |= (ynull > g.y0 + tol) | (xnull < g.x0 - tol) | (xnull >= 0)
    if np.any(bad):
        raise OutOfDomain("point leaves the double-null domain")
    return ynull, xnull


def from_double_null(y, x, g, direction=None):
    """Compactified point for ``(y, x)``; spatial part along ``direction`` (default e1)."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    tau = g.tau(y, x)
    rho = g.rho(y, x)
    if np.any(rho < 0):
        raise OutOfDomain("rho < 0")
    if direction is None:
        direction = np.zeros(g.n)
        direction[0] = 1.0
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    out = np.empty(np.broadcast(tau, rho).shape + (g.n + 1,))
    out[..., 0] = tau
    out[..., 1:] = rho[..., None] * direction
    return out


def rescale(f_value, om, n):
    """``f_hat = Omega^{-(n-1)/2} f``."""
    om = np.asarray(om, dtype=float)
    if np.any(om <= 0):
        raise NonPositiveOmega("Omega must be positive")
    return om ** (-(n - 1) / 2.0) * f_value


def unrescale(fhat_value, om, n):
    om = np.asarray(om, dtype=float)
    if np.any(om <= 0):
        raise NonPositiveOmega("Omega must be positive")
    return om ** ((n - 1) / 2.0) * fhat_value


def push_derivative(fhat, grad_fhat, q, n):
    """Physical gradient ``(df/dx^mu) o phi^{-1}`` from the rescaled field.

    ``grad_fhat`` holds ``d fhat / d y^mu`` on its last axis.
    """
    q = np.asarray(q, dtype=float)
    grad_fhat = np.asarray(grad_fhat, dtype=float)
    fhat = np.asarray(fhat, dtype=float)
    om = omega(q)
    if np.any(om <= 0):
        raise NonPositiveOmega("Omega must be positive")
    ylow = lower_index(q)
    euler = np.sum(q * grad_fhat, axis=-1)
    bracket = ((1 - n) * fhat)[..., None] * ylow - om[..., None] * grad_fhat \
        - 2.0 * ylow * euler[..., None]
    return (om ** ((n - 1) / 2.0))[..., None] * bracket


def dt_dr_coefficients(y, x, g):
    """Coefficients of ``d_t`` and ``d_r`` in the ``(d_x, d_y)`` basis.

    Returns ``((x^2, (y - 1/a)^2), (x^2, -(y - 1/a)^2))``.
    """
    cx = np.asarray(x, dtype=float) ** 2
    cy = (np.asarray(y, dtype=float) - 1.0 / g.a) ** 2
    return (cx, cy), (cx, -cy)


def wave_box_fd(f, p, h):
    """Centered second-order ``eta^{mu nu} d_mu d_nu f`` at a single point ``p``."""
    p = np.asarray(p, dtype=float)
    f0 = f(p)
    total = 0.0
    for mu in range(p.shape[-1]):
        e = np.zeros_like(p)
        e[mu] = h
        second = (f(p + e) - 2.0 * f0 + f(p - e)) / (h * h)
        total += -second if mu == 0 else second
    return total


def conformal_wave_residual(f, q, h, n):
    """``|box_x f - Omega^{(n+3)/2} box_y f_hat|`` at the compactified point ``q``.

    Both boxes are centered finite differences with step ``h``; ``f`` takes a
    physical point and returns a scalar.
    """
    q = np.asarray(q, dtype=float)
    om = omega(q)
    if om <= 0:
        raise NonPositiveOmega("Omega must be positive")

    def fhat(yq):
        return omega(yq) ** (-(n - 1) / 2.0) * f(decompactify(yq))

    lhs = wave_box_fd(f, decompactify(q), h)
    rhs = om ** ((n + 3) / 2.0) * wave_box_fd(fhat, q, h)
    return abs(lhs - rhs)


def double_null_box(values, y, x, g):
    """Reduced wave operator ``-4 w_xy + (n-1)/rho (w_x - w_y)`` on a node grid.

    ``values`` has shape ``(len(y), len(x), ...)``; derivatives are second-order
    centered in the interior and second-order one-sided on the edges.
    """
    values = np.asarray(values, dtype=float)
    wy = np.gradient(values, y, axis=0, edge_order=2)
    wx = np.gradient(values, x, axis=1, edge_order=2)
    wxy = np.gradient(wx, y, axis=0, edge_order=2)
    Y, X = np.meshgrid(y, x, indexing="ij")
    k = (g.n - 1) / g.rho(Y, X)
    extra = values.ndim - 2
    k = k.reshape(k.shape + (1,) * extra)
    return -4.0 * wxy + k * (wx - wy)
