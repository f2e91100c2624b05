"""Source terms for the reduced Goursat problem.

A source is anything with ``rhs(y, x, w, dy, dx, g)`` returning the right-hand
side of ``box w = rhs`` in double-null coordinates.  ``w``, ``dy`` and ``dx``
carry a trailing component axis (length ``n_components``) when ``y`` and ``x``
do not; plain scalars are accepted too.

Monomial sources keep the powers of ``|x|`` symbolic so that the
``|x|^{-(n+shift)/2}`` prefactor and the ``|x|^{(n-1)/2}`` argument weights are
combined into one exponent before anything is evaluated near ``x = 0``.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (BadAlpha, BadOrder, BadTarget, DegenerateDirection, EmptySpec,
                     ExponentUnderflow)

Coefficient = Union[float, Callable]


def _expand(y, x, w):
    """Give ``y`` and ``x`` a trailing axis when ``w`` has a component axis."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.ndim == y.ndim + 1:
        return y[..., None], x[..., None]
    return y, x


@dataclass(frozen=True)
class MonomialTerm:
    """``coeff * P^pow_p * Qy^pow_qy * Qx^pow_qx * QA^pow_qA * |x|^extra_x_exponent``.

    ``P = |x|^s w``, ``Qy = |x|^s dy w``, ``Qx = |x|^s x dx w``, ``QA = |x|^s dA w``
    with ``s = (n-1)/2``.  ``coeff`` may be a callable of ``(y, x)``.
    """

    coeff: Coefficient = 1.0
    pow_p: int = 0
    pow_qy: int = 0
    pow_qx: int = 0
    pow_qA: int = 0
    extra_x_exponent: float = 0.0

    def __post_init__(self):
        for name in ("pow_p", "pow_qy", "pow_qx", "pow_qA"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v}")

    @property
    def degree(self):
        return self.pow_p + self.pow_qy + self.pow_qx + self.pow_qA

    def coefficient(self, y, x):
        if callable(self.coeff):
            return self.coeff(y, x)
        return self.coeff


@dataclass(frozen=True)
class GateResult:
    passed: bool
    margin: float
    threshold: float
    n_min: int


def dimension_gate(n, r, alpha, shift=3.0):
    """Check ``n >= 1 + (shift+1)/(r-1) - 2 alpha``.

    ``shift`` sets the prefactor exponent ``(n + shift)/2``: 3 for the generic
    problem, 1 for wave maps (which gives ``n >= 1 + 2/(r-1) - 2 alpha``).
    """
    if not (-1.0 < alpha <= -0.5):
        raise BadAlpha(f"alpha must lie in (-1, -1/2], got {alpha}")
    if r < 2:
        raise BadOrder(f"zero order must be >= 2, got {r}")
    threshold = 1.0 + (shift + 1.0) / (r - 1.0) - 2.0 * alpha
    margin = n - threshold
    n_min = int(math.ceil(threshold - 1e-12))
    return GateResult(passed=margin >= -1e-12, margin=margin, threshold=threshold, n_min=n_min)


@dataclass(frozen=True)
class SourceSpec:
    """Finite sum of monomials with prefactor ``|x|^{-(n + prefactor_shift)/2}``."""

    terms: Sequence[MonomialTerm] = ()
    prefactor_shift: float = 3.0
    n_components: int = 1

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def zero_order(self):
        if not self.terms:
            raise EmptySpec("source has no terms")
        return min(t.degree for t in self.terms)

    def prefactor_exponent(self, n):
        return (n + self.prefactor_shift) / 2.0

    def exponent(self, term, n):
        """Net power of ``|x|`` multiplying ``w^p (dy w)^qy (dx w)^qx (dA w)^qA``."""
        return (-self.prefactor_exponent(n) + term.degree * (n - 1) / 2.0
                + term.pow_qx + term.extra_x_exponent)

    def exponent_margins(self, n, alpha):
        """Per-term ``E + (d-1) alpha``; all non-negative iff the weighted RHS stays bounded."""
        return [self.exponent(t, n) + (t.degree - 1) * alpha for t in self.terms]

    def gate(self, n, alpha):
        return dimension_gate(n, self.zero_order, alpha, shift=self.prefactor_shift)

    def rhs(self, y, x, w, dy, dx, g, dA=None):
        y, x = _expand(y, x, w)
        w = np.asarray(w, dtype=float)
        dy = np.asarray(dy, dtype=float)
        dx = np.asarray(dx, dtype=float)
        absx = np.abs(x)
        out = np.zeros(np.broadcast(w, x).shape)
        for term in self.terms:
            e = self.exponent(term, g.n)
            if e < 0 and np.any(absx == 0):
                raise ExponentUnderflow(f"negative |x| exponent {e} evaluated at x = 0")
            val = term.coefficient(y, x) * absx ** e
            if term.pow_qx % 2:
                val = -val
            if term.pow_p:
                val = val * w ** term.pow_p
            if term.pow_qy:
                val = val * dy ** term.pow_qy
            if term.pow_qx:
                val = val * dx ** term.pow_qx
            if term.pow_qA:
                # symmetric fields have no angular derivative
                da = 0.0 if dA is None else np.asarray(dA, dtype=float)
                val = val * da ** term.pow_qA
            out = out + val
        return out

    def rhs_naive(self, y, x, w, dy, dx, g, dA=None):
        """Same right-hand side evaluated literally, weight by weight."""
        y, x = _expand(y, x, w)
        absx = np.abs(x)
        s = (g.n - 1) / 2.0
        P = absx ** s * np.asarray(w, dtype=float)
        Qy = absx ** s * np.asarray(dy, dtype=float)
        Qx = absx ** s * x * np.asarray(dx, dtype=float)
        QA = absx ** s * (0.0 if dA is None else np.asarray(dA, dtype=float))
        G = 0.0
        for term in self.terms:
            G = G + (term.coefficient(y, x) * absx ** term.extra_x_exponent
                     * P ** term.pow_p * Qy ** term.pow_qy * Qx ** term.pow_qx
                     * QA ** term.pow_qA)
        return absx ** (-self.prefactor_exponent(g.n)) * G


@dataclass(frozen=True)
class Forcing:
    """Field-independent right-hand side ``func(y, x)`` (manufactured solutions)."""

    func: Callable
    n_components: int = 1
    zero_order = None

    def rhs(self, y, x, w, dy, dx, g, dA=None):
        y, x = _expand(y, x, w)
        return np.broadcast_to(self.func(y, x), np.broadcast(np.asarray(w), x).shape).astype(float)


def cubic_source(coeff=1.0, n_components=1):
    return SourceSpec((MonomialTerm(coeff, pow_p=3),), n_components=n_components)


def scaling_probe(source, g, y, x, direction, eps_grid):
    """Log-log slope of ``|rhs(eps * direction)|`` against ``eps``.

    ``direction`` is ``(w, dy, dx)`` for one state.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    if np.log10(eps_grid.max() / eps_grid.min()) < 3.0 - 1e-9:
        raise ValueError("eps grid must span at least three decades")
    w, dy, dx = (np.asarray(d, dtype=float) for d in direction)
    mags = np.array([np.linalg.norm(np.atleast_1d(source.rhs(y, x, e * w, e * dy, e * dx, g)))
                     for e in eps_grid])
    if np.all(mags == 0):
        raise DegenerateDirection("direction annihilates every term")
    if np.any(mags == 0):
        raise DegenerateDirection("source vanishes at some eps along this direction")
    slope, _ = np.polyfit(np.log(eps_grid), np.log(mags), 1)
    return slope


# --- wave maps -------------------------------------------------------------

class FlatTarget:
    def __init__(self, N):
        self.N = N

    def christoffel(self, f):
        f = np.asarray(f, dtype=float)
        return np.zeros(f.shape[:-1] + (self.N, self.N, self.N))


class ConstantCurvatureTarget:
    """Space form of curvature ``K`` in geodesic normal coordinates.

    The metric is truncated at quadratic order,
    ``g_ab = delta_ab - (K/3)(|f|^2 delta_ab - f_a f_b)``; the Christoffel symbols
    are computed exactly for that truncated metric.
    """

    def __init__(self, K, N):
        if N < 1:
            raise ValueError("target dimension must be >= 1")
        self.K = float(K)
        self.N = int(N)

    def metric(self, f):
        f = np.asarray(f, dtype=float)
        eye = np.eye(self.N)
        r2 = np.sum(f * f, axis=-1)[..., None, None]
        return eye - (self.K / 3.0) * (r2 * eye - f[..., :, None] * f[..., None, :])

    def metric_derivative(self, f):
        """``d_d g_ab`` indexed ``[..., d, a, b]``."""
        f = np.asarray(f, dtype=float)
        eye = np.eye(self.N)
        t1 = 2.0 * f[..., :, None, None] * eye[None, :, :]
        t2 = eye[:, :, None] * f[..., None, None, :]
        t3 = f[..., None, :, None] * eye[:, None, :]
        return -(self.K / 3.0) * (t1 - t2 - t3)

    def christoffel(self, f):
        """``Gamma^a_bc`` indexed ``[..., a, b, c]``."""
        dg = self.metric_derivative(f)
        # lowered: Gamma_{d,bc} = (d_b g_dc + d_c g_db - d_d g_bc) / 2
        low = 0.5 * (np.einsum("...bdc->...dbc", dg) + np.einsum("...cdb->...dbc", dg) - dg)
        ginv = np.linalg.inv(self.metric(f))
        return np.einsum("...ad,...dbc->...abc", ginv, low)

    def exact_metric(self, f):
        """Round (K > 0) or hyperbolic (K < 0) metric in normal coordinates."""
        f = np.asarray(f, dtype=float)
        eye = np.eye(self.N)
        r = np.sqrt(np.sum(f * f, axis=-1))[..., None, None]
        safe = np.where(r > 0, r, 1.0)
        fhat = f[..., :, None] * f[..., None, :] / safe**2
        kr = math.sqrt(abs(self.K)) * safe
        if self.K > 0:
            factor = (np.sin(kr) / kr) ** 2
        elif self.K < 0:
            factor = (np.sinh(kr) / kr) ** 2
        else:
            factor = np.ones_like(kr)
        factor = np.where(r > 0, factor, 1.0)
        return np.where(r > 0, fhat + factor * (eye - fhat), eye)


def christoffel_fd(metric, f, h=1e-5):
    """Christoffel symbols of ``metric`` at a single point by central differences."""
    f = np.asarray(f, dtype=float)
    N = f.shape[-1]
    dg = np.empty((N, N, N))
    for d in range(N):
        e = np.zeros(N)
        e[d] = h
        dg[d] = (metric(f + e) - metric(f - e)) / (2 * h)
    low = 0.5 * (np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg)
    return np.einsum("ad,dbc->abc", np.linalg.inv(metric(f)), low)


@dataclass
class WaveMapSource:
    """Wave-map nonlinearity in the reduced, spherically symmetric form.

    With ``s = (n-1)/2``, ``Omega = -x(1/a - y)`` and the Euler operator
    ``D = x d_x + (y - 1/a) d_y`` the right-hand side is::

        -Omega^{-(n+1)/2} Gamma^a_bc(Omega^s w) Omega^{2s}
            [Omega eta(dw^b, dw^c) - (1-n)^2 w^b w^c + 2(1-n) w^b D w^c]

    where ``eta(dA, dB) = -2 (dx A dy B + dy A dx B)`` in symmetric mode.
    """

    target: object
    prefactor_shift: float = field(default=1.0, init=False)
    zero_order: int = field(default=3, init=False)

    @property
    def n_components(self):
        return self.target.N

    def gate(self, n, alpha):
        return dimension_gate(n, self.zero_order, alpha, shift=self.prefactor_shift)

    def rhs(self, y, x, w, dy, dx, g, dA=None):
        w = np.asarray(w, dtype=float)
        dy = np.asarray(dy, dtype=float)
        dx = np.asarray(dx, dtype=float)
        y = np.asarray(y, dtype=float)[..., None]
        x = np.asarray(x, dtype=float)[..., None]
        n = g.n
        s = (n - 1) / 2.0
        om = -x * (1.0 / g.a - y)
        gam = self.target.christoffel(om ** s * w)
        if not np.allclose(gam, np.swapaxes(gam, -1, -2), rtol=1e-12, atol=1e-14):
            raise BadTarget("Christoffel symbols are not symmetric in the lower indices")
        euler = x * dx + (y - 1.0 / g.a) * dy
        on = om[..., None]
        bracket = (-2.0 * on * (dx[..., :, None] * dy[..., None, :] + dy[..., :, None] * dx[..., None, :])
                   - (1 - n) ** 2 * w[..., :, None] * w[..., None, :]
                   + 2.0 * (1 - n) * w[..., :, None] * euler[..., None, :])
        contracted = np.einsum("...abc,...bc->...a", gam, bracket)
        return -om ** (-(n + 1) / 2.0 + 2.0 * s) * contracted


def wave_map_source(K, N):
    target = FlatTarget(N) if K == 0 else ConstantCurvatureTarget(K, N)
    return WaveMapSource(target)
