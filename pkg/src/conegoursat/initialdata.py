"""Goursat data on the outgoing cone C+ (y = 0) and the incoming cone C- (x = x0)."""
import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .conformal import omega_dn
from .errors import BadWidth, IncompatibleData, UnboundedWeightedData
from .grid import Field


# --- analytic profiles -------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """Analytic one-variable profile with its exact derivative.

    kinds: ``zero``, ``gaussian mu sigma amp``, ``poly c0 c1 ...``, ``power p``
    (``|s|^p``).
    """

    kind: str
    params: tuple = ()

    def value(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "gaussian":
            mu, sigma, amp = self.params
            return amp * np.exp(-0.5 * ((s - mu) / sigma) ** 2)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(s, self.params)
        if self.kind == "power":
            (p,) = self.params
            return np.abs(s) ** p
        raise ValueError(f"unknown profile {self.kind!r}")

    def slope(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "gaussian":
            mu, sigma, amp = self.params
            return -(s - mu) / sigma**2 * self.value(s)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(self.params))
        if self.kind == "power":
            (p,) = self.params
            return p * np.abs(s) ** (p - 1) * np.sign(s)
        raise ValueError(f"unknown profile {self.kind!r}")


_ARITY = {"zero": 0, "gaussian": 3, "power": 1}


def parse_profile(text):
    parts = text.split()
    if not parts:
        raise ValueError("empty profile")
    kind = parts[0].lower()
    params = tuple(float(p) for p in parts[1:])
    if kind == "poly":
        if not params:
            raise ValueError("poly needs at least one coefficient")
    elif kind in _ARITY:
        if len(params) != _ARITY[kind]:
            raise ValueError(f"{kind} takes {_ARITY[kind]} parameters, got {len(params)}")
    else:
        raise ValueError(f"unknown profile {kind!r}")
    if kind == "gaussian" and params[1] <= 0:
        raise ValueError("gaussian width must be positive")
    return Profile(kind, params)


# --- data containers ---------------------------------------------------------

def _as_2d(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


@dataclass(frozen=True)
class ConeDataPlus:
    """Values and x-slope of ``w`` on C+, sampled at ``x`` (shape ``(npts, N)``)."""

    x: np.ndarray
    values: np.ndarray
    slope: np.ndarray
    alpha: float = -0.5
    m: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "values", _as_2d(self.values))
        object.__setattr__(self, "slope", _as_2d(self.slope))
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.slope))):
            raise ValueError("C+ data must be finite")
        if self.values.shape != self.slope.shape or self.values.shape[0] != self.x.size:
            raise ValueError("C+ samples have inconsistent shapes")

    @property
    def n_components(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class ConeDataMinus:
    """Values and y-slope of ``w`` on C-, sampled at ``y``."""

    y: np.ndarray
    values: np.ndarray
    slope: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "values", _as_2d(self.values))
        object.__setattr__(self, "slope", _as_2d(self.slope))
        if not (np.all(np.isfinite(self.values)) and np.all(np.isfinite(self.slope))):
            raise ValueError("C- data must be finite")
        if self.values.shape != self.slope.shape or self.values.shape[0] != self.y.size:
            raise ValueError("C- samples have inconsistent shapes")

    @property
    def n_components(self):
        return self.values.shape[1]


def plus_from_profile(profile, x, n_components=1, alpha=-0.5):
    v = np.repeat(profile.value(x)[:, None], n_components, axis=1)
    s = np.repeat(profile.slope(x)[:, None], n_components, axis=1)
    return ConeDataPlus(x, v, s, alpha=alpha)


def minus_from_profile(profile, y, n_components=1):
    v = np.repeat(profile.value(y)[:, None], n_components, axis=1)
    s = np.repeat(profile.slope(y)[:, None], n_components, axis=1)
    return ConeDataMinus(y, v, s)


def plus_on_grid(plus, x):
    """Cubic-spline resampling of C+ data onto new abscissae."""
    if plus.x.shape == np.shape(x) and np.array_equal(plus.x, x):
        return plus
    v = CubicSpline(plus.x, plus.values, axis=0)(x)
    s = CubicSpline(plus.x, plus.slope, axis=0)(x)
    return replace(plus, x=np.asarray(x, dtype=float), values=v, slope=s)


def minus_on_grid(minus, y):
    if minus.y.shape == np.shape(y) and np.array_equal(minus.y, y):
        return minus
    spl = CubicSpline(minus.y, minus.values, axis=0)
    return ConeDataMinus(np.asarray(y, dtype=float), spl(y), spl(y, 1))


def read_plus_csv(path, alpha=-0.5):
    """CSV with header and columns ``x, value, slope``."""
    rows = _read_numeric_csv(path, 3)
    return ConeDataPlus(rows[:, 0], rows[:, 1], rows[:, 2], alpha=alpha)


def read_minus_csv(path):
    """CSV with header and columns ``y, value``; the slope is spline-differentiated."""
    rows = _read_numeric_csv(path, 2)
    spl = CubicSpline(rows[:, 0], rows[:, 1])
    return ConeDataMinus(rows[:, 0], rows[:, 1], spl(rows[:, 0], 1))


def _read_numeric_csv(path, ncols):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < ncols:
            raise ValueError(f"{path}: expected {ncols} columns")
        rows = [[float(v) for v in row[:ncols]] for row in reader if row]
    return np.array(rows)


# --- compatibility, approximation and seed -------------------------------------

@dataclass(frozen=True)
class Compatibility:
    passed: bool
    residual: float


def check_compatibility(plus, minus, tol=1e-12):
    residual = float(np.max(np.abs(plus.values[0] - minus.values[0])))
    return Compatibility(residual <= tol, residual)


def bump_kernel(h, width):
    """Discrete weights of ``exp(-1/(1-t^2))`` on ``|t| < 1``, ``t = s/width``."""
    m = int(np.floor(width / h))
    if m < 1:
        return np.ones(1)
    t = np.arange(-m, m + 1) * h / width
    inside = np.abs(t) < 1
    w = np.zeros_like(t)
    w[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return w / w.sum()


def mollify(s, values, width):
    """Convolve uniformly spaced samples with the bump kernel, reflecting at both ends."""
    values = _as_2d(values)
    length = abs(s[-1] - s[0])
    if width > length:
        raise BadWidth(f"mollifier width {width} exceeds the domain length {length}")
    if width <= 0:
        return values.copy()
    h = abs(s[1] - s[0])
    kern = bump_kernel(h, width)
    m = kern.size // 2
    if m == 0:
        return values.copy()
    if m >= values.shape[0]:
        raise BadWidth("mollifier wider than the sample set")
    padded = np.pad(values, ((m, m), (0, 0)), mode="reflect")
    out = np.empty_like(values)
    for c in range(values.shape[1]):
        out[:, c] = np.convolve(padded[:, c], kern, mode="valid")
    return out


def build_approximant(plus, minus, k, w0=0.0):
    """Index-``k`` smooth data pair, compatible at the corner by construction.

    The C+ slope and the C- data are mollified with width ``w0 * 2^-k`` and the
    C+ values are rebuilt as ``w_minus(0) + int_{x0}^x slope``.  With ``w0 = 0``
    the data are kept and only the constant of integration is adjusted.
    """
    width = w0 * 2.0 ** (-k)
    if width > 0:
        mv = mollify(minus.y, minus.values, width)
        ms = mollify(minus.y, minus.slope, width)
        minus_k = ConeDataMinus(minus.y, mv, ms)
        slope_k = mollify(plus.x, plus.slope, width)
        values_k = minus_k.values[0] + cumulative_simpson(slope_k, x=plus.x, axis=0, initial=0.0)
    else:
        minus_k = minus
        slope_k = plus.slope
        values_k = plus.values - plus.values[0] + minus.values[0]
    values_k[0] = minus_k.values[0]
    return replace(plus, values=values_k, slope=slope_k), minus_k


def seed_field(plus0, minus0, grid, tol=1e-12):
    """``w0(y, x) = w_plus(x) + w_minus(y) - w_minus(0)`` with both cones imposed exactly."""
    comp = check_compatibility(plus0, minus0, tol)
    if not comp.passed:
        raise IncompatibleData(f"corner residual {comp.residual:.3e} exceeds {tol:.1e}")
    plus0 = plus_on_grid(plus0, grid.x)
    minus0 = minus_on_grid(minus0, grid.y)
    vals = plus0.values[None, :, :] + minus0.values[:, None, :] - minus0.values[0][None, None, :]
    vals[0, :, :] = plus0.values
    vals[:, 0, :] = minus0.values
    return Field(grid, vals)


# --- admissibility ------------------------------------------------------------

def fd4_derivative(values, h):
    """Fourth-order first derivative on uniform samples (one-sided at the ends)."""
    v = _as_2d(values)
    n = v.shape[0]
    if n < 5:
        raise ValueError("need at least five samples")
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    fwd = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    d[0] = fwd @ v[:5]
    d[1] = np.array([-3, -10, 18, -6, 1]) / (12 * h) @ v[:5]
    d[-1] = -(fwd @ v[::-1][:5])
    d[-2] = -(np.array([-3, -10, 18, -6, 1]) / (12 * h) @ v[::-1][:5])
    return d


def weighted_profile(plus):
    """``|x|^{-alpha} (|w| + |dx w|)`` summed over components."""
    return np.abs(plus.x) ** (-plus.alpha) * (np.abs(plus.values) + np.abs(plus.slope)).sum(axis=1)


def check_weighted_bound(plus, bound=1e8, growth_exponent=0.25):
    """Discrete admissibility of C+ data; returns ``sup |x|^{-alpha}(|w| + |dx w|)``.

    Raises UnboundedWeightedData if the weighted profile exceeds ``bound`` or
    keeps growing toward ``x = 0`` faster than ``|x|^{-growth_exponent}`` over
    the last three dyadic shells.
    """
    q = weighted_profile(plus)
    sup = float(q.max())
    if not np.isfinite(sup) or sup > bound:
        raise UnboundedWeightedData(f"weighted C+ norm {sup:.3e} exceeds {bound:.1e}")
    absx = np.abs(plus.x)
    xe = absx.min()
    maxima = []
    for k in range(3):
        sel = (absx >= xe * 2**k) & (absx < xe * 2 ** (k + 1))
        if not np.any(sel):
            break
        maxima.append(q[sel].max())
    if len(maxima) == 3 and maxima[0] > 1e-14 * max(sup, 1e-300):
        ratio = 2.0**growth_exponent
        if maxima[0] > ratio * maxima[1] and maxima[1] > ratio * maxima[2]:
            raise UnboundedWeightedData("weighted C+ data grow toward scri")
    return sup


def ingest_physical(phi, g, x, alpha=-0.5, bound=1e8):
    """Rescaled C+ data from physical data ``phi(t, r)`` on the cone ``t = r + a``.

    ``x`` must be uniformly spaced in ``[x0, 0)``; on y = 0 the physical point
    has ``t + r = 1/|x|`` and ``t - r = a``.
    """
    x = np.asarray(x, dtype=float)
    absx = np.abs(x)
    t = 0.5 * (1.0 / absx + g.a)
    r = 0.5 * (1.0 / absx - g.a)
    om = omega_dn(0.0, x, g)
    vals = om ** (-(g.n - 1) / 2.0) * np.asarray(phi(t, r), dtype=float)
    vals = _as_2d(vals)
    slope = fd4_derivative(vals, x[1] - x[0])
    plus = ConeDataPlus(x, vals, slope, alpha=alpha)
    check_weighted_bound(plus, bound=bound)
    return plus
