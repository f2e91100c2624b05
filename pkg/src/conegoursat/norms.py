"""Weighted norms on the outgoing cone, slice energies and the discrete energy audit."""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from .errors import InsufficientSmoothness, NonNegativeX


@dataclass(frozen=True)
class WeightSpec:
    """``H(x, y) = (-x)^ell exp(-Lambda (y + x))``; ``Lambda = 0`` is allowed for testing."""

    ell: float = 0.0
    Lam: float = 1.0

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError(f"ell must be >= 0, got {self.ell}")
        if self.Lam < 0:
            raise ValueError(f"Lambda must be >= 0, got {self.Lam}")

    def H(self, x, y):
        x = np.asarray(x, dtype=float)
        if np.any(x >= 0):
            raise NonNegativeX("the weight is defined for x < 0 only")
        return (-x) ** self.ell * np.exp(-self.Lam * (np.asarray(y, dtype=float) + x))

    def dH_dx(self, x, y):
        return (-self.ell / (-np.asarray(x, dtype=float)) - self.Lam) * self.H(x, y)

    def dH_dy(self, x, y):
        return -self.Lam * self.H(x, y)


def weight_H(x, y, w):
    return w.H(x, y)


@dataclass(frozen=True)
class NormSpec:
    """Order ``k``, weight exponent ``alpha`` and the per-shell resolution of the dyadic norm."""

    k: int = 0
    alpha: float = -0.5
    resolution: int = 129

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"k must be a non-negative integer, got {self.k}")
        if not (-1.0 < self.alpha <= -0.5):
            raise ValueError(f"alpha must lie in (-1, -1/2], got {self.alpha}")


def _columns(f):
    f = np.asarray(f, dtype=float)
    return f[:, None] if f.ndim == 1 else f.reshape(f.shape[0], -1)


def _derivatives(f, x, k):
    x = np.asarray(x, dtype=float)
    if x.size < 2 * k + 3:
        raise InsufficientSmoothness(f"{x.size} samples cannot resolve {k} derivatives")
    out = [_columns(f)]
    for _ in range(k):
        out.append(np.gradient(out[-1], x, axis=0, edge_order=2))
    return out


def weighted_sobolev_norm(f, x, spec):
    """``sqrt(sum_{b<=k} int (|x|^{-alpha+b} d^b f)^2 dx/|x|)`` by the trapezoid rule."""
    x = np.asarray(x, dtype=float)
    if np.any(x >= 0):
        raise NonNegativeX("samples must lie in x < 0")
    absx = np.abs(x)
    total = 0.0
    for b, d in enumerate(_derivatives(f, x, spec.k)):
        integrand = (absx[:, None] ** (-spec.alpha + b) * d) ** 2 / absx[:, None]
        total += abs(trapezoid(integrand.sum(axis=1), x))
    return float(np.sqrt(total))


def weighted_sup_norm(f, x, alpha, k=0):
    """Discrete ``C^alpha_k`` norm, ``sup sum_{b<=k} |x|^{-alpha+b} |d^b f|``."""
    x = np.asarray(x, dtype=float)
    absx = np.abs(x)
    acc = np.zeros(x.size)
    for b, d in enumerate(_derivatives(f, x, k)):
        acc += absx ** (-alpha + b) * np.abs(d).sum(axis=1)
    return float(acc.max())


def dyadic_grid(x0, n_shells, points_per_shell=65):
    """Nodes uniform inside each shell ``[x0/2^(n-1), x0/2^n]``, ending at ``x0/2^n_shells``."""
    pieces = []
    for n in range(1, n_shells + 1):
        seg = np.linspace(x0 / 2 ** (n - 1), x0 / 2**n, points_per_shell)
        pieces.append(seg if n == 1 else seg[1:])
    return np.concatenate(pieces)


def n_full_shells(x):
    """Number of dyadic shells of ``[x[0], x[-1]]`` that are fully covered."""
    x = np.asarray(x, dtype=float)
    return int(np.floor(np.log2(x[0] / x[-1]) + 1e-9))


def dyadic_shell_terms(f, x, spec, n_shells=None):
    """Per-shell ``(-x0)^{-2 alpha} 2^{2 n alpha} ||f_n||^2_{H^k([1,2])}``.

    ``f_n(s) = f(s x0 / 2^n)`` is obtained from a cubic spline; each shell is
    resampled on ``spec.resolution`` uniform points in ``s``.
    """
    if spec.k > 3:
        raise InsufficientSmoothness("cubic resampling supports up to three derivatives")
    x = np.asarray(x, dtype=float)
    f = _columns(f)
    if x.size < 4:
        raise InsufficientSmoothness("too few samples for spline resampling")
    x0 = x[0]
    if n_shells is None:
        n_shells = n_full_shells(x)
    # the spline needs increasing abscissae: x runs from x0 < 0 toward 0
    spl = CubicSpline(x, f, axis=0)
    s = np.linspace(1.0, 2.0, spec.resolution)
    terms = np.empty(n_shells)
    for i, n in enumerate(range(1, n_shells + 1)):
        scale = x0 / 2**n
        shell = 0.0
        for b in range(spec.k + 1):
            d = spl(s * scale, b) * scale**b
            shell += trapezoid((d**2).sum(axis=1), s)
        terms[i] = (-x0) ** (-2 * spec.alpha) * 2.0 ** (2 * n * spec.alpha) * shell
    return terms


def dyadic_norm(f, x, spec, n_shells=None):
    return float(np.sqrt(dyadic_shell_terms(f, x, spec, n_shells).sum()))


# --- energies on a solved field -------------------------------------------------

def _index(nodes, value, name):
    i = int(np.argmin(np.abs(nodes - value)))
    span = abs(nodes[-1] - nodes[0])
    if abs(nodes[i] - value) > 1e-9 * max(span, 1.0):
        raise ValueError(f"{name} = {value} is not a grid node")
    return i


def slice_energy(field, slice_kind, u, v, w, order=1):
    """``int H (w^2 + (tangential derivative)^2)`` on ``C+_{u,v}`` or ``C-_{u,v}``.

    ``C+_{u,v}`` is the row ``y = u`` for ``x in [x0, v]``; ``C-_{u,v}`` is the
    column ``x = v`` for ``y in [0, u]``.  ``order=0`` keeps the value term only.
    """
    grid = field.grid
    i = _index(grid.y, u, "u")
    j = _index(grid.x, v, "v")
    if slice_kind == "plus":
        xs = grid.x[: j + 1]
        val = field.values[i, : j + 1]
        der = field.dx[i, : j + 1]
        H = w.H(xs, grid.y[i])
        coord = xs
    elif slice_kind == "minus":
        ys = grid.y[: i + 1]
        val = field.values[: i + 1, j]
        der = field.dy[: i + 1, j]
        H = w.H(grid.x[j], ys)
        coord = ys
    else:
        raise ValueError("slice_kind must be 'plus' or 'minus'")
    density = (val**2).sum(axis=-1)
    if order >= 1:
        density = density + (der**2).sum(axis=-1)
    if coord.size < 2:
        return 0.0
    return float(trapezoid(H * density, coord))


def _trapz2(values, y, x):
    if y.size < 2 or x.size < 2:
        return 0.0
    return float(trapezoid(trapezoid(values, x, axis=1), y))


@dataclass(frozen=True)
class EnergyAudit:
    u: float
    v: float
    Lam: float
    ell: float
    c1: float
    lhs: float
    data: float
    bulk: float
    source: float
    margin: float

    @property
    def scale(self):
        return max(abs(self.lhs), abs(self.data), abs(self.source), 1e-300)

    @property
    def relative_margin(self):
        return self.margin / self.scale


def box_values(field, source):
    """``box w`` at the nodes, from a source object or a precomputed array."""
    if hasattr(source, "rhs"):
        grid = field.grid
        Y, X = grid.mesh()
        return np.asarray(source.rhs(Y, X, field.values, field.dy, field.dx, grid.geometry))
    arr = np.asarray(source, dtype=float)
    return arr[..., None] if arr.ndim == 2 else arr


def energy_audit(field, source, u, v, w, c1=None):
    """Discrete energy inequality on ``D_{u,v}``.

    ``margin = data + (c1 - 2 Lambda) bulk + int |H (dx w + dy w) box w| - lhs``
    where ``lhs`` and ``data`` are the sums of the outgoing and incoming slice
    energies at ``(u, v)`` and on the initial cones.  With ``c1 = None`` the
    bulk term is dropped, so the weight alone has to absorb the lower-order
    terms; this is what the Lambda scan measures.
    """
    grid = field.grid
    g = grid.geometry
    i = _index(grid.y, u, "u")
    j = _index(grid.x, v, "v")
    u, v = grid.y[i], grid.x[j]
    lhs = slice_energy(field, "plus", u, v, w) + slice_energy(field, "minus", u, v, w)
    data = slice_energy(field, "plus", 0.0, v, w) + slice_energy(field, "minus", u, g.x0, w)
    ys, xs = grid.y[: i + 1], grid.x[: j + 1]
    Y, X = np.meshgrid(ys, xs, indexing="ij")
    H = w.H(X, Y)
    wv = field.values[: i + 1, : j + 1]
    wy = field.dy[: i + 1, : j + 1]
    wx = field.dx[: i + 1, : j + 1]
    box = box_values(field, source)[: i + 1, : j + 1]
    bulk = _trapz2(H * (wv**2 + wx**2 + wy**2).sum(axis=-1), ys, xs)
    src = _trapz2(np.abs(H * ((wx + wy) * box).sum(axis=-1)), ys, xs)
    coeff = 0.0 if c1 is None else c1 - 2.0 * w.Lam
    margin = data + coeff * bulk + src - lhs
    return EnergyAudit(float(u), float(v), w.Lam, w.ell, float("nan") if c1 is None else c1,
                       lhs, data, bulk, src, margin)


def audit_family(grid, fractions=(0.25, 0.5, 0.75, 1.0)):
    """``(u, v)`` pairs on grid nodes covering sub-boxes of the domain."""
    pairs = []
    for fu in fractions:
        for fv in fractions:
            i = max(1, int(round(fu * grid.ny)))
            j = max(1, int(round(fv * grid.nx)))
            pairs.append((grid.y[i], grid.x[j]))
    return pairs


@dataclass(frozen=True)
class LambdaScan:
    Lam_star: float
    c1_est: float
    min_relative_margin: float
    audits: tuple


def scan_lambda(field, source, pairs, ell=0.0, Lam_hi=1.0, rtol=1e-3, max_doublings=20):
    """Smallest ``Lambda`` making every dropped-bulk margin of the family non-negative."""

    def worst(Lam):
        audits = [energy_audit(field, source, u, v, WeightSpec(ell, Lam)) for u, v in pairs]
        return min(a.relative_margin for a in audits), audits

    lo = 0.0
    m, audits = worst(lo)
    if m >= 0:
        return LambdaScan(0.0, 0.0, m, tuple(audits))
    hi = Lam_hi
    for _ in range(max_doublings):
        m, audits = worst(hi)
        if m >= 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RuntimeError("no Lambda up to the doubling limit closes the energy inequality")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        m_mid, a_mid = worst(mid)
        if m_mid >= 0:
            hi, m, audits = mid, m_mid, a_mid
        else:
            lo = mid
    return LambdaScan(hi, 2.0 * hi, m, tuple(audits))


def weighted_l2_domain(components, grid, alpha, Lam):
    """``sqrt(int int |x|^{-2 alpha} e^{-Lambda (y+x)} sum |c|^2)`` over the grid."""
    Y, X = grid.mesh()
    weight = np.abs(X) ** (-2.0 * alpha) * np.exp(-Lam * (Y + X))
    dens = sum((np.asarray(c) ** 2).reshape(grid.shape + (-1,)).sum(axis=-1) for c in components)
    return float(np.sqrt(_trapz2(weight * dens, grid.y, grid.x)))
