"""Physical field values from a compactified solution and decay-rate fits toward scri."""
from dataclasses import dataclass

import numpy as np

from .errors import AllBelowFloor, InsufficientRange


@dataclass(frozen=True)
class PhysicalSamples:
    """Arrays of equal shape: null coordinates, ``(t, r)`` and ``f, d_t f, d_r f``."""

    ynull: np.ndarray
    xnull: np.ndarray
    t: np.ndarray
    r: np.ndarray
    f: np.ndarray
    dtf: np.ndarray
    drf: np.ndarray
    skipped: int = 0

    @property
    def t_plus_r(self):
        return self.t + self.r

    def row(self, i):
        """Samples on the ``i``-th retarded-time line ``y = const``."""
        return PhysicalSamples(*(getattr(self, k)[i] for k in
                                 ("ynull", "xnull", "t", "r", "f", "dtf", "drf")), skipped=0)


def reconstruct(field, component=0):
    """``f = Omega^s w`` with ``s = (n-1)/2`` and its ``t``, ``r`` derivatives on every node.

    Nodes with ``Omega <= 0`` are skipped (left as NaN) and counted.
    """
    grid = field.grid
    g = grid.geometry
    s = (g.n - 1) / 2.0
    Y, X = grid.mesh()
    om = -X * (1.0 / g.a - Y)
    good = om > 0
    safe = np.where(good, om, 1.0)
    w = field.values[..., component]
    wx = field.dx[..., component]
    wy = field.dy[..., component]
    oms = safe**s
    ym = Y - 1.0 / g.a
    f = oms * w
    dtf = s * (X + ym) * oms * w + X**2 * oms * wx + ym**2 * oms * wy
    drf = s * (X - ym) * oms * w + X**2 * oms * wx - ym**2 * oms * wy
    tau = g.tau(Y, X)
    rho = g.rho(Y, X)
    t = -tau / safe
    r = rho / safe
    out = [t, r, f, dtf, drf]
    for a in out:
        a[~good] = np.nan
    return PhysicalSamples(Y, X, *out, skipped=int((~good).sum()))


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    n_samples: int
    decades: float


def fit_decay_exponent(t_plus_r, values, floor=1e-14, min_samples=10, min_decades=1.5):
    """Least-squares slope of ``log|value|`` against ``log(t + r)``."""
    tr = np.asarray(t_plus_r, dtype=float).ravel()
    v = np.abs(np.asarray(values, dtype=float).ravel())
    ok = np.isfinite(v) & np.isfinite(tr)
    tr, v = tr[ok], v[ok]
    keep = v > floor
    if not np.any(keep):
        raise AllBelowFloor("every sample is below the floor")
    tr, v = tr[keep], v[keep]
    decades = float(np.log10(tr.max() / tr.min())) if tr.size else 0.0
    if tr.size < min_samples or decades < min_decades - 1e-9:
        raise InsufficientRange(f"{tr.size} samples over {decades:.2f} decades; need "
                                f"{min_samples} over {min_decades}")
    lx, ly = np.log(tr), np.log(v)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = np.sum((ly - pred) ** 2)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(intercept), float(r2), int(tr.size), decades)


def decay_window(grid, decades=1.5, exclusion=10.0):
    """Nominal ``|x|`` range for fits: starts ``exclusion`` times away from the cut-off."""
    lo = exclusion * grid.eps_scri
    hi = min(lo * 10.0**decades, abs(grid.geometry.x0))
    return lo, hi


def decay_bounds(n, alpha):
    """Decay exponents for ``f`` and for its first derivatives."""
    return -(n - 1) / 2.0, -(n - 1) / 2.0 - alpha


def decay_report(field, alpha, row=-1, f_tol=0.15, d_tol=0.2, decades=1.5):
    """Fit ``f``, ``d_t f`` and ``d_r f`` along one retarded-time line against the bounds.

    Returns the samples of that line and a JSON-ready dict of slopes and pass flags.
    """
    grid = field.grid
    g = grid.geometry
    samples = reconstruct(field).row(row)
    lo, hi = decay_window(grid, decades)
    absx = np.abs(samples.xnull)
    # snap to nodes: the first node past the exclusion zone, then a full span above it
    lo_node = absx[absx >= lo * (1 - 1e-12)].min()
    above = absx[absx >= lo_node * 10.0**decades * (1 - 1e-12)]
    hi_node = above.min() if above.size else absx.max()
    lo, hi = float(lo_node), float(min(hi_node, hi * 10.0))
    sel = (absx >= lo) & (absx <= hi)
    tr = samples.t_plus_r[sel]
    result = {"ynull": float(samples.ynull[0]), "window_abs_x": [lo, hi]}
    bf, bd = decay_bounds(g.n, alpha)
    channels = {}
    for name, bound, tol in (("f", bf, f_tol), ("dtf", bd, d_tol), ("drf", bd, d_tol)):
        fit = fit_decay_exponent(tr, getattr(samples, name)[sel])
        channels[name] = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
                          "n_samples": fit.n_samples, "decades": fit.decades,
                          "bound": bound, "tolerance": tol,
                          "pass": bool(fit.slope <= bound + tol)}
    result["channels"] = channels
    result["pass"] = all(c["pass"] for c in channels.values())
    return samples, result
