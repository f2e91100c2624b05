"""Diamond-scheme marching for the linear step and the Picard driver around it."""
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares

from .errors import (BadAlpha, BadOrder, Diverged, GateRefused, NonContracting, NonFiniteValue, ODEStepFailure,
                     RhoFloor, TooFewIterations)
from .grid import Field
from .initialdata import minus_on_grid, plus_on_grid, seed_field
from .norms import weighted_l2_domain


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    k_max: int = 30
    Lam: float = 1.0
    ell: float = 0.0
    alpha: float = -0.5
    gate_override: bool = False
    seed: str = "data"
    min_iterations: int = 1
    divergence_factor: float = 1e6
    noise_rtol: float = 1e-12

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.seed not in ("data", "zero"):
            raise ValueError(f"unknown seed {self.seed!r}")


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (np.floating, np.integer)):
        return _clean(v.item())
    return v


@dataclass
class IterationReport:
    """History of one Picard run.

    ``diff_norms[k-1]`` is the weighted norm of ``w^k - w^(k-1)`` and
    ``sigmas[k-2]`` the ratio of consecutive entries.
    """

    status: str = "running"
    iterations: int = 0
    diff_norms: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)
    sup_monitor: list = field(default_factory=list)
    C0: float = float("nan")
    monitor_ok: bool = True
    u_star: float = float("nan")
    M0: float = float("nan")
    M0_bound: float = float("nan")
    M1: float = float("nan")
    M2: float = float("nan")
    sigma_fit: float = float("nan")
    varsigma_fit: float = float("nan")
    fit_residual: float = float("nan")
    geometric_ok: bool = False
    Lam: float = 1.0
    ell: float = 0.0
    alpha: float = -0.5
    tol: float = 1e-10
    seed: str = "data"
    gate_margin: float = float("nan")
    gate_threshold: float = float("nan")
    noise_floor: float = 0.0
    sigma_method: str = "none"

    def to_dict(self):
        return _clean(asdict(self))


# --- cell coefficients ------------------------------------------------------------

@lru_cache(maxsize=16)
def _stencil(grid):
    g = grid.geometry
    hy, hx = grid.hy, grid.hx
    yc = 0.5 * (grid.y[:-1] + grid.y[1:])
    xc = 0.5 * (grid.x[:-1] + grid.x[1:])
    Yc, Xc = np.meshgrid(yc, xc, indexing="ij")
    rho_c = g.rho(Yc, Xc)
    if np.any(rho_c <= grid.rho_min):
        raise RhoFloor("cell-centre rho below the floor")
    k = (g.n - 1) / rho_c
    a = 4.0 / (hy * hx)
    bx = k / (2.0 * hx)
    by = k / (2.0 * hy)
    cN = -a + bx - by
    cE = a + bx + by
    cW = a - bx - by
    cS = -a - bx + by
    diagonals = []
    ii, jj = np.meshgrid(np.arange(grid.ny), np.arange(grid.nx), indexing="ij")
    dsum = (ii + jj).ravel()
    order = np.argsort(dsum, kind="stable")
    bounds = np.searchsorted(dsum[order], np.arange(grid.ny + grid.nx))
    flat_i, flat_j = ii.ravel()[order], jj.ravel()[order]
    for d in range(grid.ny + grid.nx - 1):
        sl = slice(bounds[d], bounds[d + 1])
        diagonals.append((flat_i[sl], flat_j[sl]))
    return Yc, Xc, (cN[..., None], cE[..., None], cW[..., None], cS[..., None]), tuple(diagonals)


def cell_state(values, grid):
    """Cell-centre averages of ``w``, ``dy w`` and ``dx w`` from nodal values."""
    S = values[:-1, :-1]
    E = values[:-1, 1:]
    W = values[1:, :-1]
    N = values[1:, 1:]
    wc = 0.25 * (S + E + W + N)
    dyc = (W - S + N - E) / (2.0 * grid.hy)
    dxc = (E - S + N - W) / (2.0 * grid.hx)
    return wc, dyc, dxc


def march(rhs_c, plus_values, minus_values, grid):
    """Solve the diamond scheme for right-hand side ``rhs_c`` at cell centres."""
    _, _, (cN, cE, cW, cS), diagonals = _stencil(grid)
    ncomp = plus_values.shape[-1]
    out = np.empty(grid.shape + (ncomp,))
    out[0, :, :] = plus_values
    out[:, 0, :] = minus_values
    for i, j in diagonals:
        out[i + 1, j + 1] = (rhs_c[i, j] - cE[i, j] * out[i, j + 1] - cW[i, j] * out[i + 1, j]
                             - cS[i, j] * out[i, j]) / cN[i, j]
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("non-finite value produced by the march")
    return out


def linear_step(prev, plus, minus, source, grid):
    """One Picard step: the linear characteristic problem with the source frozen at ``prev``."""
    plus = plus_on_grid(plus, grid.x)
    minus = minus_on_grid(minus, grid.y)
    Yc, Xc, _, _ = _stencil(grid)
    wc, dyc, dxc = cell_state(prev.values, grid)
    rhs_c = np.asarray(source.rhs(Yc, Xc, wc, dyc, dxc, grid.geometry), dtype=float)
    if rhs_c.ndim == 2:
        rhs_c = rhs_c[..., None]
    return Field(grid, march(rhs_c, plus.values, minus.values, grid))


def transport_bootstrap(plus, minus, source, grid):
    """``dy w`` along ``y = 0`` by RK4 on the transport equation restricted to C+.

    On ``y = 0`` the equation reads ``-4 psi' + k (dx w - psi) = rhs`` with
    ``psi = dy w`` and ``k = (n-1)/rho``; ``w`` and ``dx w`` come from the data.
    """
    g = grid.geometry
    plus = plus_on_grid(plus, grid.x)
    minus = minus_on_grid(minus, grid.y)
    val_s = CubicSpline(plus.x, plus.values, axis=0)
    slope_s = CubicSpline(plus.x, plus.slope, axis=0)

    def f(x, psi):
        rho = g.rho(0.0, x)
        if rho <= grid.rho_min:
            raise ODEStepFailure(f"rho = {rho} below the floor at x = {x}")
        w = val_s(x)[None, :]
        dx = slope_s(x)[None, :]
        r = np.asarray(source.rhs(np.zeros(1), np.array([x]), w, psi[None, :], dx, g))[0]
        return ((g.n - 1) / rho * (dx[0] - psi) - r) / 4.0

    xs = grid.x
    psi = np.empty_like(plus.values)
    psi[0] = minus.slope[0]
    for j in range(xs.size - 1):
        h = xs[j + 1] - xs[j]
        x = xs[j]
        p = psi[j]
        k1 = f(x, p)
        k2 = f(x + h / 2, p + h / 2 * k1)
        k3 = f(x + h / 2, p + h / 2 * k2)
        k4 = f(x + h, p + h * k3)
        psi[j + 1] = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(psi[j + 1])):
            raise ODEStepFailure(f"non-finite transport value at x = {xs[j + 1]}")
    return psi


# --- monitors ---------------------------------------------------------------------

def weighted_row_sup(fld, alpha):
    """Per-row ``sup_x |x|^{-alpha} (|w| + |dx w| + |dy w|)``."""
    wgt = np.abs(fld.grid.x)[None, :] ** (-alpha)
    dens = (np.abs(fld.values) + np.abs(fld.dx) + np.abs(fld.dy)).sum(axis=-1)
    return (wgt * dens).max(axis=1)


def data_constant(plus, minus, psi, grid, alpha):
    """Discrete ``C0`` from the data and the bootstrapped ``dy w`` on C+."""
    absx = np.abs(grid.x)
    on_plus = (absx ** (-alpha))[:, None] * (np.abs(plus.values) + np.abs(plus.slope) + np.abs(psi))
    on_minus = absx[0] ** (-alpha) * np.abs(minus.slope).sum(axis=-1).max()
    return float(on_plus.sum(axis=-1).max() + on_minus)


def _diff_norm(a, b, grid, cfg):
    d = Field(grid, a.values - b.values)
    return weighted_l2_domain((d.values, d.dx, d.dy), grid, cfg.alpha, cfg.Lam)


def initial_iterate(plus, minus, grid, seed="data"):
    if seed == "data":
        return seed_field(plus, minus, grid)
    fld = Field.zeros(grid, plus.n_components)
    fld.values[0] = plus_on_grid(plus, grid.x).values
    fld.values[:, 0] = minus_on_grid(minus, grid.y).values
    return fld


def picard_solve(plus, minus, source, grid, cfg=SolverConfig(), seed_values=None):
    """Iterate ``w^(k+1) = linear_step(w^k)`` until the weighted difference drops below ``tol``.

    Returns ``(field, report)``.  Raises GateRefused, NonContracting or
    Diverged; the last two carry the report.
    """
    g = grid.geometry
    report = IterationReport(Lam=cfg.Lam, ell=cfg.ell, alpha=cfg.alpha, tol=cfg.tol, seed=cfg.seed)
    if getattr(source, "zero_order", None) is not None:
        try:
            gate = source.gate(g.n, cfg.alpha)
        except (BadAlpha, BadOrder):
            if not cfg.gate_override:
                raise
            gate = None
        if gate is not None:
            report.gate_margin, report.gate_threshold = gate.margin, gate.threshold
            if not gate.passed and not cfg.gate_override:
                report.status = "gate_refused"
                raise GateRefused(f"n = {g.n} is below the threshold {gate.threshold:.4g}")
    plus = plus_on_grid(plus, grid.x)
    minus = minus_on_grid(minus, grid.y)
    if seed_values is not None:
        current = Field(grid, np.array(seed_values, dtype=float))
        current.values[0] = plus.values
        current.values[:, 0] = minus.values
    else:
        current = initial_iterate(plus, minus, grid, cfg.seed)

    psi = transport_bootstrap(plus, minus, source, grid)
    C0 = data_constant(plus, minus, psi, grid, cfg.alpha)
    report.C0 = C0
    running = np.full(grid.ny + 1, 0.0)
    scale = max(np.abs(plus.values).max(), np.abs(minus.values).max())
    above = 0
    for k in range(1, cfg.k_max + 1):
        try:
            nxt = linear_step(current, plus, minus, source, grid)
        except NonFiniteValue as exc:
            report.status = "diverged"
            raise Diverged(str(exc), report) from exc
        sup = float(np.abs(nxt.values).max())
        if k == 1:
            scale = max(scale, sup)
        if not math.isfinite(sup) or sup > cfg.divergence_factor * max(scale, 1e-300):
            report.status = "diverged"
            report.iterations = k
            raise Diverged(f"sup |w| = {sup:.3e} at iteration {k}", report)
        dn = _diff_norm(nxt, current, grid, cfg)
        report.diff_norms.append(dn)
        # differences below the floor are round-off and carry no ratio information
        floor = cfg.noise_rtol * weighted_l2_domain((nxt.values, nxt.dx, nxt.dy), grid,
                                                    cfg.alpha, cfg.Lam)
        report.noise_floor = floor
        if k >= 2:
            prev = report.diff_norms[-2]
            sig = dn / prev if (prev > floor and dn > floor) else float("nan")
            report.sigmas.append(sig)
            above = above + 1 if (k > 2 and sig >= 1.0) else 0
        rows = weighted_row_sup(nxt, cfg.alpha)
        running = np.maximum(running, rows)
        report.sup_monitor.append(float(rows.max()))
        current = nxt
        report.iterations = k
        if above >= 3:
            report.status = "non_contracting"
            raise NonContracting(f"sigma >= 1 for three consecutive iterations up to k = {k}",
                                 report)
        if dn < cfg.tol and k >= cfg.min_iterations:
            report.status = "converged"
            break
    else:
        report.status = "max_iterations"

    _finish_monitors(report, current, minus, running, C0, cfg)
    try:
        fit = contraction_estimate(report, floor=report.noise_floor)
        report.sigma_fit, report.varsigma_fit = fit.sigma, fit.varsigma
        report.fit_residual, report.geometric_ok = fit.residual, fit.geometric_ok
        report.sigma_method = "fit"
    except TooFewIterations:
        # too few differences above round-off: fall back to the largest ratio seen
        finite = [s for s in report.sigmas if math.isfinite(s)]
        if finite:
            report.sigma_fit = max(finite)
            report.geometric_ok = report.sigma_fit < 0.5
            report.sigma_method = "max_ratio"
    return current, report


def _finish_monitors(report, fld, minus, running, C0, cfg):
    grid = fld.grid
    x0 = grid.geometry.x0
    cum = np.maximum.accumulate(running)
    ok = cum <= 2.0 * C0 * (1 + 1e-12) + 1e-300
    report.monitor_ok = bool(ok.all())
    report.u_star = float(grid.y[np.nonzero(ok)[0].max()]) if ok[0] else 0.0
    absx = np.abs(grid.x)[None, :, None]
    report.M0 = float(np.abs(fld.values).max())
    report.M0_bound = float(np.abs(minus.values).max()
                            + 2.0 * C0 * abs(x0) ** (1 + cfg.alpha) / (1 + cfg.alpha))
    report.M1 = float((absx ** (-cfg.alpha) * (np.abs(fld.dx) + np.abs(fld.dy))).max())
    dxx = np.gradient(fld.dx, grid.x, axis=1, edge_order=2)
    dxy = np.gradient(fld.dx, grid.y, axis=0, edge_order=2)
    report.M2 = float((absx ** (1 - cfg.alpha) * np.abs(dxx) + absx ** (-cfg.alpha) * np.abs(dxy)).max())


# --- contraction fit ----------------------------------------------------------------

@dataclass(frozen=True)
class ContractionFit:
    sigma: float
    varsigma: float
    c: float
    residual: float
    geometric_ok: bool


def contraction_estimate(report, floor=1e-14):
    """Fit ``d_k = varsigma 2^-k + c sigma^k`` to the recorded difference norms.

    ``report`` may also be a plain sequence ``d_1, d_2, ...``.  Entries at or
    below ``floor`` (round-off) are dropped before fitting.
    """
    d = np.asarray(getattr(report, "diff_norms", report), dtype=float)
    k = np.arange(1, d.size + 1, dtype=float)
    keep = np.isfinite(d) & (d > floor)
    d, k = d[keep], k[keep]
    if d.size < 4:
        raise TooFewIterations(f"need at least four usable differences, got {d.size}")
    basis = 2.0 ** (-k)
    vs = np.sum(basis / d) / np.sum((basis / d) ** 2)
    r_only = vs * basis / d - 1.0
    if np.sqrt(np.mean(r_only**2)) < 1e-8:
        return ContractionFit(0.0, float(vs), 0.0, float(np.sqrt(np.mean(r_only**2))), True)

    ratios = d[1:] / d[:-1]
    s0 = float(np.clip(np.median(ratios), 1e-6, 1.5))

    def resid(p):
        vs_, c_, s_ = p
        return (vs_ * basis + c_ * s_**k) / d - 1.0

    starts = [(0.0, d[0] / s0, s0), (vs, 0.0, s0)]
    best = None
    for p0 in starts:
        sol = least_squares(resid, p0, bounds=([0.0, 0.0, 0.0], [np.inf, np.inf, 2.0]),
                            x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000)
        if best is None or sol.cost < best.cost:
            best = sol
    vs_, c_, s_ = best.x
    residual = float(np.sqrt(np.mean(resid(best.x) ** 2)))
    tail = d[len(d) // 2:]
    monotone = bool(np.all(np.diff(tail) < 0))
    ok = bool(s_ < 0.5 or (s_ < 1.0 and monotone))
    return ContractionFit(float(s_), float(vs_), float(c_), residual, ok)


def uniqueness_probe(plus, minus, source, grid, cfg=SolverConfig(), seeds=("data", "zero")):
    """Sup-norm gap between two converged runs started from different seeds.

    A seed is ``"data"``, ``"zero"`` or an explicit array of nodal values.
    """
    fields = []
    for seed in seeds:
        if isinstance(seed, str):
            fld, _ = picard_solve(plus, minus, source, grid, replace(cfg, seed=seed))
        else:
            fld, _ = picard_solve(plus, minus, source, grid, cfg, seed_values=seed)
        fields.append(fld)
    return float(np.abs(fields[0].values - fields[1].values).max())
