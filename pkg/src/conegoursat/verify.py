"""Identity checks behind ``conegoursat verify``; each returns value, tolerance and a flag."""
import numpy as np

from .conformal import (ConeGeometry, compactify, conformal_wave_residual, decompactify,
                        minkowski_dot, omega, omega_dn)
from .nonlinearity import dimension_gate
from .norms import NormSpec, WeightSpec, weighted_sobolev_norm


def random_offcone_points(n, count, rng, margin=0.05):
    """Points of R^{1,n} with ``|eta(p,p)| > margin |p|^2``."""
    pts = []
    while sum(len(p) for p in pts) < count:
        p = rng.uniform(-2.0, 2.0, size=(count, n + 1))
        q = np.abs(minkowski_dot(p, p))
        pts.append(p[q > margin * np.sum(p * p, axis=-1)])
    return np.concatenate(pts)[:count]


def involution_error(n=4, count=10_000, seed=0):
    rng = np.random.default_rng(seed)
    p = random_offcone_points(n, count, rng)
    back = decompactify(compactify(p))
    return float((np.linalg.norm(back - p, axis=-1) / np.linalg.norm(p, axis=-1)).max())


def omega_error(n=4, count=10_000, seed=1):
    """``Omega(phi(p)) = -1/eta(p,p)`` and its double-null form ``-x(1/a - y)``."""
    rng = np.random.default_rng(seed)
    g = ConeGeometry(n, 1.0, -0.5)
    p = random_offcone_points(n, count, rng)
    q = compactify(p)
    om = omega(q)
    e1 = np.abs(om + 1.0 / minkowski_dot(p, p)) / np.abs(om)
    tau = q[:, 0]
    rho = np.linalg.norm(q[:, 1:], axis=-1)
    y, x = tau - rho + 1.0 / g.a, tau + rho
    e2 = np.abs(omega_dn(y, x, g) - om) / np.abs(om)
    return float(max(e1.max(), e2.max()))


def gaussian_field(center, width=0.7):
    center = np.asarray(center, dtype=float)
    return lambda p: float(np.exp(-np.sum((np.asarray(p) - center) ** 2) / width**2))


def wave_identity_order(n, steps=(4e-3, 2e-3, 1e-3)):
    """Observed order of the FD residual of ``box f = Omega^{(n+3)/2} box fhat``."""
    rng = np.random.default_rng(10 + n)
    p = np.zeros(n + 1)
    p[0] = 2.0
    p[1:] = rng.uniform(-0.3, 0.3, n)
    q = compactify(p)
    f = gaussian_field(p + 0.2)
    res = np.array([conformal_wave_residual(f, q, h, n) for h in steps])
    return float(np.mean(np.log2(res[:-1] / res[1:]))), res.tolist()


GATE_TABLE = (((2, -0.5, 3.0), 6), ((3, -0.5, 3.0), 4), ((5, -0.5, 3.0), 3), ((3, -0.5, 1.0), 3))


def gate_table_ok():
    return all(dimension_gate(1, r, al, shift).n_min == want for (r, al, shift), want in GATE_TABLE)


def weight_fd_error(count=50, h=1e-5, seed=2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        w = WeightSpec(rng.uniform(0, 3), rng.uniform(0, 3))
        x, y = rng.uniform(-1.0, -0.1), rng.uniform(0.0, 1.0)
        fdx = (w.H(x + h, y) - w.H(x - h, y)) / (2 * h)
        fdy = (w.H(x, y + h) - w.H(x, y - h)) / (2 * h)
        worst = max(worst, abs(fdx - w.dH_dx(x, y)) / abs(w.dH_dx(x, y)),
                    abs(fdy - w.dH_dy(x, y)) / max(abs(w.dH_dy(x, y)), 1e-300) if w.Lam else 0.0)
    return float(worst)


def constant_norm_error(x0=-0.5, eps=5e-4, npts=2001):
    """k = 0, alpha = -1/2, f = 1: the squared norm is ``|x0| - eps``."""
    x = np.linspace(x0, -eps, npts)
    got = weighted_sobolev_norm(np.ones_like(x), x, NormSpec(0, -0.5)) ** 2
    return float(abs(got - (abs(x0) - eps)) / (abs(x0) - eps))


def run_checks():
    """Run every identity check; returns ``{name: {value, tolerance, pass}}``."""
    out = {}

    def add(name, value, tol, ok=None):
        out[name] = {"value": value, "tolerance": tol,
                     "pass": bool(value <= tol) if ok is None else bool(ok)}

    add("involution_rel_error", involution_error(), 1e-12)
    add("omega_rel_error", omega_error(), 1e-12)
    for n in (3, 4):
        order, _ = wave_identity_order(n)
        add(f"wave_identity_order_n{n}", order, 0.3, abs(order - 2.0) <= 0.3)
    add("gate_table", 1.0 if gate_table_ok() else 0.0, 1.0, gate_table_ok())
    add("weight_derivative_rel_error", weight_fd_error(), 1e-6)
    add("constant_norm_rel_error", constant_norm_error(), 1e-12)
    return out
