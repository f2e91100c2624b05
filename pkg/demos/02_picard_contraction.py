"""Picard iteration for the cubic wave equation in n = 4 with small Gaussian data.

The iteration converges far faster than geometrically. Each step integrates
over a shrinking triangle, which is the Volterra picture. The last difference
sits at round-off, so only the first ratio is informative.
"""
from conegoursat import SolverConfig, picard_solve, uniqueness_probe
from conegoursat.config import parse_config

for amp in ("1e-2", "1e-1", "1.0", "10.0"):
    cfg = parse_config(f"[grid]\nny = 200\n[data]\nplus = gaussian -0.25 0.05 {amp}\n")
    grid = cfg.grid()
    plus, minus = cfg.data(grid)
    fld, rep = picard_solve(plus, minus, cfg.source(), grid, cfg.solver_config())
    print(f"amplitude {amp:>5}: {rep.iterations} iterations, "
          f"diffs {[f'{d:.1e}' for d in rep.diff_norms]}, sigma_fit {rep.sigma_fit:.2e}")

gap = uniqueness_probe(plus, minus, cfg.source(), grid, SolverConfig())
print(f"seed-independence gap at the last amplitude: {gap:.2e}")
