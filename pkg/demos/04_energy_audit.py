"""Scan the weight parameter Lambda until the weighted energy inequality closes.

For a small Lambda the bulk term cannot absorb the boundary terms and the
margin is negative. Above a threshold Lambda* the margin stays non-negative
for every (u, v) box in the family.
"""
from conegoursat import picard_solve
from conegoursat.config import parse_config
from conegoursat.norms import WeightSpec, audit_family, energy_audit, scan_lambda

cfg = parse_config("[grid]\nny = 200\n")
grid = cfg.grid()
plus, minus = cfg.data(grid)
src = cfg.source()
fld, _ = picard_solve(plus, minus, src, grid, cfg.solver_config())
family = audit_family(grid)
scan = scan_lambda(fld, src, family)
print(f"Lambda* = {scan.Lam_star:.4f}, implied c1 about {scan.c1_est:.3f}")
for frac in (0.05, 0.5, 1.0, 2.0):
    lam = frac * scan.Lam_star
    worst = min(energy_audit(fld, src, u, v, WeightSpec(0.0, lam)).relative_margin for u, v in family)
    print(f"Lambda = {lam:8.4f}: worst relative margin {worst:+.3e}")
