"""Recover the physical field near null infinity and fit its decay in t + r.

In n = 4 the field should decay at least like (t+r)^(-3/2). Its first
derivatives should decay like (t+r)^(-1) when alpha = -1/2.
"""
from conegoursat import picard_solve
from conegoursat.config import parse_config
from conegoursat.physical import decay_report

cfg = parse_config("")
grid = cfg.grid()
plus, minus = cfg.data(grid)
fld, rep = picard_solve(plus, minus, cfg.source(), grid, cfg.solver_config())
samples, fit = decay_report(fld, cfg.alpha)
lo, hi = fit["window_abs_x"]
print(f"fit window |x| in [{lo:.4g}, {hi:.4g}] on the line y = {fit['ynull']:.3f}")
for name, ch in fit["channels"].items():
    print(f"{name:>4}: slope {ch['slope']:+.3f}  bound {ch['bound']:+.2f}  "
          f"r2 {ch['r2']:.4f}  {'ok' if ch['pass'] else 'VIOLATED'}")
