"""Second-order convergence of the diamond scheme on a planted solution.

We plant w* = sin(y) e^x, compute the forcing that makes it exact for the linear
operator, and take one linear step on three grids. Halving h should cut the
error by four.
"""
import numpy as np

from conegoursat import ConeGeometry, Field, Grid, linear_step
from conegoursat.nonlinearity import Forcing
from conegoursat.initialdata import ConeDataMinus, ConeDataPlus

g = ConeGeometry(4, 1.0, -0.5)


def forcing(y, x):
    return -4 * np.cos(y) * np.exp(x) + (g.n - 1) / g.rho(y, x) * (np.sin(y) - np.cos(y)) * np.exp(x)


errors = []
for n in (50, 100, 200, 400):
    grid = Grid.build(g, n, u_max=0.25, eps_scri=5e-4)
    plus = ConeDataPlus(grid.x, np.zeros_like(grid.x), np.zeros_like(grid.x))
    minus = ConeDataMinus(grid.y, np.sin(grid.y) * np.exp(g.x0), np.cos(grid.y) * np.exp(g.x0))
    out = linear_step(Field.zeros(grid), plus, minus, Forcing(forcing), grid)
    Y, X = grid.mesh()
    err = np.abs(out.values[..., 0] - np.sin(Y) * np.exp(X)).max()
    errors.append(err)
    print(f"n = {n:4d}   sup error = {err:.3e}")

orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
print("observed orders:", np.round(orders, 3))
