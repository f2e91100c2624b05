"""Double-null node grids and fields sampled on them."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .conformal import ConeGeometry
from .errors import RhoFloor


@dataclass(frozen=True)
class Grid:
    """Uniform node grid ``y_i = i*hy`` on ``[0, u_max]``, ``x_j = x0 + j*hx`` on ``[x0, -eps_scri]``.

    ``ny`` and ``nx`` count cells, so arrays have ``(ny+1, nx+1)`` nodes.
    """

    geometry: ConeGeometry
    ny: int
    nx: int
    u_max: float
    eps_scri: float
    rho_min: float = 0.0

    def __post_init__(self):
        g = self.geometry
        if self.ny < 2 or self.nx < 2:
            raise ValueError("grid needs at least two cells per direction")
        if not 0 < self.u_max <= g.y0:
            raise ValueError(f"u_max must lie in (0, y0={g.y0}], got {self.u_max}")
        if not 0 < self.eps_scri < abs(g.x0):
            raise ValueError(f"eps_scri must lie in (0, |x0|), got {self.eps_scri}")
        # rho is smallest at the corner (u_max, x0)
        if g.rho(self.u_max, g.x0) <= max(self.rho_min, 0.0):
            raise RhoFloor(f"rho at (u_max, x0) = {g.rho(self.u_max, g.x0)} is below the floor")

    @classmethod
    def build(cls, geometry, ny, nx=None, u_max=None, eps_scri=None, rho_min=0.0):
        """Defaults: ``u_max = y0/2`` and ``eps_scri = 1e-3 |x0|``."""
        if nx is None:
            nx = ny
        if u_max is None:
            u_max = 0.5 * geometry.y0
        if eps_scri is None:
            eps_scri = 1e-3 * abs(geometry.x0)
        return cls(geometry, int(ny), int(nx), float(u_max), float(eps_scri), float(rho_min))

    @cached_property
    def y(self):
        return np.linspace(0.0, self.u_max, self.ny + 1)

    @cached_property
    def x(self):
        return np.linspace(self.geometry.x0, -self.eps_scri, self.nx + 1)

    @property
    def hy(self):
        return self.u_max / self.ny

    @property
    def hx(self):
        return (abs(self.geometry.x0) - self.eps_scri) / self.nx

    @property
    def shape(self):
        return (self.ny + 1, self.nx + 1)

    def mesh(self):
        return np.meshgrid(self.y, self.x, indexing="ij")

    def rho(self):
        Y, X = self.mesh()
        return self.geometry.rho(Y, X)


@dataclass
class Field:
    """Nodal values of ``w`` with shape ``(ny+1, nx+1, n_components)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 2:
            v = v[..., None]
        if v.shape[:2] != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        self.values = v

    @property
    def n_components(self):
        return self.values.shape[-1]

    @cached_property
    def dy(self):
        return np.gradient(self.values, self.grid.y, axis=0, edge_order=2)

    @cached_property
    def dx(self):
        return np.gradient(self.values, self.grid.x, axis=1, edge_order=2)

    @classmethod
    def zeros(cls, grid, n_components=1):
        return cls(grid, np.zeros(grid.shape + (n_components,)))

    def copy(self):
        return Field(self.grid, self.values.copy())
