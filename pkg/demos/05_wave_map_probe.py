"""Wave maps into constant-curvature targets have a cubic null-form source.

A flat target gives no source at all. For a curved one, scaling the field by
eps scales the source by eps^3, which a log-log fit confirms.
"""
import numpy as np

from conegoursat import ConeGeometry
from conegoursat.nonlinearity import scaling_probe, wave_map_source

g = ConeGeometry(4, 1.0, -0.5)
rng = np.random.default_rng(0)
w, dy, dx = rng.normal(size=(3, 3))
flat = wave_map_source(0.0, 3).rhs(np.array([0.1]), np.array([-0.3]), w[None], dy[None], dx[None], g)
print("flat target source:", flat.ravel())
for K in (1.0, -1.0):
    slope = scaling_probe(wave_map_source(K, 3), g, 0.1, -0.3, (w, dy, dx), np.logspace(-4, -1, 16))
    print(f"K = {K:+.0f}: scaling exponent {slope:.5f}")
