import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conegoursat.errors import BadAlpha, BadOrder, BadTarget, DegenerateDirection, EmptySpec, \
    ExponentUnderflow
from conegoursat.nonlinearity import (ConstantCurvatureTarget, FlatTarget, MonomialTerm,
                                      SourceSpec, WaveMapSource, christoffel_fd, cubic_source,
                                      dimension_gate, scaling_probe, wave_map_source)


@pytest.mark.parametrize("r, alpha, shift, n_min", [
    (2, -0.5, 3.0, 6), (3, -0.5, 3.0, 4), (5, -0.5, 3.0, 3), (3, -0.5, 1.0, 3),
])
def test_gate_table(r, alpha, shift, n_min):
    assert dimension_gate(4, r, alpha, shift).n_min == n_min


def test_gate_boundary_cases():
    assert dimension_gate(4, 3, -0.5).passed
    assert dimension_gate(4, 3, -0.5).margin == pytest.approx(0.0)
    assert not dimension_gate(3, 3, -0.5).passed
    with pytest.raises(BadAlpha):
        dimension_gate(4, 3, 0.0)
    with pytest.raises(BadOrder):
        dimension_gate(4, 1, -0.5)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.floats(-0.99, -0.5))
def test_gate_monotone_in_n(r, alpha):
    res = dimension_gate(1, r, alpha)
    assert dimension_gate(res.n_min, r, alpha).passed
    if res.n_min > 1:
        assert not dimension_gate(res.n_min - 1, r, alpha).passed


def test_cubic_exponent_frozen():
    # -(4+3)/2 + 3*(3/2) = 1 and margin E + 2 alpha = 0 at alpha = -1/2
    src = cubic_source()
    assert src.exponent(src.terms[0], 4) == pytest.approx(1.0)
    assert src.exponent_margins(4, -0.5) == [pytest.approx(0.0)]
    assert src.zero_order == 3


def test_empty_spec():
    with pytest.raises(EmptySpec):
        SourceSpec(()).zero_order


def test_factored_matches_naive(geometry, rng):
    src = SourceSpec((MonomialTerm(1.3, pow_p=3), MonomialTerm(-0.7, pow_p=1, pow_qx=2),
                      MonomialTerm(0.4, pow_qy=2, pow_p=1, extra_x_exponent=0.5)))
    y = rng.uniform(0, 0.4, 20)
    x = rng.uniform(-0.5, -0.01, 20)
    w, dy, dx = rng.normal(size=(3, 20))
    np.testing.assert_allclose(src.rhs(y, x, w, dy, dx, geometry),
                               src.rhs_naive(y, x, w, dy, dx, geometry), rtol=1e-12)


def test_factored_is_finite_at_scri(geometry):
    src = cubic_source()
    assert src.rhs(0.1, 0.0, 1.0, 0.0, 0.0, geometry) == 0.0
    bad = SourceSpec((MonomialTerm(1.0, pow_p=2),))   # exponent -0.5 at n = 4
    with pytest.raises(ExponentUnderflow):
        bad.rhs(0.1, 0.0, 1.0, 0.0, 0.0, geometry)


def test_callable_coefficient(geometry):
    src = SourceSpec((MonomialTerm(lambda y, x: 2.0 + y, pow_p=3),))
    assert src.rhs(0.5, -0.25, 1.0, 0.0, 0.0, geometry) == pytest.approx(2.5 * 0.25)


def test_scaling_probe_cubic(geometry):
    slope = scaling_probe(cubic_source(), geometry, 0.1, -0.3, (1.0, 0.2, -0.4),
                          np.logspace(-4, -1, 10))
    assert slope == pytest.approx(3.0, abs=1e-9)


def test_scaling_probe_errors(geometry):
    with pytest.raises(ValueError):
        scaling_probe(cubic_source(), geometry, 0.1, -0.3, (1.0, 0, 0), np.logspace(-2, -1, 5))
    with pytest.raises(DegenerateDirection):
        scaling_probe(cubic_source(), geometry, 0.1, -0.3, (0.0, 1.0, 1.0), np.logspace(-4, -1, 5))


def test_flat_target_is_zero(geometry, rng):
    src = wave_map_source(0.0, 3)
    w, dy, dx = rng.normal(size=(3, 7, 3))
    out = src.rhs(np.full(7, 0.1), np.full(7, -0.2), w, dy, dx, geometry)
    assert np.all(out == 0.0)


@pytest.mark.parametrize("K", [1.0, -1.0])
def test_christoffel_against_fd(K, rng):
    tgt = ConstantCurvatureTarget(K, 3)
    f = rng.normal(scale=0.3, size=3)
    np.testing.assert_allclose(tgt.christoffel(f), christoffel_fd(tgt.metric, f), atol=1e-8)


@pytest.mark.parametrize("K", [1.0, -1.0])
def test_truncated_metric_matches_space_form(K, rng):
    tgt = ConstantCurvatureTarget(K, 3)
    f = rng.normal(size=3)
    f *= 1e-2 / np.linalg.norm(f)
    # agreement to quadratic order: the gap is O(|f|^4)
    gap = np.abs(tgt.metric(f) - tgt.exact_metric(f)).max()
    assert gap < 1e-8
    # Christoffels of the exact metric agree to first order
    np.testing.assert_allclose(tgt.christoffel(f), christoffel_fd(tgt.exact_metric, f), atol=1e-5)


def test_wave_map_cubic_scaling(geometry, rng):
    src = wave_map_source(1.0, 3)
    w, dy, dx = rng.normal(size=(3, 3))
    slope = scaling_probe(src, geometry, 0.1, -0.3, (w, dy, dx), np.logspace(-4, -1, 13))
    assert slope == pytest.approx(3.0, abs=0.05)
    assert src.gate(4, -0.5).passed and src.gate(3, -0.5).passed


def test_wave_map_bracket_frozen(geometry):
    # one component, Gamma = c constant: check the bracket by hand
    class Const:
        N = 1

        def christoffel(self, f):
            return np.full(np.shape(f)[:-1] + (1, 1, 1), 2.0)

    src = WaveMapSource(Const())
    n, a = geometry.n, geometry.a
    y, x, w, dy, dx = 0.1, -0.3, 0.5, 0.2, -0.4
    om = -x * (1 / a - y)
    euler = x * dx + (y - 1 / a) * dy
    bracket = om * (-4 * dx * dy) - (1 - n) ** 2 * w * w + 2 * (1 - n) * w * euler
    want = -om ** (-(n + 1) / 2 + (n - 1)) * 2.0 * bracket
    got = src.rhs(np.array([y]), np.array([x]), np.array([[w]]), np.array([[dy]]),
                  np.array([[dx]]), geometry)
    assert got[0, 0] == pytest.approx(want, rel=1e-13)


def test_bad_target(geometry):
    class Skew:
        N = 2

        def christoffel(self, f):
            g = np.zeros(np.shape(f)[:-1] + (2, 2, 2))
            g[..., 0, 0, 1] = 1.0
            return g

    with pytest.raises(BadTarget):
        WaveMapSource(Skew()).rhs(np.zeros(1), -np.ones(1) * 0.2, np.ones((1, 2)),
                                  np.ones((1, 2)), np.ones((1, 2)), geometry)


def test_flat_target_shape():
    assert FlatTarget(2).christoffel(np.zeros((4, 2))).shape == (4, 2, 2, 2)
