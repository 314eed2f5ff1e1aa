import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poincare_lab import (
    Density,
    ScalarField,
    field_from_function,
    gradient,
    gradient_lp_norm,
    integral,
    lp_norm,
    make_grid,
    mean,
    normalize_density,
    point_mass,
    quadrature_weights,
    weighted_mean,
)

SIN = lambda x: np.sin(2 * np.pi * x)  # noqa: E731


def test_weights_trapezoid_and_uniform():
    box = make_grid(1, 5, 1.0, False)
    np.testing.assert_array_equal(quadrature_weights(box), [0.125, 0.25, 0.25, 0.25, 0.125])
    tor = make_grid(2, [2, 4], [1.0, 2.0], True)
    np.testing.assert_array_equal(quadrature_weights(tor), np.full((2, 4), 0.25))


@pytest.mark.parametrize("m", [2, 7, 64])
def test_integral_of_one_on_unit_torus(m):
    g = make_grid(2, m)
    assert integral(field_from_function(g, lambda x, y: 1.0)) == pytest.approx(1.0, rel=1e-14)


def test_integral_examples():
    box = make_grid(1, 5, 1.0, False)
    assert integral(field_from_function(box, lambda x: x)) == 0.5
    tor = make_grid(1, 64)
    assert abs(integral(field_from_function(tor, SIN))) <= 1e-12


def test_lp_norm_examples():
    g = make_grid(2, 8)
    c = field_from_function(g, lambda x, y: -2.5)
    for p in (1, 1.7, 2, 9, math.inf):
        assert lp_norm(c, p) == pytest.approx(2.5, rel=1e-14)
    s = field_from_function(make_grid(1, 256), SIN)
    assert abs(lp_norm(s, 2) - math.sqrt(0.5)) <= 1e-10
    assert lp_norm(ScalarField(make_grid(1, 4), [0, 1, 0, -1]), math.inf) == 1


def test_lp_norm_matches_direct_formula(rng):
    g = make_grid(2, [6, 9], [1.0, 3.0], [False, True])
    f = ScalarField(g, rng.standard_normal(g.shape))
    w = quadrature_weights(g)
    for p in (1.0, 2.5, 4.0):
        direct = float(np.sum(w * np.abs(f.values) ** p)) ** (1 / p)
        assert lp_norm(f, p) == pytest.approx(direct, rel=1e-13)


def test_lp_norm_rejects_p_below_one():
    with pytest.raises(ValueError):
        lp_norm(field_from_function(make_grid(1, 4), lambda x: x), 0.5)


def test_mean_examples():
    g = make_grid(2, [5, 6], [2.0, 3.0], [False, True])
    assert mean(field_from_function(g, lambda x, y: 7.0)) == pytest.approx(7.0, rel=1e-14)
    assert abs(mean(field_from_function(make_grid(1, 64), SIN))) <= 1e-12
    assert mean(field_from_function(make_grid(1, 5, 1.0, False), lambda x: x)) == 0.5


def test_weighted_mean_uniform_equals_mean(rng):
    g = make_grid(2, 16)
    f = ScalarField(g, rng.standard_normal(g.shape))
    one = normalize_density(field_from_function(g, lambda x, y: 1.0))
    assert weighted_mean(f, one) == pytest.approx(mean(f), rel=1e-13, abs=1e-15)


def test_weighted_mean_point_mass(rng):
    g = make_grid(2, [5, 6], 1.0, False)
    f = ScalarField(g, rng.standard_normal(g.shape))
    for idx in [(0, 0), (2, 3), (4, 5)]:
        assert weighted_mean(f, point_mass(g, idx)) == f.values[idx]


def test_weighted_mean_bump_against_direct_sum():
    g = make_grid(1, 256)
    x = g.axis_coords(0)
    bump = np.where(np.abs(x - 0.25) < 0.1, np.cos(np.pi * (x - 0.25) / 0.2) ** 2, 0.0)
    om = normalize_density(ScalarField(g, bump))
    f = field_from_function(g, SIN)
    # oracle: an explicit loop over nodes
    total = 0.0
    weight = 1 / 256
    norm = sum(weight * b for b in bump)
    for k in range(256):
        total += weight * math.sin(2 * math.pi * x[k]) * bump[k] / norm
    got = weighted_mean(f, om)
    assert 0 < got <= 1
    assert got == pytest.approx(total, rel=1e-12)


def test_weighted_mean_grid_mismatch():
    a, b = make_grid(1, 4), make_grid(1, 5)
    with pytest.raises(ValueError):
        weighted_mean(field_from_function(a, lambda x: x), normalize_density(field_from_function(b, lambda x: 1.0)))


def test_normalize_density_examples(rng):
    g = make_grid(2, 8)
    d = normalize_density(field_from_function(g, lambda x, y: 5.0))
    np.testing.assert_allclose(d.values, 1.0, rtol=1e-15)
    om = normalize_density(ScalarField(g, rng.random(g.shape)))
    again = normalize_density(om.base)
    np.testing.assert_allclose(again.values, om.values, rtol=1e-15, atol=0)
    bad = np.ones(g.shape)
    bad[3, 3] = -0.1
    with pytest.raises(ValueError):
        normalize_density(ScalarField(g, bad))
    with pytest.raises(ValueError):
        normalize_density(ScalarField(g, np.zeros(g.shape)))


def test_gradient_exact_on_affine_box():
    g = make_grid(2, [4, 7], [1.0, 2.0], False)
    vf = gradient(field_from_function(g, lambda x, y: x))
    np.testing.assert_allclose(vf.components[0], 1.0, atol=1e-13)
    np.testing.assert_allclose(vf.components[1], 0.0, atol=1e-13)
    assert gradient_lp_norm(vf, 3) == pytest.approx(2.0 ** (1 / 3), rel=1e-12)


def test_gradient_of_constant_is_zero():
    g = make_grid(3, [4, 5, 6], 1.0, [True, False, True])
    vf = gradient(field_from_function(g, lambda *xs: 2.0))
    assert np.all(vf.components == 0)
    assert gradient_lp_norm(vf, 2) == 0


def _sin_error(m):
    g = make_grid(1, m)
    err = gradient(field_from_function(g, SIN)).components[0] - 2 * np.pi * np.cos(2 * np.pi * g.axis_coords(0))
    return np.max(np.abs(err))


def test_gradient_second_order_on_torus():
    ratio = _sin_error(64) / _sin_error(128)
    assert 3.6 <= ratio <= 4.4
    assert 1.8 <= math.log2(ratio) <= 2.2


def test_gradient_second_order_on_box():
    errs = []
    for m in (33, 65):
        g = make_grid(1, m, 1.0, False)
        exact = np.exp(g.axis_coords(0))
        errs.append(np.max(np.abs(gradient(field_from_function(g, np.exp)).components[0] - exact)))
    assert 1.8 <= math.log2(errs[0] / errs[1]) <= 2.2


def test_gradient_lp_norm_of_sine():
    g = make_grid(1, 256)
    val = gradient_lp_norm(gradient(field_from_function(g, SIN)), 2)
    assert abs(val - 2 * math.pi * math.sqrt(0.5)) <= 1e-3


# -- properties ----------------------------------------------------------------

_G = make_grid(2, 6, 1.0, True)
_vals = st.lists(st.floats(-1e3, 1e3), min_size=_G.size, max_size=_G.size)
_pos = st.lists(st.floats(0.0, 1e3), min_size=_G.size, max_size=_G.size).filter(lambda v: sum(v) > 1e-3)


@settings(max_examples=100, deadline=None)
@given(_vals, st.floats(1, 8), st.floats(1, 8))
def test_norm_monotonicity_on_unit_volume(values, a, b):
    a, b = sorted((a, b))
    f = ScalarField(_G, values)
    assert lp_norm(f, a) <= lp_norm(f, b) * (1 + 1e-12) + 1e-300
    assert lp_norm(f, b) <= lp_norm(f, math.inf) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(_vals, _pos, st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3), st.floats(-10, 10))
def test_weighted_mean_bounds_and_linearity(values, weights, a, b):
    f = ScalarField(_G, values)
    om = normalize_density(ScalarField(_G, weights))
    m = weighted_mean(f, om)
    assert f.values.min() <= m <= f.values.max()
    scale = max(1.0, float(np.max(np.abs(f.values)))) * abs(a) + abs(b)
    assert abs(weighted_mean(a * f + b, om) - (a * m + b)) <= 1e-12 * scale


@settings(max_examples=50, deadline=None)
@given(_pos, st.floats(1e-3, 1e3))
def test_density_scale_consistency(weights, c):
    base = ScalarField(_G, weights)
    np.testing.assert_allclose(
        normalize_density(base * c).values, normalize_density(base).values, rtol=1e-12, atol=1e-300
    )
    assert isinstance(normalize_density(base), Density)
