"""Quadrature, L^p norms, plain and weighted means, finite-difference gradients.

Quadrature is tensorized: periodic axes carry the uniform weight ``h`` at every
node, non-periodic axes carry trapezoid weights (``h/2`` at both endpoints).
All reductions go through :func:`_pairwise_sum`, i.e. numpy's pairwise
summation over the row-major flattened array, so results do not depend on
how a caller chunks or schedules work.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from poincare_lab.grid import Density, Grid, ScalarField, VectorField, _check_same_grid


def _pairwise_sum(values: np.ndarray) -> float:
    return float(np.sum(np.ascontiguousarray(values).ravel()))


@lru_cache(maxsize=64)
def _weights_cached(grid: Grid) -> np.ndarray:
    w = np.ones(1)
    for i in range(grid.n):
        h = grid.spacing[i]
        axis_w = np.full(grid.m[i], h)
        if not grid.periodic[i]:
            axis_w[0] = axis_w[-1] = h / 2
        w = np.multiply.outer(w, axis_w)
    w = w.reshape(grid.shape)
    w.setflags(write=False)
    return w


def quadrature_weights(grid: Grid) -> np.ndarray:
    """Positive per-node weights with the grid shape, summing to the box volume."""
    return _weights_cached(grid)


def integral(field: ScalarField) -> float:
    return _pairwise_sum(quadrature_weights(field.grid) * field.values)


def _lp(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    p = float(p)
    if np.isnan(p) or p < 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    a = np.abs(values)
    if np.isinf(p):
        return float(a.max())
    # scale by the max to keep a**p inside float range for large p
    top = float(a.max())
    if top == 0.0:
        return 0.0
    return top * _pairwise_sum(weights * (a / top) ** p) ** (1.0 / p)


def lp_norm(field: ScalarField | Density, p: float) -> float:
    """Discrete L^p norm; ``p = inf`` gives the max-norm."""
    if isinstance(field, Density):
        field = field.base
    return _lp(field.values, quadrature_weights(field.grid), p)


def mean(field: ScalarField) -> float:
    return integral(field) / field.grid.volume


def weighted_mean(field: ScalarField, density: Density) -> float:
    """Average of ``field`` against the probability density ``density``.

    The result is clamped into ``[min f, max f]``; the clamp only ever acts
    at rounding level since the density integrates to 1 within 1e-12.
    """
    _check_same_grid(field.grid, density.grid)
    w = quadrature_weights(field.grid)
    value = _pairwise_sum(w * field.values * density.values)
    return float(np.clip(value, field.values.min(), field.values.max()))


def normalize_density(field: ScalarField) -> Density:
    if np.any(field.values < 0):
        raise ValueError("cannot normalize a field with negative values")
    total = integral(field)
    if not total > 0:
        raise ValueError("cannot normalize an identically zero field")
    return Density(field.with_values(field.values / total))


def point_mass(grid: Grid, index: int | tuple[int, ...]) -> Density:
    """Discrete Dirac mass: ``1/weight`` at one node, zero elsewhere."""
    if isinstance(index, (int, np.integer)):
        index = np.unravel_index(int(index), grid.shape)
    values = np.zeros(grid.shape)
    values[tuple(index)] = 1.0 / quadrature_weights(grid)[tuple(index)]
    return Density(ScalarField(grid, values))


def _axis_derivative(values: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)

    f = np.moveaxis(values, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def gradient(field: ScalarField) -> VectorField:
    """Second-order finite-difference gradient.

    Central differences at interior and periodic nodes; one-sided
    three-point stencils at the ends of non-periodic axes.
    """
    grid = field.grid
    for i in range(grid.n):
        if not grid.periodic[i] and grid.m[i] < 3:
            raise ValueError(f"axis {i} has {grid.m[i]} nodes; the stencil needs 3")
    comps = [
        _axis_derivative(field.values, grid.spacing[i], i, grid.periodic[i])
        for i in range(grid.n)
    ]
    return VectorField(grid, np.stack(comps))


def gradient_lp_norm(vf: VectorField, p: float) -> float:
    """L^p norm of the pointwise Euclidean magnitude."""
    return lp_norm(vf.magnitude(), p)
