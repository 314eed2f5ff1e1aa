"""Adversarial families: concentrating bumps, trigonometric trial functions,
ratio maximization over ``f`` and the scaling sweep in ``||omega||_q``.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from poincare_lab.calculus import gradient, lp_norm, normalize_density, quadrature_weights
from poincare_lab.grid import Density, Grid, ScalarField
from poincare_lab.inequality import ExponentConfig, ratio_report

FD_STEP = 1e-6
MIN_REL_IMPROVEMENT = 1e-6
THREADS_ENV = "POINCARE_LAB_THREADS"


@dataclass(frozen=True)
class BumpSpec:
    center: tuple[float, ...]
    eps: float
    profile: str = "cos2"


def bump_density(grid: Grid, spec: BumpSpec) -> Density:
    """Normalized ``prod_i cos^2(pi d_i / (2 eps))`` on ``|d_i| < eps``.

    ``d_i`` is the per-axis distance to the center, measured around the
    circle on periodic axes.
    """
    if spec.profile != "cos2":
        raise ValueError(f"unknown bump profile {spec.profile!r}")
    center = tuple(float(c) for c in spec.center)
    if len(center) != grid.n:
        raise ValueError(f"center needs {grid.n} coordinates")
    for c, L in zip(center, grid.lengths):
        if not 0 <= c <= L:
            raise ValueError(f"center {center} lies outside the box")
    eps = float(spec.eps)
    if eps > min(grid.lengths):
        raise ValueError(f"eps={eps} exceeds the smallest axis length")
    if eps < 2 * max(grid.spacing):
        raise ValueError(f"eps={eps} is below two cells (h={max(grid.spacing)})")

    values = np.ones(grid.shape)
    for axis, x in enumerate(grid.coords()):
        d = np.abs(x - center[axis])
        if grid.periodic[axis]:
            L = grid.lengths[axis]
            d = np.minimum(d, L - d)
        values = values * np.where(d < eps, np.cos(np.pi * d / (2 * eps)) ** 2, 0.0)
    return normalize_density(ScalarField(grid, values))


def uniform_density(grid: Grid) -> Density:
    return normalize_density(ScalarField(grid, np.ones(grid.shape)))


def frequencies(n: int, max_freq: int) -> list[tuple[int, ...]]:
    """Nonzero integer frequency vectors up to ``max_freq`` per axis, one of each ``+-k`` pair."""
    out = []
    for k in itertools.product(range(-max_freq, max_freq + 1), repeat=n):
        nz = next((v for v in k if v != 0), 0)
        if nz > 0:
            out.append(k)
    return out


def trig_basis(grid: Grid, max_freq: int) -> np.ndarray:
    """Rows ``cos(2 pi k.x), sin(2 pi k.x)`` for each frequency, flattened over nodes."""
    if not grid.is_torus:
        raise ValueError("trigonometric fields need a periodic grid")
    if max_freq < 1:
        raise ValueError("max_freq must be at least 1")
    for i, m in enumerate(grid.m):
        if not 2 * max_freq < m:
            raise ValueError(f"max_freq={max_freq} is not below the Nyquist limit on axis {i} (m={m})")
    xs = grid.coords()
    rows = []
    for k in frequencies(grid.n, max_freq):
        phase = sum(2 * np.pi * ki * x / L for ki, x, L in zip(k, xs, grid.lengths))
        rows.append(np.cos(phase).ravel())
        rows.append(np.sin(phase).ravel())
    return np.array(rows)


def random_field(grid: Grid, max_freq: int, seed: int) -> ScalarField:
    """Trigonometric polynomial with standard-normal coefficients and no constant mode."""
    basis = trig_basis(grid, max_freq)
    coef = np.random.default_rng(seed).standard_normal(len(basis))
    return ScalarField(grid, coef @ basis)


class _BatchRatio:
    """Vectorized ratio over many coefficient vectors at once.

    The discrete gradient is linear, so it is precomputed per basis function
    and the whole functional becomes a few matrix products.
    """

    def __init__(self, grid: Grid, omega: Density, cfg: ExponentConfig, max_freq: int):
        self.grid = grid
        self.cfg = cfg
        self.basis = trig_basis(grid, max_freq)
        # (C, n*N): row c holds every gradient component of basis function c
        self.grads = np.stack(
            [gradient(ScalarField(grid, row)).components.ravel() for row in self.basis]
        )
        self.w = quadrature_weights(grid).ravel()
        self.w_omega = self.w * omega.values.ravel()
        self.scale = lp_norm(omega, cfg.q) ** cfg.alpha

    def _lp(self, a: np.ndarray, p: float) -> np.ndarray:
        a = np.abs(a)
        top = a.max(axis=1)
        if math.isinf(p):
            return top
        safe = np.where(top > 0, top, 1.0)
        return top * np.sum(self.w * (a / safe[:, None]) ** p, axis=1) ** (1.0 / p)

    def __call__(self, coefs: np.ndarray) -> np.ndarray:
        coefs = np.atleast_2d(coefs)
        f = coefs @ self.basis
        dev = f - (f @ self.w_omega)[:, None]
        num = self._lp(dev, self.cfg.r)
        g = (coefs @ self.grads).reshape(len(coefs), self.grid.n, -1)
        den = self._lp(np.sqrt(np.sum(g * g, axis=1)), self.cfg.p)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / (self.scale * den)
        return np.where(den > 0, out, 0.0)


def maximize_deficit(
    omega: Density,
    cfg: ExponentConfig,
    max_freq: int = 4,
    budget: int = 200,
    seed: int = 0,
    initial_step: float = 0.5,
) -> tuple[ScalarField, list[float]]:
    """Ascent on the ratio over trigonometric coefficients.

    Each iteration estimates the coefficient gradient by central finite
    differences, tries a step of fixed length along it (on the unit sphere,
    the ratio being scale invariant) and keeps the step only if the ratio
    improves; otherwise the step length is halved.  Stops after ``budget``
    iterations or once an accepted step gains less than 1e-6 relative.

    Returns the maximizer rescaled to ``||df||_p = 1`` and the trace of
    ratios, starting with the initial iterate; the trace never decreases.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    grid = omega.grid
    if grid.n != cfg.n:
        raise ValueError(f"config is for n={cfg.n}, grid has n={grid.n}")
    evaluate = _BatchRatio(grid, omega, cfg, max_freq)
    n_coef = len(evaluate.basis)

    a = np.random.default_rng(seed).standard_normal(n_coef)
    a /= np.linalg.norm(a)
    current = float(evaluate(a)[0])
    trace = [current]
    probes = np.concatenate([np.eye(n_coef), -np.eye(n_coef)]) * FD_STEP

    def fd_gradient(x):
        vals = evaluate(x + probes)
        return (vals[:n_coef] - vals[n_coef:]) / (2 * FD_STEP)

    step = initial_step
    g = fd_gradient(a)
    for _ in range(budget):
        gnorm = np.linalg.norm(g)
        if gnorm == 0 or step < 1e-14:
            break
        cand = a + step * g / gnorm
        cand /= np.linalg.norm(cand)
        value = float(evaluate(cand)[0])
        if value > current:
            gain = (value - current) / current
            a, current = cand, value
            trace.append(current)
            if gain < MIN_REL_IMPROVEMENT:
                break
            g = fd_gradient(a)
        else:
            step /= 2
            trace.append(current)

    f = ScalarField(grid, a @ evaluate.basis)
    norm = lp_norm(gradient(f).magnitude(), cfg.p)
    return f.with_values(f.values / norm), trace


@dataclass(frozen=True)
class SweepRecord:
    eps: float
    omega_q_norm: float
    best_deficit: float
    best_ratio: float
    ascent_iterations: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


SWEEP_COLUMNS = ("eps", "omega_q_norm", "best_deficit", "best_ratio", "ascent_iterations", "seed")


def sweep_density(grid: Grid, eps: float, center: Sequence[float] | None = None) -> Density:
    """Density for one sweep level: uniform once ``eps`` reaches half the shortest side."""
    if eps >= min(grid.lengths) / 2:
        return uniform_density(grid)
    if center is None:
        center = tuple(L / 2 for L in grid.lengths)
    return bump_density(grid, BumpSpec(tuple(center), eps))


def _default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep(
    cfg: ExponentConfig,
    grid: Grid,
    eps_list: Sequence[float],
    max_freq: int = 4,
    budget: int = 200,
    seed: int = 0,
    center: Sequence[float] | None = None,
    workers: int | None = None,
) -> list[SweepRecord]:
    """Run :func:`maximize_deficit` on a bump of each width; record ``i`` uses seed ``seed + i``."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("empty eps list")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly decreasing")
    densities = [sweep_density(grid, e, center) for e in eps_list]

    def run(i):
        omega = densities[i]
        f, trace = maximize_deficit(omega, cfg, max_freq, budget, seed + i)
        rep = ratio_report(f, omega, cfg)
        return SweepRecord(
            eps=eps_list[i],
            omega_q_norm=rep["omega_q_norm"],
            best_deficit=rep["deficit"],
            best_ratio=rep["ratio"],
            ascent_iterations=len(trace) - 1,
            seed=seed + i,
        )

    workers = workers or _default_workers()
    if workers == 1:
        return [run(i) for i in range(len(eps_list))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(eps_list))))


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    max_abs_residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def _get(record, key):
    return record[key] if isinstance(record, dict) else getattr(record, key)


def fit_loglog(records, x_key: str, y_key: str) -> FitResult:
    """Least-squares line through ``(log x, log y)``."""
    xs = np.array([float(_get(r, x_key)) for r in records])
    ys = np.array([float(_get(r, y_key)) for r in records])
    if len(xs) < 3:
        raise ValueError(f"need at least 3 points, got {len(xs)}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive values")
    design = np.column_stack([np.ones_like(xs), np.log(xs)])
    (intercept, slope), *_ = np.linalg.lstsq(design, np.log(ys), rcond=None)
    resid = np.log(ys) - design @ np.array([intercept, slope])
    return FitResult(float(slope), float(intercept), float(np.max(np.abs(resid))))
