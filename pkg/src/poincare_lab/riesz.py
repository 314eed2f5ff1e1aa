"""Truncated Riesz potential ``K(x) = 1{|x| <= d} / |x|^(n-1)`` and its Young bound.

The potential is evaluated by direct summation over all node pairs.  At the
evaluation node itself the kernel is replaced by its exact mean over a ball
of radius ``h/2`` spread over one cell, which keeps the sum finite and
consistent at the singularity.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from poincare_lab.calculus import lp_norm, quadrature_weights
from poincare_lab.grid import Density, ScalarField

# desk-scale caps for the O(N^2) sum
MAX_NODES_PER_AXIS = {1: 8193, 2: 129, 3: 33}
_CHUNK = 256


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class RieszKernelSpec:
    n: int
    d: float

    def __post_init__(self):
        if not 1 <= self.n <= 3:
            raise ValueError(f"kernel dimension must be 1..3, got {self.n}")
        if not (math.isfinite(self.d) and self.d > 0):
            raise ValueError(f"truncation radius must be positive, got {self.d}")


@dataclass(frozen=True)
class YoungReport:
    lhs: float
    kernel_norm: float
    rhs: float
    slack: float
    n: int
    q: float
    d: float

    def to_dict(self) -> dict:
        return asdict(self)


def young_exponent(n: int, q: float) -> float:
    """Kernel exponent ``s`` with ``1/s = 1 + 1/n - 1/q``.

    This is the Young exponent turning an L^q input into an L^n output.
    It lies in ``[1, n/(n-1))`` exactly when ``n/2 < q <= n``.
    """
    if not q > n / 2:
        raise ValueError(f"q > n/2 failed: q={q}, n={n}")
    inv = 1.0 + 1.0 / n - 1.0 / q
    if inv > 1.0:
        raise ValueError(
            f"q={q} exceeds n={n}: Young's inequality would need a kernel exponent below 1"
        )
    return 1.0 / inv


def kernel_lr_norm(spec: RieszKernelSpec, s: float) -> float:
    """Closed-form ``||K||_{L^s(R^n)}``, finite for ``1 <= s < n/(n-1)``."""
    n, d = spec.n, spec.d
    if s < 1:
        raise ValueError(f"s must be at least 1, got {s}")
    expo = n - (n - 1) * s
    if expo <= 0:
        raise ValueError(f"kernel is not in L^{s}: need s < n/(n-1) = {n / (n - 1)}")
    return (sphere_area(n) * d**expo / expo) ** (1.0 / s)


def singular_cell_value(n: int, h: float) -> float:
    """Mean kernel value assigned to the evaluation node.

    ``int_{|x| <= h/2} |x|^(1-n) dx = area(S^(n-1)) * h/2``, divided by the
    cell volume ``h^n``.
    """
    return sphere_area(n) * (h / 2) / h**n


def riesz_potential(omega: Density, spec: RieszKernelSpec) -> ScalarField:
    """Convolve ``omega`` (extended by zero outside the box) with the truncated kernel."""
    grid = omega.grid
    if any(grid.periodic):
        raise ValueError("riesz_potential needs a box grid (density extended by zero)")
    if spec.n != grid.n:
        raise ValueError(f"kernel is for n={spec.n}, grid has n={grid.n}")
    cap = MAX_NODES_PER_AXIS[grid.n]
    if max(grid.m) > cap:
        raise ValueError(f"at most {cap} nodes per axis in dimension {grid.n}")
    hs = grid.spacing
    if max(hs) - min(hs) > 1e-12 * max(hs):
        raise ValueError("riesz_potential needs equal spacing on every axis")
    h = hs[0]

    pts = grid.points()
    mass = (quadrature_weights(grid) * omega.values).ravel()
    diag = singular_cell_value(grid.n, h)
    cutoff = spec.d * (1 + 1e-12)
    power = grid.n - 1

    out = np.empty(grid.size)
    for start in range(0, grid.size, _CHUNK):
        stop = min(start + _CHUNK, grid.size)
        dist2 = np.zeros((stop - start, grid.size))
        for i in range(grid.n):
            dist2 += (pts[start:stop, i, None] - pts[None, :, i]) ** 2
        dist = np.sqrt(dist2)
        rows = np.arange(stop - start)
        cols = np.arange(start, stop)
        dist[rows, cols] = 1.0
        kern = np.where(dist <= cutoff, dist ** (-power), 0.0)
        kern[rows, cols] = diag
        out[start:stop] = kern @ mass
    return ScalarField(grid, out)


def young_check(omega: Density, q: float, spec: RieszKernelSpec) -> YoungReport:
    """Compare ``||K * omega||_{L^n}`` with ``||K||_{L^s} ||omega||_{L^q}``."""
    s = young_exponent(spec.n, q)
    knorm = kernel_lr_norm(spec, s)
    lhs = lp_norm(riesz_potential(omega, spec), spec.n)
    rhs = knorm * lp_norm(omega, q)
    return YoungReport(
        lhs=lhs, kernel_norm=knorm, rhs=rhs, slack=lhs / rhs, n=spec.n, q=float(q), d=spec.d
    )
