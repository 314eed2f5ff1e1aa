"""Uniform node grids over boxes and flat tori, and fields sampled on them.

Node ``k`` of an ``n``-dimensional grid is linearized row-major with axis 0
slowest, which is also numpy's C order; CSV dumps follow that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

MAX_DIM = 3


@dataclass(frozen=True)
class Grid:
    """Uniform node grid on ``prod_i [0, lengths[i]]``.

    Periodic axes place ``m`` nodes on the half-open interval ``[0, L)``
    (spacing ``L/m``); non-periodic axes include both endpoints
    (spacing ``L/(m-1)``).
    """

    n: int
    m: tuple[int, ...]
    lengths: tuple[float, ...]
    periodic: tuple[bool, ...]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.m

    @property
    def size(self) -> int:
        return int(np.prod(self.m))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            L / mi if per else L / (mi - 1)
            for L, mi, per in zip(self.lengths, self.m, self.periodic)
        )

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def is_torus(self) -> bool:
        return all(self.periodic)

    @property
    def is_box(self) -> bool:
        return not any(self.periodic)

    @property
    def diameter(self) -> float:
        """Euclidean diameter of the box (for a torus, of its fundamental domain)."""
        return float(np.sqrt(sum(L * L for L in self.lengths)))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.arange(self.m[axis]) * self.spacing[axis]

    def coords(self) -> list[np.ndarray]:
        """Per-axis coordinate arrays broadcast to the full grid shape ('ij' indexing)."""
        return np.meshgrid(*(self.axis_coords(i) for i in range(self.n)), indexing="ij")

    def points(self) -> np.ndarray:
        """Node coordinates as an ``(size, n)`` array in row-major node order."""
        return np.stack([c.ravel() for c in self.coords()], axis=1)

    def header(self) -> str:
        def join(xs):
            return ",".join(xs)

        return (
            f"# grid n={self.n} m={join(str(v) for v in self.m)} "
            f"lengths={join(repr(float(v)) for v in self.lengths)} "
            f"periodic={join('true' if v else 'false' for v in self.periodic)}"
        )


def make_grid(
    n: int,
    m: Sequence[int] | int,
    lengths: Sequence[float] | float = 1.0,
    periodic: Sequence[bool] | bool = True,
) -> Grid:
    """Build a validated :class:`Grid`.

    Scalars for ``m``, ``lengths`` or ``periodic`` are broadcast to all axes.
    Non-periodic axes need at least 3 nodes so that the one-sided
    second-order gradient stencil fits.
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_DIM:
        raise ValueError(f"dimension must be an integer in [1, {MAX_DIM}], got {n!r}")
    n = int(n)

    def per_axis(value, name):
        if np.isscalar(value):
            return (value,) * n
        value = tuple(value)
        if len(value) != n:
            raise ValueError(f"{name} needs {n} entries, got {len(value)}")
        return value

    m_t = tuple(int(v) for v in per_axis(m, "m"))
    len_t = tuple(float(v) for v in per_axis(lengths, "lengths"))
    per_t = tuple(bool(v) for v in per_axis(periodic, "periodic"))

    for i, (mi, L, per) in enumerate(zip(m_t, len_t, per_t)):
        need = 2 if per else 3
        if mi < need:
            kind = "periodic" if per else "non-periodic"
            raise ValueError(f"axis {i}: {kind} axis needs at least {need} nodes, got {mi}")
        if not (np.isfinite(L) and L > 0):
            raise ValueError(f"axis {i}: length must be positive, got {L}")
    return Grid(n, m_t, len_t, per_t)


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.float64, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One real per node; ``values`` has the grid shape."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {vals.size}")
        vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def __add__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self.grid, other.grid)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self.grid, other.grid)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - float(other))

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            _check_same_grid(self.grid, other.grid)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    """``n`` components per node, stored as an array of shape ``(n, *grid.shape)``."""

    grid: Grid
    components: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=np.float64)
        if comp.size != self.grid.n * self.grid.size:
            raise ValueError(
                f"expected {self.grid.n * self.grid.size} components, got {comp.size}"
            )
        comp = comp.reshape((self.grid.n,) + self.grid.shape)
        if not np.all(np.isfinite(comp)):
            raise ValueError("vector field components must be finite")
        object.__setattr__(self, "components", _frozen(comp))

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(np.sum(self.components**2, axis=0)))


@dataclass(frozen=True, eq=False)
class Density:
    """Non-negative field with unit integral (not unit mean)."""

    base: ScalarField

    TOLERANCE = 1e-12

    def __post_init__(self):
        from poincare_lab.calculus import integral

        if np.any(self.base.values < 0):
            raise ValueError("density has negative values")
        total = integral(self.base)
        if abs(total - 1.0) > self.TOLERANCE:
            raise ValueError(f"density integral is {total!r}, expected 1")

    @property
    def grid(self) -> Grid:
        return self.base.grid

    @property
    def values(self) -> np.ndarray:
        return self.base.values


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def field_from_function(grid: Grid, sampler: Callable[..., object]) -> ScalarField:
    """Sample ``sampler(x0, x1, ...)`` at every node.

    The sampler receives one coordinate array per axis and must broadcast;
    a scalar return value is broadcast to a constant field.
    """
    values = np.asarray(sampler(*grid.coords()), dtype=np.float64)
    values = np.broadcast_to(values, grid.shape)
    if not np.all(np.isfinite(values)):
        raise ValueError("sampler returned non-finite values")
    return ScalarField(grid, values)


def write_field_csv(field: ScalarField, path: str | Path) -> None:
    lines = [field.grid.header()]
    lines.extend(repr(float(v)) for v in field.flat)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_header(line: str) -> Grid:
    if not line.startswith("# grid "):
        raise ValueError(f"missing grid header, got {line!r}")
    fields = dict(tok.split("=", 1) for tok in line[len("# grid "):].split())
    try:
        n = int(fields["n"])
        m = [int(v) for v in fields["m"].split(",")]
        lengths = [float(v) for v in fields["lengths"].split(",")]
        flags = fields["periodic"].split(",")
    except KeyError as exc:
        raise ValueError(f"grid header lacks {exc.args[0]!r}") from None
    if any(v not in ("true", "false") for v in flags):
        raise ValueError(f"bad periodic flags {fields['periodic']!r}")
    return make_grid(n, m, lengths, [v == "true" for v in flags])


def read_field_csv(path: str | Path) -> ScalarField:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    grid = _parse_header(lines[0].strip())
    values = [float(s) for s in lines[1:] if s.strip()]
    return ScalarField(grid, values)
