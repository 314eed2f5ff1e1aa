"""Covering maps of flat tori, and the ball-cover / spanning-tree skeleton.

A covering map here is the integer wrap ``x -> x mod 1`` from the torus
``prod_i [0, w_i)`` onto the unit torus.  With ``m_i`` target nodes per
axis the source carries ``w_i * m_i`` nodes, so every source node lands
exactly on a target node, the Jacobian is 1 and every fiber has
``prod(w)`` points.  The coarea identities then hold up to summation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np

from poincare_lab.calculus import integral, lp_norm, weighted_mean
from poincare_lab.grid import Density, Grid, ScalarField, make_grid


@dataclass(frozen=True)
class CoveringMapSpec:
    target: Grid
    wraps: tuple[int, ...]

    def __post_init__(self):
        t = self.target
        if not t.is_torus or any(L != 1.0 for L in t.lengths):
            raise ValueError("covering target must be the unit flat torus")
        wraps = tuple(int(w) for w in self.wraps)
        if len(wraps) != t.n or any(w < 1 for w in wraps):
            raise ValueError(f"need {t.n} positive wrap factors, got {self.wraps}")
        object.__setattr__(self, "wraps", wraps)

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def source(self) -> Grid:
        return make_grid(
            self.n,
            [w * m for w, m in zip(self.wraps, self.target.m)],
            [float(w) for w in self.wraps],
            True,
        )

    @property
    def fiber_size(self) -> int:
        return int(np.prod(self.wraps))


def covering_map(target: Grid, wraps: Sequence[int] | int) -> CoveringMapSpec:
    if np.isscalar(wraps):
        wraps = (wraps,) * target.n
    return CoveringMapSpec(target, tuple(wraps))


def _require(field_grid: Grid, expected: Grid, what: str) -> None:
    if field_grid != expected:
        raise ValueError(f"{what} grid does not match the covering map")


def pullback_field(f: ScalarField, spec: CoveringMapSpec) -> ScalarField:
    """``f o Psi``: tile the target samples ``w_i`` times along each axis."""
    _require(f.grid, spec.target, "target")
    return ScalarField(spec.source, np.tile(f.values, spec.wraps))


def pullback_density(omega: Density, spec: CoveringMapSpec) -> Density:
    """``omega o Psi`` divided by the fiber size, so the total mass stays 1."""
    _require(omega.grid, spec.target, "target")
    tiled = np.tile(omega.values, spec.wraps) / spec.fiber_size
    return Density(ScalarField(spec.source, tiled))


def fiber_sum(h: ScalarField, spec: CoveringMapSpec) -> ScalarField:
    """Sum of ``h`` over each fiber, as a field on the target."""
    _require(h.grid, spec.source, "source")
    split = []
    for w, m in zip(spec.wraps, spec.target.m):
        split.extend((w, m))
    summed = h.values.reshape(split).sum(axis=tuple(range(0, 2 * spec.n, 2)))
    return ScalarField(spec.target, summed)


def coarea_check(h: ScalarField, spec: CoveringMapSpec) -> tuple[float, float]:
    """``(int_source h, int_target sum_fiber h)``; unit Jacobian, so no division."""
    return integral(h), integral(fiber_sum(h, spec))


def pullback_mean_check(
    f: ScalarField, omega: Density, spec: CoveringMapSpec
) -> tuple[float, float]:
    lifted = weighted_mean(pullback_field(f, spec), pullback_density(omega, spec))
    return lifted, weighted_mean(f, omega)


def pullback_lq_check(omega: Density, q: float, spec: CoveringMapSpec) -> tuple[float, float]:
    """``(||pulled-back omega||_q, ||omega||_q)``; the quotient is ``prod(w)^(1/q - 1)``."""
    if not q > 1:
        raise ValueError(f"q must exceed 1, got {q}")
    return lp_norm(pullback_density(omega, spec), q), lp_norm(omega, q)


# -- ball cover and spanning tree -------------------------------------------

METRICS = ("torus", "euclidean")


def pairwise_distance(points: np.ndarray, index: int, metric: str, period: float = 1.0):
    """Distances from ``points[index]`` to every point."""
    diff = np.abs(points - points[index])
    if metric == "torus":
        diff = np.minimum(diff, period - diff)
    elif metric != "euclidean":
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return np.sqrt(np.sum(diff * diff, axis=1))


@dataclass
class BallCover:
    points: np.ndarray
    metric: str
    radius: float
    centers: list[int]
    assignment: list[frozenset[int]] = field(repr=False)

    @property
    def k(self) -> int:
        return len(self.centers)

    def validate(self) -> None:
        if len(set(self.centers)) != len(self.centers):
            raise AssertionError("duplicate centers")
        for j, c in enumerate(self.centers):
            dist = pairwise_distance(self.points, c, self.metric)
            for i, assigned in enumerate(self.assignment):
                if (dist[i] <= self.radius) != (j in assigned):
                    raise AssertionError(f"point {i} has a wrong assignment for ball {j}")
        uncovered = [i for i, a in enumerate(self.assignment) if not a]
        if uncovered:
            raise AssertionError(f"points not covered: {uncovered[:10]}")


def ball_cover(points, radius: float, metric: str = "torus") -> BallCover:
    """Greedy farthest-point cover.

    Start from point 0; while some point lies farther than ``radius`` from
    every center, add the uncovered point farthest from the center set
    (lowest index on ties).  ``assignment[i]`` holds the positions in
    ``centers`` of every ball containing point ``i``.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise ValueError("empty point set")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")

    centers = [0]
    dists = [pairwise_distance(pts, 0, metric)]
    nearest = dists[0].copy()
    while True:
        uncovered = nearest > radius
        if not uncovered.any():
            break
        nxt = int(np.argmax(np.where(uncovered, nearest, -np.inf)))
        centers.append(nxt)
        d = pairwise_distance(pts, nxt, metric)
        dists.append(d)
        nearest = np.minimum(nearest, d)

    inside = np.stack(dists) <= radius
    assignment = [frozenset(np.flatnonzero(inside[:, i]).tolist()) for i in range(len(pts))]
    cover = BallCover(pts, metric, float(radius), centers, assignment)
    cover.validate()
    return cover


def incidence_graph(cover: BallCover) -> nx.Graph:
    """Balls are adjacent when some sample point lies in both."""
    g = nx.Graph()
    g.add_nodes_from(range(cover.k))
    for balls in cover.assignment:
        ordered = sorted(balls)
        for a in range(len(ordered)):
            for b in range(a + 1, len(ordered)):
                g.add_edge(ordered[a], ordered[b])
    return g


@dataclass(frozen=True)
class SpanningTreeReport:
    k: int
    edges: list[tuple[int, int]]
    leaf_order: list[int]

    def to_dict(self) -> dict:
        return {"k": self.k, "edges": [list(e) for e in self.edges], "leaf_order": self.leaf_order}


def leaf_removal_order(k: int, edges) -> list[int]:
    """Repeatedly delete the lowest-index leaf; the last vertex closes the order."""
    adj = {v: set() for v in range(k)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    order = []
    while len(adj) > 1:
        leaf = min(v for v, nb in adj.items() if len(nb) == 1)
        (parent,) = adj.pop(leaf)
        adj[parent].discard(leaf)
        order.append(leaf)
    order.extend(adj)
    return order


def spanning_tree(graph: nx.Graph) -> SpanningTreeReport:
    """Breadth-first tree from vertex 0, neighbours visited in index order."""
    k = graph.number_of_nodes()
    if k == 0:
        raise ValueError("empty graph")
    if not nx.is_connected(graph):
        parts = nx.number_connected_components(graph)
        raise ValueError(
            f"incidence graph is disconnected ({parts} components): "
            "the sample is disconnected or the radius is too small"
        )
    edges = [tuple(sorted(e)) for e in nx.bfs_edges(graph, 0, sort_neighbors=sorted)]
    return SpanningTreeReport(k=k, edges=edges, leaf_order=leaf_removal_order(k, edges))


def check_tree(report: SpanningTreeReport) -> None:
    """Raise ``AssertionError`` unless ``report`` is a tree with a replayable leaf order."""
    k, edges = report.k, report.edges
    if len(edges) != k - 1:
        raise AssertionError(f"{len(edges)} edges for {k} vertices")
    uf = nx.utils.UnionFind(range(k))
    for a, b in edges:
        if uf[a] == uf[b]:
            raise AssertionError(f"edge {(a, b)} closes a cycle")
        uf.union(a, b)
    if len({uf[v] for v in range(k)}) != 1:
        raise AssertionError("tree is not connected")

    if sorted(report.leaf_order) != list(range(k)):
        raise AssertionError("leaf order is not a permutation of the vertices")
    adj = {v: set() for v in range(k)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    for step, v in enumerate(report.leaf_order):
        if step < k - 1 and len(adj[v]) != 1:
            raise AssertionError(f"step {step}: vertex {v} is not a leaf")
        for u in adj.pop(v):
            adj[u].discard(v)


def read_points_csv(path: str | Path) -> tuple[np.ndarray, str]:
    """Point cloud CSV: optional ``# metric=torus|euclidean`` header, one point per line."""
    metric = "euclidean"
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("metric="):
                    metric = tok.split("=", 1)[1]
            continue
        rows.append([float(v) for v in line.split(",")])
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r} in {path}")
    if not rows:
        raise ValueError(f"{path}: no points")
    return np.asarray(rows, dtype=np.float64), metric


def write_points_csv(points: np.ndarray, metric: str, path: str | Path) -> None:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    lines = [f"# metric={metric}"]
    lines.extend(",".join(repr(float(v)) for v in row) for row in pts)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
