"""Random power-line network synthesis and two-port extraction.

Topologies are trees: junction nodes joined by line segments, with outlets
(leaves) carrying terminal loads.  Any outlet pair defines a two-port; the
off-path subtrees collapse into shunt admittances at the path junctions, so
the reduction to a transmission matrix is exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DegenerateDenominatorError, TopologyError
from .spectral import (
    AbcdChannel,
    FrequencyGrid,
    Spectrum,
    abcd_line,
    abcd_shunt,
    cascade_chain,
)

_DEN_FLOOR = 1e-30


@dataclass(frozen=True)
class TopologyParams:
    """Ranges for random synthesis; lengths in metres, impedances in ohm."""

    n_outlets: int = 5
    depth: int = 3
    length_range: tuple[float, float] = (10.0, 60.0)
    z0_range: tuple[float, float] = (40.0, 80.0)
    attenuation_range: tuple[float, float] = (5e-7, 2e-6)
    load_family: tuple[str, ...] = ("open", "resistive", "series_rlc", "parallel_rlc")
    alpha0: float = 1e-4
    velocity: float = 2.0e8
    open_load_ohms: float = 1.0e6
    resistive_range: tuple[float, float] = (5.0, 1000.0)

    def __post_init__(self):
        if self.n_outlets < 3:
            raise TopologyError("need at least 3 outlets (two parties plus an eavesdropper)")
        if self.depth < 1:
            raise TopologyError("depth must be >= 1")
        for name in ("length_range", "z0_range", "attenuation_range", "resistive_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise TopologyError(f"invalid {name}: ({lo}, {hi})")
        if not self.load_family:
            raise TopologyError("load_family must not be empty")
        known = {"open", "resistive", "series_rlc", "parallel_rlc"}
        unknown = set(self.load_family) - known
        if unknown:
            raise TopologyError(f"unknown load kinds: {sorted(unknown)}")
        if self.velocity <= 0 or self.open_load_ohms <= 0 or self.alpha0 < 0:
            raise TopologyError("velocity/open_load_ohms must be positive, alpha0 >= 0")


@dataclass(frozen=True)
class Edge:
    """Line segment between two nodes: z0 in ohm, length in m, a1 in Np/(m*sqrt(Hz))."""

    node_a: int
    node_b: int
    z0: float
    length: float
    a1: float

    def other(self, node: int) -> int:
        return self.node_b if node == self.node_a else self.node_a


@dataclass(frozen=True)
class LoadSpec:
    """Terminal load at an unused outlet."""

    kind: str
    r: float = 0.0
    l: float = 0.0
    c: float = 0.0

    def impedance(self, grid: FrequencyGrid, open_load_ohms: float) -> np.ndarray:
        w = 2.0 * np.pi * grid.frequencies
        if self.kind == "open":
            return np.full(grid.n_bins, open_load_ohms, dtype=np.complex128)
        if self.kind == "resistive":
            return np.full(grid.n_bins, self.r, dtype=np.complex128)
        if self.kind == "series_rlc":
            if np.any(w == 0):
                raise TopologyError("series RLC load undefined at DC")
            return self.r + 1j * w * self.l + 1.0 / (1j * w * self.c)
        if self.kind == "parallel_rlc":
            if np.any(w == 0):
                raise TopologyError("parallel RLC load undefined at DC")
            y = 1.0 / self.r + 1.0 / (1j * w * self.l) + 1j * w * self.c
            return 1.0 / y
        raise TopologyError(f"unknown load kind {self.kind!r}")


@dataclass(frozen=True)
class PortPair:
    """Two distinct outlets acting as the ports of the extracted two-port."""

    port1: int
    port2: int

    def __post_init__(self):
        if self.port1 == self.port2:
            raise TopologyError("port pair must name two distinct outlets")


@dataclass(frozen=True, eq=False)
class Topology:
    """Immutable tree network; node ids: junctions first, then outlets."""

    params: TopologyParams
    seed: int
    n_junctions: int
    edges: tuple[Edge, ...]
    outlets: tuple[int, ...]
    loads: tuple[tuple[int, LoadSpec], ...]

    def __post_init__(self):
        n_nodes = self.n_junctions + len(self.outlets)
        if len(self.edges) != n_nodes - 1:
            raise TopologyError("edge count does not match a tree")
        seen = {0}
        for e in self.edges:
            if e.node_a not in seen:
                raise TopologyError("edges are not in tree construction order")
            seen.add(e.node_b)
        if seen != set(range(n_nodes)):
            raise TopologyError("tree is not connected")
        if len(self.outlets) < 3:
            raise TopologyError("need at least 3 outlets")
        load_map = dict(self.loads)
        for outlet in self.outlets:
            if outlet not in load_map:
                raise TopologyError(f"outlet {outlet} has no load")

    @property
    def load_map(self) -> Mapping[int, LoadSpec]:
        return dict(self.loads)

    @property
    def n_nodes(self) -> int:
        return self.n_junctions + len(self.outlets)

    def incident(self, node: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if node in (e.node_a, e.node_b)]


def _draw_load(rng: np.random.Generator, params: TopologyParams) -> LoadSpec:
    kind = str(rng.choice(np.array(params.load_family, dtype=object)))
    lo, hi = params.resistive_range
    r = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    l = float(np.exp(rng.uniform(np.log(1e-7), np.log(1e-4))))
    c = float(np.exp(rng.uniform(np.log(1e-11), np.log(1e-6))))
    if kind == "open":
        return LoadSpec("open")
    if kind == "resistive":
        return LoadSpec("resistive", r=r)
    return LoadSpec(kind, r=r, l=l, c=c)


def synthesize(seed: int, params: TopologyParams = TopologyParams()) -> Topology:
    """Draw a random tree topology; a pure function of ``(seed, params)``."""
    rng = np.random.default_rng(seed)
    n_junctions = int(rng.integers(1, params.depth + 1))
    edges: list[Edge] = []

    def draw_edge(node_a: int, node_b: int) -> Edge:
        return Edge(
            node_a=node_a,
            node_b=node_b,
            z0=float(rng.uniform(*params.z0_range)),
            length=float(rng.uniform(*params.length_range)),
            a1=float(rng.uniform(*params.attenuation_range)),
        )

    for j in range(1, n_junctions):
        parent = int(rng.integers(0, j))
        edges.append(draw_edge(parent, j))
    outlets = tuple(range(n_junctions, n_junctions + params.n_outlets))
    for outlet in outlets:
        junction = int(rng.integers(0, n_junctions))
        edges.append(draw_edge(junction, outlet))
    loads = tuple((outlet, _draw_load(rng, params)) for outlet in outlets)
    return Topology(params=params, seed=seed, n_junctions=n_junctions,
                    edges=tuple(edges), outlets=outlets, loads=loads)


def _gamma(edge: Edge, params: TopologyParams, grid: FrequencyGrid) -> np.ndarray:
    f = grid.frequencies
    return params.alpha0 + edge.a1 * np.sqrt(f) + 2j * np.pi * f / params.velocity


def _line_abcd(edge: Edge, params: TopologyParams, grid: FrequencyGrid) -> AbcdChannel:
    return abcd_line(grid, edge.z0, Spectrum(grid, _gamma(edge, params, grid)), edge.length)


def _node_admittance(top: Topology, grid: FrequencyGrid, node: int,
                     excluded: frozenset[int],
                     overrides: Optional[Mapping[int, complex]]) -> np.ndarray:
    """Total admittance looking from ``node`` away from the excluded edges."""
    if node in top.outlets:
        if overrides and node in overrides:
            z = np.broadcast_to(
                np.asarray(overrides[node], dtype=np.complex128), (grid.n_bins,))
        else:
            z = top.load_map[node].impedance(grid, top.params.open_load_ohms)
        if np.min(np.abs(z)) < _DEN_FLOOR:
            raise DegenerateDenominatorError("outlet load impedance is zero")
        return 1.0 / z
    total = np.zeros(grid.n_bins, dtype=np.complex128)
    for idx in top.incident(node):
        if idx in excluded:
            continue
        edge = top.edges[idx]
        child = edge.other(node)
        y_far = _node_admittance(top, grid, child, frozenset({idx}), overrides)
        g = _gamma(edge, top.params, grid) * edge.length
        ch, sh = np.cosh(g), np.sinh(g)
        # input admittance of the segment terminated by y_far, admittance form
        num = sh / edge.z0 + ch * y_far
        den = ch + edge.z0 * sh * y_far
        if np.min(np.abs(den)) < _DEN_FLOOR:
            raise DegenerateDenominatorError("degenerate branch impedance")
        total = total + num / den
    return total


def subtree_zin(top: Topology, grid: FrequencyGrid, junction: int,
                excluded_edge: Optional[int] = None,
                overrides: Optional[Mapping[int, complex]] = None) -> Spectrum:
    """Input impedance of the subtree seen from ``junction``.

    ``excluded_edge`` (an index into ``top.edges``) marks the direction the
    impedance is *not* measured into; leaves terminate at their loads.
    """
    if junction < 0 or junction >= top.n_nodes:
        raise TopologyError(f"no such node {junction}")
    excluded = frozenset() if excluded_edge is None else frozenset({excluded_edge})
    y = _node_admittance(top, grid, junction, excluded, overrides)
    if np.min(np.abs(y)) < _DEN_FLOOR:
        raise DegenerateDenominatorError("subtree is an open circuit")
    return Spectrum(grid, 1.0 / y)


def _tree_path(top: Topology, start: int, goal: int) -> list[tuple[int, int]]:
    """Edge-index path from start to goal as (edge_idx, entered_node) steps."""
    parent: dict[int, tuple[int, int]] = {start: (-1, -1)}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for idx in top.incident(node):
            nxt = top.edges[idx].other(node)
            if nxt not in parent:
                parent[nxt] = (idx, node)
                stack.append(nxt)
    if goal not in parent:
        raise TopologyError("ports are not connected")
    steps: list[tuple[int, int]] = []
    node = goal
    while node != start:
        idx, prev = parent[node]
        steps.append((idx, node))
        node = prev
    steps.reverse()
    return steps


def extract_two_port(top: Topology, pair: PortPair, grid: FrequencyGrid,
                     overrides: Optional[Mapping[int, complex]] = None) -> AbcdChannel:
    """Reduce the tree to the two-port between ``pair.port1`` and ``pair.port2``.

    Every off-path subtree collapses to a shunt admittance at its junction.
    ``overrides`` substitutes the load impedance at chosen outlets (e.g. the
    receive impedance an idle modem presents).
    """
    for port in (pair.port1, pair.port2):
        if port not in top.outlets:
            raise TopologyError(f"node {port} is not an outlet")
    steps = _tree_path(top, pair.port1, pair.port2)
    path_edges = {idx for idx, _ in steps}
    blocks: list[AbcdChannel] = []
    for step, (idx, entered) in enumerate(steps):
        blocks.append(_line_abcd(top.edges[idx], top.params, grid))
        if entered == pair.port2:
            break
        next_idx = steps[step + 1][0]
        y = _node_admittance(top, grid, entered,
                             frozenset({idx, next_idx}) | path_edges, overrides)
        if np.max(np.abs(y)) > 0:
            blocks.append(abcd_shunt(grid, Spectrum(grid, y)))
    return cascade_chain(blocks)


# ---------------------------------------------------------------------------
# serialization: human-readable JSON, exact round trip on parameters
# ---------------------------------------------------------------------------

def topology_to_dict(top: Topology) -> dict:
    return {
        "seed": top.seed,
        "params": asdict(top.params),
        "n_junctions": top.n_junctions,
        "edges": [asdict(e) for e in top.edges],
        "outlets": list(top.outlets),
        "loads": {str(outlet): asdict(spec) for outlet, spec in top.loads},
    }


def topology_from_dict(data: dict) -> Topology:
    params_raw = dict(data["params"])
    for key in ("length_range", "z0_range", "attenuation_range",
                "load_family", "resistive_range"):
        params_raw[key] = tuple(params_raw[key])
    params = TopologyParams(**params_raw)
    edges = tuple(Edge(**e) for e in data["edges"])
    loads = tuple(
        (int(outlet), LoadSpec(**spec)) for outlet, spec in sorted(
            data["loads"].items(), key=lambda kv: int(kv[0]))
    )
    return Topology(params=params, seed=int(data["seed"]),
                    n_junctions=int(data["n_junctions"]), edges=edges,
                    outlets=tuple(int(o) for o in data["outlets"]), loads=loads)


def save_topology(top: Topology, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(topology_to_dict(top), fh, indent=2)
        fh.write("\n")


def load_topology(path: str) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return topology_from_dict(json.load(fh))
