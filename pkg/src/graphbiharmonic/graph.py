"""Weighted graphs, interior domains and their vertex boundaries."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping


class GraphFormatError(ValueError):
    """The graph file could not be parsed or does not follow the schema."""


class GraphValidationError(ValueError):
    """A graph or domain invariant is violated."""


_TOP_KEYS = {"vertices", "edges", "interior"}
_VERTEX_KEYS = {"id", "mu"}
_EDGE_KEYS = {"u", "v", "w"}


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive vertex measures and edge weights.

    ``adjacency[x]`` maps each neighbour ``y`` of ``x`` to ``w_xy``; it is
    built from ``edges`` so symmetry holds by construction.  ``interior`` is
    the domain read from a graph file, if any.
    """

    mu: Mapping[str, float]
    edges: tuple[tuple[str, str, float], ...]
    interior: tuple[str, ...] | None = None
    adjacency: Mapping[str, Mapping[str, float]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj: dict[str, dict[str, float]] = {x: {} for x in self.mu}
        for a, b, w in self.edges:
            adj[a][b] = w
            adj[b][a] = w
        object.__setattr__(self, "mu", MappingProxyType(dict(self.mu)))
        object.__setattr__(
            self, "adjacency", MappingProxyType({x: MappingProxyType(n) for x, n in adj.items()})
        )

    @property
    def vertices(self) -> list[str]:
        return sorted(self.mu)

    def neighbors(self, x: str) -> Mapping[str, float]:
        return self.adjacency[x]


def make_graph(
    vertices: Mapping[str, float] | Iterable[tuple[str, float]],
    edges: Iterable[tuple[str, str, float]],
    interior: Iterable[str] | None = None,
) -> WeightedGraph:
    """Build a validated graph from python data.

    Raises GraphValidationError naming the first violated invariant.
    """
    items = list(vertices.items()) if isinstance(vertices, Mapping) else list(vertices)
    mu: dict[str, float] = {}
    for vid, m in items:
        vid = str(vid)
        if vid in mu:
            raise GraphValidationError(f"duplicate vertex {vid!r}")
        m = float(m)
        if not m > 0:
            raise GraphValidationError(f"nonpositive measure at vertex {vid!r}")
        mu[vid] = m

    seen: set[frozenset[str]] = set()
    clean: list[tuple[str, str, float]] = []
    for a, b, w in edges:
        a, b, w = str(a), str(b), float(w)
        for end in (a, b):
            if end not in mu:
                raise GraphValidationError(f"unknown endpoint {end!r}")
        if a == b:
            raise GraphValidationError(f"self-loop at {a!r}")
        if not w > 0:
            raise GraphValidationError(f"nonpositive weight on edge {a!r}-{b!r}")
        key = frozenset((a, b))
        if key in seen:
            raise GraphValidationError(f"duplicate edge {a!r}-{b!r}")
        seen.add(key)
        clean.append((a, b, w))

    if not mu:
        raise GraphValidationError("graph has no vertices")

    interior_t = None
    if interior is not None:
        interior_t = tuple(str(x) for x in interior)
        for x in interior_t:
            if x not in mu:
                raise GraphValidationError(f"unknown interior vertex {x!r}")
        if len(set(interior_t)) != len(interior_t):
            raise GraphValidationError("duplicate interior vertex")

    g = WeightedGraph(mu=mu, edges=tuple(clean), interior=interior_t)
    if not _is_connected(g):
        raise GraphValidationError("disconnected graph")
    return g


def _is_connected(g: WeightedGraph) -> bool:
    start = next(iter(g.mu))
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in g.adjacency[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == len(g.mu)


def parse_graph(data: object) -> WeightedGraph:
    """Validate a decoded JSON document and build the graph."""
    if not isinstance(data, dict):
        raise GraphFormatError("top level must be an object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise GraphFormatError(f"unknown field(s) {sorted(unknown)}")
    for key in ("vertices", "edges"):
        if not isinstance(data.get(key), list):
            raise GraphFormatError(f"missing or non-list field {key!r}")

    vertices = []
    for item in data["vertices"]:
        if not isinstance(item, dict) or set(item) != _VERTEX_KEYS:
            raise GraphFormatError(f"vertex entry must have exactly {sorted(_VERTEX_KEYS)}: {item!r}")
        if not isinstance(item["id"], str) or not _is_number(item["mu"]):
            raise GraphFormatError(f"bad vertex entry {item!r}")
        vertices.append((item["id"], item["mu"]))

    edges = []
    for item in data["edges"]:
        if not isinstance(item, dict) or set(item) != _EDGE_KEYS:
            raise GraphFormatError(f"edge entry must have exactly {sorted(_EDGE_KEYS)}: {item!r}")
        if not (isinstance(item["u"], str) and isinstance(item["v"], str) and _is_number(item["w"])):
            raise GraphFormatError(f"bad edge entry {item!r}")
        edges.append((item["u"], item["v"], item["w"]))

    interior = data.get("interior")
    if interior is not None:
        if not isinstance(interior, list) or not all(isinstance(x, str) for x in interior):
            raise GraphFormatError("'interior' must be a list of vertex ids")

    return make_graph(vertices, edges, interior)


def _is_number(x: object) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def load_graph(path: str | Path) -> WeightedGraph:
    """Read and validate a JSON graph file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise GraphFormatError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"malformed JSON in {path}: {exc}") from exc
    return parse_graph(data)


def graph_to_json(g: WeightedGraph) -> dict:
    out = {
        "vertices": [{"id": x, "mu": g.mu[x]} for x in g.vertices],
        "edges": [{"u": a, "v": b, "w": w} for a, b, w in g.edges],
    }
    if g.interior is not None:
        out["interior"] = list(g.interior)
    return out


@dataclass(frozen=True)
class Domain:
    """Interior set, its boundary and the index map of the effective set.

    Interior vertices occupy indices ``0..n-1`` and boundary vertices
    ``n..m-1``, each block sorted by vertex id.
    """

    interior: tuple[str, ...]
    boundary: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.interior)

    @property
    def m(self) -> int:
        return len(self.interior) + len(self.boundary)

    @property
    def effective(self) -> tuple[str, ...]:
        return self.interior + self.boundary

    @property
    def effective_index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.effective)}

    @property
    def interior_index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.interior)}


def boundary_of(g: WeightedGraph, interior: Iterable[str] | None = None) -> Domain:
    """Compute the vertex boundary of ``interior`` (defaults to ``g.interior``)."""
    if interior is None:
        interior = g.interior or ()
    omega = set(interior)
    if not omega:
        raise GraphValidationError("empty interior")
    for x in omega:
        if x not in g.mu:
            raise GraphValidationError(f"unknown interior vertex {x!r}")
    boundary = {y for x in omega for y in g.adjacency[x] if y not in omega}
    if not boundary:
        raise GraphValidationError("empty boundary")
    return Domain(interior=tuple(sorted(omega)), boundary=tuple(sorted(boundary)))
