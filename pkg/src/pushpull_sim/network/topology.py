from dataclasses import dataclass, field
from functools import cached_property
import logging
from pathlib import Path
from typing import Iterable

import networkx as nx
import numpy as np
from scipy.spatial.distance import pdist, squareform

logger = logging.getLogger(__name__)

RGG_MAX_ATTEMPTS = 1000


class TopologyError(ValueError):
    pass


def check_nodes(vertices: Iterable[int], node_count: int) -> frozenset[int]:
    nodes = frozenset(int(v) for v in vertices)
    bad = sorted(v for v in nodes if not 0 <= v < node_count)
    if bad:
        raise TopologyError(f"vertices {bad} outside [0, {node_count})")
    return nodes


@dataclass(frozen=True)
class DirectedGraph:
    """Communication topology; edge (i, j) means i can send to j."""
    node_count: int
    edges: frozenset[tuple[int, int]]
    out_neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    in_neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 1:
            raise TopologyError("a graph needs at least one node")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        out = [[] for _ in range(self.node_count)]
        inn = [[] for _ in range(self.node_count)]
        for i, j in edges:
            if i == j:
                raise TopologyError(f"self-loop on node {i}")
            check_nodes((i, j), self.node_count)
            out[i].append(j)
            inn[j].append(i)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "out_neighbors", tuple(tuple(sorted(n)) for n in out))
        object.__setattr__(self, "in_neighbors", tuple(tuple(sorted(n)) for n in inn))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    @cached_property
    def symmetric(self) -> bool:
        return all((j, i) in self.edges for i, j in self.edges)

    def degree_within(self, i: int, vertices: frozenset[int]) -> int:
        """card(N_i intersected with vertices), with N_i the out-neighborhood."""
        return sum(1 for j in self.out_neighbors[i] if j in vertices)

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(sorted(self.edges))
        return g


def _edges_within(points: np.ndarray, radius: float) -> frozenset[tuple[int, int]]:
    if len(points) < 2:
        return frozenset()
    dist = squareform(pdist(points))
    rows, cols = np.nonzero(dist <= radius)
    return frozenset((int(i), int(j)) for i, j in zip(rows, cols) if i != j)


def build_rgg(M: int, radius: float, seed: int, max_attempts: int = RGG_MAX_ATTEMPTS) -> DirectedGraph:
    """Random geometric graph on the unit square, redrawn with seed+1, seed+2, ... until strongly connected."""
    if M < 1:
        raise TopologyError("build_rgg needs M >= 1")
    if radius <= 0:
        raise TopologyError("build_rgg needs radius > 0")
    for attempt in range(max_attempts):
        rng = np.random.default_rng(seed + attempt)
        points = rng.uniform(0.0, 1.0, size=(M, 2))
        graph = DirectedGraph(M, _edges_within(points, radius))
        if is_strongly_connected(graph):
            logger.info("RGG built: M=%d radius=%g edges=%d attempts=%d", M, radius, graph.edge_count, attempt + 1)
            return graph
        logger.debug("RGG attempt %d (seed %d) not strongly connected", attempt + 1, seed + attempt)
    raise TopologyError(
        f"radius {radius} too small: no strongly connected RGG over {M} nodes after {max_attempts} attempts"
    )


def induced_subgraph(g: DirectedGraph, vertices: Iterable[int]) -> DirectedGraph:
    keep = check_nodes(vertices, g.node_count)
    return DirectedGraph(g.node_count, frozenset((i, j) for i, j in g.edges if i in keep and j in keep))


def is_strongly_connected(g: DirectedGraph) -> bool:
    return nx.is_strongly_connected(g.to_networkx())


def undirected_graph(M: int, pairs: Iterable[tuple[int, int]]) -> DirectedGraph:
    """Graph with both directions of every listed pair."""
    edges = set()
    for i, j in pairs:
        edges.add((i, j))
        edges.add((j, i))
    return DirectedGraph(M, frozenset(edges))


def write_edge_list(g: DirectedGraph, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"M={g.node_count}\n")
        for i, j in sorted(g.edges):
            f.write(f"{i} {j}\n")
    return path


def read_edge_list(path: str | Path) -> DirectedGraph:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("M="):
        raise TopologyError(f"{path}: missing 'M=<count>' header")
    M = int(lines[0][2:])
    edges = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"{path}:{lineno}: expected 'i j'")
        edges.add((int(parts[0]), int(parts[1])))
    return DirectedGraph(M, frozenset(edges))
