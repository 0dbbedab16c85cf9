"""Per-round mixing pairs (A_t, B_t) and the strategies that draw them.

A is the pull matrix (row-stochastic), B the push matrix
(column-stochastic). Off-diagonal A_ij or B_ij may be non-zero only when
j can send to i.
"""
from dataclasses import dataclass, field
import logging
from typing import Iterable, Mapping

import numpy as np

from pushpull_sim.models import MixingPair, MixingReport
from pushpull_sim.network.topology import DirectedGraph, check_nodes

logger = logging.getLogger(__name__)

STOCHASTIC_TOL = 1e-12


class MixingError(ValueError):
    pass


def metropolis(g: DirectedGraph, active: Iterable[int]) -> MixingPair:
    """Metropolis weights of the subgraph induced by ``active``; identity rows elsewhere."""
    if not g.symmetric:
        raise MixingError("metropolis weights need a symmetric graph")
    members = check_nodes(active, g.node_count)
    degree = {i: g.degree_within(i, members) for i in members}
    W = np.eye(g.node_count)
    for i in sorted(members):
        off = 0.0
        for j in g.out_neighbors[i]:
            if j in members:
                w = 1.0 / max(degree[i], degree[j])
                W[i, j] = w
                off += w
        W[i, i] = 1.0 - off
    return MixingPair(W, W.copy())


def broadcast_matrices(g: DirectedGraph, active: Iterable[int],
                       targets: Mapping[int, Iterable[int]], M: int) -> MixingPair:
    """Pair produced when every active node j broadcasts to ``targets[j]`` (which includes j)."""
    if M != g.node_count:
        raise MixingError(f"M={M} does not match the graph ({g.node_count} nodes)")
    senders_of: list[list[int]] = [[] for _ in range(M)]
    fanout: dict[int, int] = {}
    members = check_nodes(active, M)
    for j in sorted(members):
        if j not in targets:
            raise MixingError(f"active node {j} has no targets")
        dest = set(targets[j])
        if j not in dest:
            raise MixingError(f"active node {j} must include itself in its targets")
        bad = dest - set(g.out_neighbors[j]) - {j}
        if bad:
            raise MixingError(f"node {j} targets {sorted(bad)} that are not out-neighbors")
        fanout[j] = len(dest)
        for i in dest:
            senders_of[i].append(j)

    A = np.zeros((M, M))
    B = np.zeros((M, M))
    for i in range(M):
        pool = set(senders_of[i]) | {i}
        w = 1.0 / len(pool)
        for j in pool:
            A[i, j] = w
        for j in senders_of[i]:
            B[i, j] = 1.0 / fanout[j]
        if i not in members:
            B[i, i] = 1.0
    return MixingPair(A, B)


def mean_matrix(M: int) -> MixingPair:
    if M < 1:
        raise MixingError("mean_matrix needs M >= 1")
    J = np.full((M, M), 1.0 / M)
    return MixingPair(J, J.copy())


def _sample_subset(rng: np.random.Generator, candidates: tuple[int, ...], k: int) -> tuple[int, ...]:
    # without replacement; fewer candidates than requested -> take them all
    if len(candidates) <= k:
        return candidates
    picks = rng.choice(len(candidates), size=k, replace=False)
    return tuple(candidates[p] for p in sorted(picks))


class MixingStrategy:
    """Draws one MixingPair per round."""
    uses_active = True

    def sample(self, active: frozenset[int], rng: np.random.Generator) -> MixingPair:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class FixedMixing(MixingStrategy):
    pair: MixingPair
    uses_active = False

    def sample(self, active, rng):
        return self.pair


@dataclass(frozen=True)
class MeanMixing(MixingStrategy):
    node_count: int
    uses_active = False
    _pair: MixingPair = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_pair", mean_matrix(self.node_count))

    def sample(self, active, rng):
        return self._pair


@dataclass(frozen=True)
class MetropolisOnActive(MixingStrategy):
    graph: DirectedGraph
    neighbors_per_active: int = 1

    def sample(self, active, rng):
        awake = set(active)
        for i in sorted(active):
            awake.update(_sample_subset(rng, self.graph.out_neighbors[i], self.neighbors_per_active))
        return metropolis(self.graph, awake)


@dataclass(frozen=True)
class BroadcastMixing(MixingStrategy):
    graph: DirectedGraph
    targets_per_active: int = 1

    def sample(self, active, rng):
        targets = {}
        for j in sorted(active):
            targets[j] = {j, *_sample_subset(rng, self.graph.out_neighbors[j], self.targets_per_active)}
        return broadcast_matrices(self.graph, active, targets, self.graph.node_count)


@dataclass(frozen=True)
class IndependentGossip(MixingStrategy):
    """Gossip set drawn independently of the devices computing gradients."""
    graph: DirectedGraph
    comm_nodes: int = 5
    neighbors_per: int = 1
    uses_active = False

    def sample(self, active, rng):
        M = self.graph.node_count
        chosen = rng.choice(M, size=min(self.comm_nodes, M), replace=False)
        awake = set(int(i) for i in chosen)
        for i in sorted(awake):
            awake.update(_sample_subset(rng, self.graph.out_neighbors[i], self.neighbors_per))
        return metropolis(self.graph, awake)


def fixed_metropolis(g: DirectedGraph) -> FixedMixing:
    return FixedMixing(metropolis(g, range(g.node_count)))


def sample_mixing(strategy: MixingStrategy, active: Iterable[int], rng: np.random.Generator) -> MixingPair:
    return strategy.sample(frozenset(active), rng)


def is_row_stochastic(m: np.ndarray, tol: float = STOCHASTIC_TOL) -> bool:
    return bool(np.all(m >= -tol) and np.all(np.abs(m.sum(axis=1) - 1.0) <= tol))


def is_column_stochastic(m: np.ndarray, tol: float = STOCHASTIC_TOL) -> bool:
    return is_row_stochastic(m.T, tol)


def check_pair(pair: MixingPair, need_row_A: bool = True, need_col_B: bool = True) -> None:
    """Raise MixingError when a pair cannot drive a step."""
    if need_row_A and not is_row_stochastic(pair.A):
        raise MixingError("pull matrix A is not row-stochastic")
    if need_col_B and not is_column_stochastic(pair.B):
        raise MixingError("push matrix B is not column-stochastic")


def _compatible(m: np.ndarray, g: DirectedGraph) -> bool:
    rows, cols = np.nonzero(m)
    # entry (i, j) carries j's value to i
    return all(i == j or g.has_edge(int(j), int(i)) for i, j in zip(rows, cols))


def validate_mixing(pair: MixingPair, g: DirectedGraph, beta: float) -> MixingReport:
    A, B = pair.A, pair.B
    row_A = is_row_stochastic(A)
    col_B = is_column_stochastic(B)
    return MixingReport(
        row_stochastic_A=row_A,
        col_stochastic_B=col_B,
        graph_compatible=_compatible(A, g) and _compatible(B, g),
        diag_ge_beta=bool(np.all(np.diag(A) >= beta - STOCHASTIC_TOL) and np.all(np.diag(B) >= beta - STOCHASTIC_TOL)),
        doubly_stochastic_A=row_A and is_column_stochastic(A),
        doubly_stochastic_B=col_B and is_row_stochastic(B),
    )


def build_strategy(variant: str, graph: DirectedGraph, *, targets: int = 1, neighbors: int = 1,
                   comm_nodes: int = 5) -> MixingStrategy:
    if variant == "broadcast":
        return BroadcastMixing(graph, targets)
    if variant == "metropolis_active":
        return MetropolisOnActive(graph, neighbors)
    if variant == "independent_gossip":
        return IndependentGossip(graph, comm_nodes, neighbors)
    if variant == "mean":
        return MeanMixing(graph.node_count)
    if variant == "fixed_metropolis":
        return fixed_metropolis(graph)
    raise MixingError(f"unknown mixing variant '{variant}'")
