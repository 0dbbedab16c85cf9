import numpy as np

from pushpull_sim.network.topology import DirectedGraph, build_rgg, undirected_graph
from pushpull_sim.objectives.ridge import generate_ridge


def path_graph(M: int = 3) -> DirectedGraph:
    return undirected_graph(M, [(i, i + 1) for i in range(M - 1)])


def complete_graph(M: int) -> DirectedGraph:
    return undirected_graph(M, [(i, j) for i in range(M) for j in range(i + 1, M)])


def small_ridge(M: int = 10, d: int = 5, n_local: int = 20, heterogeneity: float = 1.0, noise: float = 0.1, seed: int = 1):
    return generate_ridge(M, d, n_local, heterogeneity, noise, seed)


def small_rgg(M: int = 10, radius: float = 0.5, seed: int = 0) -> DirectedGraph:
    return build_rgg(M, radius, seed)


def random_rows(M: int, d: int, seed: int = 7) -> np.ndarray:
    return np.random.default_rng(seed).standard_normal((M, d))
