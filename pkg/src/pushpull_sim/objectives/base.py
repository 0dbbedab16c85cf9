from abc import ABC, abstractmethod
from typing import Iterable

import numpy as np

from pushpull_sim.models import SmoothnessConstants
from pushpull_sim.numerics import NumericsError


class Objective(ABC):
    """f(x) = (1/M) sum_i f_i(x) over an ensemble of M local objectives."""
    family: str = ""

    node_count: int
    dim: int

    def check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise NumericsError(f"point has shape {x.shape}, expected ({self.dim},)")
        return x

    def check_rows(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise NumericsError(f"iterate matrix has shape {X.shape}, expected (*, {self.dim})")
        return X

    @abstractmethod
    def local_value(self, i: int, x: np.ndarray) -> float: ...

    @abstractmethod
    def local_gradient(self, i: int, x: np.ndarray) -> np.ndarray: ...

    def gradients(self, X: np.ndarray, nodes: Iterable[int]) -> np.ndarray:
        """Rows grad f_i(X[i]) for i in ``nodes``, in the given order."""
        X = self.check_rows(X)
        return np.array([self.local_gradient(i, X[i]) for i in nodes]).reshape(-1, self.dim)

    def gradients_at_point(self, x: np.ndarray, nodes: Iterable[int]) -> np.ndarray:
        x = self.check_point(x)
        return self.gradients(np.broadcast_to(x, (self.node_count, self.dim)), nodes)

    def global_value(self, x: np.ndarray) -> float:
        x = self.check_point(x)
        return float(np.mean([self.local_value(i, x) for i in range(self.node_count)]))

    def global_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.gradients_at_point(x, range(self.node_count)).mean(axis=0)

    def values(self, X: np.ndarray) -> np.ndarray:
        X = self.check_rows(X)
        return np.array([self.global_value(x) for x in X])

    def suboptimality(self, X: np.ndarray, x_star: np.ndarray, f_star: float) -> float:
        """(1/rows) sum_k f(X[k]) - f*."""
        return float(np.mean(self.values(X)) - f_star)

    @abstractmethod
    def constants(self) -> SmoothnessConstants: ...

    @abstractmethod
    def reference_solution(self) -> tuple[np.ndarray, float]:
        """Minimizer x* and f* used as the suboptimality reference."""
