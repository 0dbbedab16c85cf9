from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True, eq=False)
class MixingPair:
    A: np.ndarray  # pull matrix, row-stochastic
    B: np.ndarray  # push matrix, column-stochastic


@dataclass
class AlgoState:
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    grad_z: np.ndarray  # cached rows of grad F(Z)
    t: int = 0
    cum_comm: int = 0
    cum_grads: int = 0


@dataclass
class SagaState:
    x: np.ndarray
    table: np.ndarray  # row i holds grad f_i(phi_i)
    table_mean: np.ndarray
    t: int = 0
    cum_comm: int = 0
    cum_grads: int = 0


@dataclass(frozen=True)
class MetricsRecord:
    t: int
    cum_comm: int
    cum_grads: int
    consensus: float
    subopt: float


@dataclass(frozen=True)
class SmoothnessConstants:
    L: float
    mu: float
    mu_method: str = "inverse_iteration"  # or "regularizer_bound"

    def __post_init__(self):
        if not (0.0 < self.mu <= self.L * (1.0 + 1e-9)):
            raise ValueError(f"constants must satisfy 0 < mu <= L (mu={self.mu}, L={self.L})")


@dataclass(frozen=True)
class RateParams:
    mu: float
    L: float
    M: int
    S: int
    lam: float
    eta: float | None = None

    def __post_init__(self):
        if not (0.0 < self.mu <= self.L):
            raise ValueError(f"rate params need 0 < mu <= L (mu={self.mu}, L={self.L})")
        if not (1 <= self.S <= self.M):
            raise ValueError(f"rate params need 1 <= S <= M (S={self.S}, M={self.M})")
        if not (0.0 <= self.lam < 1.0):
            raise ValueError(f"rate params need 0 <= lambda < 1 (lambda={self.lam})")
        if self.eta is not None and self.eta <= 0.0:
            raise ValueError(f"rate params need eta > 0 (eta={self.eta})")


@dataclass(frozen=True, eq=False)
class RecurrenceSystem:
    Q: np.ndarray
    q: np.ndarray
    v: np.ndarray
    rho: float


@dataclass(frozen=True)
class LyapunovCertificate:
    vQ_le_rho_v: bool
    vq_nonpositive: bool
    margins: tuple[float, float, float, float, float]

    @property
    def passed(self) -> bool:
        return self.vQ_le_rho_v and self.vq_nonpositive


@dataclass(frozen=True)
class MixingReport:
    row_stochastic_A: bool
    col_stochastic_B: bool
    graph_compatible: bool
    diag_ge_beta: bool
    doubly_stochastic_A: bool
    doubly_stochastic_B: bool

    @property
    def usable(self) -> bool:
        """Pair can drive a push-pull step on this graph."""
        return self.row_stochastic_A and self.col_stochastic_B and self.graph_compatible

    @property
    def doubly_stochastic(self) -> bool:
        return self.doubly_stochastic_A and self.doubly_stochastic_B


@dataclass(frozen=True)
class Lemma4Report:
    lhs: tuple[float, float, float]
    rhs: tuple[float, float, float]
    relative_slack: tuple[float, float, float]

    def holds(self, tol: float = 1e-9) -> bool:
        return all(s >= -tol for s in self.relative_slack)


class LambdaEstimate(NamedTuple):
    lambda_hat: float
    stderr: float


@dataclass(frozen=True)
class RateFit:
    slope: float
    r2: float
    below_floor: bool = False
