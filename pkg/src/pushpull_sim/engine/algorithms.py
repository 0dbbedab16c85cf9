"""One-round updates of PPDS, Push-Pull, SAGA and DGD.

Steps never mutate their input state; each returns a fresh state with the
cost counters advanced.
"""
from typing import Iterable

import numpy as np

from pushpull_sim.models import AlgoState, MixingPair, SagaState
from pushpull_sim.network.mixing import MixingError, check_pair
from pushpull_sim.numerics import matmul
from pushpull_sim.objectives.base import Objective


def _check_eta(eta: float):
    if not eta > 0:
        raise ValueError(f"stepsize must be > 0, got {eta}")


def _nodes(active: Iterable[int], M: int) -> np.ndarray:
    nodes = np.array(sorted(int(i) for i in active), dtype=int)
    if nodes.size and (nodes[0] < 0 or nodes[-1] >= M):
        raise MixingError(f"active set {nodes.tolist()} outside [0, {M})")
    return nodes


def communication_links(*matrices: np.ndarray) -> int:
    """Directed links j -> i used by any of the matrices; shared links count once."""
    support = np.zeros(matrices[0].shape, dtype=bool)
    for m in matrices:
        support |= m != 0
    np.fill_diagonal(support, False)
    return int(support.sum())


def init_state(X0: np.ndarray, objective: Objective) -> AlgoState:
    """Z0 = X0 and Y0 = grad F(X0), costing M gradient evaluations."""
    X0 = objective.check_rows(X0).copy()
    M = X0.shape[0]
    grads = objective.gradients(X0, range(M))
    return AlgoState(X=X0, Y=grads.copy(), Z=X0.copy(), grad_z=grads, cum_grads=M)


def ppds_step(state: AlgoState, pair: MixingPair, active: Iterable[int], eta: float,
              objective: Objective) -> AlgoState:
    check_pair(pair)
    _check_eta(eta)
    nodes = _nodes(active, state.X.shape[0])

    Y_hat = state.Y.copy()
    X_hat = state.X.copy()
    Z = state.Z.copy()
    grad_z = state.grad_z.copy()
    if nodes.size:
        fresh = objective.gradients(state.X, nodes)
        Y_hat[nodes] += fresh - state.grad_z[nodes]
        X_hat[nodes] -= eta * Y_hat[nodes]
        Z[nodes] = state.X[nodes]
        grad_z[nodes] = fresh

    return AlgoState(
        X=matmul(pair.A, X_hat),
        Y=matmul(pair.B, Y_hat),
        Z=Z,
        grad_z=grad_z,
        t=state.t + 1,
        cum_comm=state.cum_comm + communication_links(pair.A, pair.B),
        cum_grads=state.cum_grads + int(nodes.size),
    )


def push_pull_step(state: AlgoState, A: np.ndarray, B: np.ndarray, eta: float, objective: Objective,
                   adapt_then_combine: bool = False) -> AlgoState:
    """Synchronous Push-Pull; the tracker Y follows grad F at the current X (Z == X)."""
    check_pair(MixingPair(A, B))
    _check_eta(eta)
    M = state.X.shape[0]
    if adapt_then_combine:
        X_new = matmul(A, state.X - eta * state.Y)
    else:
        X_new = matmul(A, state.X) - eta * state.Y
    fresh = objective.gradients(X_new, range(M))
    Y_new = matmul(B, state.Y) + (fresh - state.grad_z)
    return AlgoState(
        X=X_new,
        Y=Y_new,
        Z=X_new.copy(),
        grad_z=fresh,
        t=state.t + 1,
        cum_comm=state.cum_comm + communication_links(A, B),
        cum_grads=state.cum_grads + M,
    )


def dgd_step(state: AlgoState, A: np.ndarray, active: Iterable[int], eta: float,
             objective: Objective) -> AlgoState:
    """X+ = A (X - eta D grad F(X)); Y, Z are carried unchanged."""
    check_pair(MixingPair(A, A), need_col_B=False)
    _check_eta(eta)
    nodes = _nodes(active, state.X.shape[0])
    X_hat = state.X.copy()
    if nodes.size:
        X_hat[nodes] -= eta * objective.gradients(state.X, nodes)
    return AlgoState(
        X=matmul(A, X_hat),
        Y=state.Y,
        Z=state.Z,
        grad_z=state.grad_z,
        t=state.t + 1,
        cum_comm=state.cum_comm + communication_links(A),
        cum_grads=state.cum_grads + int(nodes.size),
    )


def init_saga(x0: np.ndarray, objective: Objective) -> SagaState:
    x0 = objective.check_point(x0).copy()
    table = objective.gradients_at_point(x0, range(objective.node_count))
    return SagaState(x=x0, table=table, table_mean=table.mean(axis=0), cum_grads=objective.node_count)


def saga_step(state: SagaState, indices: int | Iterable[int], eta: float, objective: Objective) -> SagaState:
    """x+ = x - eta * sum_i (grad f_i(x) - table_i + mean(table)) over the drawn indices."""
    _check_eta(eta)
    M = state.table.shape[0]
    idx = _nodes([indices] if isinstance(indices, (int, np.integer)) else indices, M)
    if idx.size == 0:
        return SagaState(x=state.x, table=state.table, table_mean=state.table_mean,
                         t=state.t + 1, cum_grads=state.cum_grads)
    fresh = objective.gradients_at_point(state.x, idx)
    stale = state.table[idx]
    direction = np.sum(fresh - stale + state.table_mean, axis=0)
    table = state.table.copy()
    table[idx] = fresh
    return SagaState(
        x=state.x - eta * direction,
        table=table,
        table_mean=state.table_mean + np.sum(fresh - stale, axis=0) / M,
        t=state.t + 1,
        cum_grads=state.cum_grads + int(idx.size),
    )


def mass_residual(state: AlgoState) -> float:
    """Relative gap between the column sums of Y and of grad F(Z)."""
    target = state.grad_z.sum(axis=0)
    return float(np.linalg.norm(state.Y.sum(axis=0) - target) / (1.0 + np.linalg.norm(target)))
