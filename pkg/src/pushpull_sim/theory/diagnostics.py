from typing import Sequence

import numpy as np
from scipy.stats import linregress

from pushpull_sim.models import Lemma4Report, MetricsRecord, RateFit, SmoothnessConstants
from pushpull_sim.objectives.base import Objective

MIN_TAIL_RECORDS = 10


def _sq(m: np.ndarray) -> float:
    return float(np.sum(m * m))


def lemma4_pointwise_check(X: np.ndarray, Z: np.ndarray, Y: np.ndarray, objective: Objective,
                           x_star: np.ndarray, constants: SmoothnessConstants) -> Lemma4Report:
    """Evaluate both sides of the three per-realization gradient bounds.

    ``Y`` is the tracker; the third bound is stated for
    G = Y + grad F(X) - grad F(Z), whose column sums equal those of grad F(X)
    whenever Y satisfies the mass identity.
    """
    M = objective.node_count
    L = constants.L
    nodes = range(M)
    grad_x = objective.gradients(X, nodes)
    grad_z = objective.gradients(Z, nodes)
    grad_star = objective.gradients_at_point(x_star, nodes)

    x_bar = X.mean(axis=0)
    spread_x = _sq(X - x_bar)
    spread_y = _sq(Y - Y.mean(axis=0))
    gap = max(objective.suboptimality(x_bar[None, :], x_star, objective.global_value(x_star)), 0.0)
    memory = _sq(grad_z - grad_star)
    G = Y + grad_x - grad_z

    lhs = (_sq(grad_x - grad_star), _sq(grad_x - grad_z), _sq(G))
    rhs = (
        2 * L**2 * spread_x + 4 * M * L * gap,
        4 * L**2 * spread_x + 8 * M * L * gap + 2 * memory,
        10 * L**2 * spread_x + 20 * M * L * gap + 4 * memory + 2 * spread_y,
    )
    relative = tuple((r - l) / (1.0 + abs(r)) for l, r in zip(lhs, rhs))
    return Lemma4Report(lhs=lhs, rhs=rhs, relative_slack=relative)


def empirical_rate(series: Sequence[MetricsRecord], tail_fraction: float = 0.5) -> RateFit:
    """Least-squares slope of log10(subopt) against t over the tail of a run."""
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    tail = list(series[int(len(series) * (1.0 - tail_fraction)):])
    values = np.array([r.subopt for r in tail], dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("suboptimality tail contains non-finite values")
    if values.size and np.any(values <= 0.0):
        return RateFit(slope=float("nan"), r2=float("nan"), below_floor=True)
    if values.size < MIN_TAIL_RECORDS:
        raise ValueError(f"empirical_rate needs at least {MIN_TAIL_RECORDS} records in the tail")

    t = np.array([r.t for r in tail], dtype=float)
    y = np.log10(values)
    fit = linregress(t, y)
    residual = y - (fit.intercept + fit.slope * t)
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if total == 0.0 else 1.0 - float(np.sum(residual ** 2)) / total
    return RateFit(slope=float(fit.slope), r2=r2)
