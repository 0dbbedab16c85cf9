"""Closed-form rate theory for PPDS under doubly stochastic mixing and uniform sampling.

Tracked quantities, in order: distance of the average to x*, consensus
error of X, consensus error of Y, and the gradient-memory control term.
"""
import logging
import math

import numpy as np

from pushpull_sim.models import LyapunovCertificate, RateParams, RecurrenceSystem

logger = logging.getLogger(__name__)

CERT_TOL = 1e-12


def stepsize_bound(params: RateParams) -> float:
    L, ratio, gap = params.L, params.M / params.S, (1.0 - params.lam) ** 2
    return min(
        gap / (14.0 * L) * math.sqrt(ratio),
        gap / (2304.0 * L) * ratio ** 1.5,
        1.0 / (576.0 * L) * math.sqrt(ratio),
    )


def _require_eta(params: RateParams) -> float:
    if params.eta is None:
        raise ValueError("this quantity needs a stepsize eta")
    return params.eta


def _average_contraction(params: RateParams) -> float:
    return 1.0 - params.eta * params.mu * params.S / (2.0 * params.M)


def convergence_rate(params: RateParams) -> float:
    _require_eta(params)
    bound = stepsize_bound(params)
    if params.eta > bound:
        logger.warning("eta=%.6g exceeds the stepsize bound %.6g; the rate is not guaranteed", params.eta, bound)
    return max(_average_contraction(params), 1.0 - params.S / (4.0 * params.M))


def iteration_complexity(params: RateParams, epsilon: float) -> float:
    """Order-level count ((L/mu) sqrt(M/S) / (1-lambda)^2 + M/S) log(1/epsilon), constants omitted."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    ratio = params.M / params.S
    return ((params.L / params.mu) * math.sqrt(ratio) / (1.0 - params.lam) ** 2 + ratio) * math.log(1.0 / epsilon)


def build_recurrence_system(params: RateParams) -> RecurrenceSystem:
    eta = _require_eta(params)
    mu, L, M, S, lam = params.mu, params.L, params.M, params.S, params.lam
    gap = 1.0 - lam
    half = (1.0 + lam) / 2.0

    Q = np.array([
        [_average_contraction(params), eta * L * S / M**2 + 10 * eta**2 * L**2 * S**2 / M**3,
         2 * eta**2 * S**2 / M**3, 4 * eta**2 * S**2 / M**3],
        [0.0, half + 20 * eta**2 * L**2 * S / (M * gap), 4 * eta**2 * S / (M * gap), 8 * eta**2 * S / (M * gap)],
        [0.0, 8 * L**2 * S / (M * gap), half, 4 * S / (M * gap)],
        [0.0, 2 * L**2 * S / M, 0.0, 1.0 - S / M],
    ])
    q = np.array([
        -eta * S / M + 20 * eta**2 * L * S**2 / M**2,
        40 * eta**2 * L * S / gap,
        16 * L * S / gap,
        4 * L * S,
    ])
    v = np.array([
        1.0,
        math.sqrt(S) * gap / M**1.5,
        eta * gap / (96 * M * L),
        eta / (12 * M * L),
    ])
    return RecurrenceSystem(Q=Q, q=q, v=v, rho=convergence_rate(params))


def lyapunov_check(params: RateParams) -> LyapunovCertificate:
    """Check v^T Q <= rho v^T entrywise and v^T q <= 0."""
    system = build_recurrence_system(params)
    vQ = system.v @ system.Q
    column_margins = system.rho * system.v - vQ
    bias_margin = -float(system.v @ system.q)
    slack = CERT_TOL * system.rho * system.v
    return LyapunovCertificate(
        vQ_le_rho_v=bool(np.all(column_margins >= -slack)),
        vq_nonpositive=bias_margin >= 0.0,
        margins=(*(float(m) for m in column_margins), bias_margin),
    )
