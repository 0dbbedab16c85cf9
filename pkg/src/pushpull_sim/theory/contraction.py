import logging

import numpy as np

from pushpull_sim.engine.sampling import SamplingPlan, sample_devices
from pushpull_sim.models import LambdaEstimate
from pushpull_sim.network.mixing import MixingError, MixingStrategy, is_column_stochastic, is_row_stochastic, sample_mixing
from pushpull_sim.numerics import spectral_radius_symmetric

logger = logging.getLogger(__name__)

BATCHES = 10


def consensus_deviation(W: np.ndarray) -> np.ndarray:
    """W^T (I - J) W, symmetrized."""
    S = W.T @ (W - W.mean(axis=0))
    return 0.5 * (S + S.T)


def _doubly_stochastic(W: np.ndarray) -> bool:
    return is_row_stochastic(W) and is_column_stochastic(W)


def estimate_lambda(strategy: MixingStrategy, plan: SamplingPlan, n_samples: int, seed: int) -> LambdaEstimate:
    """Monte-Carlo estimate of max(rho(E[A^T (I-J) A]), rho(E[B^T (I-J) B])) with a batch-means stderr."""
    if n_samples < 1:
        raise ValueError("estimate_lambda needs n_samples >= 1")
    rng = np.random.default_rng(seed)
    M = plan.node_count
    everyone = frozenset(range(M))

    total_A = np.zeros((M, M))
    total_B = np.zeros((M, M))
    batch_values = []
    for batch in np.array_split(np.arange(n_samples), min(BATCHES, n_samples)):
        sum_A = np.zeros((M, M))
        sum_B = np.zeros((M, M))
        for _ in batch:
            active = sample_devices(plan, rng) if strategy.uses_active else everyone
            pair = sample_mixing(strategy, active, rng)
            if not (_doubly_stochastic(pair.A) and _doubly_stochastic(pair.B)):
                raise MixingError("lambda is only defined for doubly stochastic mixing pairs")
            sum_A += consensus_deviation(pair.A)
            sum_B += consensus_deviation(pair.B)
        batch_values.append(max(spectral_radius_symmetric(sum_A / len(batch)),
                                spectral_radius_symmetric(sum_B / len(batch))))
        total_A += sum_A
        total_B += sum_B

    lam = max(spectral_radius_symmetric(total_A / n_samples), spectral_radius_symmetric(total_B / n_samples))
    if len(batch_values) > 1:
        stderr = float(np.std(batch_values, ddof=1) / np.sqrt(len(batch_values)))
    else:
        stderr = 0.0
    logger.debug("lambda estimate %.6g +- %.2g over %d draws", lam, stderr, n_samples)
    return LambdaEstimate(float(lam), stderr)
