"""Multinomial logistic ensembles.

The parameter is a (d, C) weight matrix flattened row-major; node i holds
f_i(W) = sum_j [logsumexp(a_j W) - b_j . (a_j W)] + reg_i ||W||^2.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from pushpull_sim.models import SmoothnessConstants
from pushpull_sim.numerics import NumericsError, spectral_radius_symmetric
from pushpull_sim.objectives.base import Objective

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class LogisticEnsemble(Objective):
    features: np.ndarray  # (M, n_local, d)
    labels: np.ndarray  # (M, n_local, C) one-hot
    reg: np.ndarray  # (M,)
    family: str = field(default="logistic", init=False)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        self.reg = np.asarray(self.reg, dtype=float)
        if self.features.ndim != 3 or self.labels.ndim != 3:
            raise NumericsError("logistic features and labels must be 3-dimensional")
        M, n, d = self.features.shape
        if self.labels.shape[:2] != (M, n) or self.reg.shape != (M,):
            raise NumericsError("logistic labels/regularizers do not match the feature shape")
        if not (np.all((self.labels == 0) | (self.labels == 1)) and np.all(self.labels.sum(axis=2) == 1)):
            raise NumericsError("logistic labels must be one-hot rows")
        if np.any(self.reg <= 0):
            raise NumericsError("logistic regularizers must be > 0")
        self.node_count, self.n_local, self.features_dim = M, n, d
        self.classes = self.labels.shape[2]
        self.dim = d * self.classes

    def _weights(self, x):
        return self.check_point(x).reshape(self.features_dim, self.classes)

    def local_value(self, i, x):
        logits = self.features[i] @ self._weights(x)
        misfit = np.sum(logsumexp(logits, axis=1) - np.sum(self.labels[i] * logits, axis=1))
        return float(misfit + self.reg[i] * (x @ x))

    def local_gradient(self, i, x):
        x = self.check_point(x)
        logits = self.features[i] @ self._weights(x)
        residual = softmax(logits, axis=1) - self.labels[i]
        return (self.features[i].T @ residual).ravel() + 2.0 * self.reg[i] * x

    def values(self, X):
        X = self.check_rows(X)
        W = X.reshape(-1, self.features_dim, self.classes)
        total = np.zeros(len(X))
        for i in range(self.node_count):
            logits = np.einsum("nd,kdc->knc", self.features[i], W)
            total += np.sum(logsumexp(logits, axis=2) - np.sum(self.labels[i] * logits, axis=2), axis=1)
            total += self.reg[i] * np.einsum("kd,kd->k", X, X)
        return total / self.node_count

    def constants(self):
        # softmax Hessian block is bounded by 1/2 in spectral norm
        grams = np.einsum("mnd,mne->mde", self.features, self.features)
        L = max(0.5 * spectral_radius_symmetric(grams[i]) + 2.0 * self.reg[i] for i in range(self.node_count))
        return SmoothnessConstants(L=L, mu=min(2.0 * float(np.mean(self.reg)), L), mu_method="regularizer_bound")

    def reference_solution(self):
        result = minimize(
            lambda x: (self.global_value(x), self.global_gradient(x)),
            np.zeros(self.dim),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": 10_000, "ftol": 1e-15, "gtol": 1e-10},
        )
        if not result.success:
            logger.warning("Reference optimum search stopped early: %s", result.message)
        logger.info("Logistic reference optimum f*=%.12g after %d iterations", result.fun, result.nit)
        return np.asarray(result.x, dtype=float), float(result.fun)


def generate_logistic(M: int, d: int, n_local: int, classes: int, heterogeneity: float, seed: int) -> LogisticEnsemble:
    """Synthetic classification task: node i labels its points with argmax of a (W* + heterogeneity * noise) score."""
    if min(M, d, n_local) < 1 or classes < 2:
        raise ValueError("generate_logistic needs M, d, n_local >= 1 and classes >= 2")
    shared, *per_node = np.random.SeedSequence(seed).spawn(M + 1)
    w_star = np.random.default_rng(shared).standard_normal((d, classes))
    features = np.empty((M, n_local, d))
    labels = np.zeros((M, n_local, classes))
    for i, seq in enumerate(per_node):
        rng = np.random.default_rng(seq)
        w_i = w_star + heterogeneity * rng.standard_normal((d, classes))
        features[i] = rng.standard_normal((n_local, d))
        labels[i, np.arange(n_local), np.argmax(features[i] @ w_i, axis=1)] = 1.0
    return LogisticEnsemble(features, labels, np.full(M, 1.0 / n_local))
