"""Ridge regression ensembles: f_i(x) = ||A_i x - b_i||^2 + reg_i ||x||^2."""
from dataclasses import dataclass, field
import logging

import numpy as np

from pushpull_sim.models import SmoothnessConstants
from pushpull_sim.numerics import NumericsError, smallest_eigenvalue_spd, solve_spd, spectral_radius_symmetric
from pushpull_sim.objectives.base import Objective

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class RidgeEnsemble(Objective):
    features: np.ndarray  # (M, n_local, d)
    labels: np.ndarray  # (M, n_local)
    reg: np.ndarray  # (M,)
    ground_truth: np.ndarray | None = None
    family: str = field(default="ridge", init=False)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        self.reg = np.asarray(self.reg, dtype=float)
        if self.features.ndim != 3:
            raise NumericsError(f"ridge features must be (M, n_local, d), got {self.features.shape}")
        M, n, d = self.features.shape
        if self.labels.shape != (M, n) or self.reg.shape != (M,):
            raise NumericsError("ridge labels/regularizers do not match the feature shape")
        if np.any(self.reg <= 0):
            raise NumericsError("ridge regularizers must be > 0")
        self.node_count, self.n_local, self.dim = M, n, d
        # Gram matrices and moments, reused by every gradient call
        self.grams = np.einsum("mnd,mne->mde", self.features, self.features)
        self.moments = np.einsum("mnd,mn->md", self.features, self.labels)
        self.label_energy = np.einsum("mn,mn->m", self.labels, self.labels)
        self.mean_hessian = self.grams.mean(axis=0) + np.mean(self.reg) * np.eye(d)  # half the Hessian of f

    def local_value(self, i, x):
        x = self.check_point(x)
        r = self.features[i] @ x - self.labels[i]
        return float(r @ r + self.reg[i] * (x @ x))

    def local_gradient(self, i, x):
        x = self.check_point(x)
        return 2.0 * (self.grams[i] @ x - self.moments[i]) + 2.0 * self.reg[i] * x

    def gradients(self, X, nodes):
        X = self.check_rows(X)
        idx = np.fromiter(nodes, dtype=int)
        if idx.size == 0:
            return np.zeros((0, self.dim))
        Xi = X[idx]
        return 2.0 * (np.matmul(self.grams[idx], Xi[:, :, None])[:, :, 0] - self.moments[idx]) \
            + 2.0 * self.reg[idx, None] * Xi

    def values(self, X):
        X = self.check_rows(X)
        quad = np.einsum("kd,de,ke->k", X, self.mean_hessian, X)
        return quad - 2.0 * X @ self.moments.mean(axis=0) + self.label_energy.mean()

    def suboptimality(self, X, x_star, f_star):
        # quadratic form around x*; avoids cancellation near the optimum
        diff = self.check_rows(X) - self.check_point(x_star)
        return float(np.mean(np.einsum("kd,de,ke->k", diff, self.mean_hessian, diff)))

    def constants(self):
        L = max(2.0 * spectral_radius_symmetric(self.grams[i]) + 2.0 * self.reg[i] for i in range(self.node_count))
        estimate = smallest_eigenvalue_spd(2.0 * self.mean_hessian)
        if estimate.converged:
            return SmoothnessConstants(L=L, mu=min(estimate.value, L), mu_method="inverse_iteration")
        logger.warning("Inverse iteration did not converge; using the regularizer bound for mu")
        return SmoothnessConstants(L=L, mu=2.0 * float(np.mean(self.reg)), mu_method="regularizer_bound")

    def reference_solution(self):
        x_star = exact_ridge_solution(self)
        return x_star, self.global_value(x_star)


def exact_ridge_solution(ensemble: RidgeEnsemble) -> np.ndarray:
    """Solve (sum_i A_i^T A_i + sum_i reg_i I) x = sum_i A_i^T b_i."""
    system = ensemble.grams.sum(axis=0) + ensemble.reg.sum() * np.eye(ensemble.dim)
    return solve_spd(system, ensemble.moments.sum(axis=0))


def generate_ridge(M: int, d: int, n_local: int, heterogeneity: float, noise: float, seed: int) -> RidgeEnsemble:
    """Synthetic ensemble: node i fits w_i = w* + heterogeneity * delta_i with label noise."""
    if min(M, d, n_local) < 1:
        raise ValueError("generate_ridge needs M, d, n_local >= 1")
    shared, *per_node = np.random.SeedSequence(seed).spawn(M + 1)
    w_star = np.random.default_rng(shared).standard_normal(d)
    features = np.empty((M, n_local, d))
    labels = np.empty((M, n_local))
    for i, seq in enumerate(per_node):
        rng = np.random.default_rng(seq)
        w_i = w_star + heterogeneity * rng.standard_normal(d)
        features[i] = rng.standard_normal((n_local, d))
        labels[i] = features[i] @ w_i + noise * rng.standard_normal(n_local)
    return RidgeEnsemble(features, labels, np.full(M, 1.0 / n_local), ground_truth=w_star)
