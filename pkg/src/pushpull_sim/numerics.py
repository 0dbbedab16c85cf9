"""Dense linear algebra shared by the network, objective and theory modules.

Everything here is a pure function of its inputs. Matrices are plain
``numpy`` arrays of dtype float64.
"""
from dataclasses import dataclass
import logging
from typing import Callable

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000
_START_SEED = 0


class NumericsError(ValueError):
    pass


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    converged: bool
    iterations: int


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise NumericsError(f"{name} must be 2-dimensional, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "left operand")
    b = np.asarray(b, dtype=float)
    if b.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise NumericsError(f"matmul: inner dimensions differ ({a.shape} x {b.shape})")
    return a @ b


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive definite ``a`` via Cholesky."""
    a = as_matrix(a)
    b = np.asarray(b, dtype=float)
    if a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
        raise NumericsError(f"solve_spd: incompatible shapes {a.shape} and {b.shape}")
    try:
        factor = linalg.cho_factor(a, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericsError(f"solve_spd: matrix is not positive definite ({exc})") from exc
    return linalg.cho_solve(factor, b)


def check_symmetric(s, name: str = "matrix") -> np.ndarray:
    s = as_matrix(s, name)
    if s.shape[0] != s.shape[1]:
        raise NumericsError(f"{name} is not square: shape {s.shape}")
    if s.size:
        scale = max(1.0, float(np.max(np.abs(s))))
        if float(np.max(np.abs(s - s.T))) > SYMMETRY_TOL * scale:
            raise NumericsError(f"{name} is not symmetric")
    return s


def _start_vector(n: int) -> np.ndarray:
    # all-ones alone sits in the kernel of A^T (I - J) A
    rng = np.random.default_rng(_START_SEED)
    x = np.ones(n) + rng.standard_normal(n)
    return x / np.linalg.norm(x)


def _power_iterate(apply: Callable[[np.ndarray], np.ndarray], n: int,
                   tol: float, max_iter: int) -> PowerIterationResult:
    if n == 0:
        return PowerIterationResult(0.0, True, 0)
    x = _start_vector(n)
    estimate = 0.0
    for k in range(1, max_iter + 1):
        y = apply(x)
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return PowerIterationResult(0.0, True, k)
        if abs(norm - estimate) <= tol * norm:
            return PowerIterationResult(norm, True, k)
        estimate = norm
        x = y / norm
    # Rayleigh quotient of the last iterate
    return PowerIterationResult(abs(float(x @ apply(x))), False, max_iter)


def power_iteration(s, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> PowerIterationResult:
    s = check_symmetric(s)
    return _power_iterate(lambda x: s @ x, s.shape[0], tol, max_iter)


def spectral_radius_symmetric(s) -> float:
    result = power_iteration(s)
    if not result.converged:
        logger.warning("Power iteration stopped after %d iterations without converging", result.iterations)
    return result.value


def smallest_eigenvalue_spd(h, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> PowerIterationResult:
    """Smallest eigenvalue of an SPD matrix by inverse iteration over a Cholesky factor."""
    h = check_symmetric(h)
    try:
        factor = linalg.cho_factor(h, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericsError(f"smallest_eigenvalue_spd: matrix is not positive definite ({exc})") from exc
    result = _power_iterate(lambda x: linalg.cho_solve(factor, x), h.shape[0], tol, max_iter)
    if result.value == 0.0:
        raise NumericsError("smallest_eigenvalue_spd: inverse iteration collapsed")
    return PowerIterationResult(1.0 / result.value, result.converged, result.iterations)
