from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class UniformSampling:
    """Exactly S devices per round, uniform over all size-S subsets."""
    node_count: int
    S: int

    def __post_init__(self):
        if not 1 <= self.S <= self.node_count:
            raise ValueError(f"uniform sampling needs 1 <= S <= M (S={self.S}, M={self.node_count})")


@dataclass(frozen=True)
class BernoulliSampling:
    p: tuple[float, ...]

    def __post_init__(self):
        if not self.p or any(not 0.0 < p <= 1.0 for p in self.p):
            raise ValueError("bernoulli sampling needs every probability in (0, 1]")

    @property
    def node_count(self) -> int:
        return len(self.p)


SamplingPlan = UniformSampling | BernoulliSampling


def full_participation(M: int) -> UniformSampling:
    return UniformSampling(M, M)


def sample_devices(plan: SamplingPlan, rng: np.random.Generator) -> frozenset[int]:
    if isinstance(plan, UniformSampling):
        pool = np.arange(plan.node_count)
        # partial Fisher-Yates shuffle
        for k in range(plan.S):
            j = k + int(rng.integers(plan.node_count - k))
            pool[k], pool[j] = pool[j], pool[k]
        return frozenset(int(i) for i in pool[:plan.S])
    draws = rng.random(plan.node_count)
    return frozenset(i for i, (u, p) in enumerate(zip(draws, plan.p)) if u < p)
