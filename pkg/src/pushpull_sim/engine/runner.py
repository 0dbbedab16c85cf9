from dataclasses import dataclass
import logging
from typing import Iterator

import numpy as np

from pushpull_sim.config import AUTO_ETA, ConfigError, ExperimentConfig, cfg
from pushpull_sim.engine.algorithms import (
    dgd_step, init_saga, init_state, mass_residual, ppds_step, push_pull_step, saga_step,
)
from pushpull_sim.engine.sampling import BernoulliSampling, SamplingPlan, UniformSampling, sample_devices
from pushpull_sim.models import AlgoState, MetricsRecord, RateParams, SagaState
from pushpull_sim.network.mixing import MixingError, MixingStrategy, build_strategy, sample_mixing
from pushpull_sim.network.topology import DirectedGraph, build_rgg
from pushpull_sim.objectives.base import Objective
from pushpull_sim.objectives.dataset_io import load_ensemble
from pushpull_sim.objectives.logistic import generate_logistic
from pushpull_sim.objectives.ridge import generate_ridge
from pushpull_sim.theory.contraction import estimate_lambda
from pushpull_sim.theory.rates import stepsize_bound

logger = logging.getLogger(__name__)

MASS_TOL = 1e-9


@dataclass
class Experiment:
    config: ExperimentConfig
    graph: DirectedGraph
    objective: Objective
    strategy: MixingStrategy
    plan: SamplingPlan
    x_star: np.ndarray
    f_star: float
    eta: float


def build_objective(config: ExperimentConfig) -> Objective:
    obj = config.objective
    if obj.dataset:
        objective = load_ensemble(obj.dataset)
        if objective.node_count != config.graph.M:
            raise ConfigError(f"objective.dataset has {objective.node_count} nodes but graph.M={config.graph.M}")
        return objective
    if obj.family == "ridge":
        return generate_ridge(config.graph.M, obj.d, obj.n_local, obj.heterogeneity, obj.noise, config.seed + 1)
    return generate_logistic(config.graph.M, obj.d, obj.n_local, obj.classes, obj.heterogeneity, config.seed + 1)


def build_plan(config: ExperimentConfig) -> SamplingPlan:
    M = config.graph.M
    if config.algorithm == "push_pull":
        return UniformSampling(M, M)
    if config.sampling.variant == "bernoulli":
        return BernoulliSampling(config.node_probabilities())
    return UniformSampling(M, config.sampling.S)


def build_mixing(config: ExperimentConfig, graph: DirectedGraph) -> MixingStrategy:
    mix = config.mixing
    return build_strategy(mix.variant, graph, targets=mix.targets, neighbors=mix.neighbors,
                          comm_nodes=mix.comm_nodes)


def resolve_eta(config: ExperimentConfig, objective: Objective, strategy: MixingStrategy,
                plan: SamplingPlan) -> float:
    """Explicit eta, or the largest stepsize the linear-rate guarantee allows."""
    if config.eta != AUTO_ETA:
        return float(config.eta)
    if not isinstance(plan, UniformSampling):
        raise ConfigError("eta: 'auto' needs sampling.variant=uniform")
    try:
        lam, stderr = estimate_lambda(strategy, plan, cfg.lambda_samples, config.seed)
    except MixingError as exc:
        raise ConfigError(f"eta: 'auto' needs doubly stochastic mixing ({exc})") from exc
    constants = objective.constants()
    try:
        params = RateParams(mu=constants.mu, L=constants.L, M=plan.node_count, S=plan.S, lam=lam)
    except ValueError as exc:
        raise ConfigError(f"eta: cannot derive 'auto' stepsize ({exc})") from exc
    eta = stepsize_bound(params)
    logger.info("eta=auto resolved to %.6g (lambda=%.6g +- %.2g, L=%.6g, mu=%.6g)",
                eta, lam, stderr, constants.L, constants.mu)
    return eta


def build_experiment(config: ExperimentConfig) -> Experiment:
    graph = build_rgg(config.graph.M, config.graph.radius, config.seed)
    objective = build_objective(config)
    strategy = build_mixing(config, graph)
    plan = build_plan(config)
    x_star, f_star = objective.reference_solution()
    eta = resolve_eta(config, objective, strategy, plan)
    return Experiment(config, graph, objective, strategy, plan, x_star, f_star, eta)


def initial_state(experiment: Experiment) -> AlgoState | SagaState:
    objective = experiment.objective
    rng = np.random.default_rng([experiment.config.seed, 2])
    if experiment.config.algorithm == "saga":
        return init_saga(rng.standard_normal(objective.dim), objective)
    return init_state(rng.standard_normal((objective.node_count, objective.dim)), objective)


def _finite(state: AlgoState | SagaState) -> bool:
    rows = state.x if isinstance(state, SagaState) else state.X
    return bool(np.all(np.isfinite(rows)))


def _advance(experiment: Experiment, state, rng: np.random.Generator, everyone: frozenset[int]):
    config = experiment.config
    objective, strategy, plan, eta = experiment.objective, experiment.strategy, experiment.plan, experiment.eta
    if config.algorithm == "ppds":
        active = sample_devices(plan, rng)
        return ppds_step(state, sample_mixing(strategy, active, rng), active, eta, objective)
    if config.algorithm == "push_pull":
        pair = sample_mixing(strategy, everyone, rng)
        return push_pull_step(state, pair.A, pair.B, eta, objective, adapt_then_combine=True)
    if config.algorithm == "dgd":
        active = sample_devices(plan, rng)
        return dgd_step(state, sample_mixing(strategy, active, rng).A, active, eta, objective)
    return saga_step(state, sample_devices(plan, rng), eta, objective)


def iterate(experiment: Experiment) -> Iterator[AlgoState | SagaState]:
    """Yield the state at t = 0, 1, ..., iterations; stops early on non-finite iterates."""
    everyone = frozenset(range(experiment.objective.node_count))
    rng = np.random.default_rng([experiment.config.seed, 3])

    state = initial_state(experiment)
    yield state
    for _ in range(experiment.config.iterations):
        with np.errstate(over="ignore", invalid="ignore"):
            state = _advance(experiment, state, rng, everyone)
        yield state
        if not _finite(state):
            logger.warning("Non-finite iterates at t=%d (eta=%g); stopping the run", state.t, experiment.eta)
            return


def record(experiment: Experiment, state: AlgoState | SagaState) -> MetricsRecord:
    if not _finite(state):
        return MetricsRecord(state.t, state.cum_comm, state.cum_grads, float("inf"), float("inf"))
    X = state.x[None, :] if isinstance(state, SagaState) else state.X
    consensus = float(np.mean(np.sum((X - X.mean(axis=0)) ** 2, axis=1)))
    subopt = experiment.objective.suboptimality(X, experiment.x_star, experiment.f_star)
    return MetricsRecord(state.t, state.cum_comm, state.cum_grads, consensus, subopt)


def run(config: ExperimentConfig, experiment: Experiment | None = None) -> list[MetricsRecord]:
    if experiment is None:
        experiment = build_experiment(config)
    config = experiment.config
    logger.info("Starting %s: M=%d iterations=%d eta=%.6g", config.algorithm,
                experiment.objective.node_count, config.iterations, experiment.eta)
    tracks_mass = config.algorithm in ("ppds", "push_pull")
    records = []
    for state in iterate(experiment):
        finite = _finite(state)
        if state.t % config.record_every == 0 or state.t == config.iterations or not finite:
            records.append(record(experiment, state))
            if tracks_mass and finite:
                residual = mass_residual(state)
                if residual > MASS_TOL:
                    logger.warning("Mass identity residual %.3g at t=%d", residual, state.t)
    final = records[-1]
    logger.info("Run finished at t=%d: consensus=%.6g subopt=%.6g", final.t, final.consensus, final.subopt)
    return records
