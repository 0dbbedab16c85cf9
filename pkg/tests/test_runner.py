import tempfile
import unittest
from pathlib import Path

import numpy as np

from pushpull_sim.config import ConfigError, parse_config, with_override
from pushpull_sim.engine.runner import build_experiment, build_objective, iterate, run
from pushpull_sim.models import RateParams
from pushpull_sim.objectives.dataset_io import save_ensemble
from pushpull_sim.theory.diagnostics import empirical_rate, lemma4_pointwise_check
from pushpull_sim.theory.rates import stepsize_bound

RUNNER_LOGGER = "pushpull_sim.engine.runner"


def small_config(**overrides):
    values = {
        "graph.M": "20", "graph.radius": "0.5", "sampling.S": "5", "objective.d": "5",
        "objective.n_local": "50", "mixing.variant": "fixed_metropolis", "record_every": "1",
        "iterations": "100", "eta": "1e-3",
    }
    values.update({k.replace("__", "."): str(v) for k, v in overrides.items()})
    return parse_config(overrides=values)


class TestRun(unittest.TestCase):
    def test_zero_iterations(self):
        records = run(small_config(iterations=0))
        self.assertEqual(len(records), 1)
        self.assertEqual((records[0].t, records[0].cum_comm), (0, 0))
        self.assertEqual(records[0].cum_grads, 20)

    def test_record_every(self):
        records = run(small_config(iterations=50, record_every=10))
        self.assertEqual([r.t for r in records], [0, 10, 20, 30, 40, 50])

    def test_last_iteration_always_recorded(self):
        records = run(small_config(iterations=25, record_every=10))
        self.assertEqual([r.t for r in records], [0, 10, 20, 25])

    def test_deterministic(self):
        config = small_config(mixing__variant="broadcast", iterations=60)
        self.assertEqual(run(config), run(config))

    def test_seed_changes_run(self):
        self.assertNotEqual(run(small_config(seed=1))[-1], run(small_config(seed=2))[-1])

    def test_counters_are_monotone(self):
        records = run(small_config(mixing__variant="metropolis_active", iterations=80))
        comm = [r.cum_comm for r in records]
        grads = [r.cum_grads for r in records]
        self.assertEqual(comm, sorted(comm))
        self.assertEqual(grads, [20 + 5 * r.t for r in records])

    def test_mass_identity_holds(self):
        with self.assertNoLogs(RUNNER_LOGGER, level="WARNING"):
            run(small_config(mixing__variant="broadcast", eta=1e-4, iterations=300))

    def test_mass_identity_with_sampled_metropolis(self):
        with self.assertNoLogs(RUNNER_LOGGER, level="WARNING"):
            records = run(small_config(mixing__variant="metropolis_active", iterations=2000))
        self.assertEqual(len(records), 2001)

    def test_divergence_stops_early(self):
        with self.assertLogs(RUNNER_LOGGER, level="WARNING") as logs:
            records = run(small_config(eta=1.0, iterations=5000, record_every=100))
        self.assertTrue(any("Non-finite" in line for line in logs.output))
        self.assertEqual(records[-1].subopt, float("inf"))
        self.assertLess(records[-1].t, 5000)

    def test_push_pull_is_full_participation(self):
        records = run(small_config(algorithm="push_pull", iterations=10))
        self.assertEqual(records[-1].cum_grads, 20 + 20 * 10)

    def test_saga_has_no_communication(self):
        records = run(small_config(algorithm="saga", sampling__S=1, eta=1e-4, iterations=200, record_every=50))
        self.assertTrue(all(r.cum_comm == 0 and r.consensus == 0.0 for r in records))
        self.assertLess(records[-1].subopt, records[0].subopt)

    def test_dgd_progresses(self):
        records = run(small_config(algorithm="dgd", iterations=300, record_every=100))
        self.assertLess(records[-1].subopt, records[0].subopt)

    def test_logistic_progresses(self):
        config = small_config(objective__family="logistic", graph__M=5, sampling__S=2, mixing__comm_nodes=2,
                              objective__d=3, objective__n_local=10, eta=1e-2, iterations=200, record_every=200)
        records = run(config)
        self.assertLess(records[-1].subopt, records[0].subopt)


class TestAutoStepsize(unittest.TestCase):
    def test_mean_mixing_uses_bound(self):
        experiment = build_experiment(small_config(mixing__variant="mean", eta="auto"))
        c = experiment.objective.constants()
        expected = stepsize_bound(RateParams(mu=c.mu, L=c.L, M=20, S=5, lam=0.0))
        self.assertAlmostEqual(experiment.eta / expected, 1.0, places=12)

    def test_broadcast_cannot_resolve(self):
        with self.assertRaises(ConfigError):
            build_experiment(small_config(mixing__variant="broadcast", eta="auto"))

    def test_bernoulli_cannot_resolve(self):
        with self.assertRaises(ConfigError):
            build_experiment(small_config(sampling__variant="bernoulli", eta="auto"))


class TestDatasetReplay(unittest.TestCase):
    def test_saved_ensemble_reproduces_run(self):
        config = small_config(iterations=40, record_every=10)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_ensemble(build_objective(config), Path(tmp) / "ensemble.npz")
            replay = run(with_override(config, "objective.dataset", str(path)))
        self.assertEqual(replay, run(config))

    def test_node_count_mismatch(self):
        config = small_config()
        with tempfile.TemporaryDirectory() as tmp:
            path = save_ensemble(build_objective(config), Path(tmp) / "ensemble.npz")
            with self.assertRaises(ConfigError):
                build_objective(with_override(with_override(config, "objective.dataset", str(path)), "graph.M", 10))


class TestLinearConvergence(unittest.TestCase):
    def test_best_grid_stepsize_converges_linearly(self):
        base = small_config(iterations=20000)
        chosen = None
        for eta in (1e-2, 1e-3, 1e-4, 1e-5):
            records = run(with_override(base, "eta", eta))
            if min(r.subopt for r in records) <= 1e-8:
                chosen = records
                break
        self.assertIsNotNone(chosen)
        head = []
        for r in chosen:
            if r.subopt < 1e-11:
                break
            head.append(r)
        fit = empirical_rate(head)
        self.assertLess(fit.slope, 0.0)
        self.assertGreaterEqual(fit.r2, 0.95)

    def test_gradient_bounds_along_a_run(self):
        experiment = build_experiment(small_config(iterations=99))
        constants = experiment.objective.constants()
        snapshots = 0
        for state in iterate(experiment):
            report = lemma4_pointwise_check(state.X, state.Z, state.Y, experiment.objective,
                                            experiment.x_star, constants)
            self.assertTrue(report.holds(), msg=f"t={state.t} {report}")
            snapshots += 1
        self.assertEqual(snapshots, 100)

    def test_iterates_stay_finite(self):
        experiment = build_experiment(small_config(iterations=50))
        for state in iterate(experiment):
            self.assertTrue(np.all(np.isfinite(state.X)))


if __name__ == '__main__':
    unittest.main()
