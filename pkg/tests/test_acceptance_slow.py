import os
import unittest

from pushpull_sim.config import parse_config, with_override
from pushpull_sim.engine.runner import run
from pushpull_sim.run_store import cost_to_threshold

SLOW = os.getenv("PUSHPULL_SLOW_TESTS") == "1"
GRID = (1e-3, 5e-4, 2e-4, 1e-4)


@unittest.skipUnless(SLOW, "set PUSHPULL_SLOW_TESTS=1 to run the M=50 comparisons")
class TestFiftyNodeComparison(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.base = parse_config(overrides={
            "graph.M": "50", "graph.radius": "0.3", "sampling.S": "10", "objective.d": "5",
            "objective.n_local": "50", "mixing.variant": "fixed_metropolis", "iterations": "30000",
            "record_every": "50", "eta": "2e-4",
        })
        cls.ppds = run(cls.base)

    def test_ppds_reaches_high_accuracy(self):
        self.assertLess(self.ppds[-1].subopt, 1e-8)

    def test_dgd_stalls_above_ppds(self):
        dgd = run(with_override(self.base, "algorithm", "dgd"))
        self.assertGreater(dgd[-1].subopt, 100 * max(self.ppds[-1].subopt, 1e-300))
        self.assertIsNone(cost_to_threshold(dgd, 1e-10))

    def test_ppds_needs_fewer_gradients_than_push_pull(self):
        def tuned_cost(algorithm):
            costs = []
            for eta in GRID:
                config = with_override(with_override(self.base, "algorithm", algorithm), "eta", eta)
                cost = cost_to_threshold(run(config), 1e-4)
                if cost is not None:
                    costs.append(cost[1])
            return min(costs, default=None)

        ppds, push_pull = tuned_cost("ppds"), tuned_cost("push_pull")
        self.assertIsNotNone(ppds)
        self.assertIsNotNone(push_pull)
        self.assertLess(ppds, push_pull)

    def test_broadcast_mixing_converges(self):
        records = run(with_override(self.base, "mixing.variant", "broadcast"))
        self.assertLess(records[-1].subopt, 1e-6 * records[0].subopt)


if __name__ == '__main__':
    unittest.main()
