import logging
import queue
import threading

from pushpull_sim.engine.runner import build_experiment, run
from pushpull_sim.output.metrics_csv import write_metrics_csv
from pushpull_sim.run_store import RunStore, SweepPoint, SweepResult

logger = logging.getLogger(__name__)


class SweepWorker:
    """Pulls sweep points off a shared queue until it sees the ``None`` sentinel."""

    def __init__(self, point_queue: queue.Queue, store: RunStore):
        self.queue = point_queue
        self.store = store
        self.thread = None

    def _run(self):
        while True:
            point: SweepPoint | None = self.queue.get()
            if point is None:
                break
            self.store.add_result(self._execute(point))

    def _execute(self, point: SweepPoint) -> SweepResult:
        logger.info("Sweep point %d (value=%s) started", point.index, point.value)
        try:
            experiment = build_experiment(point.config)
            records = run(point.config, experiment)
            write_metrics_csv(records, point.csv_path)
        except Exception as e:
            logger.error("Sweep point %d (value=%s) failed: %s", point.index, point.value, e)
            return SweepResult(point, error=str(e))
        logger.info("Sweep point %d finished: subopt=%.6g", point.index, records[-1].subopt)
        return SweepResult(point, eta=experiment.eta, records=records)

    def start(self):
        self.thread = threading.Thread(target=self._run, daemon=True)
        self.thread.start()

    def join(self):
        if self.thread:
            self.thread.join()


def run_points(points: list[SweepPoint], jobs: int, store: RunStore | None = None) -> RunStore:
    """Run every point on ``jobs`` worker threads and wait for all of them."""
    store = store or RunStore()
    work: queue.Queue = queue.Queue()
    for point in points:
        work.put(point)
    workers = [SweepWorker(work, store) for _ in range(max(1, min(jobs, len(points))))]
    for _ in workers:
        work.put(None)
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    return store
