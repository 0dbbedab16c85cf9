from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
import threading
from typing import Optional

from pushpull_sim.config import ExperimentConfig
from pushpull_sim.models import MetricsRecord

logger = logging.getLogger(__name__)

THRESHOLDS = (1e-2, 1e-3, 1e-4)


def threshold_label(th: float) -> str:
    return f"1e{round(math.log10(th))}"


@dataclass
class SweepPoint:
    index: int
    value: float | int
    config: ExperimentConfig
    csv_path: Path


@dataclass
class SweepResult:
    point: SweepPoint
    eta: float = float("nan")
    records: list[MetricsRecord] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def final(self) -> Optional[MetricsRecord]:
        return self.records[-1] if self.records else None


def cost_to_threshold(records: list[MetricsRecord], threshold: float, shift: float = 0.0) -> Optional[tuple[int, int]]:
    """(cum_comm, cum_grads) of the first record with subopt - shift <= threshold."""
    for r in records:
        if r.subopt - shift <= threshold:
            return r.cum_comm, r.cum_grads
    return None


class RunStore:
    """Collects sweep results from worker threads."""

    def __init__(self):
        self.results: list[SweepResult] = []
        self.lock = threading.Lock()

    def add_result(self, result: SweepResult):
        with self.lock:
            self.results.append(result)

    def get_results(self) -> list[SweepResult]:
        with self.lock:
            return sorted(self.results, key=lambda r: r.point.index)

    def best(self) -> Optional[SweepResult]:
        """Finished result with the smallest final suboptimality."""
        done = [r for r in self.get_results() if r.error is None and r.final and math.isfinite(r.final.subopt)]
        return min(done, key=lambda r: r.final.subopt, default=None)

    def floor_shift(self) -> float:
        """Offset that moves f* to the best final value seen when a run beat the reference."""
        finals = [r.final.subopt for r in self.get_results() if r.final and math.isfinite(r.final.subopt)]
        return min(0.0, min(finals, default=0.0))

    def write_summary(self, path: str | Path, shift: float = 0.0) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        best = self.best()
        header = ["value", "eta", "final_subopt", "final_consensus"]
        for th in THRESHOLDS:
            label = threshold_label(th)
            header += [f"comm_to_{label}", f"grads_to_{label}"]
        header.append("best")

        lines = [",".join(header)]
        for result in self.get_results():
            final = result.final
            row = [str(result.point.value), repr(float(result.eta))]
            row += [repr(final.subopt - shift), repr(final.consensus)] if final else ["", ""]
            for th in THRESHOLDS:
                cost = cost_to_threshold(result.records, th, shift)
                row += [str(cost[0]), str(cost[1])] if cost else ["", ""]
            row.append("1" if result is best else "0")
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.info("Sweep summary written to %s", path)
        return path
