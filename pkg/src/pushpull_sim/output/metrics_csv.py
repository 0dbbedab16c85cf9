from pathlib import Path
import logging
from typing import Iterable

from pushpull_sim.models import MetricsRecord

logger = logging.getLogger(__name__)

HEADER = "iter,comm_cost,grad_count,consensus,subopt"


def _fmt(value: float) -> str:
    # repr round-trips every float64 exactly
    return repr(float(value))


def write_metrics_csv(records: Iterable[MetricsRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(HEADER + "\n")
        for r in records:
            f.write(f"{r.t},{r.cum_comm},{r.cum_grads},{_fmt(r.consensus)},{_fmt(r.subopt)}\n")
    logger.info("Metrics written to %s", path)
    return path


def read_metrics_csv(path: str | Path) -> list[MetricsRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != HEADER:
        raise ValueError(f"{path}: not a metrics CSV (expected header '{HEADER}')")
    records = []
    for line in lines[1:]:
        if not line:
            continue
        t, comm, grads, consensus, subopt = line.split(",")
        records.append(MetricsRecord(int(t), int(comm), int(grads), float(consensus), float(subopt)))
    return records
