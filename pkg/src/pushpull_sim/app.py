import argparse
import logging
from pathlib import Path
import sys

import numpy as np

from pushpull_sim.config import ConfigError, ExperimentConfig, cfg, parse_assignments, parse_config, with_override
from pushpull_sim.engine.runner import build_experiment, build_mixing, build_plan, run
from pushpull_sim.engine.sampling import sample_devices
from pushpull_sim.models import RateParams
from pushpull_sim.network.mixing import sample_mixing, validate_mixing
from pushpull_sim.network.topology import build_rgg, is_strongly_connected, write_edge_list
from pushpull_sim.objectives.dataset_io import save_ensemble
from pushpull_sim.output.metrics_csv import write_metrics_csv
from pushpull_sim.run_store import RunStore, SweepPoint
from pushpull_sim.sweep.worker import run_points
from pushpull_sim.theory.contraction import estimate_lambda
from pushpull_sim.theory.rates import convergence_rate, iteration_complexity, lyapunov_check, stepsize_bound

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(levelname)s] [%(name)s] %(message)s"

COARSE_STEPSIZES = (1e-2, 1e-3, 1e-4, 1e-5)
FINE_EXPONENTS = (-2, -1, 1, 2)
DEFAULT_AXIS_VALUES = {
    "sample-size": (10, 15, 20, 25, 30, 35, 40, 45, 50),
    "mixing-degree": (1, 2, 3, 4, 5),
}
MARGIN_NAMES = ("margin_distance", "margin_consensus_x", "margin_consensus_y", "margin_memory", "margin_bias")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _emit(pairs: list[tuple[str, object]], csv_path: str | None):
    for key, value in pairs:
        print(f"{key}={value}")
    if csv_path:
        path = Path(csv_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(",".join(k for k, _ in pairs) + "\n" + ",".join(str(v) for _, v in pairs) + "\n",
                        encoding="utf-8")


# --- run ---

def cmd_run(config: ExperimentConfig, graph_path: str | None = None, dataset_path: str | None = None) -> int:
    experiment = build_experiment(config)
    if graph_path:
        print(f"graph={write_edge_list(experiment.graph, graph_path)}")
    if dataset_path:
        print(f"dataset={save_ensemble(experiment.objective, dataset_path)}")
    records = run(config, experiment)
    path = write_metrics_csv(records, config.output)
    final = records[-1]
    print(f"final_iter={final.t}")
    print(f"consensus={_fmt(final.consensus)}")
    print(f"subopt={_fmt(final.subopt)}")
    print(f"csv={path}")
    return 0


# --- sweep ---

def _axis_key(config: ExperimentConfig, axis: str) -> str:
    if axis == "stepsize":
        return "eta"
    if axis == "sample-size":
        return "sampling.S"
    if axis == "mixing-degree":
        if config.mixing.variant in ("mean", "fixed_metropolis"):
            raise ConfigError(f"mixing.variant={config.mixing.variant} has no degree to sweep")
        return "mixing.targets" if config.mixing.variant == "broadcast" else "mixing.neighbors"
    raise ConfigError(f"unknown sweep axis '{axis}'")


def _default_values(base: ExperimentConfig, axis: str) -> tuple[int, ...]:
    # defaults beyond what the network allows are dropped
    limit = base.graph.M if axis == "sample-size" else base.graph.M - 1
    values = tuple(v for v in DEFAULT_AXIS_VALUES.get(axis, ()) if v <= limit)
    if not values:
        raise ConfigError(f"no default {axis} values fit graph.M={base.graph.M}; pass --values")
    return values


def _points(base: ExperimentConfig, axis: str, values, out_dir: Path, start: int) -> list[SweepPoint]:
    key = _axis_key(base, axis)
    points = []
    for k, value in enumerate(values, start=start):
        value = float(value) if axis == "stepsize" else int(value)
        config = with_override(base, key, value)
        path = out_dir / f"{axis}_{k:02d}.csv"
        points.append(SweepPoint(k, value, with_override(config, "output", str(path)), path))
    return points


def cmd_sweep(base: ExperimentConfig, axis: str, values=None, jobs: int = 1, out_dir: str | Path | None = None) -> int:
    """One run per axis value; the stepsize axis refines around the best coarse value unless values are given."""
    out_dir = Path(out_dir or cfg.output_dir)
    refine = axis == "stepsize" and not values
    if not values:
        values = COARSE_STEPSIZES if axis == "stepsize" else _default_values(base, axis)
    store = RunStore()
    points = _points(base, axis, values, out_dir, start=0)
    run_points(points, jobs, store)

    best = store.best()
    if refine and best is not None:
        fine = [best.point.value * 2.0 ** k for k in FINE_EXPONENTS]
        logger.info("Refining stepsize around %g", best.point.value)
        run_points(_points(base, axis, fine, out_dir, start=len(points)), jobs, store)

    shift = store.floor_shift() if base.objective.family == "logistic" else 0.0
    summary = store.write_summary(out_dir / "summary.csv", shift=shift)
    best = store.best()
    failed = [r for r in store.get_results() if r.error is not None]
    print(f"points={len(store.get_results())}")
    print(f"failed={len(failed)}")
    if best is not None:
        print(f"best_value={best.point.value}")
        print(f"best_subopt={_fmt(best.final.subopt - shift)}")
    print(f"summary={summary}")
    return 2 if failed else 0


# --- theory calculators ---

def cmd_rate(mu: float, L: float, M: int, S: int, lam: float, eta: float | None = None,
             epsilon: float = 1e-6, csv_path: str | None = None) -> int:
    try:
        bound = stepsize_bound(RateParams(mu=mu, L=L, M=M, S=S, lam=lam))
        params = RateParams(mu=mu, L=L, M=M, S=S, lam=lam, eta=bound if eta is None else eta)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if params.eta > bound:
        print(f"warning: eta={_fmt(params.eta)} exceeds the stepsize bound {_fmt(bound)}")
    certificate = lyapunov_check(params)
    pairs = [
        ("stepsize_bound", _fmt(bound)),
        ("eta", _fmt(params.eta)),
        ("rho", _fmt(convergence_rate(params))),
        ("iteration_complexity", _fmt(iteration_complexity(params, epsilon))),
        ("vQ_le_rho_v", certificate.vQ_le_rho_v),
        ("vq_nonpositive", certificate.vq_nonpositive),
    ]
    pairs += [(name, _fmt(m)) for name, m in zip(MARGIN_NAMES, certificate.margins)]
    _emit(pairs, csv_path)
    return 0


def cmd_lambda(config: ExperimentConfig, samples: int, csv_path: str | None = None) -> int:
    graph = build_rgg(config.graph.M, config.graph.radius, config.seed)
    lam, stderr = estimate_lambda(build_mixing(config, graph), build_plan(config), samples, config.seed)
    _emit([("lambda", f"{round(lam, 12):.12g}"), ("stderr", _fmt(stderr)), ("samples", samples)], csv_path)
    return 0


def cmd_validate(config: ExperimentConfig, rounds: int, beta: float = 0.0) -> int:
    """Draw mixing pairs for the config and check them against the graph."""
    graph = build_rgg(config.graph.M, config.graph.radius, config.seed)
    strategy = build_mixing(config, graph)
    plan = build_plan(config)
    rng = np.random.default_rng([config.seed, 3])
    everyone = frozenset(range(config.graph.M))

    reports = []
    min_diag = float("inf")
    for _ in range(rounds):
        active = sample_devices(plan, rng) if strategy.uses_active else everyone
        pair = sample_mixing(strategy, active, rng)
        reports.append(validate_mixing(pair, graph, beta))
        min_diag = min(min_diag, float(np.min(np.diag(pair.A))), float(np.min(np.diag(pair.B))))

    flags = ("row_stochastic_A", "col_stochastic_B", "graph_compatible", "diag_ge_beta",
             "doubly_stochastic_A", "doubly_stochastic_B")
    for flag in flags:
        print(f"{flag}={all(getattr(r, flag) for r in reports)}")
    print(f"beta_observed={_fmt(min_diag)}")
    print(f"strongly_connected={is_strongly_connected(graph)}")
    print(f"doubly_stochastic={all(r.doubly_stochastic for r in reports)}")
    return 0 if all(r.usable for r in reports) else 2


# --- argument handling ---

def load_config(args) -> ExperimentConfig:
    overrides = parse_assignments(args.set or [])
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.iters is not None:
        overrides["iterations"] = str(args.iters)
    if getattr(args, "out", None) is not None and args.command == "run":
        overrides["output"] = args.out
    return parse_config(args.config, overrides)


def _parse_values(text: str | None) -> list[float] | None:
    if not text:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be a comma list of numbers, got {text!r}") from None


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value experiment file")
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pushpull-sim", description="Push-pull gradient tracking with device sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and write its metrics CSV")
    _add_config_flags(p)
    p.add_argument("--out", help="metrics CSV path")
    p.add_argument("--save-graph", metavar="PATH", help="also write the communication graph as an edge list")
    p.add_argument("--save-dataset", metavar="PATH", help="also write the objective ensemble (.npz) for replay")

    p = sub.add_parser("sweep", help="run one experiment per axis value")
    _add_config_flags(p)
    p.add_argument("--axis", choices=("stepsize", "sample-size", "mixing-degree"), default="stepsize")
    p.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--jobs", type=int, default=cfg.jobs)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("rate", help="stepsize bound, rate and Lyapunov margins")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--S", type=int, default=20)
    p.add_argument("--lam", type=float, default=0.0)
    p.add_argument("--eta", type=float, help="stepsize (default: the bound)")
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--out", help="CSV path")

    p = sub.add_parser("lambda", help="Monte-Carlo contraction factor of the configured mixing")
    _add_config_flags(p)
    p.add_argument("--samples", type=int, default=cfg.lambda_samples)
    p.add_argument("--out", help="CSV path")

    p = sub.add_parser("validate", help="check drawn mixing pairs against the graph")
    _add_config_flags(p)
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--beta", type=float, default=0.0)
    return parser


def dispatch(args) -> int:
    if args.command == "rate":
        return cmd_rate(args.mu, args.L, args.M, args.S, args.lam, args.eta, args.epsilon, args.out)
    config = load_config(args)
    if args.command == "run":
        return cmd_run(config, args.save_graph, args.save_dataset)
    if args.command == "sweep":
        return cmd_sweep(config, args.axis, _parse_values(args.values), args.jobs, args.out)
    if args.command == "lambda":
        return cmd_lambda(config, args.samples, args.out)
    return cmd_validate(config, args.rounds, args.beta)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=cfg.log_level.upper(), format=LOG_FORMAT)
    try:
        return dispatch(args)
    except ConfigError as e:
        print(f"[CONFIG] {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception("Command failed: %s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
