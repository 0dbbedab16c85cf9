from dataclasses import dataclass, field, fields, replace
import os
from pathlib import Path

from dotenv import load_dotenv, dotenv_values

load_dotenv()


class ConfigError(ValueError):
    """Invalid experiment configuration. The message names the offending key."""


@dataclass
class Settings:
    # --- Logging ---
    log_level: str = os.getenv("PUSHPULL_LOG_LEVEL", "INFO")

    # --- Execution ---
    jobs: int = int(os.getenv("PUSHPULL_JOBS", "1"))
    output_dir: str = os.getenv("PUSHPULL_OUTPUT_DIR", "runs")

    # --- Theory ---
    lambda_samples: int = int(os.getenv("PUSHPULL_LAMBDA_SAMPLES", "2000"))  # Monte-Carlo draws behind eta=auto

# Global instance
cfg = Settings()


ALGORITHMS = ("ppds", "push_pull", "dgd", "saga")
FAMILIES = ("ridge", "logistic")
SAMPLING_VARIANTS = ("uniform", "bernoulli")
MIXING_VARIANTS = ("broadcast", "metropolis_active", "independent_gossip", "mean", "fixed_metropolis")
AUTO_ETA = "auto"


@dataclass
class GraphConfig:
    M: int = 100
    radius: float = 0.2


@dataclass
class ObjectiveConfig:
    family: str = "ridge"
    d: int = 10
    n_local: int = 100
    heterogeneity: float = 1.0
    noise: float = 0.1
    classes: int = 3
    dataset: str = ""


@dataclass
class SamplingConfig:
    variant: str = "uniform"
    S: int = 20
    p: tuple[float, ...] = (0.2,)


@dataclass
class MixingConfig:
    variant: str = "broadcast"
    targets: int = 1
    neighbors: int = 1
    comm_nodes: int = 5


@dataclass
class ExperimentConfig:
    algorithm: str = "ppds"
    seed: int = 0
    iterations: int = 5000
    record_every: int = 10
    eta: float | str = 1e-3
    output: str = "metrics.csv"
    graph: GraphConfig = field(default_factory=GraphConfig)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    mixing: MixingConfig = field(default_factory=MixingConfig)

    def node_probabilities(self) -> tuple[float, ...]:
        """Bernoulli inclusion probabilities expanded to one entry per node."""
        p = self.sampling.p
        return p * self.graph.M if len(p) == 1 else p


SECTIONS = ("graph", "objective", "sampling", "mixing")


def _coerce(key: str, raw: str | None, current):
    if raw is None:
        raise ConfigError(f"{key}: missing value")
    text = raw.strip()
    if key == "eta":
        if text.lower() == AUTO_ETA:
            return AUTO_ETA
        return _coerce_float(key, text)
    if isinstance(current, tuple):
        return tuple(_coerce_float(key, part) for part in text.split(",") if part.strip())
    if isinstance(current, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if isinstance(current, float):
        return _coerce_float(key, text)
    return text


def _coerce_float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _assign(config: ExperimentConfig, key: str, raw: str | None):
    parts = key.strip().split(".")
    if len(parts) == 1 and parts[0] not in SECTIONS and hasattr(config, parts[0]):
        target, name = config, parts[0]
    elif len(parts) == 2 and parts[0] in SECTIONS and hasattr(getattr(config, parts[0]), parts[1]):
        target, name = getattr(config, parts[0]), parts[1]
    else:
        raise ConfigError(f"unknown key '{key}'")
    setattr(target, name, _coerce(key, raw, getattr(target, name)))


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """Check every cross-field invariant, raising ConfigError on the first violation."""
    M = config.graph.M
    if config.algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm: unknown algorithm '{config.algorithm}' (expected one of {', '.join(ALGORITHMS)})")
    if config.iterations < 0:
        raise ConfigError("iterations must be >= 0")
    if config.record_every < 1:
        raise ConfigError("record_every must be >= 1")
    if config.eta != AUTO_ETA and not (isinstance(config.eta, float) and config.eta > 0):
        raise ConfigError("eta must be > 0 or 'auto'")

    if M < 1:
        raise ConfigError("graph.M must be >= 1")
    if config.graph.radius <= 0:
        raise ConfigError("graph.radius must be > 0")

    obj = config.objective
    if obj.family not in FAMILIES:
        raise ConfigError(f"objective.family: unknown family '{obj.family}'")
    if obj.d < 1 or obj.n_local < 1:
        raise ConfigError("objective.d and objective.n_local must be >= 1")
    if obj.heterogeneity < 0 or obj.noise < 0:
        raise ConfigError("objective.heterogeneity and objective.noise must be >= 0")
    if obj.classes < 2:
        raise ConfigError("objective.classes must be >= 2")

    smp = config.sampling
    if smp.variant not in SAMPLING_VARIANTS:
        raise ConfigError(f"sampling.variant: unknown variant '{smp.variant}'")
    if smp.S < 1:
        raise ConfigError("sampling.S must be >= 1")
    if smp.S > M:
        raise ConfigError("sampling.S exceeds graph.M")
    if len(smp.p) not in (1, M):
        raise ConfigError("sampling.p must hold one probability or one per node")
    if any(not 0.0 < p <= 1.0 for p in smp.p):
        raise ConfigError("sampling.p entries must lie in (0, 1]")

    mix = config.mixing
    if mix.variant not in MIXING_VARIANTS:
        raise ConfigError(f"mixing.variant: unknown variant '{mix.variant}'")
    if not 0 <= mix.targets <= M - 1:
        raise ConfigError("mixing.targets exceeds graph.M - 1")
    if not 0 <= mix.neighbors <= M - 1:
        raise ConfigError("mixing.neighbors exceeds graph.M - 1")
    if not 0 <= mix.comm_nodes <= M:
        raise ConfigError("mixing.comm_nodes exceeds graph.M")
    return config


def parse_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Load a dotted key=value file (if any), apply overrides and validate."""
    raw: dict[str, str | None] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw.update(dotenv_values(path))
    if overrides:
        raw.update(overrides)

    config = ExperimentConfig()
    for key, value in raw.items():
        _assign(config, key, value)
    return validate_config(config)


def parse_assignments(items: list[str]) -> dict[str, str]:
    """Turn repeated ``key=value`` flag values into an override dict."""
    overrides = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override must look like key=value, got {item!r}")
        overrides[key.strip()] = value
    return overrides


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: ExperimentConfig) -> str:
    lines = []
    for f in fields(config):
        if f.name in SECTIONS:
            continue
        lines.append(f"{f.name}={_format_value(getattr(config, f.name))}")
    for section in SECTIONS:
        sub = getattr(config, section)
        lines.append("")
        lines.append(f"# {section}")
        for f in fields(sub):
            lines.append(f"{section}.{f.name}={_format_value(getattr(sub, f.name))}")
    return "\n".join(lines) + "\n"


def with_override(config: ExperimentConfig, key: str, value) -> ExperimentConfig:
    """Copy of ``config`` with one dotted key replaced and the result re-validated."""
    parts = key.split(".")
    if len(parts) == 1:
        updated = replace(config, **{key: value})
    else:
        section, name = parts
        updated = replace(config, **{section: replace(getattr(config, section), **{name: value})})
    return validate_config(updated)
