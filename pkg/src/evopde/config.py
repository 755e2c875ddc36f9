"""Flat ``key = value`` run configuration.

Lines starting with ``#`` are comments. Every key is optional and falls
back to the package default; unknown keys are rejected so typos fail loud.
The raw file text travels with every report for provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .regression import RegressionConfig
from .evolution import EvolutionConfig

_BOOL = {"true": True, "yes": True, "1": True,
         "false": False, "no": False, "0": False}

# key -> (type tag, destination). Destinations: evolution, regression, run
KNOWN_KEYS = {
    "population_size": ("int", "evolution"),
    "terms_in_individual": ("int", "evolution"),
    "epochs": ("int", "evolution"),
    "tournament_size": ("int", "evolution"),
    "crossover_fraction": ("float", "evolution"),
    "mutation_rate": ("float", "evolution"),
    "elite_count": ("int", "evolution"),
    "seed": ("int", "evolution"),
    "max_factors": ("int", "evolution"),
    "plateau_window": ("int", "evolution"),
    "plateau_threshold": ("float", "evolution"),
    "epsilon_fitness": ("float", "evolution"),
    "lambda": ("float", "regression"),
    "max_iterations": ("int", "regression"),
    "tolerance": ("float", "regression"),
    "zero_threshold": ("float", "regression"),
    "derivatives": ("str", "run"),
    "poly_window": ("int", "run"),
    "poly_degree": ("int", "run"),
    "noise_fraction": ("float", "run"),
    "noise_seed": ("int", "run"),
    "wave_speed": ("float", "run"),
    "viscosity": ("float", "run"),
    "ridge_alpha": ("float", "run"),
    "experiment": ("str", "run"),
    "repeats": ("int", "run"),
    "placement": ("str", "run"),
}


@dataclass
class RunConfig:
    """Parsed configuration plus the verbatim text it came from."""

    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    run: dict = field(default_factory=dict)
    text: str = ""


def _convert(key: str, kind: str, raw: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            return _BOOL[raw.lower()]
        return raw
    except (ValueError, KeyError):
        raise ValueError(f"config key {key!r}: cannot parse {raw!r} as {kind}")


def parse_config(text: str) -> RunConfig:
    """Parse flat key = value text into a RunConfig."""
    evo_kwargs: dict = {}
    reg_kwargs: dict = {}
    run: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected key = value, "
                             f"got {line!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        kind, dest = KNOWN_KEYS[key]
        value = _convert(key, kind, raw)
        if dest == "evolution":
            evo_kwargs[key] = value
        elif dest == "regression":
            reg_kwargs["lam" if key == "lambda" else key] = value
        else:
            run[key] = value
    evolution = EvolutionConfig(
        regression=RegressionConfig(**reg_kwargs), **evo_kwargs
    )
    return RunConfig(evolution=evolution, run=run, text=text)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def with_seed(cfg: RunConfig, seed: int | None) -> RunConfig:
    if seed is None:
        return cfg
    return replace(cfg, evolution=replace(cfg.evolution, seed=seed))


def default_config_text() -> str:
    """The full key set with package defaults, suitable as a template."""
    evo = EvolutionConfig()
    reg = RegressionConfig()
    lines = ["# discovery run configuration (defaults)"]
    skip = {"pool", "regression"}
    for f in fields(evo):
        if f.name in skip:
            continue
        lines.append(f"{f.name} = {getattr(evo, f.name)}")
    lines.append(f"lambda = {reg.lam}")
    lines.append(f"max_iterations = {reg.max_iterations}")
    lines.append(f"tolerance = {reg.tolerance}")
    lines.append(f"zero_threshold = {reg.zero_threshold}")
    lines.append("derivatives = fd")
    lines.append("poly_window = 15")
    lines.append("poly_degree = 4")
    return "\n".join(lines) + "\n"
