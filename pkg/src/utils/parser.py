from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

from src.features.experiments import check_hypotheses
from src.features.records import ExperimentConfig, ExperimentKind
from src.model.lpp import DEFAULT_MAX_CELLS
from src.utils.errors import ContractError, HypothesisError

_MODULE = "cli"

DEFAULT_GRIDS = {
    ExperimentKind.COAL_SLOW: (0.05, 0.1, 0.2, 0.4),
    ExperimentKind.COAL_FAST: (0.8, 1.2, 1.6),
    ExperimentKind.COAL_CORNER: (0.05, 0.1, 0.2, 0.4),
    ExperimentKind.EXIT_TAIL: (0.5, 1.0, 1.5, 2.0),
    ExperimentKind.EXIT_SHIFTED: (0.5, 1.0, 2.0),
    ExperimentKind.EXIT_SMALL: (0.05, 0.1, 0.2, 0.4),
    ExperimentKind.FLUCTUATION: (0.05, 0.1, 0.2, 0.4),
    ExperimentKind.VARIANCE_IDENTITY: (1.0,),
    ExperimentKind.RW_BOUND: (1, 10, 100),
    ExperimentKind.RADON_NIKODYM: (1,),
    ExperimentKind.DUALITY_CHECK: (0.1, 2.0),
    ExperimentKind.TILTED_EXIT: (1.0, 2.0, 4.0),
    ExperimentKind.BUSEMANN_STABILITY: (4.0,),
}

BUILTIN_DEFAULTS = {
    "rho": 0.5,
    "N": 1000,
    "replicas": 1000,
    "seed": 0,
    "far_multiplier": 4.0,
    "eta": 0.5,
    "workers": 1,
    "max_cells": DEFAULT_MAX_CELLS,
}

# accepted spellings in config files and flag dictionaries
_ALIASES = {
    "master_seed": "seed",
    "lam": "lambda",
    "delta_grid": "grid",
    "r_grid": "secondary_grid",
    "n_grid": "grid",
    "b_grid": "grid",
    "s_grid": "grid",
}


def parse_grid(value) -> tuple[float, ...]:
    if value is None:
        return ()
    if isinstance(value, (int, float)):
        return (float(value),)
    if isinstance(value, str):
        parts = [part.strip() for part in value.split(",")]
        try:
            return tuple(float(part) for part in parts if part)
        except ValueError:
            raise ContractError(_MODULE, f"grid {value!r} is not a comma-separated list of numbers") from None
    try:
        return tuple(float(item) for item in value)
    except (TypeError, ValueError):
        raise ContractError(_MODULE, f"grid {value!r} is not a list of numbers") from None


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ContractError(_MODULE, f"config file {path} does not exist")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ContractError(_MODULE, f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ContractError(_MODULE, f"config file {path} must hold a JSON object")
    return data


def _normalise(data: dict | None) -> dict:
    out = {}
    for key, value in (data or {}).items():
        if value is None:
            continue
        out[_ALIASES.get(key, key)] = value
    return out


def _number(merged: dict, key: str, kind=float):
    value = merged.get(key)
    if value is None:
        return None
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ContractError(_MODULE, f"{key} must be a number, got {value!r}") from None


def parse_config(path: str | Path | None = None, overrides: dict | None = None, defaults: dict | None = None) -> ExperimentConfig:
    """Flags override the config file, which overrides the supplied defaults and then the built-in ones."""
    file_data = load_config_file(path) if path is not None else {}
    echo = dict(file_data)
    merged = {**BUILTIN_DEFAULTS, **_normalise(defaults), **_normalise(file_data), **_normalise(overrides)}
    if "experiment" not in merged:
        raise ContractError(_MODULE, "no experiment named; pass --experiment or set it in the config file")
    kind = ExperimentKind.from_label(merged["experiment"])
    grid = parse_grid(merged.get("grid")) or DEFAULT_GRIDS[kind]
    secondary = parse_grid(merged.get("secondary_grid"))
    if kind is ExperimentKind.COAL_CORNER and "secondary_grid" not in merged:
        secondary = DEFAULT_GRIDS[ExperimentKind.COAL_FAST]
    rho = _number(merged, "rho")
    N = _number(merged, "N", int)
    if kind is ExperimentKind.RW_BOUND:
        rho, N = float("nan"), 0
    elif kind is ExperimentKind.RADON_NIKODYM:
        N = 0
    seed = _number(merged, "seed", int)
    if seed is None or not 0 <= seed < 2**64:
        raise ContractError(_MODULE, f"seed must be a 64-bit unsigned integer, got {merged.get('seed')!r}")
    config = ExperimentConfig(
        experiment=kind,
        rho=rho,
        N=N,
        grid=grid,
        replicas=_number(merged, "replicas", int),
        master_seed=seed,
        far_multiplier=_number(merged, "far_multiplier"),
        secondary_grid=secondary,
        alpha=_number(merged, "alpha"),
        beta=_number(merged, "beta"),
        lam=_number(merged, "lambda"),
        eta=_number(merged, "eta"),
        workers=_number(merged, "workers", int),
        max_cells=_number(merged, "max_cells", int),
        echo=echo,
    )
    if config.workers < 1:
        raise ContractError(_MODULE, f"workers must be >= 1, got {config.workers}")
    check_hypotheses(config)
    if kind is ExperimentKind.RADON_NIKODYM and not 2 * config.lam > config.rho:
        raise HypothesisError(_MODULE, "2*lambda > rho", f"lambda = {config.lam}, rho = {config.rho}; the second moment diverges")
    return config


def parse_sweep(path: str | Path, overrides: dict | None = None, defaults: dict | None = None) -> list[ExperimentConfig]:
    """A sweep file holds shared keys plus a "runs" list; each run entry overrides the shared keys."""
    data = load_config_file(path)
    runs = data.pop("runs", None)
    if not isinstance(runs, list) or not runs:
        raise ContractError(_MODULE, f"sweep file {path} needs a nonempty \"runs\" list")
    configs = []
    for entry in runs:
        if not isinstance(entry, dict):
            raise ContractError(_MODULE, f"sweep entries must be JSON objects, got {entry!r}")
        merged = {**data, **entry}
        config = parse_config(None, {**merged, **_normalise(overrides)}, defaults)
        configs.append(replace(config, echo=dict(merged)))
    return configs
