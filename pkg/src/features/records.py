from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.model.lpp import DEFAULT_MAX_CELLS
from src.utils.errors import ContractError
from src.utils.stats import ScalingFit, wilson_interval

_MODULE = "experiments"

CSV_COLUMNS = [
    "experiment",
    "rho",
    "N",
    "param_name",
    "param_value",
    "replicas",
    "hits",
    "p_hat",
    "ci_lo",
    "ci_hi",
    "master_seed",
    "far_multiplier",
    "wall_time_s",
]


class ExperimentKind(Enum):
    COAL_SLOW = ("CoalSlow", 1)
    COAL_FAST = ("CoalFast", 2)
    COAL_CORNER = ("CoalCorner", 3)
    EXIT_TAIL = ("ExitTail", 4)
    EXIT_SMALL = ("ExitSmall", 5)
    FLUCTUATION = ("Fluctuation", 6)
    VARIANCE_IDENTITY = ("VarianceIdentity", 7)
    RW_BOUND = ("RwBound", 8)
    RADON_NIKODYM = ("RadonNikodym", 9)
    DUALITY_CHECK = ("DualityCheck", 10)
    EXIT_SHIFTED = ("ExitShifted", 11)
    TILTED_EXIT = ("TiltedExit", 12)
    BUSEMANN_STABILITY = ("BusemannStability", 13)

    def __init__(self, label: str, code: int) -> None:
        self.label = label
        self.code = code

    @classmethod
    def from_label(cls, label: str) -> "ExperimentKind":
        for kind in cls:
            if kind.label.lower() == str(label).lower():
                return kind
        names = ", ".join(kind.label for kind in cls)
        raise ContractError("cli", f"unknown experiment {label!r}; expected one of {names}")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentKind
    rho: float
    N: int
    grid: tuple[float, ...]
    replicas: int
    master_seed: int
    far_multiplier: float = 4.0
    secondary_grid: tuple[float, ...] = ()
    alpha: float | None = None
    beta: float | None = None
    lam: float | None = None
    eta: float = 0.5
    workers: int = 1
    max_cells: int = DEFAULT_MAX_CELLS
    echo: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.replicas < 1:
            raise ContractError(_MODULE, f"replicas must be >= 1, got {self.replicas}")
        if not self.grid:
            raise ContractError(_MODULE, "parameter grid must be nonempty")

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment.label,
            "rho": self.rho,
            "N": self.N,
            "grid": list(self.grid),
            "secondary_grid": list(self.secondary_grid),
            "replicas": self.replicas,
            "master_seed": self.master_seed,
            "far_multiplier": self.far_multiplier,
            "alpha": self.alpha,
            "beta": self.beta,
            "lambda": self.lam,
            "eta": self.eta,
            "workers": self.workers,
            "max_cells": self.max_cells,
        }


@dataclass(frozen=True)
class EstimateRecord:
    experiment: str
    rho: float
    N: int
    param_name: str
    param_value: float
    replicas: int
    hits: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    master_seed: int
    far_multiplier: float
    wall_time_s: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.hits <= self.replicas:
            raise ContractError(_MODULE, f"hits {self.hits} outside [0, {self.replicas}]")
        if not self.ci_lo <= self.p_hat <= self.ci_hi:
            raise ContractError(_MODULE, f"interval [{self.ci_lo}, {self.ci_hi}] misses p_hat {self.p_hat}")

    def as_row(self) -> dict:
        return {name: getattr(self, name) for name in CSV_COLUMNS}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    tolerance: str = ""
    kind: str = "invariant"
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "tolerance": self.tolerance, "kind": self.kind, "detail": self.detail}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[EstimateRecord] = field(default_factory=list)
    fits: dict[str, ScalingFit] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def failed(self, strict: bool = False) -> list[Check]:
        return [c for c in self.checks if not c.passed and (strict or c.kind == "invariant")]

    def records_for(self, param_name: str) -> list[EstimateRecord]:
        return [r for r in self.records if r.param_name == param_name]


def build_records(
    config: ExperimentConfig,
    param_name: str,
    params,
    indicators: np.ndarray,
) -> list[EstimateRecord]:
    indicators = np.asarray(indicators, dtype=bool)
    return records_from_hits(config, param_name, params, indicators.sum(axis=0), indicators.shape[0])


def records_from_hits(config: ExperimentConfig, param_name: str, params, hit_counts, trials: int) -> list[EstimateRecord]:
    records = []
    for column, value in enumerate(params):
        hits = int(hit_counts[column])
        lo, hi = wilson_interval(hits, trials)
        records.append(
            EstimateRecord(
                experiment=config.experiment.label,
                rho=config.rho,
                N=config.N,
                param_name=param_name,
                param_value=float(value),
                replicas=trials,
                hits=hits,
                p_hat=hits / trials,
                ci_lo=lo,
                ci_hi=hi,
                master_seed=config.master_seed,
                far_multiplier=config.far_multiplier,
            )
        )
    return records


def monotone_check(name: str, records: list[EstimateRecord], increasing: bool) -> Check:
    # monotone in p_hat up to Wilson-interval overlap
    ordered = sorted(records, key=lambda r: r.param_value)
    ok = True
    for a, b in zip(ordered, ordered[1:]):
        if increasing:
            ok &= b.p_hat >= a.p_hat or b.ci_hi >= a.ci_lo
        else:
            ok &= b.p_hat <= a.p_hat or b.ci_lo <= a.ci_hi
    direction = "non-decreasing" if increasing else "non-increasing"
    return Check(name, bool(ok), f"{direction} up to CI overlap", "shape")


def rowwise_monotone_check(name: str, params, indicators: np.ndarray, increasing: bool) -> Check:
    order = np.argsort(np.asarray(params, dtype=np.float64), kind="stable")
    rows = np.asarray(indicators, dtype=np.int8)[:, order]
    steps = np.diff(rows, axis=1)
    ok = bool(np.all(steps >= 0)) if increasing else bool(np.all(steps <= 0))
    bad = int(np.sum(np.any(steps < 0, axis=1))) if increasing else int(np.sum(np.any(steps > 0, axis=1)))
    return Check(name, ok, "exact per realization", "invariant", f"{bad} violating replicas")
