from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path

import numpy as np

from src.features.export import export_xy
from src.features.records import ExperimentConfig, ExperimentResult
from src.model.busemann import dual_geodesic, sample_busemann, semi_infinite_geodesic
from src.model.lattice import DIAG, E1, E2, ORIGIN, GeodesicPath, LatticeRect
from src.model.stationary import characteristic_point, exit_time, sample_stationary, scaled_floor, stationary_geodesic
from src.utils.errors import ContractError
from src.utils.rng import make_stream

log = logging.getLogger(__name__)

_MODULE = "cli"


class Figure(Enum):
    ESTIMATES = "estimates"
    COALESCENCE = "coalescence"
    EXIT = "exit"
    DUAL = "dual"


def _xy(path: GeodesicPath) -> tuple[np.ndarray, np.ndarray]:
    coords = path.real_coords()
    return coords[:, 0], coords[:, 1]


def estimate_curves(result: ExperimentResult) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    curves = {}
    for name in sorted({r.param_name for r in result.records}):
        records = sorted(result.records_for(name), key=lambda r: r.param_value)
        curves[f"estimates_{name}"] = (np.array([r.param_value for r in records]), np.array([r.p_hat for r in records]))
    return curves


def realization_curves(figure: Figure, config: ExperimentConfig, replica: int = 0) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    if figure is Figure.ESTIMATES:
        raise ContractError(_MODULE, f"figure {figure.value} needs experiment estimates, not a realization")
    stream = make_stream(config.master_seed, replica, config.experiment.code)
    v = characteristic_point(config.rho, config.N).point
    if figure is Figure.EXIT:
        table = sample_stationary(config.rho, ORIGIN, v.x1, v.x2, stream, config.max_cells)
        log.info("exit geodesic to %s leaves the axes at Z = %s", v, exit_time(table, v).value)
        return {"exit_geodesic": _xy(stationary_geodesic(table, v))}
    window = LatticeRect(ORIGIN, v + DIAG)
    busemann = sample_busemann(config.rho, config.N, window, stream, config.far_multiplier, config.max_cells)
    if figure is Figure.COALESCENCE:
        s = min(scaled_floor(config.grid[0], config.N), v.x1, v.x2)
        return {
            "coalescence_e1": _xy(semi_infinite_geodesic(busemann, E1 * s)),
            "coalescence_e2": _xy(semi_infinite_geodesic(busemann, E2 * s)),
        }
    return {
        "dual_geodesic": _xy(dual_geodesic(busemann, busemann.dual_rect.hi)),
        "primal_geodesic": _xy(semi_infinite_geodesic(busemann, ORIGIN)),
    }


def write_curves(out_dir: Path, curves: dict[str, tuple[np.ndarray, np.ndarray]]) -> list[Path]:
    paths = []
    for name, (xs, ys) in curves.items():
        path = Path(out_dir) / f"{name}.dat"
        export_xy(path, xs, ys)
        paths.append(path)
    return paths
