from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from src.model import kernels
from src.model.lattice import E1, E2, GeodesicPath, LatticePoint, LatticeRect, Step
from src.utils.errors import CapacityError, ContractError
from src.utils.rng import RngStream

log = logging.getLogger(__name__)

_MODULE = "lpp-engine"

DEFAULT_MAX_CELLS = 60_000_000
BRUTE_FORCE_MAX_STEPS = 22
EXACT_RTOL = 1e-9


class TableOrientation(Enum):
    FORWARD_FROM_BASE = "forward"
    BACKWARD_TO_TARGET = "backward"


class IncrementDirection(Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


def _check_capacity(rect: LatticeRect, max_cells: int) -> None:
    if rect.cells > max_cells:
        raise CapacityError(_MODULE, f"{rect.shape[0]}x{rect.shape[1]} = {rect.cells} cells exceeds max_cells={max_cells}")


@dataclass(frozen=True)
class WeightField:
    rect: LatticeRect
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != self.rect.shape:
            raise ContractError(_MODULE, f"weights shape {self.values.shape} does not match rect shape {self.rect.shape}")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ContractError(_MODULE, "weights must be finite and non-negative")
        self.values.setflags(write=False)

    @classmethod
    def from_array(cls, values, lo: LatticePoint = LatticePoint(0, 0)) -> "WeightField":
        array = np.ascontiguousarray(values, dtype=np.float64)
        hi = LatticePoint(lo.x1 + array.shape[0] - 1, lo.x2 + array.shape[1] - 1)
        return cls(LatticeRect(lo, hi), array)

    def value(self, point: LatticePoint) -> float:
        if not self.rect.contains(point):
            raise ContractError(_MODULE, f"{point} outside weight field {self.rect}")
        return float(self.values[self.rect.index(point)])

    def restrict(self, rect: LatticeRect) -> "WeightField":
        if not self.rect.contains_rect(rect):
            raise ContractError(_MODULE, f"{rect} is not inside {self.rect}")
        i0, j0 = self.rect.index(rect.lo)
        i1, j1 = self.rect.index(rect.hi)
        return WeightField(rect, np.ascontiguousarray(self.values[i0 : i1 + 1, j0 : j1 + 1]))

    def reflected(self) -> np.ndarray:
        return np.ascontiguousarray(self.values[::-1, ::-1])


@dataclass(frozen=True)
class PassageTable:
    rect: LatticeRect
    anchor: LatticePoint
    orientation: TableOrientation
    values: np.ndarray
    weights: np.ndarray
    rho: float | None = None

    def __post_init__(self) -> None:
        self.values.setflags(write=False)

    def value(self, point: LatticePoint) -> float:
        if not self.rect.contains(point):
            raise ContractError(_MODULE, f"{point} outside table {self.rect}")
        return float(self.values[self.rect.index(point)])

    def require(self, orientation: TableOrientation) -> None:
        if self.orientation is not orientation:
            raise ContractError(_MODULE, f"expected a {orientation.value} table, got {self.orientation.value}")


@dataclass(frozen=True)
class IncrementField:
    rect: LatticeRect
    direction: IncrementDirection
    values: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.values < 0):
            raise ContractError(_MODULE, "increments must be non-negative")

    def value(self, point: LatticePoint) -> float:
        if not self.rect.contains(point):
            raise ContractError(_MODULE, f"{point} outside increment field {self.rect}")
        return float(self.values[self.rect.index(point)])


def generate_bulk(rect: LatticeRect, stream: RngStream, max_cells: int = DEFAULT_MAX_CELLS) -> WeightField:
    _check_capacity(rect, max_cells)
    values = stream.exponential(1.0, size=rect.shape)
    log.debug("generated %sx%s bulk field for %r", rect.shape[0], rect.shape[1], stream)
    return WeightField(rect, np.ascontiguousarray(values))


def lpp_forward(weights: WeightField, base: LatticePoint) -> PassageTable:
    if base != weights.rect.lo:
        raise ContractError(_MODULE, f"base {base} must equal the field corner {weights.rect.lo}")
    values = kernels.forward_sweep(weights.values)
    return PassageTable(weights.rect, base, TableOrientation.FORWARD_FROM_BASE, values, weights.values)


def lpp_backward(weights: WeightField, target: LatticePoint) -> PassageTable:
    if target != weights.rect.hi:
        raise ContractError(_MODULE, f"target {target} must equal the field corner {weights.rect.hi}")
    values = np.ascontiguousarray(kernels.forward_sweep(weights.reflected())[::-1, ::-1])
    return PassageTable(weights.rect, target, TableOrientation.BACKWARD_TO_TARGET, values, weights.values)


def lpp_value(weights: WeightField) -> float:
    return float(kernels.forward_last_row(weights.values)[-1])


def _path_from_indices(rect: LatticeRect, coords: np.ndarray, is_dual: bool = False) -> GeodesicPath:
    shifted = coords + np.array([rect.lo.x1, rect.lo.x2], dtype=np.int64)
    return GeodesicPath.from_array(shifted, is_dual=is_dual)


def trace_geodesic(table: PassageTable, start: LatticePoint) -> GeodesicPath:
    table.require(TableOrientation.BACKWARD_TO_TARGET)
    if not table.rect.contains(start):
        raise ContractError(_MODULE, f"start {start} outside table {table.rect}")
    i, j = table.rect.index(start)
    n1, n2 = table.rect.shape
    coords = kernels.trace_successor(table.values, i, j, n1 - 1, n2 - 1)
    return _path_from_indices(table.rect, coords)


def backtrack_geodesic(table: PassageTable, endpoint: LatticePoint) -> GeodesicPath:
    table.require(TableOrientation.FORWARD_FROM_BASE)
    if not table.rect.contains(endpoint):
        raise ContractError(_MODULE, f"endpoint {endpoint} outside table {table.rect}")
    i, j = table.rect.index(endpoint)
    coords = kernels.backtrack_predecessor(table.values, i, j)[::-1]
    return _path_from_indices(table.rect, np.ascontiguousarray(coords))


def path_weight(weights: WeightField, path: GeodesicPath) -> float:
    return float(sum(weights.value(point) for point in path.points()))


def brute_force_lpp(weights: WeightField, x: LatticePoint, y: LatticePoint) -> tuple[float, GeodesicPath]:
    if not x.le(y):
        raise ContractError(_MODULE, f"{x} is not <= {y}")
    m, n = y.x1 - x.x1, y.x2 - x.x2
    if m + n > BRUTE_FORCE_MAX_STEPS:
        raise CapacityError(_MODULE, f"|y - x| = {m + n} exceeds brute-force cap {BRUTE_FORCE_MAX_STEPS}")
    best_value = -np.inf
    best_steps: tuple[Step, ...] = ()
    for positions in combinations(range(m + n), m):
        chosen = set(positions)
        steps = tuple(Step.E1 if k in chosen else Step.E2 for k in range(m + n))
        path = GeodesicPath(x, steps)
        value = path_weight(weights, path)
        if value > best_value:
            best_value, best_steps = value, steps
    return best_value, GeodesicPath(x, best_steps)


def increments(table: PassageTable, direction: IncrementDirection) -> IncrementField:
    table.require(TableOrientation.FORWARD_FROM_BASE)
    if direction is IncrementDirection.HORIZONTAL:
        if table.rect.shape[0] < 2:
            raise ContractError(_MODULE, "table too narrow for horizontal increments")
        values = table.values[1:, :] - table.values[:-1, :]
        rect = LatticeRect(table.rect.lo + E1, table.rect.hi)
    else:
        if table.rect.shape[1] < 2:
            raise ContractError(_MODULE, "table too short for vertical increments")
        values = table.values[:, 1:] - table.values[:, :-1]
        rect = LatticeRect(table.rect.lo + E2, table.rect.hi)
    return IncrementField(rect, direction, np.ascontiguousarray(values))


def within_tolerance_le(a, b, scale: float) -> bool:
    return bool(np.all(a <= b + EXACT_RTOL * max(scale, 1.0)))


def check_increment_monotonicity(weights: WeightField, x: LatticePoint) -> bool:
    lo, hi = weights.rect.lo, weights.rect.hi
    if not (lo + E1 + E2).le(x) or not x.le(hi):
        raise ContractError(_MODULE, f"{x} needs both predecessors inside {weights.rect}")
    if x.x1 == hi.x1 and x.x2 == hi.x2:
        return True
    window = LatticeRect(x, hi)

    def window_values(base: LatticePoint) -> np.ndarray:
        table = lpp_forward(weights.restrict(LatticeRect(base, hi)), base)
        i0, j0 = table.rect.index(x)
        return table.values[i0:, j0:]

    g_x = window_values(x)
    g_left = window_values(x - E1)
    g_down = window_values(x - E2)
    scale = float(np.max(np.abs(g_left)))
    ok = True
    if window.shape[0] > 1:
        def horizontal(g: np.ndarray) -> np.ndarray:
            return g[1:, :] - g[:-1, :]

        ok &= within_tolerance_le(horizontal(g_left), horizontal(g_x), scale)
        ok &= within_tolerance_le(horizontal(g_x), horizontal(g_down), scale)
    if window.shape[1] > 1:
        def vertical(g: np.ndarray) -> np.ndarray:
            return g[:, 1:] - g[:, :-1]

        ok &= within_tolerance_le(vertical(g_down), vertical(g_x), scale)
        ok &= within_tolerance_le(vertical(g_x), vertical(g_left), scale)
    return bool(ok)


def paths_cross(primal: GeodesicPath, dual: GeodesicPath) -> bool:
    if primal.is_dual or not dual.is_dual:
        raise ContractError(_MODULE, "paths_cross expects a primal path and a dual path")
    dual_edges = set()
    corners = dual.points()
    for step, corner in zip(dual.steps, corners):
        dual_edges.add((corner, step))
    points = primal.points()
    for step, point in zip(primal.steps, points):
        corner = point + E1 + E2
        crossing = Step.MINUS_E2 if step is Step.E1 else Step.MINUS_E1
        if (corner, crossing) in dual_edges:
            return True
    return False
