from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import floor

import numpy as np

from src.model import kernels
from src.model.lattice import DIAG, E1, E2, GeodesicPath, LatticePoint, LatticeRect
from src.model.lpp import (
    DEFAULT_MAX_CELLS,
    PassageTable,
    TableOrientation,
    WeightField,
    backtrack_geodesic,
    generate_bulk,
)
from src.utils.errors import ContractError
from src.utils.rng import RngStream

log = logging.getLogger(__name__)

_MODULE = "stationary"

BULK_TAG = 0
HORIZONTAL_TAG = 1
VERTICAL_TAG = 2


class BoundarySide(Enum):
    SOUTH_WEST = "sw"
    NORTH_EAST = "ne"


def check_rho(rho: float, module: str = _MODULE) -> None:
    if not 0.0 < rho < 1.0:
        raise ContractError(module, f"rho in (0,1) violated: rho = {rho}")


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary weights of a stationary process.

    I[k-1] sits k steps along e1 from the base (SW) or along -e1 from the corner
    (NE); J likewise along e2 or -e2.
    """

    rho: float
    base: LatticePoint
    side: BoundarySide
    I: np.ndarray
    J: np.ndarray

    def __post_init__(self) -> None:
        check_rho(self.rho)
        if np.any(self.I < 0) or np.any(self.J < 0):
            raise ContractError(_MODULE, "boundary weights must be non-negative")

    @property
    def extents(self) -> tuple[int, int]:
        return len(self.I), len(self.J)


@dataclass(frozen=True)
class ExitIndex:
    value: int

    def __post_init__(self) -> None:
        if self.value == 0:
            raise ContractError(_MODULE, "exit index is never 0")

    @property
    def on_horizontal_axis(self) -> bool:
        return self.value > 0

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True)
class CharacteristicTarget:
    rho: float
    N: int
    point: LatticePoint


def _exact(value: float) -> Fraction:
    # decimal literal semantics: 0.3 means 3/10
    return Fraction(repr(float(value)))


def characteristic_point(rho: float, N: int) -> CharacteristicTarget:
    check_rho(rho)
    if N < 1:
        raise ContractError(_MODULE, f"N must be >= 1, got {N}")
    r = _exact(rho)
    point = LatticePoint(floor(N * (1 - r) ** 2), floor(N * r**2))
    return CharacteristicTarget(rho, N, point)


def scaled_floor(value: float, N: int, exponent: Fraction = Fraction(2, 3)) -> int:
    # floor(value * N^exponent), stable for integer powers such as N = 1000
    scaled = float(value) * float(N) ** float(exponent)
    nearest = round(scaled)
    if abs(scaled - nearest) < 1e-9 * max(1.0, abs(scaled)):
        return int(nearest)
    return floor(scaled)


def scaled_ceil(value: float, N: int, exponent: Fraction = Fraction(2, 3)) -> int:
    scaled = float(value) * float(N) ** float(exponent)
    nearest = round(scaled)
    if abs(scaled - nearest) < 1e-9 * max(1.0, abs(scaled)):
        return int(nearest)
    return -floor(-scaled)


def _make_boundary(rho: float, base: LatticePoint, side: BoundarySide, extent_x: int, extent_y: int, stream: RngStream) -> BoundarySpec:
    check_rho(rho)
    if extent_x < 1 or extent_y < 1:
        raise ContractError(_MODULE, f"boundary extents must be >= 1, got ({extent_x}, {extent_y})")
    horizontal = stream.child(HORIZONTAL_TAG).exponential(1.0 - rho, size=extent_x)
    vertical = stream.child(VERTICAL_TAG).exponential(rho, size=extent_y)
    return BoundarySpec(rho, base, side, horizontal, vertical)


def make_sw_boundary(rho: float, base: LatticePoint, extent_x: int, extent_y: int, stream: RngStream) -> BoundarySpec:
    return _make_boundary(rho, base, BoundarySide.SOUTH_WEST, extent_x, extent_y, stream)


def make_ne_boundary(rho: float, corner: LatticePoint, extent_x: int, extent_y: int, stream: RngStream) -> BoundarySpec:
    return _make_boundary(rho, corner, BoundarySide.NORTH_EAST, extent_x, extent_y, stream)


def _augmented(boundary: BoundarySpec, bulk: np.ndarray) -> np.ndarray:
    m, n = bulk.shape
    if len(boundary.I) < m or len(boundary.J) < n:
        raise ContractError(_MODULE, f"boundary extents {boundary.extents} do not cover a {m}x{n} window")
    field = np.empty((m + 1, n + 1), dtype=np.float64)
    field[0, 0] = 0.0
    field[1:, 0] = boundary.I[:m]
    field[0, 1:] = boundary.J[:n]
    field[1:, 1:] = bulk
    return field


def stationary_forward(boundary: BoundarySpec, bulk: WeightField) -> PassageTable:
    if boundary.side is not BoundarySide.SOUTH_WEST:
        raise ContractError(_MODULE, "stationary_forward needs a south-west boundary")
    if bulk.rect.lo != boundary.base + DIAG:
        raise ContractError(_MODULE, f"bulk must start at base + (1,1) = {boundary.base + DIAG}, got {bulk.rect.lo}")
    field = _augmented(boundary, bulk.values)
    values = kernels.forward_sweep(field)
    rect = LatticeRect(boundary.base, bulk.rect.hi)
    return PassageTable(rect, boundary.base, TableOrientation.FORWARD_FROM_BASE, values, field, rho=boundary.rho)


def sample_stationary(rho: float, base: LatticePoint, extent_x: int, extent_y: int, stream: RngStream, max_cells: int = DEFAULT_MAX_CELLS) -> PassageTable:
    bulk = generate_bulk(LatticeRect(base + DIAG, base + LatticePoint(extent_x, extent_y)), stream.child(BULK_TAG), max_cells)
    boundary = make_sw_boundary(rho, base, extent_x, extent_y, stream)
    return stationary_forward(boundary, bulk)


def _require_stationary(table: PassageTable) -> None:
    if table.rho is None or table.orientation is not TableOrientation.FORWARD_FROM_BASE:
        raise ContractError(_MODULE, "expected a south-west stationary table")


def exit_time(table: PassageTable, endpoint: LatticePoint) -> ExitIndex:
    _require_stationary(table)
    if not table.rect.contains(endpoint):
        raise ContractError(_MODULE, f"endpoint {endpoint} outside {table.rect}")
    if endpoint == table.anchor:
        raise ContractError(_MODULE, "the base has no exit index")
    i, j = table.rect.index(endpoint)
    return ExitIndex(int(kernels.exit_from(table.values, i, j)))


@dataclass(frozen=True)
class ExitLabelMap:
    rect: LatticeRect
    labels: np.ndarray

    def __getitem__(self, point: LatticePoint) -> ExitIndex:
        if not self.rect.contains(point) or point == self.rect.lo:
            raise ContractError(_MODULE, f"no exit label at {point}")
        return ExitIndex(int(self.labels[self.rect.index(point)]))

    def items(self):
        for point in self.rect:
            if point != self.rect.lo:
                yield point, self[point]


def exit_labels_all(table: PassageTable) -> ExitLabelMap:
    _require_stationary(table)
    return ExitLabelMap(table.rect, kernels.exit_labels(table.values))


def stationary_geodesic(table: PassageTable, endpoint: LatticePoint) -> GeodesicPath:
    _require_stationary(table)
    return backtrack_geodesic(table, endpoint)


@dataclass(frozen=True)
class BoundaryScan:
    points: np.ndarray
    labels: np.ndarray


def boundary_exit_scan(table: PassageTable, corner: LatticePoint) -> BoundaryScan:
    """Exit labels on the east then north edge of [base, corner], counter-clockwise."""
    _require_stationary(table)
    base = table.anchor
    if not table.rect.contains(corner) or not (base + DIAG).le(corner):
        raise ContractError(_MODULE, f"corner {corner} must lie in {table.rect} strictly above the base")
    ci, cj = table.rect.index(corner)
    labels = kernels.exit_labels(np.ascontiguousarray(table.values[: ci + 1, : cj + 1]))
    east = [(ci, j) for j in range(cj + 1)]
    north = [(i, cj) for i in range(ci - 1, -1, -1)]
    indices = np.array(east + north, dtype=np.int64)
    points = indices + np.array([base.x1, base.x2], dtype=np.int64)
    return BoundaryScan(points, labels[indices[:, 0], indices[:, 1]])


def make_ne_process(rho: float, corner: LatticePoint, bulk: WeightField, boundary: BoundarySpec) -> PassageTable:
    if boundary.side is not BoundarySide.NORTH_EAST or boundary.base != corner:
        raise ContractError(_MODULE, f"expected a north-east boundary at {corner}")
    if boundary.rho != rho:
        raise ContractError(_MODULE, f"boundary rho {boundary.rho} differs from {rho}")
    if bulk.rect.hi != corner - DIAG:
        raise ContractError(_MODULE, f"bulk must end at corner - (1,1) = {corner - DIAG}, got {bulk.rect.hi}")
    field = _augmented(boundary, bulk.reflected())
    values = np.ascontiguousarray(kernels.forward_sweep(field)[::-1, ::-1])
    rect = LatticeRect(bulk.rect.lo, corner)
    return PassageTable(rect, corner, TableOrientation.BACKWARD_TO_TARGET, values, np.ascontiguousarray(field[::-1, ::-1]), rho=rho)


def nested_boundary_from_increments(outer: PassageTable, z: LatticePoint) -> BoundarySpec:
    _require_stationary(outer)
    hi = outer.rect.hi
    if not outer.rect.contains(z):
        raise ContractError(_MODULE, f"{z} outside {outer.rect}")
    if z.x1 == hi.x1 or z.x2 == hi.x2:
        raise ContractError(_MODULE, f"{z} lies on the outer north/east edge; its quadrant is empty")
    if z == outer.anchor:
        return BoundarySpec(outer.rho, z, BoundarySide.SOUTH_WEST, outer.weights[1:, 0].copy(), outer.weights[0, 1:].copy())
    i, j = outer.rect.index(z)
    row = outer.values[i:, j]
    column = outer.values[i, j:]
    return BoundarySpec(outer.rho, z, BoundarySide.SOUTH_WEST, np.diff(row), np.diff(column))


def nested_process(outer: PassageTable, z: LatticePoint) -> PassageTable:
    boundary = nested_boundary_from_increments(outer, z)
    i, j = outer.rect.index(z)
    bulk = WeightField(LatticeRect(z + DIAG, outer.rect.hi), np.ascontiguousarray(outer.weights[i + 1 :, j + 1 :]))
    return stationary_forward(boundary, bulk)


def check_nested_geodesic_agreement(outer: PassageTable, z: LatticePoint, y: LatticePoint) -> bool:
    if not outer.anchor.le(z) or not z.lt(y):
        raise ContractError(_MODULE, f"need base <= z < y, got z={z}, y={y}")
    if z == outer.anchor:
        return True
    inner = nested_process(outer, z)
    outer_points = [p for p in stationary_geodesic(outer, y).points() if z.lt(p)]
    inner_points = [p for p in stationary_geodesic(inner, y).points() if z.lt(p)]
    return outer_points == inner_points


def check_exit_equivalence(outer: PassageTable, m: int, n: int, z: LatticePoint, origin: LatticePoint | None = None) -> bool:
    """(Z^{a->z} <= m) iff (Z^{b->z} < -n) for nested bases a = origin, b = origin + (m, -n)."""
    if m <= 0 or n <= 0:
        raise ContractError(_MODULE, f"m, n must be > 0, got ({m}, {n})")
    a = origin if origin is not None else outer.anchor + E2 * n
    b = a + LatticePoint(m, -n)
    if not outer.anchor.le(b) or not outer.anchor.le(a):
        raise ContractError(_MODULE, f"nested bases {a}, {b} must dominate the outer base {outer.anchor}")
    if not a.lt(z) or not b.lt(z):
        raise ContractError(_MODULE, f"{z} must lie in both quadrants of {a} and {b}")
    exit_a = exit_time(nested_process(outer, a), z).value
    exit_b = exit_time(nested_process(outer, b), z).value
    return (exit_a <= m) == (exit_b < -n)


@dataclass(frozen=True)
class DownRightIncrements:
    values: np.ndarray
    horizontal: np.ndarray

    @property
    def horizontal_values(self) -> np.ndarray:
        return self.values[self.horizontal]

    @property
    def vertical_values(self) -> np.ndarray:
        return self.values[~self.horizontal]


def staircase_path(rect: LatticeRect) -> list[LatticePoint]:
    """Down-right staircase from the north-west to the south-east corner of rect."""
    current = LatticePoint(rect.lo.x1, rect.hi.x2)
    end = LatticePoint(rect.hi.x1, rect.lo.x2)
    points = [current]
    horizontal_next = True
    while current != end:
        can_right = current.x1 < end.x1
        can_down = current.x2 > end.x2
        if can_right and (horizontal_next or not can_down):
            current = current + E1
        else:
            current = current - E2
        horizontal_next = not horizontal_next
        points.append(current)
    return points


def down_right_increment_sample(table: PassageTable, path: list[LatticePoint]) -> DownRightIncrements:
    _require_stationary(table)
    base = table.anchor
    values = []
    horizontal = []
    for p, q in zip(path, path[1:]):
        if not table.rect.contains(p) or not table.rect.contains(q):
            raise ContractError(_MODULE, f"down-right path leaves {table.rect} at {p} -> {q}")
        step = q - p
        if step == E1:
            if p.x2 == base.x2:
                values.append(table.weights[table.rect.index(q)])
            else:
                values.append(table.value(q) - table.value(p))
            horizontal.append(True)
        elif step == LatticePoint(0, -1):
            if p.x1 == base.x1:
                values.append(table.weights[table.rect.index(p)])
            else:
                values.append(table.value(p) - table.value(q))
            horizontal.append(False)
        else:
            raise ContractError(_MODULE, f"down-right paths step e1 or -e2, got {step}")
    return DownRightIncrements(np.asarray(values, dtype=np.float64), np.asarray(horizontal, dtype=bool))


def stationary_window(rho: float, N: int, margin: int = 1) -> LatticeRect:
    target = characteristic_point(rho, N).point
    return LatticeRect(LatticePoint(0, 0), target + DIAG * margin)

