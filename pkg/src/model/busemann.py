from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.model import kernels
from src.model.lattice import DIAG, E1, E2, ORIGIN, GeodesicPath, LatticePoint, LatticeRect, Step
from src.model.lpp import (
    DEFAULT_MAX_CELLS,
    EXACT_RTOL,
    PassageTable,
    WeightField,
    _path_from_indices,
    generate_bulk,
    lpp_backward,
)
from src.model.stationary import (
    BoundarySide,
    BoundarySpec,
    characteristic_point,
    check_rho,
    make_ne_process,
    stationary_forward,
    stationary_geodesic,
)
from src.utils.errors import ContractError
from src.utils.rng import RngStream

log = logging.getLogger(__name__)

_MODULE = "busemann-dual"

DEFAULT_FAR_MULTIPLIER = 4.0


def far_target(rho: float, N: int, far_multiplier: float = DEFAULT_FAR_MULTIPLIER) -> LatticePoint:
    if far_multiplier < 1:
        raise ContractError(_MODULE, f"far_multiplier must be >= 1, got {far_multiplier}")
    return characteristic_point(rho, max(1, int(round(far_multiplier * N)))).point


@dataclass(frozen=True)
class BusemannWindow:
    """B(x, y) = G(x, u) - G(y, u) from one backward table to the far target u."""

    rho: float
    window: LatticeRect
    far_target: LatticePoint
    table: PassageTable
    horizontal: np.ndarray
    vertical: np.ndarray

    def g(self, point: LatticePoint) -> float:
        return self.table.value(point)

    def value(self, x: LatticePoint, y: LatticePoint) -> float:
        return self.g(x) - self.g(y)

    def horizontal_edge(self, x: LatticePoint) -> float:
        return float(self.horizontal[self.window.index(x)])

    def vertical_edge(self, x: LatticePoint) -> float:
        return float(self.vertical[self.window.index(x)])

    def table_index(self, point: LatticePoint) -> tuple[int, int]:
        return self.table.rect.index(point)

    @property
    def dual_rect(self) -> LatticeRect:
        return LatticeRect(self.window.lo + DIAG, self.window.hi + DIAG)


@dataclass(frozen=True)
class DualField:
    rect: LatticeRect
    values: np.ndarray

    def value(self, corner: LatticePoint) -> float:
        if not self.rect.contains(corner):
            raise ContractError(_MODULE, f"dual corner {corner} outside {self.rect}")
        return float(self.values[self.rect.index(corner)])


@dataclass(frozen=True)
class CoalescenceResult:
    point: LatticePoint | None
    inside_rect: bool

    @property
    def within_window(self) -> bool:
        return self.point is not None


def busemann_window(bulk: WeightField, rho: float, window: LatticeRect) -> BusemannWindow:
    check_rho(rho, _MODULE)
    target = bulk.rect.hi
    if not bulk.rect.lo.le(window.lo) or not window.hi.lt(target):
        raise ContractError(_MODULE, f"window {window} must sit strictly inside {bulk.rect} away from the far target")
    table = lpp_backward(bulk, target)
    i0, j0 = table.rect.index(window.lo)
    i1, j1 = table.rect.index(window.hi)
    g = table.values
    horizontal = g[i0 : i1 + 1, j0 : j1 + 1] - g[i0 + 1 : i1 + 2, j0 : j1 + 1]
    vertical = g[i0 : i1 + 1, j0 : j1 + 1] - g[i0 : i1 + 1, j0 + 1 : j1 + 2]
    log.debug("busemann window %s against far target %s", window, target)
    return BusemannWindow(rho, window, target, table, np.ascontiguousarray(horizontal), np.ascontiguousarray(vertical))


def sample_busemann(
    rho: float,
    N: int,
    window: LatticeRect,
    stream: RngStream,
    far_multiplier: float = DEFAULT_FAR_MULTIPLIER,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> BusemannWindow:
    target = far_target(rho, N, far_multiplier)
    bulk = generate_bulk(LatticeRect(ORIGIN, target), stream, max_cells)
    return busemann_window(bulk, rho, window)


def semi_infinite_geodesic(busemann: BusemannWindow, start: LatticePoint) -> GeodesicPath:
    """Step e1 iff B(x, x+e1) <= B(x, x+e2); the first point past the window is kept."""
    if not busemann.window.contains(start):
        raise ContractError(_MODULE, f"start {start} outside window {busemann.window}")
    i, j = busemann.table_index(start)
    stop_i, stop_j = busemann.table_index(busemann.window.hi)
    coords = kernels.trace_successor(busemann.table.values, i, j, stop_i, stop_j)
    return _path_from_indices(busemann.table.rect, coords)


def coalescence_point(busemann: BusemannWindow, x: LatticePoint, y: LatticePoint, rect: LatticeRect | None = None) -> CoalescenceResult:
    window = busemann.window
    if not window.contains(x) or not window.contains(y):
        raise ContractError(_MODULE, f"{x} and {y} must lie in window {window}")
    query = rect if rect is not None else window
    ai, aj = busemann.table_index(x)
    bi, bj = busemann.table_index(y)
    hi_i, hi_j = busemann.table_index(window.hi)
    ci, cj, found = kernels.first_common_vertex(busemann.table.values, ai, aj, bi, bj, hi_i, hi_j)
    if not found:
        return CoalescenceResult(None, False)
    point = busemann.table.rect.point(int(ci), int(cj))
    return CoalescenceResult(point, query.contains(point))


def coalesces_inside(busemann: BusemannWindow, x: LatticePoint, y: LatticePoint, rect: LatticeRect) -> bool:
    """True iff the geodesics from x and y merge at a vertex of rect."""
    if not busemann.window.contains_rect(rect) or not rect.contains(x) or not rect.contains(y):
        raise ContractError(_MODULE, f"{x}, {y} and {rect} must lie in window {busemann.window}")
    ai, aj = busemann.table_index(x)
    bi, bj = busemann.table_index(y)
    hi_i, hi_j = busemann.table_index(rect.hi)
    ci, cj, found = kernels.first_common_vertex(busemann.table.values, ai, aj, bi, bj, hi_i, hi_j)
    if not found:
        return False
    return rect.contains(busemann.table.rect.point(int(ci), int(cj)))


def dual_field(busemann: BusemannWindow) -> DualField:
    rect = busemann.dual_rect
    g = busemann.table.values
    i0, j0 = busemann.table_index(rect.lo)
    i1, j1 = busemann.table_index(rect.hi)
    here = g[i0 : i1 + 1, j0 : j1 + 1]
    left = g[i0 - 1 : i1, j0 : j1 + 1]
    down = g[i0 : i1 + 1, j0 - 1 : j1]
    return DualField(rect, np.ascontiguousarray(np.minimum(left, down) - here))


def dual_geodesic(busemann: BusemannWindow, start: LatticePoint) -> GeodesicPath:
    """Dual path from the corner start; step -e1 iff B(c-e1, c) <= B(c-e2, c)."""
    rect = busemann.dual_rect
    if not rect.contains(start):
        raise ContractError(_MODULE, f"dual start {start} outside {rect}")
    ci, cj = busemann.table_index(start)
    lo_i, lo_j = busemann.table_index(rect.lo)
    coords = kernels.dual_trace(busemann.table.values, ci, cj, lo_i, lo_j)
    return _path_from_indices(busemann.table.rect, coords, is_dual=True)


def _require_event_window(busemann: BusemannWindow, target: LatticePoint) -> None:
    if busemann.window.lo != ORIGIN or not (target + DIAG).le(busemann.window.hi):
        raise ContractError(_MODULE, f"window {busemann.window} must cover [0, v_N + (1,1)] = [0, {target + DIAG}]")


def check_duality_events(busemann: BusemannWindow, rho: float, N: int, separation: int) -> tuple[bool, bool]:
    target = characteristic_point(rho, N).point
    _require_event_window(busemann, target)
    s = int(separation)
    if s < 0 or s > min(target.x1, target.x2):
        raise ContractError(_MODULE, f"separation {s} must lie in [0, min(v_N)] = [0, {min(target.x1, target.x2)}]")
    if s == 0:
        return False, False
    box = LatticeRect(ORIGIN, target)
    primal = not coalesces_inside(busemann, E1 * s, E2 * s, box)
    ring = [LatticePoint(target.x1 + 1, j) for j in range(1, target.x2 + 2)]
    ring += [LatticePoint(i, target.x2 + 1) for i in range(1, target.x1 + 1)]
    ring_i = np.array([busemann.table_index(c)[0] for c in ring], dtype=np.int64)
    ring_j = np.array([busemann.table_index(c)[1] for c in ring], dtype=np.int64)
    lo_i, lo_j = busemann.table_index(DIAG)
    side_i, side_j = busemann.table_index(LatticePoint(s, s))
    dual = bool(kernels.dual_reaches_square(busemann.table.values, ring_i, ring_j, lo_i, lo_j, side_i, side_j))
    return primal, dual


def busemann_ne_process(busemann: BusemannWindow, corner: LatticePoint, extent_x: int, extent_y: int) -> PassageTable:
    """North-east stationary process at corner with bulk weights and B increments on its axes."""
    lo = corner - LatticePoint(extent_x, extent_y)
    if not busemann.table.rect.contains(lo) or not busemann.table.rect.contains(corner):
        raise ContractError(_MODULE, f"[{lo}, {corner}] outside {busemann.table.rect}")
    horizontal = np.array([busemann.value(corner - E1 * t, corner - E1 * (t - 1)) for t in range(1, extent_x + 1)])
    vertical = np.array([busemann.value(corner - E2 * t, corner - E2 * (t - 1)) for t in range(1, extent_y + 1)])
    boundary = BoundarySpec(busemann.rho, corner, BoundarySide.NORTH_EAST, horizontal, vertical)
    i0, j0 = busemann.table_index(lo)
    i1, j1 = busemann.table_index(corner - DIAG)
    bulk = WeightField(LatticeRect(lo, corner - DIAG), np.ascontiguousarray(busemann.table.weights[i0 : i1 + 1, j0 : j1 + 1]))
    return make_ne_process(busemann.rho, corner, bulk, boundary)


def busemann_sw_process(busemann: BusemannWindow, base: LatticePoint, extent_x: int, extent_y: int) -> PassageTable:
    """South-west stationary process at base with dual weights in the bulk and B increments on its axes."""
    hi = base + LatticePoint(extent_x, extent_y)
    if not busemann.table.rect.contains(base) or not busemann.table.rect.contains(hi):
        raise ContractError(_MODULE, f"[{base}, {hi}] outside {busemann.table.rect}")
    horizontal = np.array([busemann.value(base + E1 * (k - 1), base + E1 * k) for k in range(1, extent_x + 1)])
    vertical = np.array([busemann.value(base + E2 * (k - 1), base + E2 * k) for k in range(1, extent_y + 1)])
    boundary = BoundarySpec(busemann.rho, base, BoundarySide.SOUTH_WEST, horizontal, vertical)
    g = busemann.table.values
    i0, j0 = busemann.table_index(base + DIAG)
    i1, j1 = busemann.table_index(hi)
    here = g[i0 : i1 + 1, j0 : j1 + 1]
    dual = np.minimum(g[i0 - 1 : i1, j0 : j1 + 1], g[i0 : i1 + 1, j0 - 1 : j1]) - here
    bulk = WeightField(LatticeRect(base + DIAG, hi), np.ascontiguousarray(dual))
    return stationary_forward(boundary, bulk)


def dual_stationary_process(busemann: BusemannWindow) -> PassageTable:
    width, height = busemann.window.shape
    return busemann_sw_process(busemann, busemann.window.lo, width, height)


def _matches_busemann(busemann: BusemannWindow, table: PassageTable, reference: LatticePoint, sign: float) -> bool:
    i0, j0 = busemann.table_index(table.rect.lo)
    i1, j1 = busemann.table_index(table.rect.hi)
    g = busemann.table.values
    expected = sign * (g[i0 : i1 + 1, j0 : j1 + 1] - busemann.g(reference))
    scale = max(1.0, abs(busemann.g(reference)))
    return bool(np.all(np.abs(table.values - expected) <= EXACT_RTOL * scale))


def check_busemann_consistency(busemann: BusemannWindow, sw_process: PassageTable, ne_process: PassageTable) -> bool:
    # NE: G(y -> corner) = B(y, corner); SW: G(base -> y') = B(base, y')
    ne_ok = _matches_busemann(busemann, ne_process, ne_process.anchor, 1.0)
    sw_ok = _matches_busemann(busemann, sw_process, sw_process.anchor, -1.0)
    return ne_ok and sw_ok


def check_dual_restriction(busemann: BusemannWindow, w: LatticePoint) -> bool:
    base = busemann.window.lo
    if not busemann.dual_rect.contains(w):
        raise ContractError(_MODULE, f"dual point {w} outside {busemann.dual_rect}")
    if w == base + DIAG:
        return True
    process = dual_stationary_process(busemann)
    geodesic_edges = {(b, a) for a, b in stationary_geodesic(process, w).edges()}
    inner = base + DIAG
    path = dual_geodesic(busemann, w)
    for a, b in path.edges():
        if inner.le(a) or inner.le(b):
            if (a, b) not in geodesic_edges:
                return False
    return True


def check_additivity(busemann: BusemannWindow) -> bool:
    h = busemann.horizontal
    v = busemann.vertical
    if h.shape[0] < 2 or h.shape[1] < 2:
        return True
    lhs = h[:-1, :-1] + v[1:, :-1]
    rhs = v[:-1, :-1] + h[:-1, 1:]
    i0, j0 = busemann.table_index(busemann.window.lo)
    i1, j1 = busemann.table_index(busemann.window.hi)
    scale = busemann.table.values[i0:i1, j0:j1]
    return bool(np.all(np.abs(lhs - rhs) <= 4 * np.spacing(scale)))


def primal_decisions(busemann: BusemannWindow) -> np.ndarray:
    i0, j0 = busemann.table_index(busemann.window.lo)
    n1, n2 = busemann.window.shape
    return kernels.step_decisions(busemann.table.values, i0, j0, n1, n2)


def dual_decisions(busemann: BusemannWindow) -> np.ndarray:
    g = busemann.table.values
    rect = busemann.dual_rect
    i0, j0 = busemann.table_index(rect.lo)
    i1, j1 = busemann.table_index(rect.hi)
    return g[i0 - 1 : i1, j0 : j1 + 1] <= g[i0 : i1 + 1, j0 - 1 : j1]


def check_noncrossing(busemann: BusemannWindow) -> bool:
    # primal e1 at x  <=>  dual -e1 at x + (1,1)
    return bool(np.array_equal(primal_decisions(busemann), dual_decisions(busemann)))


def busemann_stability(bulk: WeightField, rho: float, window: LatticeRect, N: int, far_multiplier: float = DEFAULT_FAR_MULTIPLIER) -> float:
    """Fraction of window step decisions that change when the far target moves from u_M to u_2M."""
    near = far_target(rho, N, far_multiplier)
    far = far_target(rho, N, 2 * far_multiplier)
    if bulk.rect.lo != ORIGIN or not far.le(bulk.rect.hi):
        raise ContractError(_MODULE, f"bulk {bulk.rect} must cover [0, {far}]")
    near_window = busemann_window(bulk.restrict(LatticeRect(ORIGIN, near)), rho, window)
    far_window = busemann_window(bulk.restrict(LatticeRect(ORIGIN, far)), rho, window)
    changed = primal_decisions(near_window) != primal_decisions(far_window)
    return float(np.mean(changed))


def step_fraction(path: GeodesicPath, k: int) -> float:
    """Fraction of horizontal steps among the first k steps."""
    steps = path.steps[:k]
    if not steps:
        return float("nan")
    horizontal = (Step.E1, Step.MINUS_E1)
    return sum(1 for step in steps if step in horizontal) / len(steps)


def reflected_primal_geodesic(busemann: BusemannWindow, start: LatticePoint) -> GeodesicPath:
    path = semi_infinite_geodesic(busemann, start)
    return GeodesicPath.from_points([LatticePoint(-p.x1, -p.x2) for p in path.points()], is_dual=True)

