import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.model.busemann import (
    busemann_ne_process,
    busemann_stability,
    busemann_sw_process,
    busemann_window,
    check_additivity,
    check_busemann_consistency,
    check_dual_restriction,
    check_duality_events,
    check_noncrossing,
    coalescence_point,
    coalesces_inside,
    dual_field,
    dual_geodesic,
    far_target,
    reflected_primal_geodesic,
    sample_busemann,
    semi_infinite_geodesic,
    step_fraction,
)
from src.model.lattice import DIAG, E1, E2, ORIGIN, GeodesicPath, LatticePoint, LatticeRect, Step
from src.model.lpp import WeightField, generate_bulk, paths_cross
from src.model.stationary import characteristic_point
from src.utils.errors import ContractError
from src.utils.rng import make_stream

RHO = 0.5
N = 40
V = characteristic_point(RHO, N).point
WINDOW = LatticeRect(ORIGIN, V + DIAG)

seeds = st.integers(0, 2**32)


def _busemann(seed, rho=RHO, n=N, far_multiplier=3.0):
    window = LatticeRect(ORIGIN, characteristic_point(rho, n).point + DIAG)
    return sample_busemann(rho, n, window, make_stream(seed, 0, 60), far_multiplier)


def test_far_target_scales_the_characteristic_point():
    assert far_target(0.5, 50, 4.0) == characteristic_point(0.5, 200).point
    with pytest.raises(ContractError):
        far_target(0.5, 50, 0.5)


def test_window_must_stay_below_the_target():
    bulk = generate_bulk(LatticeRect(ORIGIN, LatticePoint(10, 10)), make_stream(0, 0))
    with pytest.raises(ContractError):
        busemann_window(bulk, RHO, LatticeRect(ORIGIN, LatticePoint(10, 4)))
    bw = busemann_window(bulk, RHO, LatticeRect(ORIGIN, LatticePoint(9, 9)))
    assert bw.far_target == LatticePoint(10, 10)


@settings(max_examples=20)
@given(seeds)
def test_busemann_edges_and_additivity(seed):
    bw = _busemann(seed)
    assert np.all(bw.horizontal >= 0) and np.all(bw.vertical >= 0)
    assert check_additivity(bw)
    x = LatticePoint(3, 4)
    assert bw.horizontal_edge(x) == bw.value(x, x + E1)
    assert bw.vertical_edge(x) == bw.value(x, x + E2)


@settings(max_examples=20)
@given(seeds)
def test_primal_and_dual_geodesics_never_cross(seed):
    bw = _busemann(seed)
    assert check_noncrossing(bw)
    primal = semi_infinite_geodesic(bw, ORIGIN)
    dual = dual_geodesic(bw, bw.dual_rect.hi)
    assert not paths_cross(primal, dual)


def test_semi_infinite_geodesic_leaves_the_window():
    bw = _busemann(5)
    path = semi_infinite_geodesic(bw, ORIGIN)
    assert path.start == ORIGIN
    assert not bw.window.contains(path.end)
    assert all(bw.window.contains(p) for p in path.points()[:-1])
    with pytest.raises(ContractError):
        semi_infinite_geodesic(bw, bw.window.hi + E1)


def test_geodesic_step_rule():
    bw = _busemann(6)
    path = semi_infinite_geodesic(bw, LatticePoint(2, 2))
    for point, step in zip(path.points(), path.steps):
        horizontal = bw.value(point, point + E1)
        vertical = bw.value(point, point + E2)
        assert (step is Step.E1) == (horizontal <= vertical)


def test_dual_weights_are_minimum_incoming_edges():
    bw = _busemann(7)
    dual = dual_field(bw)
    corner = LatticePoint(4, 6)
    left = bw.horizontal_edge(corner - E1)
    down = bw.vertical_edge(corner - E2)
    assert math.isclose(dual.value(corner), min(left, down), rel_tol=1e-12, abs_tol=1e-12)
    assert np.all(dual.values >= 0)


def test_dual_geodesic_runs_down_left():
    bw = _busemann(8)
    path = dual_geodesic(bw, bw.dual_rect.hi)
    assert path.is_dual
    assert path.start == bw.dual_rect.hi
    assert path.end.x1 == 0 or path.end.x2 == 0


@settings(max_examples=20)
@given(seeds, st.integers(0, 8), st.integers(0, 8), st.integers(0, 8), st.integers(0, 8))
def test_coalescence_point_is_shared_from_then_on(seed, a1, a2, b1, b2):
    bw = _busemann(seed)
    x, y = LatticePoint(a1, a2), LatticePoint(b1, b2)
    result = coalescence_point(bw, x, y)
    if result.point is None:
        return
    a = semi_infinite_geodesic(bw, x).points()
    b = semi_infinite_geodesic(bw, y).points()
    assert a[a.index(result.point) :] == b[b.index(result.point) :]


def test_same_start_coalesces_immediately():
    bw = _busemann(9)
    result = coalescence_point(bw, DIAG, DIAG)
    assert result.point == DIAG and result.within_window
    assert coalesces_inside(bw, DIAG, DIAG, LatticeRect(ORIGIN, DIAG))


def test_coalesces_inside_needs_points_in_rect():
    bw = _busemann(9)
    with pytest.raises(ContractError):
        coalesces_inside(bw, ORIGIN, LatticePoint(5, 5), LatticeRect(ORIGIN, DIAG))


@settings(max_examples=25)
@given(seeds, st.integers(0, 12))
def test_duality_events_agree(seed, s):
    bw = _busemann(seed)
    s = min(s, V.x1, V.x2)
    primal, dual = check_duality_events(bw, RHO, N, s)
    assert primal == dual


def test_duality_at_zero_separation():
    assert check_duality_events(_busemann(1), RHO, N, 0) == (False, False)


@pytest.mark.parametrize("seed", range(5))
def test_duality_events_ignore_bulk_below_the_window(seed):
    far = far_target(RHO, N, 3.0)
    lo = LatticePoint(-2, -3)
    wide = generate_bulk(LatticeRect(lo, far), make_stream(seed, 0, 61))
    narrow = WeightField.from_array(wide.values[2:, 3:], ORIGIN)
    shifted = busemann_window(wide, RHO, WINDOW)
    anchored = busemann_window(narrow, RHO, WINDOW)
    for s in range(1, min(V.x1, V.x2) + 1):
        events = check_duality_events(shifted, RHO, N, s)
        assert events == check_duality_events(anchored, RHO, N, s)
        assert events[0] == events[1]


def test_duality_needs_the_full_window():
    bulk = generate_bulk(LatticeRect(ORIGIN, far_target(RHO, N, 3.0)), make_stream(0, 0))
    bw = busemann_window(bulk, RHO, LatticeRect(ORIGIN, V))
    with pytest.raises(ContractError, match="cover"):
        check_duality_events(bw, RHO, N, 1)
    with pytest.raises(ContractError):
        check_duality_events(_busemann(0), RHO, N, V.x1 + 1)


@settings(max_examples=10)
@given(seeds)
def test_stationary_processes_match_busemann_values(seed):
    bw = _busemann(seed)
    span = bw.window.hi - bw.window.lo
    ne = busemann_ne_process(bw, bw.window.hi, span.x1, span.x2)
    sw = busemann_sw_process(bw, bw.window.lo, span.x1, span.x2)
    assert check_busemann_consistency(bw, sw, ne)
    assert math.isclose(sw.value(E1), bw.value(ORIGIN, E1), rel_tol=1e-12)


@settings(max_examples=10)
@given(seeds, st.integers(1, 12), st.integers(1, 12))
def test_dual_geodesic_restricts_to_stationary_geodesic(seed, w1, w2):
    bw = _busemann(seed)
    w = LatticePoint(w1, w2)
    assert check_dual_restriction(bw, w)


def test_dual_restriction_outside_raises():
    bw = _busemann(0)
    with pytest.raises(ContractError):
        check_dual_restriction(bw, ORIGIN)


def test_stability_fraction_in_unit_interval():
    bulk = generate_bulk(LatticeRect(ORIGIN, far_target(RHO, N, 4.0)), make_stream(3, 0))
    fraction = busemann_stability(bulk, RHO, WINDOW, N, 2.0)
    assert 0.0 <= fraction <= 1.0
    with pytest.raises(ContractError):
        busemann_stability(bulk, RHO, WINDOW, N, 4.0)


def test_step_fraction():
    path = GeodesicPath(ORIGIN, (Step.E1, Step.E2, Step.E1, Step.E1))
    assert step_fraction(path, 2) == 0.5
    assert step_fraction(path, 10) == 0.75
    assert math.isnan(step_fraction(GeodesicPath(ORIGIN), 3))


def test_reflected_primal_geodesic_is_dual():
    bw = _busemann(2)
    reflected = reflected_primal_geodesic(bw, ORIGIN)
    primal = semi_infinite_geodesic(bw, ORIGIN)
    assert reflected.is_dual
    assert step_fraction(reflected, 10) == step_fraction(primal, 10)
