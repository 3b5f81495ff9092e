import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.model.lattice import DIAG, E1, E2, ORIGIN, LatticePoint, LatticeRect, Step
from src.model.lpp import generate_bulk
from src.model.stationary import (
    BoundarySide,
    BoundarySpec,
    ExitIndex,
    boundary_exit_scan,
    characteristic_point,
    check_exit_equivalence,
    check_nested_geodesic_agreement,
    down_right_increment_sample,
    exit_labels_all,
    exit_time,
    make_ne_boundary,
    make_ne_process,
    make_sw_boundary,
    nested_boundary_from_increments,
    nested_process,
    sample_stationary,
    scaled_ceil,
    scaled_floor,
    staircase_path,
    stationary_forward,
    stationary_geodesic,
    stationary_window,
)
from src.utils.errors import CapacityError, ContractError
from src.utils.rng import make_stream
from src.utils.stats import mean_within_sigma

seeds = st.integers(0, 2**32)


def _table(seed, width=10, height=10, rho=0.5, base=ORIGIN):
    return sample_stationary(rho, base, width, height, make_stream(seed, 0, 50))


@pytest.mark.parametrize(
    "rho, N, expected",
    [(0.3, 1000, (490, 90)), (0.5, 1000, (250, 250)), (0.5, 3, (0, 0)), (0.7, 100, (9, 49))],
)
def test_characteristic_point(rho, N, expected):
    assert characteristic_point(rho, N).point.as_tuple() == expected


@pytest.mark.parametrize("rho", [0.0, 1.0, -0.2, 1.5])
def test_characteristic_point_rejects_rho(rho):
    with pytest.raises(ContractError, match="rho"):
        characteristic_point(rho, 10)


def test_scaled_rounding_is_stable_at_integers():
    assert scaled_floor(0.1, 1000) == 10
    assert scaled_ceil(0.1, 1000) == 10
    assert scaled_floor(0.25, 1000) == 25
    assert scaled_floor(0.5, 50) == 6
    assert scaled_ceil(0.5, 50) == 7
    assert scaled_floor(0.0, 50) == 0


def test_exit_index_is_never_zero():
    with pytest.raises(ContractError):
        ExitIndex(0)
    assert ExitIndex(3).on_horizontal_axis
    assert not ExitIndex(-2).on_horizontal_axis


def test_exit_on_the_axes():
    table = _table(1)
    for k in range(1, 11):
        assert exit_time(table, E1 * k).value == k
        assert exit_time(table, E2 * k).value == -k
    with pytest.raises(ContractError, match="base"):
        exit_time(table, ORIGIN)


@settings(max_examples=30)
@given(seeds, st.integers(1, 12), st.integers(1, 12))
def test_exit_label_map_matches_exit_time(seed, width, height):
    table = _table(seed, width, height, base=LatticePoint(2, 5))
    labels = exit_labels_all(table)
    for point, label in labels.items():
        assert exit_time(table, point) == label


@settings(max_examples=30)
@given(seeds, st.integers(1, 12), st.integers(1, 12))
def test_exit_sign_matches_first_step(seed, x, y):
    table = _table(seed, 12, 12)
    endpoint = LatticePoint(x, y)
    z = exit_time(table, endpoint).value
    path = stationary_geodesic(table, endpoint)
    assert path.start == ORIGIN and path.end == endpoint
    points = path.as_array()
    if z > 0:
        assert path.steps[0] is Step.E1
        assert points[points[:, 1] == 0, 0].max() == z
    else:
        assert path.steps[0] is Step.E2
        assert points[points[:, 0] == 0, 1].max() == -z


def test_boundary_weights_have_the_right_rates():
    I, J = [], []
    for replica in range(200):
        boundary = make_sw_boundary(0.3, ORIGIN, 20, 20, make_stream(4, replica))
        I.append(boundary.I)
        J.append(boundary.J)
    assert mean_within_sigma(np.concatenate(I), 1 / 0.7, k=4)
    assert mean_within_sigma(np.concatenate(J), 1 / 0.3, k=4)


def test_boundary_must_cover_the_bulk():
    boundary = make_sw_boundary(0.5, ORIGIN, 2, 2, make_stream(0, 0))
    bulk = generate_bulk(LatticeRect(DIAG, LatticePoint(3, 2)), make_stream(0, 1))
    with pytest.raises(ContractError, match="extents"):
        stationary_forward(boundary, bulk)


def test_longer_boundary_is_truncated():
    boundary = make_sw_boundary(0.5, ORIGIN, 8, 8, make_stream(0, 0))
    bulk = generate_bulk(LatticeRect(DIAG, LatticePoint(3, 2)), make_stream(0, 1))
    table = stationary_forward(boundary, bulk)
    assert table.rect == LatticeRect(ORIGIN, LatticePoint(3, 2))
    assert math.isclose(table.value(E1 * 3), boundary.I[:3].sum())


def test_capacity_guard():
    with pytest.raises(CapacityError):
        sample_stationary(0.5, ORIGIN, 1000, 1000, make_stream(0, 0), max_cells=10_000)


def test_boundary_scan_is_counter_clockwise():
    table = _table(3, 6, 4)
    corner = LatticePoint(5, 3)
    scan = boundary_exit_scan(table, corner)
    assert tuple(scan.points[0]) == (5, 0)
    assert tuple(scan.points[-1]) == (0, 3)
    assert len(scan.labels) == 4 + 5
    assert scan.labels[0] == 5 and scan.labels[-1] == -3
    # exit labels only move towards the vertical axis along the scan
    assert np.all(np.diff(scan.labels) <= 0)


def test_nesting_at_the_base_keeps_the_boundary():
    outer = _table(8)
    boundary = nested_boundary_from_increments(outer, ORIGIN)
    assert np.array_equal(boundary.I, outer.weights[1:, 0])
    assert np.array_equal(boundary.J, outer.weights[0, 1:])


def test_nesting_needs_a_nonempty_quadrant():
    outer = _table(8, 5, 5)
    with pytest.raises(ContractError, match="north/east"):
        nested_boundary_from_increments(outer, LatticePoint(5, 2))


def test_nested_process_reproduces_outer_increments():
    outer = _table(11)
    z = LatticePoint(3, 4)
    inner = nested_process(outer, z)
    y = LatticePoint(9, 8)
    assert math.isclose(inner.value(y), outer.value(y) - outer.value(z), rel_tol=1e-12)


@settings(max_examples=30)
@given(seeds, st.integers(0, 5), st.integers(0, 5))
def test_nested_geodesics_agree(seed, z1, z2):
    outer = _table(seed, 12, 12)
    z = LatticePoint(z1, z2)
    y = LatticePoint(11, 10)
    assert check_nested_geodesic_agreement(outer, z, y)


def test_nested_geodesic_needs_ordered_points():
    with pytest.raises(ContractError):
        check_nested_geodesic_agreement(_table(0), LatticePoint(3, 3), LatticePoint(3, 7))


@pytest.mark.parametrize("seed", range(100))
def test_exit_equivalence_small(seed):
    outer = _table(seed, 3, 3)
    assert check_exit_equivalence(outer, 1, 1, LatticePoint(2, 2))


@settings(max_examples=40)
@given(seeds, st.integers(6, 19), st.integers(4, 19))
def test_exit_equivalence_larger(seed, x, y):
    outer = _table(seed, 20, 20)
    assert check_exit_equivalence(outer, 5, 3, LatticePoint(x, y))


def test_exit_equivalence_needs_z_in_both_quadrants():
    with pytest.raises(ContractError, match="quadrants"):
        check_exit_equivalence(_table(0), 2, 2, LatticePoint(1, 5))


@pytest.mark.parametrize("m, n", [(0, 2), (2, 0), (0, 0), (-1, 2)])
def test_exit_equivalence_needs_positive_shift(m, n):
    with pytest.raises(ContractError, match="must be > 0"):
        check_exit_equivalence(_table(0, 10, 10), m, n, LatticePoint(6, 6))


def test_ne_process_runs_along_its_axes():
    corner = LatticePoint(6, 5)
    bulk = generate_bulk(LatticeRect(ORIGIN, corner - DIAG), make_stream(2, 0))
    boundary = make_ne_boundary(0.4, corner, 6, 5, make_stream(2, 1))
    table = make_ne_process(0.4, corner, bulk, boundary)
    assert table.value(corner) == 0.0
    for t in range(1, 7):
        assert math.isclose(table.value(corner - E1 * t), boundary.I[:t].sum(), rel_tol=1e-12)
    for t in range(1, 6):
        assert math.isclose(table.value(corner - E2 * t), boundary.J[:t].sum(), rel_tol=1e-12)


def test_ne_process_rejects_a_south_west_boundary():
    corner = LatticePoint(3, 3)
    bulk = generate_bulk(LatticeRect(ORIGIN, corner - DIAG), make_stream(2, 0))
    boundary = BoundarySpec(0.4, corner, BoundarySide.SOUTH_WEST, np.ones(3), np.ones(3))
    with pytest.raises(ContractError):
        make_ne_process(0.4, corner, bulk, boundary)


def test_staircase_path():
    points = staircase_path(LatticeRect(ORIGIN, LatticePoint(2, 1)))
    assert points == [LatticePoint(0, 1), LatticePoint(1, 1), LatticePoint(1, 0), LatticePoint(2, 0)]
    long = staircase_path(LatticeRect(ORIGIN, LatticePoint(5, 2)))
    assert long[0] == LatticePoint(0, 2) and long[-1] == LatticePoint(5, 0)
    assert len(long) == 5 + 2 + 1


def test_increments_along_the_axes_are_boundary_weights():
    table = _table(13, 6, 6)
    along_x = down_right_increment_sample(table, [E1 * k for k in range(7)])
    assert np.array_equal(along_x.values, table.weights[1:7, 0])
    assert along_x.horizontal.all()
    along_y = down_right_increment_sample(table, [E2 * k for k in range(6, -1, -1)])
    assert np.array_equal(along_y.values, table.weights[0, 6:0:-1])
    assert not along_y.horizontal.any()


def test_down_right_path_must_stay_in_the_table():
    with pytest.raises(ContractError):
        down_right_increment_sample(_table(0, 3, 3), [LatticePoint(3, 1), LatticePoint(4, 1)])
    with pytest.raises(ContractError):
        down_right_increment_sample(_table(0, 3, 3), [LatticePoint(1, 1), LatticePoint(2, 2)])


def test_staircase_increments_are_stationary():
    rho = 0.5
    rect = LatticeRect(LatticePoint(2, 2), LatticePoint(10, 10))
    path = staircase_path(rect)
    horizontal, vertical = [], []
    for replica in range(300):
        sample = down_right_increment_sample(_table(replica, 10, 10, rho), path)
        horizontal.append(sample.horizontal_values)
        vertical.append(sample.vertical_values)
    assert mean_within_sigma(np.concatenate(horizontal), 1 / (1 - rho), k=4)
    assert mean_within_sigma(np.concatenate(vertical), 1 / rho, k=4)


def test_stationary_window():
    assert stationary_window(0.5, 100) == LatticeRect(ORIGIN, LatticePoint(26, 26))
