import numpy as np
import pytest

from src.model.lattice import DIAG, E1, E2, ORIGIN, GeodesicPath, LatticePoint, LatticeRect, Step
from src.utils.errors import ContractError


def test_point_arithmetic_and_order():
    p = LatticePoint(2, 3)
    assert p + E1 == LatticePoint(3, 3)
    assert p - E2 == LatticePoint(2, 2)
    assert E1 * 4 == LatticePoint(4, 0)
    assert ORIGIN.le(p) and ORIGIN.lt(p)
    assert not E1.lt(p + E1)
    assert p.l1() == 5


def test_rect_shape_iteration_and_index():
    rect = LatticeRect(LatticePoint(1, 2), LatticePoint(3, 5))
    assert rect.shape == (3, 4)
    assert rect.cells == 12
    points = list(rect)
    assert len(points) == 12
    assert all(rect.contains(p) for p in points)
    assert rect.point(*rect.index(LatticePoint(2, 4))) == LatticePoint(2, 4)
    assert rect.contains_rect(LatticeRect(LatticePoint(2, 2), LatticePoint(3, 3)))
    assert not rect.contains(ORIGIN)


def test_rect_needs_ordered_corners():
    with pytest.raises(ContractError):
        LatticeRect(LatticePoint(2, 0), LatticePoint(1, 5))


def test_path_points_and_edges():
    path = GeodesicPath(ORIGIN, (Step.E1, Step.E2, Step.E1))
    assert path.points() == [ORIGIN, E1, DIAG, LatticePoint(2, 1)]
    assert path.end == LatticePoint(2, 1)
    assert len(path) == 4
    assert DIAG in path
    assert (E1, DIAG) in path.edges()


def test_from_points_rejects_jumps():
    with pytest.raises(ContractError, match="nearest neighbours"):
        GeodesicPath.from_points([ORIGIN, DIAG])


def test_primal_path_rejects_dual_steps():
    with pytest.raises(ContractError):
        GeodesicPath(ORIGIN, (Step.MINUS_E1,))
    with pytest.raises(ContractError):
        GeodesicPath(DIAG, (Step.E1,), is_dual=True)


def test_path_must_stay_in_rect():
    with pytest.raises(ContractError, match="leaves"):
        GeodesicPath(ORIGIN, (Step.E1, Step.E1), rect=LatticeRect(ORIGIN, DIAG))


def test_dual_real_coordinates_are_shifted():
    dual = GeodesicPath(LatticePoint(2, 2), (Step.MINUS_E1, Step.MINUS_E2), is_dual=True)
    assert np.array_equal(dual.real_coords(), [[1.5, 1.5], [0.5, 1.5], [0.5, 0.5]])
    assert np.array_equal(dual.as_array(), [[2, 2], [1, 2], [1, 1]])
