from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from src.utils.errors import ContractError

_MODULE = "lpp-engine"


@dataclass(frozen=True, order=True)
class LatticePoint:
    x1: int
    x2: int

    def __add__(self, other: "LatticePoint") -> "LatticePoint":
        return LatticePoint(self.x1 + other.x1, self.x2 + other.x2)

    def __sub__(self, other: "LatticePoint") -> "LatticePoint":
        return LatticePoint(self.x1 - other.x1, self.x2 - other.x2)

    def __mul__(self, k: int) -> "LatticePoint":
        return LatticePoint(self.x1 * k, self.x2 * k)

    __rmul__ = __mul__

    def le(self, other: "LatticePoint") -> bool:
        return self.x1 <= other.x1 and self.x2 <= other.x2

    def lt(self, other: "LatticePoint") -> bool:
        return self.x1 < other.x1 and self.x2 < other.x2

    def l1(self) -> int:
        return abs(self.x1) + abs(self.x2)

    def as_tuple(self) -> tuple[int, int]:
        return self.x1, self.x2


ORIGIN = LatticePoint(0, 0)
E1 = LatticePoint(1, 0)
E2 = LatticePoint(0, 1)
DIAG = LatticePoint(1, 1)


@dataclass(frozen=True)
class LatticeRect:
    lo: LatticePoint
    hi: LatticePoint

    def __post_init__(self) -> None:
        if not self.lo.le(self.hi):
            raise ContractError(_MODULE, f"rect lo {self.lo} is not <= hi {self.hi}")

    @classmethod
    def from_corners(cls, lo: tuple[int, int], hi: tuple[int, int]) -> "LatticeRect":
        return cls(LatticePoint(*lo), LatticePoint(*hi))

    @property
    def shape(self) -> tuple[int, int]:
        return self.hi.x1 - self.lo.x1 + 1, self.hi.x2 - self.lo.x2 + 1

    @property
    def cells(self) -> int:
        width, height = self.shape
        return width * height

    def contains(self, point: LatticePoint) -> bool:
        return self.lo.le(point) and point.le(self.hi)

    def contains_rect(self, other: "LatticeRect") -> bool:
        return self.contains(other.lo) and self.contains(other.hi)

    def index(self, point: LatticePoint) -> tuple[int, int]:
        return point.x1 - self.lo.x1, point.x2 - self.lo.x2

    def point(self, i: int, j: int) -> LatticePoint:
        return LatticePoint(self.lo.x1 + i, self.lo.x2 + j)

    def __iter__(self) -> Iterator[LatticePoint]:
        for x1 in range(self.lo.x1, self.hi.x1 + 1):
            for x2 in range(self.lo.x2, self.hi.x2 + 1):
                yield LatticePoint(x1, x2)


class Step(Enum):
    E1 = (1, 0)
    E2 = (0, 1)
    MINUS_E1 = (-1, 0)
    MINUS_E2 = (0, -1)

    @property
    def vector(self) -> LatticePoint:
        return LatticePoint(*self.value)


PRIMAL_STEPS = (Step.E1, Step.E2)
DUAL_STEPS = (Step.MINUS_E1, Step.MINUS_E2)


@dataclass(frozen=True)
class GeodesicPath:
    """Lattice path given by its start and steps.

    Dual paths (steps -e1/-e2) are stored in corner coordinates: the dual vertex
    c - e* is represented by the integer point c.
    """

    start: LatticePoint
    steps: tuple[Step, ...] = ()
    is_dual: bool = False
    rect: LatticeRect | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        allowed = DUAL_STEPS if self.is_dual else PRIMAL_STEPS
        for step in self.steps:
            if step not in allowed:
                raise ContractError(_MODULE, f"step {step.name} not allowed on a {'dual' if self.is_dual else 'primal'} path")
        if self.rect is not None:
            for point in self.points():
                if not self.rect.contains(point):
                    raise ContractError(_MODULE, f"path leaves its rect at {point}")

    @classmethod
    def from_points(cls, points: list[LatticePoint], is_dual: bool = False, rect: LatticeRect | None = None) -> "GeodesicPath":
        if not points:
            raise ContractError(_MODULE, "empty path")
        steps = []
        for a, b in zip(points, points[1:]):
            diff = b - a
            try:
                steps.append(Step(diff.as_tuple()))
            except ValueError:
                raise ContractError(_MODULE, f"points {a} and {b} are not nearest neighbours") from None
        return cls(points[0], tuple(steps), is_dual, rect)

    @classmethod
    def from_array(cls, coords: np.ndarray, is_dual: bool = False, rect: LatticeRect | None = None) -> "GeodesicPath":
        points = [LatticePoint(int(a), int(b)) for a, b in coords]
        return cls.from_points(points, is_dual, rect)

    def points(self) -> list[LatticePoint]:
        current = self.start
        out = [current]
        for step in self.steps:
            current = current + step.vector
            out.append(current)
        return out

    def as_array(self) -> np.ndarray:
        return np.array([p.as_tuple() for p in self.points()], dtype=np.int64)

    @property
    def end(self) -> LatticePoint:
        return self.points()[-1]

    def __len__(self) -> int:
        return len(self.steps) + 1

    def __contains__(self, point: LatticePoint) -> bool:
        return point in self.points()

    def edges(self) -> set[tuple[LatticePoint, LatticePoint]]:
        pts = self.points()
        return set(zip(pts, pts[1:]))

    def real_coords(self) -> np.ndarray:
        coords = self.as_array().astype(np.float64)
        if self.is_dual:
            coords -= 0.5
        return coords
