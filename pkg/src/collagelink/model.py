"""Core domain types and 2-D box geometry.

Boxes use a left-top origin with width/height, in (possibly sub-pixel)
original-image pixel coordinates.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple

Point = Tuple[float, float]


class Source(str, enum.Enum):
    TWITTER = "twitter"
    INSTAGRAM = "instagram"
    OTHER = "other"


class Gender(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"


class AgeCategory(str, enum.Enum):
    CHILD = "child"
    ADOLESCENT = "adolescent"
    ADULT = "adult"
    OLDER_ADULT = "older_adult"


AGE_CATEGORIES = tuple(AgeCategory)


@dataclass(frozen=True, order=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box must have positive size, got w={self.w} h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box origin must be non-negative, got ({self.x}, {self.y})")

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def top_left(self) -> Point:
        return (self.x, self.y)

    @property
    def top_right(self) -> Point:
        return (self.x + self.w, self.y)

    @property
    def center(self) -> Point:
        return (self.x + self.w / 2, self.y + self.h / 2)

    @property
    def area(self) -> float:
        return self.w * self.h

    def union(self, other: "BoundingBox") -> "BoundingBox":
        x = min(self.x, other.x)
        y = min(self.y, other.y)
        return BoundingBox(x, y, max(self.right, other.right) - x, max(self.bottom, other.bottom) - y)

    def fits_within(self, width: float, height: float) -> bool:
        return self.right <= width and self.bottom <= height

    def as_list(self) -> list:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, values) -> "BoundingBox":
        x, y, w, h = values
        return cls(float(x), float(y), float(w), float(h))


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    """Area of the overlap rectangle; 0 for disjoint or edge-touching boxes."""
    dx = min(a.right, b.right) - max(a.x, b.x)
    dy = min(a.bottom, b.bottom) - max(a.y, b.y)
    return max(0.0, dx) * max(0.0, dy)


def intersects(a: BoundingBox, b: BoundingBox) -> bool:
    return intersection_area(a, b) > 0


def point_distance(p: Point, q: Point) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


@dataclass(frozen=True)
class PostRecord:
    post_id: str
    source: Source
    image_path: str
    tags: Tuple[str, ...] = ()


@dataclass(frozen=True)
class CollageImage:
    image_id: str
    post: PostRecord
    width: int
    height: int
    dhash: Optional[int] = None
    classifier_score: Optional[float] = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")


@dataclass(frozen=True)
class Participant:
    participant_id: str
    meeting_id: str
    face_box: BoundingBox
    embedding: Optional[Tuple[float, ...]] = None
    age_years: Optional[float] = None
    age_category: Optional[AgeCategory] = None
    gender: Optional[Gender] = None
    username: Optional[str] = None
    username_generic: bool = False

    def __post_init__(self):
        if self.embedding is not None and len(self.embedding) != 128:
            raise ValueError(f"face embedding must have 128 components, got {len(self.embedding)}")
