"""Merge two face detectors' output and aggregate per-face age and gender."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from statistics import fmean
from typing import FrozenSet, List, Optional, Sequence, Tuple

from .errors import InvalidAgeError
from .model import AgeCategory, BoundingBox, Gender, intersection_area


class Detector(str, enum.Enum):
    PRIMARY = "primary_detector"
    SECONDARY = "secondary_detector"


@dataclass(frozen=True)
class DetectedFace:
    box: BoundingBox
    detector: Detector = Detector.PRIMARY
    embedding: Optional[Tuple[float, ...]] = None
    age_estimates: Tuple[float, ...] = ()
    gender_estimate: Optional[Gender] = None

    def __post_init__(self):
        if self.embedding is not None and len(self.embedding) != 128:
            raise ValueError(f"face embedding must have 128 components, got {len(self.embedding)}")
        if len(self.age_estimates) > 2:
            raise ValueError("a detected face carries at most two age estimates")


@dataclass(frozen=True)
class FusedFace:
    box: BoundingBox
    contributing: FrozenSet[Detector]
    embedding: Optional[Tuple[float, ...]] = None
    age_estimates: Tuple[float, ...] = ()
    gender_estimates: Tuple[Gender, ...] = ()

    @property
    def age(self) -> Optional[float]:
        return aggregate_age(self.age_estimates)

    @property
    def gender(self) -> Optional[Gender]:
        return resolve_gender(self.gender_estimates)


def _secondary_key(face: DetectedFace):
    return (
        face.box.x, face.box.y, face.box.w, face.box.h,
        face.age_estimates,
        face.gender_estimate.value if face.gender_estimate else "",
        face.embedding or (),
    )


def _as_fused(face: DetectedFace) -> FusedFace:
    return FusedFace(
        box=face.box,
        contributing=frozenset({face.detector}),
        embedding=face.embedding,
        age_estimates=tuple(face.age_estimates),
        gender_estimates=(face.gender_estimate,) if face.gender_estimate else (),
    )


def fuse_face_detections(primary: Sequence[DetectedFace], secondary: Sequence[DetectedFace]) -> List[FusedFace]:
    """Combine two detectors' faces for one collage.

    Every primary face is kept with its box unchanged. A secondary face that
    overlaps some primary face (positive intersection area) is folded into
    the primary face it overlaps most, lowest index on ties; it then adds its
    age and gender estimates and fills in a missing embedding. Secondary
    faces overlapping no primary face are appended on their own, sorted by
    box, so the result does not depend on the secondary list order.
    Secondary faces are never merged with each other.
    """
    fused = [_as_fused(f) for f in primary]
    ages: List[List[float]] = [list(f.age_estimates) for f in fused]
    genders: List[List[Gender]] = [list(f.gender_estimates) for f in fused]
    embeddings = [f.embedding for f in fused]
    contributing = [set(f.contributing) for f in fused]
    unmatched: List[DetectedFace] = []

    for face in sorted(secondary, key=_secondary_key):
        best, best_area = -1, 0.0
        for idx, p in enumerate(primary):
            area = intersection_area(p.box, face.box)
            if area > best_area:
                best, best_area = idx, area
        if best < 0:
            unmatched.append(face)
            continue
        ages[best].extend(face.age_estimates)
        if face.gender_estimate is not None:
            genders[best].append(face.gender_estimate)
        if embeddings[best] is None and face.embedding is not None:
            embeddings[best] = face.embedding
        contributing[best].add(face.detector)

    out = [
        FusedFace(f.box, frozenset(contributing[i]), embeddings[i], tuple(ages[i]), tuple(genders[i]))
        for i, f in enumerate(fused)
    ]
    out.extend(_as_fused(f) for f in unmatched)
    return out


def aggregate_age(estimates: Sequence[float]) -> Optional[float]:
    """Mean of the available age estimates; ``None`` when there are none."""
    for e in estimates:
        if not e >= 0:
            raise InvalidAgeError(f"negative age estimate {e}")
    if not estimates:
        return None
    return fmean(estimates)


def bin_age(x: float) -> AgeCategory:
    if not x >= 0:
        raise InvalidAgeError(f"negative age {x}")
    if x <= 12:
        return AgeCategory.CHILD
    if x <= 17:
        return AgeCategory.ADOLESCENT
    if x < 65:
        return AgeCategory.ADULT
    return AgeCategory.OLDER_ADULT


def resolve_gender(estimates: Sequence[Optional[Gender]]) -> Optional[Gender]:
    # conflicting sources resolve to unknown rather than picking one
    values = {Gender(e) for e in estimates if e is not None}
    if len(values) == 1:
        return values.pop()
    return None
