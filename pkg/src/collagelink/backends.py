"""Detection providers and the per-image DetectionBundle contract.

Only the fixture backend ships with the package: it reads a JSON sidecar
``<image>.bundle.json`` next to each image. Sidecar schema (version 1)::

    {
      "schema_version": 1,
      "image_id": "p001",                 # optional, defaults to the post id
      "collage_score": 0.97,              # optional, [0, 1]
      "embedding_model": "dlib-128",      # optional, tags face embeddings
      "image_embedding": [..floats..],    # optional, any length
      "primary_faces": [FACE, ...],
      "secondary_faces": [FACE, ...],
      "words": [{"text": "Dana", "box": [x, y, w, h], "confidence": 0.9}, ...]
    }

    FACE = {"box": [x, y, w, h], "embedding": [128 floats] | null,
            "age_estimates": [float, ...], "gender": "male" | "female" | null}

Real model adapters implement :class:`Backend` and register themselves with
:func:`register_backend`.
"""
from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple

from .errors import BackendUnavailableError, BundleParseError, ImageDecodeError
from .fusion import DetectedFace, Detector
from .model import BoundingBox, Gender
from .username import WordToken

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SIDECAR_SUFFIX = ".bundle.json"
CAPABILITIES = frozenset({"faces", "embeddings", "age", "gender", "words", "collage_score"})


@dataclass(frozen=True)
class DetectionBundle:
    image_id: str
    collage_score: Optional[float] = None
    primary_faces: Tuple[DetectedFace, ...] = ()
    secondary_faces: Tuple[DetectedFace, ...] = ()
    word_tokens: Tuple[WordToken, ...] = ()
    image_embedding: Optional[Tuple[float, ...]] = None
    embedding_model: Optional[str] = None

    def check_bounds(self, width: float, height: float) -> None:
        boxes = [("primary_faces", f.box) for f in self.primary_faces]
        boxes += [("secondary_faces", f.box) for f in self.secondary_faces]
        boxes += [("words", t.box) for t in self.word_tokens]
        for name, box in boxes:
            if not box.fits_within(width, height):
                raise BundleParseError(f"box {box.as_list()} outside {width}x{height} image", name)


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    capabilities: FrozenSet[str]
    thread_safe: bool = True

    def __post_init__(self):
        if not self.capabilities:
            raise ValueError("a backend must declare at least one capability")
        unknown = set(self.capabilities) - CAPABILITIES
        if unknown:
            raise ValueError(f"unknown capabilities: {sorted(unknown)}")


class Backend:
    """Interface every detection provider implements."""

    descriptor: BackendDescriptor

    def analyze_collage(self, image_path, image_id: str) -> DetectionBundle:
        raise NotImplementedError


# --------------------------------------------------------------------------
# sidecar parsing


def _require_list(obj, name):
    if not isinstance(obj, list):
        raise BundleParseError(f"expected a list, got {type(obj).__name__}", name)
    return obj


def _parse_floats(obj, name, length=None) -> Tuple[float, ...]:
    values = _require_list(obj, name)
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise BundleParseError("expected numbers", name) from None
    if any(not math.isfinite(v) for v in out):
        raise BundleParseError("non-finite value", name)
    if length is not None and len(out) != length:
        raise BundleParseError(f"expected {length} values, got {len(out)}", name)
    return out


def _parse_box(obj, name) -> BoundingBox:
    values = _parse_floats(obj, name, 4)
    try:
        return BoundingBox(*values)
    except ValueError as exc:
        raise BundleParseError(str(exc), name) from None


def _parse_face(obj, name, detector: Detector) -> DetectedFace:
    if not isinstance(obj, dict):
        raise BundleParseError("expected an object", name)
    if "box" not in obj:
        raise BundleParseError("missing", f"{name}.box")
    box = _parse_box(obj["box"], f"{name}.box")
    emb = obj.get("embedding")
    embedding = None if emb is None else _parse_floats(emb, f"{name}.embedding", 128)
    ages = _parse_floats(obj.get("age_estimates", []), f"{name}.age_estimates")
    if len(ages) > 2:
        raise BundleParseError("at most two estimates allowed", f"{name}.age_estimates")
    if any(a < 0 for a in ages):
        raise BundleParseError("negative age", f"{name}.age_estimates")
    gender = obj.get("gender")
    if gender is not None:
        try:
            gender = Gender(gender)
        except ValueError:
            raise BundleParseError(f"unknown gender {gender!r}", f"{name}.gender") from None
    return DetectedFace(box, detector, embedding, ages, gender)


def _parse_word(obj, name) -> WordToken:
    if not isinstance(obj, dict):
        raise BundleParseError("expected an object", name)
    text = obj.get("text")
    if not isinstance(text, str) or not text or any(c.isspace() for c in text):
        raise BundleParseError("expected a single non-empty word", f"{name}.text")
    if "box" not in obj:
        raise BundleParseError("missing", f"{name}.box")
    conf = obj.get("confidence")
    if conf is not None:
        if not isinstance(conf, (int, float)) or not 0 <= conf <= 1:
            raise BundleParseError("expected a number in [0, 1]", f"{name}.confidence")
        conf = float(conf)
    return WordToken(text, _parse_box(obj["box"], f"{name}.box"), conf)


def parse_bundle(doc: dict, image_id: str) -> DetectionBundle:
    if not isinstance(doc, dict):
        raise BundleParseError("bundle must be a JSON object", "<root>")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise BundleParseError(f"unsupported version {version!r}", "schema_version")
    score = doc.get("collage_score")
    if score is not None:
        if not isinstance(score, (int, float)) or not 0 <= score <= 1:
            raise BundleParseError("expected a number in [0, 1]", "collage_score")
        score = float(score)
    emb = doc.get("image_embedding")
    image_embedding = None if emb is None else _parse_floats(emb, "image_embedding")
    model = doc.get("embedding_model")
    if model is not None and not isinstance(model, str):
        raise BundleParseError("expected a string", "embedding_model")
    primary = tuple(
        _parse_face(f, f"primary_faces[{i}]", Detector.PRIMARY)
        for i, f in enumerate(_require_list(doc.get("primary_faces", []), "primary_faces"))
    )
    secondary = tuple(
        _parse_face(f, f"secondary_faces[{i}]", Detector.SECONDARY)
        for i, f in enumerate(_require_list(doc.get("secondary_faces", []), "secondary_faces"))
    )
    words = tuple(
        _parse_word(w, f"words[{i}]") for i, w in enumerate(_require_list(doc.get("words", []), "words"))
    )
    return DetectionBundle(
        image_id=str(doc.get("image_id", image_id)),
        collage_score=score,
        primary_faces=primary,
        secondary_faces=secondary,
        word_tokens=words,
        image_embedding=image_embedding,
        embedding_model=model,
    )


def _face_doc(face: DetectedFace) -> dict:
    return {
        "box": face.box.as_list(),
        "embedding": list(face.embedding) if face.embedding is not None else None,
        "age_estimates": list(face.age_estimates),
        "gender": face.gender_estimate.value if face.gender_estimate else None,
    }


def bundle_to_doc(bundle: DetectionBundle) -> dict:
    """Inverse of :func:`parse_bundle`."""
    return {
        "schema_version": SCHEMA_VERSION,
        "image_id": bundle.image_id,
        "collage_score": bundle.collage_score,
        "embedding_model": bundle.embedding_model,
        "image_embedding": list(bundle.image_embedding) if bundle.image_embedding is not None else None,
        "primary_faces": [_face_doc(f) for f in bundle.primary_faces],
        "secondary_faces": [_face_doc(f) for f in bundle.secondary_faces],
        "words": [
            {"text": t.text, "box": t.box.as_list(), "confidence": t.confidence} for t in bundle.word_tokens
        ],
    }


def sidecar_path(image_path) -> Path:
    p = Path(image_path)
    return p.with_name(p.name + SIDECAR_SUFFIX)


class FixtureBackend(Backend):
    """Serves detections stored in JSON sidecars; deterministic and offline."""

    descriptor = BackendDescriptor("fixture", CAPABILITIES)

    def analyze_collage(self, image_path, image_id: str) -> DetectionBundle:
        image_path = Path(image_path)
        if not image_path.is_file():
            raise ImageDecodeError(f"image not found: {image_path}")
        side = sidecar_path(image_path)
        if not side.is_file():
            log.warning("no sidecar for %s; treating as an empty detection bundle", image_path)
            return DetectionBundle(image_id=image_id)
        try:
            doc = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise BundleParseError(f"invalid JSON ({exc.msg} at line {exc.lineno})", "<root>") from None
        return parse_bundle(doc, image_id)


class UnavailableBackend(Backend):
    """Placeholder for a model adapter whose runtime is not installed."""

    def __init__(self, name: str, capabilities: FrozenSet[str]):
        self.descriptor = BackendDescriptor(name, frozenset(capabilities))

    def analyze_collage(self, image_path, image_id: str) -> DetectionBundle:
        raise BackendUnavailableError(f"backend {self.descriptor.name!r} is not available in this installation")


_REGISTRY: Dict[str, Callable[[], Backend]] = {"fixture": FixtureBackend}
_lock = threading.Lock()


def register_backend(name: str, factory: Callable[[], Backend]) -> None:
    with _lock:
        _REGISTRY[name] = factory


def available_backends() -> List[str]:
    return sorted(_REGISTRY)


def get_backend(name: str) -> Backend:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise BackendUnavailableError(f"unknown backend {name!r}; available: {available_backends()}") from None
    return factory()


def classify_collage(bundle: DetectionBundle, threshold: float) -> bool:
    """Whether an image counts as a meeting collage.

    Images without a classifier score pass (with a warning) so a backend that
    lacks the capability never silently drops data.
    """
    if bundle.collage_score is None:
        log.warning("image %s has no collage score; keeping it", bundle.image_id)
        return True
    return bundle.collage_score >= threshold
