"""JSONL post manifest ingestion.

One JSON object per line::

    {"post_id": "tw-001", "source": "twitter", "image_path": "img/tw-001.png", "tags": ["#zoomparty"]}

Relative image paths resolve against the manifest's directory. Blank lines
are ignored.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import List

from .errors import DuplicatePostError, ManifestError
from .model import PostRecord, Source


def parse_manifest_line(line: str, lineno: int, base_dir: Path, require_images: bool = True) -> PostRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON: {exc.msg}", lineno) from None
    if not isinstance(obj, dict):
        raise ManifestError("expected a JSON object", lineno)
    post_id = obj.get("post_id")
    if not isinstance(post_id, str) or not post_id:
        raise ManifestError("missing or empty post_id", lineno)
    image_path = obj.get("image_path")
    if not isinstance(image_path, str) or not image_path:
        raise ManifestError("missing or empty image_path", lineno)
    try:
        source = Source(obj.get("source", "other"))
    except ValueError:
        raise ManifestError(f"unknown source {obj.get('source')!r}", lineno) from None
    tags = obj.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ManifestError("tags must be a list of strings", lineno)
    path = Path(image_path)
    if not path.is_absolute():
        path = base_dir / path
    if require_images and not path.is_file():
        raise ManifestError(f"image_path does not exist: {path}", lineno)
    return PostRecord(post_id, source, str(path), tuple(tags))


def ingest_manifest(path, require_images: bool = True) -> List[PostRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    records: List[PostRecord] = []
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        rec = parse_manifest_line(line, lineno, path.parent, require_images)
        if rec.post_id in seen:
            raise DuplicatePostError(f"duplicate post_id {rec.post_id!r} (first seen on line {seen[rec.post_id]})", lineno)
        seen[rec.post_id] = lineno
        records.append(rec)
    return records
