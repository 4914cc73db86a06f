"""Username reconstruction from single-word scene-text detections.

OCR yields one box per word. Words are filtered against UI vocabulary and a
dictionary, then glued into multi-word names by repeatedly joining each word
to the nearest word whose top-left corner lies within ``threshold`` pixels of
its top-right corner.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources
from os import PathLike
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .model import BoundingBox, point_distance

log = logging.getLogger(__name__)

DEFAULT_MERGE_THRESHOLD = 10.0


@dataclass(frozen=True)
class WordToken:
    text: str
    box: BoundingBox
    confidence: Optional[float] = None

    def __post_init__(self):
        if not self.text or any(c.isspace() for c in self.text):
            raise ValueError(f"word token must be a single non-empty word, got {self.text!r}")


@dataclass(frozen=True)
class UsernameCandidate:
    text: str
    box: BoundingBox
    word_count: int
    generic: bool = False


def parse_word_list(lines: Iterable[str]) -> FrozenSet[str]:
    words = set()
    for line in lines:
        line = " ".join(line.split())
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return frozenset(words)


def load_word_list(path: Union[str, PathLike]) -> FrozenSet[str]:
    """Read a one-entry-per-line word file (case-insensitive, ``#`` comments)."""
    with open(path, encoding="utf-8") as fh:
        return parse_word_list(fh)


def _bundled(name: str) -> FrozenSet[str]:
    text = resources.files("collagelink").joinpath("data", name).read_text(encoding="utf-8")
    return parse_word_list(text.splitlines())


def default_ui_words() -> FrozenSet[str]:
    return _bundled("ui_words.txt")


def default_generic_names() -> FrozenSet[str]:
    return _bundled("generic_names.txt")


def filter_tokens(tokens: Sequence[WordToken], ui_words: Iterable[str] = None,
                  dictionary: Iterable[str] = ()) -> List[WordToken]:
    ui = default_ui_words() if ui_words is None else frozenset(w.casefold() for w in ui_words)
    dic = frozenset(w.casefold() for w in dictionary)
    return [t for t in tokens if t.text.casefold() not in ui and t.text.casefold() not in dic]


@dataclass(frozen=True)
class _Chunk:
    # ordered words so merged text is always left-to-right
    words: Tuple[Tuple[float, str], ...]
    box: BoundingBox

    @property
    def text(self) -> str:
        return " ".join(w for _, w in self.words)

    def reading_key(self):
        b = self.box
        return (b.y, b.x, self.text, b.w, b.h)

    def partner_key(self, dist: float):
        b = self.box
        return (dist, b.x, b.y, self.text, b.w, b.h)


def _to_chunk(token) -> _Chunk:
    # a candidate fed back in keeps its words anchored at its own x
    words = tuple((token.box.x, w) for w in token.text.split())
    return _Chunk(words, token.box)


def _merge(a: _Chunk, b: _Chunk) -> _Chunk:
    words = tuple(sorted(a.words + b.words, key=lambda p: p[0]))
    return _Chunk(words, a.box.union(b.box))


def _merge_pass(chunks: List[_Chunk], threshold: float) -> Tuple[List[_Chunk], int]:
    order = sorted(chunks, key=_Chunk.reading_key)
    consumed = [False] * len(order)
    result: List[_Chunk] = []
    merges = 0
    for i, t in enumerate(order):
        if consumed[i]:
            continue
        anchor = t.box.top_right
        best, best_key = -1, None
        for j, c in enumerate(order):
            if j == i or consumed[j]:
                continue
            key = c.partner_key(point_distance(anchor, c.box.top_left))
            if best_key is None or key < best_key:
                best, best_key = j, key
        if best >= 0 and best_key[0] <= threshold:
            consumed[i] = consumed[best] = True
            result.append(_merge(t, order[best]))
            merges += 1
    result.extend(c for c, used in zip(order, consumed) if not used)
    return result, merges


def merge_word_tokens(tokens: Sequence[Union[WordToken, UsernameCandidate]],
                      threshold: float = DEFAULT_MERGE_THRESHOLD,
                      max_passes: Optional[int] = None) -> List[UsernameCandidate]:
    """Join adjacent words of one collage into username candidates.

    Each pass visits words in reading order (top to bottom, then left to
    right). A word is joined with the not-yet-merged word whose top-left
    corner is nearest to its own top-right corner when that distance is at
    most ``threshold``; ties prefer smaller x, then smaller y, then text.
    Passes repeat until one makes no merge (or ``max_passes`` is reached).
    Output is sorted in reading order.
    """
    chunks = [_to_chunk(t) for t in tokens]
    passes = 0
    while max_passes is None or passes < max_passes:
        chunks, merges = _merge_pass(chunks, threshold)
        passes += 1
        if merges == 0:
            break
    log.debug("word merge: %d tokens -> %d candidates in %d passes", len(tokens), len(chunks), passes)
    chunks.sort(key=_Chunk.reading_key)
    return [UsernameCandidate(c.text, c.box, len(c.words)) for c in chunks]


def normalize_username(raw: str, generic_names: Iterable[str] = None) -> Tuple[str, bool]:
    """Case-fold and collapse whitespace; flag exact matches of generic names."""
    names = default_generic_names() if generic_names is None else frozenset(n.casefold() for n in generic_names)
    normalized = " ".join(raw.casefold().split())
    return normalized, normalized in names


def assign_usernames(face_boxes: Sequence[BoundingBox],
                     candidates: Sequence[UsernameCandidate]) -> Tuple[Dict[int, UsernameCandidate], List[UsernameCandidate]]:
    """Attach each username to the face box it sits under.

    A face qualifies for a username when the face center is not below the
    username box center; among qualifying faces the one whose center is
    nearest wins. When several usernames pick the same face, the nearest keeps
    it and the rest stay unassigned.
    """
    claims: Dict[int, List[Tuple[float, str, int]]] = {}
    for ci, cand in enumerate(candidates):
        cx, cy = cand.box.center
        best, best_key = None, None
        for fi, box in enumerate(face_boxes):
            fx, fy = box.center
            if fy > cy:
                continue
            key = (point_distance((fx, fy), (cx, cy)), fi)
            if best_key is None or key < best_key:
                best, best_key = fi, key
        if best is not None:
            claims.setdefault(best, []).append((best_key[0], cand.text, ci))
    assigned: Dict[int, UsernameCandidate] = {}
    taken = set()
    for fi, entries in claims.items():
        entries.sort()
        ci = entries[0][2]
        assigned[fi] = candidates[ci]
        taken.add(ci)
    unassigned = [c for i, c in enumerate(candidates) if i not in taken]
    return assigned, unassigned
