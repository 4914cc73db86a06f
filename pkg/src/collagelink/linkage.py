"""Cross-meeting identity linkage by username and face embedding."""
from __future__ import annotations

import enum
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DimensionError
from .model import Participant

DEFAULT_FACE_THRESHOLD = 0.3
EMBEDDING_DIM = 128


class Evidence(str, enum.Enum):
    USERNAME = "username"
    FACE = "face"


@dataclass(frozen=True, order=True)
class MatchPair:
    a: str
    b: str
    evidence: Evidence
    distance: Optional[float] = None

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("a match pair needs two distinct participants")
        if (self.distance is None) == (self.evidence is Evidence.FACE):
            raise ValueError("distance is required for face evidence and only for face evidence")


@dataclass(frozen=True)
class IdentityCluster:
    identity_id: str
    members: FrozenSet[str]
    canonical_username: Optional[str]
    meetings: FrozenSet[str]

    def to_dict(self) -> dict:
        return {
            "identity_id": self.identity_id,
            "members": sorted(self.members),
            "canonical_username": self.canonical_username,
            "meetings": sorted(self.meetings),
        }


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1

    def groups(self) -> List[List[int]]:
        out: Dict[int, List[int]] = defaultdict(list)
        for i in range(len(self.parent)):
            out[self.find(i)].append(i)
        return list(out.values())


def _distances(matrix: np.ndarray, i: int, js: np.ndarray) -> np.ndarray:
    # one formula for both scans so they agree bit-for-bit at the threshold
    diff = matrix[js] - matrix[i]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _embedding_matrix(participants: Sequence[Participant]) -> Tuple[List[Participant], np.ndarray]:
    with_emb = sorted((p for p in participants if p.embedding is not None), key=lambda p: p.participant_id)
    for p in with_emb:
        if len(p.embedding) != EMBEDDING_DIM:
            raise DimensionError(f"{p.participant_id}: embedding length {len(p.embedding)} != {EMBEDDING_DIM}")
    matrix = np.array([p.embedding for p in with_emb], dtype=np.float64).reshape(len(with_emb), EMBEDDING_DIM)
    return with_emb, matrix


def _pairs_from(ids: List[str], hits: Iterable[Tuple[int, int, float]]) -> List[MatchPair]:
    pairs = []
    for i, j, d in hits:
        a, b = sorted((ids[i], ids[j]))
        pairs.append(MatchPair(a, b, Evidence.FACE, float(d)))
    pairs.sort(key=lambda m: (m.a, m.b))
    return pairs


def pairwise_face_matches_naive(participants: Sequence[Participant],
                                threshold: float = DEFAULT_FACE_THRESHOLD) -> List[MatchPair]:
    """Full O(n^2) scan; reference for the pruned matcher."""
    with_emb, matrix = _embedding_matrix(participants)
    n = len(with_emb)
    hits = []
    for i in range(n - 1):
        js = np.arange(i + 1, n)
        d = _distances(matrix, i, js)
        for j, dist in zip(js[d <= threshold], d[d <= threshold]):
            hits.append((i, int(j), dist))
    return _pairs_from([p.participant_id for p in with_emb], hits)


def pairwise_face_matches(participants: Sequence[Participant],
                          threshold: float = DEFAULT_FACE_THRESHOLD) -> List[MatchPair]:
    """All participant pairs whose face embeddings lie within ``threshold``.

    Vectors are sorted by L2 norm; by the reverse triangle inequality a pair
    whose norms differ by more than ``threshold`` cannot match, so each row
    only scans the window of later rows with a norm gap inside the threshold.
    """
    with_emb, matrix = _embedding_matrix(participants)
    n = len(with_emb)
    if n < 2:
        return []
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix))
    order = np.argsort(norms, kind="stable")
    sorted_norms = norms[order]
    # widen the window slightly so rounding in the norms never prunes a true match
    limit = threshold + 1e-9 * (1.0 + float(sorted_norms[-1]))
    ends = np.searchsorted(sorted_norms, sorted_norms + limit, side="right")
    hits = []
    for pos in range(n - 1):
        end = int(ends[pos])
        if end <= pos + 1:
            continue
        i = int(order[pos])
        js = order[pos + 1:end]
        d = _distances(matrix, i, js)
        mask = d <= threshold
        for j, dist in zip(js[mask], d[mask]):
            hits.append((i, int(j), dist))
    return _pairs_from([p.participant_id for p in with_emb], hits)


def username_matches(participants: Sequence[Participant], exclude_generic: bool = True) -> List[MatchPair]:
    """Chain participants sharing a normalized username (consecutive ids only)."""
    by_name: Dict[str, List[str]] = defaultdict(list)
    for p in participants:
        if not p.username or (exclude_generic and p.username_generic):
            continue
        by_name[p.username].append(p.participant_id)
    pairs = []
    for ids in by_name.values():
        ids = sorted(set(ids))
        pairs.extend(MatchPair(a, b, Evidence.USERNAME) for a, b in zip(ids, ids[1:]))
    pairs.sort(key=lambda m: (m.a, m.b))
    return pairs


def _canonical_username(members: Sequence[Participant]) -> Optional[str]:
    counts = Counter(p.username for p in members if p.username)
    if not counts:
        return None
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def clusters_from_pairs(participants: Sequence[Participant], pairs: Iterable[MatchPair]) -> List[IdentityCluster]:
    ordered = sorted(participants, key=lambda p: p.participant_id)
    index = {p.participant_id: i for i, p in enumerate(ordered)}
    if len(index) != len(ordered):
        raise ValueError("participant ids must be unique")
    uf = UnionFind(len(ordered))
    for m in pairs:
        uf.union(index[m.a], index[m.b])
    groups = sorted((sorted(g) for g in uf.groups()), key=lambda g: g[0])
    clusters = []
    width = max(4, len(str(len(groups))))
    for k, group in enumerate(groups, start=1):
        members = [ordered[i] for i in group]
        clusters.append(IdentityCluster(
            identity_id=f"id{k:0{width}d}",
            members=frozenset(p.participant_id for p in members),
            canonical_username=_canonical_username(members),
            meetings=frozenset(p.meeting_id for p in members),
        ))
    return clusters


def link_identities(participants: Sequence[Participant], face_threshold: float = DEFAULT_FACE_THRESHOLD,
                    use_username: bool = True, use_face: bool = True,
                    exclude_generic: bool = True) -> List[IdentityCluster]:
    """Single-linkage identity clusters over username and face evidence.

    Identity ids are assigned in order of each cluster's smallest member id.
    """
    if not (use_username or use_face):
        raise ConfigError("link_identities needs at least one evidence channel")
    pairs: List[MatchPair] = []
    if use_username:
        pairs.extend(username_matches(participants, exclude_generic))
    if use_face:
        pairs.extend(pairwise_face_matches(participants, face_threshold))
    return clusters_from_pairs(participants, pairs)
