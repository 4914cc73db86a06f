"""Summary statistics over a pipeline run and their canonical JSON form."""
from __future__ import annotations

import json
import math
import os
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field, fields
from statistics import fmean, median
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import EmptyGraphError, WriteError
from .fusion import bin_age
from .graph import ComponentStats, SocialGraphData, component_stats
from .linkage import IdentityCluster, MatchPair, UnionFind
from .model import AGE_CATEGORIES, Participant

FLOAT_DIGITS = 4


@dataclass(frozen=True)
class UsernameObservation:
    meeting_id: str
    text: str
    word_count: int
    generic: bool
    assigned: bool


@dataclass
class StatisticsReport:
    images_ingested: int = 0
    images_analyzed: int = 0
    images_skipped: int = 0
    images_classified_collage: int = 0
    images_kept_after_dedup: int = 0
    total_faces: int = 0
    mean_participants_per_collage: float = 0.0
    aged_faces: int = 0
    age_mean: Optional[float] = None
    age_median: Optional[float] = None
    age_category_shares: Dict[str, float] = field(default_factory=dict)
    gender_counts: Dict[str, int] = field(default_factory=dict)
    username_observations: int = 0
    distinct_usernames: int = 0
    multiword_usernames: int = 0
    username_word_count_histogram: Dict[int, int] = field(default_factory=dict)
    reused_usernames: int = 0
    reused_multiword_usernames: int = 0
    generic_username_observations: int = 0
    repeated_face_identities: int = 0
    identity_clusters: int = 0
    graph_nodes: int = 0
    graph_edges: int = 0
    graph: ComponentStats = field(default_factory=ComponentStats)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["username_word_count_histogram"] = {
            str(k): v for k, v in sorted(self.username_word_count_histogram.items())
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StatisticsReport":
        known = {f.name for f in fields(cls)}
        missing = known - set(d)
        if missing:
            raise ValueError(f"report is missing fields: {sorted(missing)}")
        kwargs = {k: d[k] for k in known}
        kwargs["graph"] = ComponentStats(**d["graph"])
        kwargs["username_word_count_histogram"] = {
            int(k): v for k, v in d["username_word_count_histogram"].items()
        }
        return cls(**kwargs)


# --------------------------------------------------------------------------
# canonical JSON


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"cannot encode non-finite float {obj}")
        text = f"{obj:.{FLOAT_DIGITS}f}"
        return "0.0000" if text == "-0.0000" else text
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k, ensure_ascii=False)}: {_encode(v, indent, level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(pad + _encode(v, indent, level + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def canonical_json(obj, indent: int = 2) -> str:
    """Sorted keys, fixed 4-decimal floats, trailing newline."""
    return _encode(obj, indent, 0) + "\n"


def write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise WriteError(f"cannot write {os.fspath(path)}: {exc}") from exc


def emit_report(report: StatisticsReport, path) -> None:
    write_text(path, canonical_json(report.to_dict()))


def load_report(path) -> StatisticsReport:
    with open(path, encoding="utf-8") as fh:
        return StatisticsReport.from_dict(json.load(fh))


# --------------------------------------------------------------------------
# statistics


def repeated_face_identities(participants: Sequence[Participant], face_pairs: Iterable[MatchPair]) -> int:
    """Face-only match groups whose members span two or more meetings."""
    ids = sorted(p.participant_id for p in participants)
    index = {pid: i for i, pid in enumerate(ids)}
    meeting = {p.participant_id: p.meeting_id for p in participants}
    uf = UnionFind(len(ids))
    for m in face_pairs:
        uf.union(index[m.a], index[m.b])
    return sum(1 for g in uf.groups() if len({meeting[ids[i]] for i in g}) >= 2)


def build_report(*, images_ingested: int, images_analyzed: int, images_skipped: int,
                 images_classified_collage: int, images_kept_after_dedup: int,
                 participants: Sequence[Participant], usernames: Sequence[UsernameObservation],
                 face_pairs: Sequence[MatchPair], clusters: Sequence[IdentityCluster],
                 graph: SocialGraphData) -> StatisticsReport:
    r = StatisticsReport(
        images_ingested=images_ingested,
        images_analyzed=images_analyzed,
        images_skipped=images_skipped,
        images_classified_collage=images_classified_collage,
        images_kept_after_dedup=images_kept_after_dedup,
    )
    r.total_faces = len(participants)
    if images_kept_after_dedup:
        r.mean_participants_per_collage = r.total_faces / images_kept_after_dedup

    ages = [p.age_years for p in participants if p.age_years is not None]
    r.aged_faces = len(ages)
    if ages:
        r.age_mean = fmean(ages)
        r.age_median = float(median(ages))
    cats = Counter(bin_age(a).value for a in ages)
    r.age_category_shares = {c.value: (cats[c.value] / len(ages) if ages else 0.0) for c in AGE_CATEGORIES}
    r.gender_counts = dict(sorted(Counter(p.gender.value for p in participants if p.gender).items()))

    r.username_observations = len(usernames)
    r.generic_username_observations = sum(1 for u in usernames if u.generic)
    words: Dict[str, int] = {}
    meetings: Dict[str, set] = defaultdict(set)
    for u in usernames:
        words[u.text] = u.word_count
        meetings[u.text].add(u.meeting_id)
    r.distinct_usernames = len(words)
    r.multiword_usernames = sum(1 for n in words.values() if n > 1)
    r.username_word_count_histogram = dict(sorted(Counter(words.values()).items()))
    reused = [t for t, ms in meetings.items() if len(ms) >= 2]
    r.reused_usernames = len(reused)
    r.reused_multiword_usernames = sum(1 for t in reused if words[t] > 1)

    r.repeated_face_identities = repeated_face_identities(participants, face_pairs)
    r.identity_clusters = len(clusters)
    r.graph_nodes = len(graph.nodes)
    r.graph_edges = len(graph.edges)
    try:
        r.graph = component_stats(graph)
    except EmptyGraphError:
        r.graph = ComponentStats()
    return r


def summary_lines(report: StatisticsReport) -> List[str]:
    g = report.graph
    lines = [
        f"images: {report.images_ingested} ingested, {report.images_classified_collage} collages, "
        f"{report.images_kept_after_dedup} after dedup ({report.images_skipped} skipped)",
        f"faces: {report.total_faces} ({report.mean_participants_per_collage:.2f} per collage)",
    ]
    if report.age_mean is not None:
        lines.append(f"age: mean {report.age_mean:.2f}, median {report.age_median:.2f} over {report.aged_faces} faces")
    shares = ", ".join(f"{k} {v * 100:.2f}%" for k, v in report.age_category_shares.items())
    if shares:
        lines.append(f"age categories: {shares}")
    if report.gender_counts:
        lines.append("gender: " + ", ".join(f"{k} {v}" for k, v in report.gender_counts.items()))
    lines.append(
        f"usernames: {report.distinct_usernames} distinct, {report.multiword_usernames} multi-word, "
        f"{report.reused_usernames} reused across meetings"
    )
    hist = ", ".join(f"{k}w:{v}" for k, v in sorted(report.username_word_count_histogram.items()))
    if hist:
        lines.append(f"word counts: {hist}")
    lines.append(f"repeated faces: {report.repeated_face_identities}; identities: {report.identity_clusters}")
    lines.append(
        f"graph: {report.graph_nodes} nodes, {report.graph_edges} edges, {g.component_count} components "
        f"(mean {g.mean_nodes:.1f} nodes / {g.mean_edges:.1f} edges; largest {g.largest_nodes}/{g.largest_edges})"
    )
    return lines
