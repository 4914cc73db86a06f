"""End-to-end run: ingest, classify, dedup, fuse, read usernames, link, graph, report."""
from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from PIL import Image, UnidentifiedImageError

from .backends import Backend, DetectionBundle, classify_collage, get_backend
from .dedup import DedupCriteria, DedupOutcome, HashedImage, compute_dhash, dedup, hash_to_hex
from .errors import (BackendUnavailableError, BundleParseError, ConfigError,
                     ImageDecodeError, IncompatibleEmbeddingError)
from .fusion import FusedFace, aggregate_age, bin_age, fuse_face_detections, resolve_gender
from .graph import SocialGraphData, build_social_graph, edge_list_text
from .linkage import (DEFAULT_FACE_THRESHOLD, IdentityCluster, MatchPair, clusters_from_pairs,
                      pairwise_face_matches, username_matches)
from .manifest import ingest_manifest
from .model import CollageImage, Participant, PostRecord
from .report import StatisticsReport, UsernameObservation, build_report, canonical_json, write_text
from .username import (DEFAULT_MERGE_THRESHOLD, UsernameCandidate, assign_usernames, default_generic_names,
                       default_ui_words, filter_tokens, load_word_list, merge_word_tokens, normalize_username)

log = logging.getLogger(__name__)

STAGES = ("classify", "dedup", "fusion", "username", "linkage", "graph", "report")
OPTIONAL_STAGES = frozenset({"classify", "dedup", "username", "linkage"})

ARTIFACTS = {
    "images": "images.json",
    "dedup": "dedup.json",
    "participants": "participants.json",
    "usernames": "usernames.json",
    "clusters": "clusters.json",
    "graph": "graph.json",
    "edges": "edges.csv",
    "report": "report.json",
}


@dataclass(frozen=True)
class PipelineConfig:
    manifest_path: str
    output_dir: str
    backend: str = "fixture"
    dedup: DedupCriteria = DedupCriteria()
    word_merge_threshold: float = DEFAULT_MERGE_THRESHOLD
    face_link_threshold: float = DEFAULT_FACE_THRESHOLD
    collage_score_threshold: float = 0.5
    stages: Tuple[str, ...] = STAGES
    use_username_link: bool = True
    use_face_link: bool = True
    exclude_generic: bool = True
    ui_words_path: Optional[str] = None
    dictionary_path: Optional[str] = None
    generic_names_path: Optional[str] = None
    workers: int = 4

    def __post_init__(self):
        for name in ("word_merge_threshold", "face_link_threshold", "collage_score_threshold"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        unknown = set(self.stages) - set(STAGES)
        if unknown:
            raise ConfigError(f"unknown stages: {sorted(unknown)}")
        missing = set(STAGES) - OPTIONAL_STAGES - set(self.stages)
        if missing:
            raise ConfigError(f"stages cannot be disabled: {sorted(missing)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        object.__setattr__(self, "stages", tuple(s for s in STAGES if s in self.stages))

    def enabled(self, stage: str) -> bool:
        return stage in self.stages


@dataclass
class AnalyzedImage:
    image: CollageImage
    bundle: DetectionBundle


@dataclass
class PipelineResult:
    report: StatisticsReport
    graph: SocialGraphData
    dedup: DedupOutcome
    participants: List[Participant]
    clusters: List[IdentityCluster]
    usernames: List[UsernameObservation]
    skipped: List[dict] = field(default_factory=list)
    artifacts: Dict[str, Path] = field(default_factory=dict)


class _Writer:
    def __init__(self, output_dir: Path):
        self.dir = output_dir
        self.paths: Dict[str, Path] = {}

    def json(self, key: str, obj) -> None:
        self.text(key, canonical_json(obj))

    def text(self, key: str, text: str) -> None:
        path = self.dir / ARTIFACTS[key]
        write_text(path, text)
        self.paths[key] = path


def _image_size(path: str) -> Tuple[int, int]:
    try:
        with Image.open(path) as im:
            return im.size
    except (OSError, UnidentifiedImageError) as exc:
        raise ImageDecodeError(f"cannot decode image {path}: {exc}") from exc


def _analyze(post: PostRecord, backend: Backend, lock: Optional[threading.Lock]) -> AnalyzedImage:
    width, height = _image_size(post.image_path)
    dhash = compute_dhash(post.image_path)
    if lock is None:
        bundle = backend.analyze_collage(post.image_path, post.post_id)
    else:
        with lock:
            bundle = backend.analyze_collage(post.image_path, post.post_id)
    if bundle.image_id != post.post_id:
        raise BundleParseError(f"bundle is for {bundle.image_id!r}, expected {post.post_id!r}", "image_id")
    bundle.check_bounds(width, height)
    image = CollageImage(post.post_id, post, width, height, dhash, bundle.collage_score)
    return AnalyzedImage(image, bundle)


def analyze_images(posts: Sequence[PostRecord], backend: Backend,
                   workers: int) -> Tuple[List[AnalyzedImage], List[dict]]:
    """Hash and analyse every post on a bounded pool; per-image failures are skipped."""
    lock = None if backend.descriptor.thread_safe else threading.Lock()

    def task(post):
        try:
            return _analyze(post, backend, lock), None
        except (ImageDecodeError, BundleParseError, BackendUnavailableError) as exc:
            log.warning("skipping %s: %s", post.post_id, exc)
            return None, {"image_id": post.post_id, "error": type(exc).__name__, "message": str(exc)}

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(task, posts))
    analyzed = [r for r, _ in results if r is not None]
    skipped = [s for _, s in results if s is not None]
    return analyzed, skipped


def _check_embedding_models(images: Sequence[AnalyzedImage]) -> None:
    models = set()
    for item in images:
        b = item.bundle
        if any(f.embedding is not None for f in b.primary_faces + b.secondary_faces):
            models.add(b.embedding_model)
    if len(models) > 1:
        names = sorted(str(m) for m in models)
        raise IncompatibleEmbeddingError(f"face embeddings come from different models: {names}")


def participants_for_image(item: AnalyzedImage, ui_words, dictionary, generic_names, merge_threshold: float,
                           read_usernames: bool = True) -> Tuple[List[FusedFace], List[Participant], List[UsernameObservation]]:
    image_id = item.image.image_id
    faces = fuse_face_detections(item.bundle.primary_faces, item.bundle.secondary_faces)
    assigned: Dict[int, UsernameCandidate] = {}
    observations: List[UsernameObservation] = []
    if read_usernames:
        tokens = filter_tokens(item.bundle.word_tokens, ui_words, dictionary)
        candidates = []
        for cand in merge_word_tokens(tokens, merge_threshold):
            text, generic = normalize_username(cand.text, generic_names)
            candidates.append(replace(cand, text=text, generic=generic))
        assigned, _ = assign_usernames([f.box for f in faces], candidates)
        taken = {id(c) for c in assigned.values()}
        observations = [
            UsernameObservation(image_id, c.text, c.word_count, c.generic, id(c) in taken) for c in candidates
        ]
    participants = []
    width = max(2, len(str(len(faces))))
    for k, face in enumerate(faces):
        age = aggregate_age(face.age_estimates)
        cand = assigned.get(k)
        participants.append(Participant(
            participant_id=f"{image_id}/f{k:0{width}d}",
            meeting_id=image_id,
            face_box=face.box,
            embedding=face.embedding,
            age_years=age,
            age_category=bin_age(age) if age is not None else None,
            gender=resolve_gender(face.gender_estimates),
            username=cand.text if cand else None,
            username_generic=cand.generic if cand else False,
        ))
    return faces, participants, observations


def _participant_doc(p: Participant, face: FusedFace) -> dict:
    return {
        "participant_id": p.participant_id,
        "meeting_id": p.meeting_id,
        "face_box": p.face_box.as_list(),
        "detectors": sorted(d.value for d in face.contributing),
        "has_embedding": p.embedding is not None,
        "age_estimates": list(face.age_estimates),
        "age_years": p.age_years,
        "age_category": p.age_category.value if p.age_category else None,
        "gender": p.gender.value if p.gender else None,
        "username": p.username,
        "username_generic": p.username_generic,
    }


def run_pipeline(config: PipelineConfig, backend: Optional[Backend] = None) -> PipelineResult:
    """Run every stage in order, writing each stage's artifact as soon as it exists."""
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    writer = _Writer(out)
    backend = backend or get_backend(config.backend)
    ui_words = load_word_list(config.ui_words_path) if config.ui_words_path else default_ui_words()
    dictionary = load_word_list(config.dictionary_path) if config.dictionary_path else frozenset()
    generic = load_word_list(config.generic_names_path) if config.generic_names_path else default_generic_names()

    posts = ingest_manifest(config.manifest_path)
    analyzed, skipped = analyze_images(posts, backend, config.workers)
    analyzed.sort(key=lambda a: a.image.image_id)

    if config.enabled("classify"):
        collages = [a for a in analyzed if classify_collage(a.bundle, config.collage_score_threshold)]
    else:
        collages = list(analyzed)
    collage_ids = {a.image.image_id for a in collages}
    writer.json("images", {
        "analyzed": [
            {"image_id": a.image.image_id, "width": a.image.width, "height": a.image.height,
             "dhash": hash_to_hex(a.image.dhash), "collage_score": a.image.classifier_score,
             "is_collage": a.image.image_id in collage_ids}
            for a in analyzed
        ],
        "skipped": skipped,
    })

    if config.enabled("dedup"):
        outcome = dedup([HashedImage(a.image.image_id, a.image.dhash, a.bundle.image_embedding) for a in collages],
                        config.dedup)
    else:
        outcome = DedupOutcome(kept=sorted(collage_ids))
    writer.json("dedup", outcome.to_dict())
    kept_ids = set(outcome.kept)
    kept = [a for a in collages if a.image.image_id in kept_ids]

    participants: List[Participant] = []
    usernames: List[UsernameObservation] = []
    docs = []
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        per_image = list(pool.map(
            lambda a: participants_for_image(a, ui_words, dictionary, generic, config.word_merge_threshold,
                                             config.enabled("username")),
            kept,
        ))
    for faces, parts, obs in per_image:
        participants.extend(parts)
        usernames.extend(obs)
        docs.extend(_participant_doc(p, f) for p, f in zip(parts, faces))
    writer.json("participants", docs)
    writer.json("usernames", [
        {"meeting_id": u.meeting_id, "text": u.text, "word_count": u.word_count,
         "generic": u.generic, "assigned": u.assigned}
        for u in usernames
    ])

    face_pairs: List[MatchPair] = []
    name_pairs: List[MatchPair] = []
    if config.enabled("linkage"):
        if not (config.use_username_link or config.use_face_link):
            raise ConfigError("linkage needs at least one evidence channel")
        if config.use_face_link:
            _check_embedding_models(kept)
            face_pairs = pairwise_face_matches(participants, config.face_link_threshold)
        if config.use_username_link:
            name_pairs = username_matches(participants, config.exclude_generic)
    clusters = clusters_from_pairs(participants, name_pairs + face_pairs)
    writer.json("clusters", [c.to_dict() for c in clusters])

    identity_of = {m: c.identity_id for c in clusters for m in c.members}
    meetings: Dict[str, set] = {}
    for p in participants:
        meetings.setdefault(p.meeting_id, set()).add(identity_of[p.participant_id])
    graph = build_social_graph(meetings)
    writer.json("graph", graph.to_dict())
    writer.text("edges", edge_list_text(graph))

    report = build_report(
        images_ingested=len(posts),
        images_analyzed=len(analyzed),
        images_skipped=len(skipped),
        images_classified_collage=len(collages),
        images_kept_after_dedup=len(kept),
        participants=participants,
        usernames=usernames,
        face_pairs=face_pairs,
        clusters=clusters,
        graph=graph,
    )
    writer.json("report", report.to_dict())
    return PipelineResult(report, graph, outcome, participants, clusters, usernames, skipped, dict(writer.paths))


def graph_from_artifact(path) -> SocialGraphData:
    """Rebuild the co-participation graph from a ``graph.json`` artifact."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    g = build_social_graph(doc.get("meetings", {}))
    g.nodes.update(doc.get("nodes", []))
    return g
