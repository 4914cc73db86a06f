"""Deterministic 10-collage fixture dataset for end-to-end tests.

Layout (400 x 300 images, 60 px face tiles at TILE[(col, row)]):

    p01..p07  distinct collages, score 0.9
    p08       pixel copy of p03            -> removed by dhash (rep p03)
    p09       new pixels, embedding ~ p05  -> removed by embedding (rep p05)
    p10       collage score 0.2            -> rejected by the classifier

Run ``python tests/fixture_dataset.py OUTDIR`` to write it to disk.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

WIDTH, HEIGHT = 400, 300
MODEL = "dlib-128"


def tile(col, row):
    return [20 + 130 * col, 20 + 140 * row, 60, 60]


def shifted(box, d=5):
    return [box[0] + d, box[1] + d, box[2], box[3]]


def _face_embeddings():
    rng = np.random.default_rng(1234)
    base = {f"E{k}": np.round(rng.normal(0.0, 0.1, 128), 6) for k in range(1, 14)}
    near = base["E3"].copy()
    near[0] += 0.2
    base["E3b"] = np.round(near, 6)
    return {k: [float(x) for x in v] for k, v in base.items()}


EMB = _face_embeddings()


def face(box, emb=None, ages=(), gender=None):
    return {"box": box, "embedding": EMB[emb] if emb else None, "age_estimates": list(ages), "gender": gender}


def words_for(col, row, *names, gaps=None):
    """Lay the words of one username under tile (col, row), ``gap`` px apart."""
    x = tile(col, row)[0]
    y = tile(col, row)[1] + 70
    out = []
    widths = {"Dana": 30, "Levi": 28, "Noa": 24, "Bar": 22, "Cohen": 40, "Ron": 26, "Shani": 40}
    gaps = gaps or [5] * len(names)
    for i, name in enumerate(names):
        w = widths.get(name, 8 * len(name))
        out.append({"text": name, "box": [x, y, w, 12], "confidence": 0.9})
        x += w + gaps[i]
    return out


UI_NOISE = [
    {"text": "Mute", "box": [20, 280, 30, 12]},
    {"text": "Participants", "box": [60, 280, 70, 12]},
]


def _image_embedding(k):
    v = [0.0] * 8
    v[k % 8] = 100.0
    if k >= 8:
        v[(k + 3) % 8] = 60.0
    return v


BUNDLES = {
    "p01": dict(
        primary=[face(tile(0, 0), "E1", [30]), face(tile(1, 0), "E2", [40, 44], "male")],
        secondary=[face(shifted(tile(0, 0)), None, [34], "female"), face(tile(2, 0), None, [10], "female")],
        words=words_for(0, 0, "Dana", "Levi") + words_for(1, 0, "Tom") + UI_NOISE,
    ),
    "p02": dict(
        primary=[face(tile(0, 0), "E3", [25], "male"), face(tile(1, 0), "E4", [15, 17], "male")],
        secondary=[face(shifted(tile(1, 0)), None, [], "female")],
        words=words_for(0, 0, "Noa", "Bar", "Cohen", gaps=[6, 6, 0]) + words_for(1, 0, "Eli"),
    ),
    "p03": dict(
        primary=[face(tile(0, 0), "E5", [70], "female"), face(tile(1, 0), "E6", [28], "male"),
                 face(tile(2, 0), None, [33], "female"), face(tile(0, 1), "E7")],
        secondary=[],
        words=words_for(0, 0, "iPhone") + words_for(1, 0, "Maya") + words_for(2, 0, "Ron", "Shani", gaps=[4, 0]),
    ),
    "p04": dict(
        primary=[face(tile(0, 0), "E8", [31, 33], "female")],
        secondary=[],
        words=words_for(0, 0, "Dana", "Levi"),
    ),
    "p05": dict(
        primary=[face(tile(0, 0), "E9", [12], "male"), face(tile(1, 0), "E10", [50], "female")],
        secondary=[],
        words=words_for(0, 0, "Yoni") + [{"text": "Shira", "box": [300, 2, 40, 12]}],
    ),
    "p06": dict(
        primary=[face(tile(0, 0), "E3b", [27], "male"), face(tile(1, 0), "E11", [64.99], "female"),
                 face(tile(2, 0), "E12", [65], "male")],
        secondary=[],
        words=words_for(1, 0, "Gal") + words_for(2, 0, "Eli"),
    ),
    "p07": dict(
        primary=[face(tile(0, 0), "E13", [17.01], "female")],
        secondary=[],
        words=words_for(0, 0, "IPHONE"),
    ),
}
BUNDLES["p08"] = BUNDLES["p03"]
BUNDLES["p09"] = BUNDLES["p04"]
BUNDLES["p10"] = BUNDLES["p01"]

SCORES = {pid: 0.9 for pid in BUNDLES}
SCORES["p10"] = 0.2

IMAGE_SEEDS = {pid: int(pid[1:]) for pid in BUNDLES}
IMAGE_SEEDS["p08"] = IMAGE_SEEDS["p03"]

IMAGE_EMBEDDINGS = {pid: _image_embedding(int(pid[1:])) for pid in BUNDLES}
IMAGE_EMBEDDINGS["p09"] = [x + (0.5 if i == 0 else 0.0) for i, x in enumerate(IMAGE_EMBEDDINGS["p05"])]


# Hand-derived expectations for a default run over this dataset.
# kept: p01..p07 (16 faces); 15 faces carry an age, 14 a gender.
EXPECTED_REPORT = {
    "images_ingested": 10,
    "images_analyzed": 10,
    "images_skipped": 0,
    "images_classified_collage": 9,
    "images_kept_after_dedup": 7,
    "total_faces": 16,
    "mean_participants_per_collage": 16 / 7,
    "aged_faces": 15,
    "age_mean": 524 / 15,
    "age_median": 32.0,
    "age_category_shares": {"child": 2 / 15, "adolescent": 1 / 15, "adult": 10 / 15, "older_adult": 2 / 15},
    "gender_counts": {"female": 8, "male": 6},
    "username_observations": 13,
    "distinct_usernames": 10,
    "multiword_usernames": 3,
    "username_word_count_histogram": {1: 7, 2: 2, 3: 1},
    "reused_usernames": 3,
    "reused_multiword_usernames": 1,
    "generic_username_observations": 2,
    "repeated_face_identities": 1,
    "identity_clusters": 13,
    "graph_nodes": 13,
    "graph_edges": 13,
    "graph": {"component_count": 5, "mean_nodes": 2.6, "mean_edges": 2.6, "largest_nodes": 4, "largest_edges": 6},
}


def collage_pixels(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    coarse = rng.integers(0, 256, size=(12, 16, 3), dtype=np.uint8)
    return np.kron(coarse, np.ones((25, 25, 1), dtype=np.uint8))


def build_fixture_dataset(root) -> Path:
    """Write images, sidecars and ``manifest.jsonl`` under ``root``; return the manifest path."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    lines = []
    for pid in sorted(BUNDLES):
        img_path = root / "images" / f"{pid}.png"
        Image.fromarray(collage_pixels(IMAGE_SEEDS[pid])).save(img_path)
        b = BUNDLES[pid]
        doc = {
            "schema_version": 1,
            "image_id": pid,
            "collage_score": SCORES[pid],
            "embedding_model": MODEL,
            "image_embedding": IMAGE_EMBEDDINGS[pid],
            "primary_faces": b["primary"],
            "secondary_faces": b["secondary"],
            "words": b["words"],
        }
        img_path.with_name(img_path.name + ".bundle.json").write_text(json.dumps(doc, indent=1, sort_keys=True))
        source = "twitter" if int(pid[1:]) % 2 else "instagram"
        lines.append(json.dumps({"post_id": pid, "source": source, "image_path": f"images/{pid}.png",
                                 "tags": ["#zoommeeting"]}))
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "fixture_run")
    print(build_fixture_dataset(out))
