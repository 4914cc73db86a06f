"""Command line entry point.

    collagelink ingest MANIFEST
    collagelink run --manifest MANIFEST --output-dir OUT [--config cfg.json] [threshold flags]
    collagelink report OUT/report.json
    collagelink graph-export --output-dir OUT [--out edges.csv]

Exit codes: 0 success, 1 fatal stage error, 2 config or manifest error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .backends import available_backends
from .dedup import DedupCriteria, EmbeddingCombine
from .errors import CollageLinkError, ConfigError, ManifestError
from .graph import export_edge_list
from .manifest import ingest_manifest
from .pipeline import ARTIFACTS, OPTIONAL_STAGES, STAGES, PipelineConfig, graph_from_artifact, run_pipeline
from .report import load_report, summary_lines

log = logging.getLogger("collagelink")

EXIT_OK, EXIT_FATAL, EXIT_CONFIG = 0, 1, 2

# flag/config-key defaults; config files use the same keys (dashes or underscores)
RUN_DEFAULTS = {
    "backend": "fixture",
    "hamming_threshold": 1.2,
    "cosine_threshold": 0.0035,
    "euclidean_threshold": 25.0,
    "embedding_combine": EmbeddingCombine.BOTH_REQUIRED.value,
    "word_merge_threshold": 10.0,
    "face_link_threshold": 0.3,
    "collage_score_threshold": 0.5,
    "skip_stages": [],
    "no_username_link": False,
    "no_face_link": False,
    "include_generic": False,
    "ui_words": None,
    "dictionary": None,
    "generic_names": None,
    "workers": 4,
    "manifest": None,
    "output_dir": None,
}


def _add_run_args(p: argparse.ArgumentParser) -> None:
    # defaults stay None so config-file values are only overridden by explicit flags
    p.add_argument("--manifest", help="JSONL post manifest")
    p.add_argument("--output-dir", help="directory for stage artifacts")
    p.add_argument("--config", help="JSON config file with the same keys as the flags")
    p.add_argument("--backend", help=f"detection backend ({', '.join(available_backends())})")
    p.add_argument("--hamming-threshold", type=float, help="dhash Hamming threshold (default 1.2)")
    p.add_argument("--cosine-threshold", type=float, help="image embedding cosine threshold (default 0.0035)")
    p.add_argument("--euclidean-threshold", type=float, help="image embedding euclidean threshold (default 25)")
    p.add_argument("--embedding-combine", choices=[e.value for e in EmbeddingCombine],
                   help="how the two embedding thresholds combine (default both_required)")
    p.add_argument("--word-merge-threshold", type=float, help="word merge distance in pixels (default 10)")
    p.add_argument("--face-link-threshold", type=float, help="face embedding link distance (default 0.3)")
    p.add_argument("--collage-score-threshold", type=float, help="minimum collage classifier score (default 0.5)")
    p.add_argument("--skip-stage", dest="skip_stages", action="append", choices=sorted(OPTIONAL_STAGES),
                   help="disable an optional stage; repeatable")
    p.add_argument("--no-username-link", action="store_true", default=None)
    p.add_argument("--no-face-link", action="store_true", default=None)
    p.add_argument("--include-generic", action="store_true", default=None,
                   help="let generic usernames such as device names link identities")
    p.add_argument("--ui-words", help="UI vocabulary file, one word per line")
    p.add_argument("--dictionary", help="dictionary word file, one word per line")
    p.add_argument("--generic-names", help="generic username file, one name per line")
    p.add_argument("--workers", type=int, help="worker threads for per-image stages (default 4)")


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must contain a JSON object")
    doc = {k.replace("-", "_"): v for k, v in doc.items()}
    unknown = set(doc) - set(RUN_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return doc


def resolve_run_options(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    opts = dict(RUN_DEFAULTS)
    if args.config:
        opts.update(load_config_file(args.config))
    for key in RUN_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def config_from_options(opts: dict) -> PipelineConfig:
    if not opts["manifest"]:
        raise ConfigError("--manifest is required")
    if not opts["output_dir"]:
        raise ConfigError("--output-dir is required")
    skip = set(opts["skip_stages"] or [])
    if skip - OPTIONAL_STAGES:
        raise ConfigError(f"cannot skip stages {sorted(skip - OPTIONAL_STAGES)}")
    try:
        criteria = DedupCriteria(
            hamming_threshold=float(opts["hamming_threshold"]),
            cosine_threshold=float(opts["cosine_threshold"]),
            euclidean_threshold=float(opts["euclidean_threshold"]),
            embedding_combine=EmbeddingCombine(opts["embedding_combine"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return PipelineConfig(
        manifest_path=str(opts["manifest"]),
        output_dir=str(opts["output_dir"]),
        backend=opts["backend"],
        dedup=criteria,
        word_merge_threshold=float(opts["word_merge_threshold"]),
        face_link_threshold=float(opts["face_link_threshold"]),
        collage_score_threshold=float(opts["collage_score_threshold"]),
        stages=tuple(s for s in STAGES if s not in skip),
        use_username_link=not opts["no_username_link"],
        use_face_link=not opts["no_face_link"],
        exclude_generic=not opts["include_generic"],
        ui_words_path=opts["ui_words"],
        dictionary_path=opts["dictionary"],
        generic_names_path=opts["generic_names"],
        workers=int(opts["workers"]),
    )


def cmd_ingest(args) -> int:
    records = ingest_manifest(args.manifest)
    by_source = {}
    for r in records:
        by_source[r.source.value] = by_source.get(r.source.value, 0) + 1
    print(f"{len(records)} posts")
    for source, n in sorted(by_source.items()):
        print(f"  {source}: {n}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = config_from_options(resolve_run_options(args))
    start = time.perf_counter()
    result = run_pipeline(config)
    for line in summary_lines(result.report):
        print(line)
    for key in ARTIFACTS:
        if key in result.artifacts:
            print(f"wrote {result.artifacts[key]}")
    log.info("run finished in %.2fs", time.perf_counter() - start)
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.report)
    if path.is_dir():
        path = path / ARTIFACTS["report"]
    try:
        report = load_report(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot load report {path}: {exc}") from None
    for line in summary_lines(report):
        print(line)
    return EXIT_OK


def cmd_graph_export(args) -> int:
    source = Path(args.output_dir) / ARTIFACTS["graph"]
    try:
        graph = graph_from_artifact(source)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load graph {source}: {exc}") from None
    dest = Path(args.out) if args.out else Path(args.output_dir) / ARTIFACTS["edges"]
    export_edge_list(graph, dest)
    print(f"wrote {len(graph.edges)} edges to {dest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="collagelink",
                                     description="Privacy analysis pipeline for video-meeting collage images.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a post manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("run", help="run the full pipeline")
    _add_run_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="print a summary of a report.json")
    p.add_argument("report", help="report.json or the run's output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("graph-export", help="write the edge list CSV from a run's graph artifact")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--out", help="destination CSV (default OUTPUT_DIR/edges.csv)")
    p.set_defaults(func=cmd_graph_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CollageLinkError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
