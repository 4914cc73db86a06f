"""Privacy analytics over video-meeting collage images.

Deduplicates collages, fuses face detections, rebuilds usernames from OCR
words, links participants across meetings and summarises the resulting
co-participation graph.
"""
from .dedup import DedupCriteria, compute_dhash, dedup, hamming_distance
from .fusion import aggregate_age, bin_age, fuse_face_detections, resolve_gender
from .graph import build_social_graph, component_stats, connected_components, export_edge_list
from .linkage import link_identities, pairwise_face_matches
from .model import BoundingBox, intersection_area, point_distance
from .pipeline import PipelineConfig, run_pipeline
from .username import filter_tokens, merge_word_tokens, normalize_username

__version__ = "0.1.0"
