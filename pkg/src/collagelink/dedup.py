"""Near-duplicate removal with difference hashes and image embeddings.

A difference hash ("dhash") is built by downscaling the luma channel to
9 columns x 8 rows with area averaging and comparing horizontally adjacent
cells: bit ``k = row * 8 + col`` (value ``1 << k``) is set iff
``cell[row][col] < cell[row][col + 1]``.

The downscale is carried out in integer arithmetic whenever the input is
integral (8-bit images), so equal-valued regions never flip a bit through
rounding noise.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DegenerateVectorError, DimensionError, ImageDecodeError

log = logging.getLogger(__name__)

HASH_ROWS = 8
HASH_COLS = 9
HASH_BITS = 64
_MASK64 = (1 << HASH_BITS) - 1

# integer luma: 1000 * (0.299 R + 0.587 G + 0.114 B)
_LUMA_WEIGHTS = (299, 587, 114)

Hash64 = int
ImageLike = Union[Image.Image, np.ndarray, str, PathLike]


class EmbeddingCombine(str, enum.Enum):
    BOTH_REQUIRED = "both_required"
    EITHER_SUFFICES = "either_suffices"


class RemovalReason(str, enum.Enum):
    HASH = "hash"
    EMBEDDING = "embedding"


@dataclass(frozen=True)
class DedupCriteria:
    hamming_threshold: float = 1.2
    cosine_threshold: float = 0.0035
    euclidean_threshold: float = 25.0
    embedding_combine: EmbeddingCombine = EmbeddingCombine.BOTH_REQUIRED

    def __post_init__(self):
        for name in ("hamming_threshold", "cosine_threshold", "euclidean_threshold"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        object.__setattr__(self, "embedding_combine", EmbeddingCombine(self.embedding_combine))


@dataclass(frozen=True)
class Removal:
    removed_id: str
    kept_id: str
    reason: RemovalReason


@dataclass
class DedupOutcome:
    kept: List[str] = field(default_factory=list)
    removed: List[Removal] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kept": list(self.kept),
            "removed": [
                {"removed_id": r.removed_id, "kept_id": r.kept_id, "reason": r.reason.value}
                for r in self.removed
            ],
        }


@dataclass(frozen=True)
class HashedImage:
    """Minimal dedup input: an id, its dhash and an optional image-level embedding."""

    image_id: str
    dhash: Hash64
    embedding: Optional[Tuple[float, ...]] = None


# --------------------------------------------------------------------------
# hashing


def _load_luma(image: ImageLike) -> np.ndarray:
    if isinstance(image, np.ndarray):
        arr = image
        if arr.ndim == 3:
            if arr.shape[2] < 3:
                arr = arr[..., 0]
            else:
                arr = _luma_from_rgb(arr[..., :3])
        if arr.ndim != 2:
            raise ImageDecodeError(f"expected a 2-D grayscale or 3-D RGB array, got shape {image.shape}")
        return arr
    if not isinstance(image, Image.Image):
        try:
            with Image.open(image) as im:
                im.load()
                image = im.copy()
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            raise ImageDecodeError(f"cannot decode image {image!s}: {exc}") from exc
    if image.mode in ("L", "I", "F"):
        return np.asarray(image)
    if image.mode in ("I;16", "I;16B", "I;16L"):
        return np.asarray(image.convert("I"))
    return _luma_from_rgb(np.asarray(image.convert("RGB")))


def _luma_from_rgb(rgb: np.ndarray) -> np.ndarray:
    if np.issubdtype(rgb.dtype, np.integer):
        r, g, b = (rgb[..., i].astype(np.int64) for i in range(3))
        return _LUMA_WEIGHTS[0] * r + _LUMA_WEIGHTS[1] * g + _LUMA_WEIGHTS[2] * b
    rgb = rgb.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """Integer overlap matrix (n_out x n_in) for area-average resampling.

    Coordinates are scaled by ``n_out`` so output cell ``j`` spans
    ``[j * n_in, (j + 1) * n_in)`` and input pixel ``i`` spans
    ``[i * n_out, (i + 1) * n_out)``; every overlap is then an integer.
    """
    weights = np.zeros((n_out, n_in), dtype=np.int64)
    for j in range(n_out):
        lo, hi = j * n_in, (j + 1) * n_in
        for i in range(lo // n_out, min(n_in, -(-hi // n_out))):
            overlap = min(hi, (i + 1) * n_out) - max(lo, i * n_out)
            if overlap > 0:
                weights[j, i] = overlap
    return weights


def downscale(luma: np.ndarray, rows: int = HASH_ROWS, cols: int = HASH_COLS) -> np.ndarray:
    """Area-average ``luma`` to ``rows x cols``.

    Integer input returns unnormalised integer cell sums (all cells share the
    same total weight, so ordering between cells is preserved exactly).
    """
    h, w = luma.shape
    if h == 0 or w == 0:
        raise ImageDecodeError("image has zero size")
    if (h, w) == (rows, cols):
        return luma
    wy = _area_weights(h, rows)
    wx = _area_weights(w, cols)
    if np.issubdtype(luma.dtype, np.integer) or luma.dtype == np.bool_:
        return wy @ luma.astype(np.int64) @ wx.T
    total = float(h * w)
    return (wy.astype(np.float64) @ luma.astype(np.float64) @ wx.T.astype(np.float64)) / total


def dhash_from_grid(grid) -> Hash64:
    """Hash an already-downscaled 8 x 9 grid (rows x columns)."""
    g = np.asarray(grid)
    if g.shape != (HASH_ROWS, HASH_COLS):
        raise DimensionError(f"grid must be {HASH_ROWS}x{HASH_COLS}, got {g.shape}")
    bits = (g[:, :-1] < g[:, 1:]).reshape(-1)
    value = 0
    for k in np.flatnonzero(bits):
        value |= 1 << int(k)
    return value


def compute_dhash(image: ImageLike) -> Hash64:
    """64-bit difference hash of an image, a path to one, or a pixel array."""
    return dhash_from_grid(downscale(_load_luma(image)))


def hash_to_hex(h: Hash64) -> str:
    return f"{h & _MASK64:016x}"


def hamming_distance(a: Hash64, b: Hash64) -> int:
    return ((a ^ b) & _MASK64).bit_count()


def hashes_to_array(hashes: Iterable[Hash64]) -> np.ndarray:
    return np.fromiter((h & _MASK64 for h in hashes), dtype=np.uint64)


def pairwise_hamming_pairs(hashes: Sequence[Hash64], threshold: float, block: int = 256) -> List[Tuple[int, int, int]]:
    """All index pairs ``i < j`` whose Hamming distance is ``<= threshold``.

    Blocked XOR/popcount scan; memory stays at ``block * n`` words.
    """
    arr = hashes_to_array(hashes)
    n = len(arr)
    out: List[Tuple[int, int, int]] = []
    for start in range(0, n, block):
        stop = min(n, start + block)
        rows = arr[start:stop, None]
        cols = arr[start + 1:]
        if cols.size == 0:
            break
        dist = np.bitwise_count(rows ^ cols[None, :])
        # keep strictly-upper-triangular entries: column index (start+1+c) > row index (start+r)
        r_idx, c_idx = np.nonzero(dist <= threshold)
        j = c_idx + start + 1
        i = r_idx + start
        upper = j > i
        for ii, jj, dd in zip(i[upper], j[upper], dist[r_idx[upper], c_idx[upper]]):
            out.append((int(ii), int(jj), int(dd)))
    return out


# --------------------------------------------------------------------------
# embeddings


def embedding_pair_distance(e1: Sequence[float], e2: Sequence[float], metric: str = "euclidean") -> float:
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"embedding shapes differ: {a.shape} vs {b.shape}")
    if metric == "euclidean":
        return float(math.sqrt(float(np.dot(a - b, a - b))))
    if metric == "cosine":
        na = math.hypot(*a)
        nb = math.hypot(*b)
        if na == 0.0 or nb == 0.0:
            raise DegenerateVectorError("cosine distance is undefined for a zero vector")
        # clamp: rounding can push the similarity of identical vectors past 1
        return max(0.0, 1.0 - float(np.dot(a / na, b / nb)))
    raise ValueError(f"unknown metric {metric!r}")


def embeddings_match(e1, e2, criteria: DedupCriteria) -> bool:
    euclid_ok = embedding_pair_distance(e1, e2, "euclidean") <= criteria.euclidean_threshold
    try:
        cos_ok = embedding_pair_distance(e1, e2, "cosine") <= criteria.cosine_threshold
    except DegenerateVectorError:
        cos_ok = False
    if criteria.embedding_combine is EmbeddingCombine.BOTH_REQUIRED:
        return euclid_ok and cos_ok
    return euclid_ok or cos_ok


# --------------------------------------------------------------------------
# greedy dedup


def dedup(images: Sequence[HashedImage], criteria: DedupCriteria = DedupCriteria()) -> DedupOutcome:
    """Greedy near-duplicate removal in ascending ``image_id`` order.

    An image is dropped when it matches an earlier *kept* image by the hash
    rule or the embedding rule; the earliest such kept image is recorded as
    its representative.
    """
    ordered = sorted(images, key=lambda im: im.image_id)
    n = len(ordered)
    outcome = DedupOutcome()
    if n == 0:
        return outcome

    dim = None
    for im in ordered:
        if im.dhash is None:
            raise ValueError(f"image {im.image_id} has no dhash")
        if im.embedding is not None:
            if dim is None:
                dim = len(im.embedding)
            elif len(im.embedding) != dim:
                raise DimensionError(f"image {im.image_id}: embedding length {len(im.embedding)} != {dim}")

    kept_hashes = np.zeros(n, dtype=np.uint64)
    kept_ids: List[str] = []
    # embedding rows of kept images, with their position in kept_ids
    emb_rows = np.zeros((n, dim or 0), dtype=np.float64)
    emb_norms = np.zeros(n, dtype=np.float64)
    emb_owner: List[int] = []
    # slack for the vectorised prefilter; survivors are re-checked exactly
    slack = 1e-9

    for im in ordered:
        k = len(kept_ids)
        h = np.uint64(im.dhash & _MASK64)
        candidates: Dict[int, RemovalReason] = {}
        if k:
            dist = np.bitwise_count(kept_hashes[:k] ^ h)
            hit = np.flatnonzero(dist <= criteria.hamming_threshold)
            if hit.size:
                candidates[int(hit[0])] = RemovalReason.HASH
        m = len(emb_owner)
        if im.embedding is not None and m:
            vec = np.asarray(im.embedding, dtype=np.float64)
            diff = emb_rows[:m] - vec
            euclid = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            vnorm = math.sqrt(float(vec @ vec))
            with np.errstate(divide="ignore", invalid="ignore"):
                cos = 1.0 - (emb_rows[:m] @ vec) / (emb_norms[:m] * vnorm)
            cos = np.where(np.isfinite(cos), cos, np.inf)
            e_ok = euclid <= criteria.euclidean_threshold + slack
            c_ok = cos <= criteria.cosine_threshold + slack
            pre = e_ok & c_ok if criteria.embedding_combine is EmbeddingCombine.BOTH_REQUIRED else e_ok | c_ok
            first_hash = min(candidates) if candidates else n
            for row in np.flatnonzero(pre):
                owner = emb_owner[row]
                if owner >= first_hash:
                    break
                if embeddings_match(emb_rows[row], vec, criteria):
                    candidates[owner] = RemovalReason.EMBEDDING
                    break
        if candidates:
            rep = min(candidates)
            outcome.removed.append(Removal(im.image_id, kept_ids[rep], candidates[rep]))
            continue
        kept_hashes[k] = h
        kept_ids.append(im.image_id)
        if im.embedding is not None:
            vec = np.asarray(im.embedding, dtype=np.float64)
            emb_rows[len(emb_owner)] = vec
            emb_norms[len(emb_owner)] = math.sqrt(float(vec @ vec))
            emb_owner.append(k)
    outcome.kept = kept_ids
    return outcome
