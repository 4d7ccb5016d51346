"""Activation maps from support/query matching.

Two flavours per feature level:

* pixel-to-pixel: each query pixel scores its best cosine match among the
  support foreground pixels (prior-mask style);
* region-to-region: the query is average-pooled into an r×r grid, the support
  foreground into masked r×r region vectors, and each query region scores its
  best cosine match among non-empty support regions.

Raw scores are averaged over shots and then min-max normalized to [0, 1].
"""

from dataclasses import dataclass

import numpy as np

from .episodes import LEVELS, Episode, check_feature_mask, contiguous_bins, foreground_sequence
from .errors import ConfigError, ForegroundEmptyError, ShapeError

NORM_EPS = 1e-12


@dataclass
class ActivationMap:
    values: np.ndarray
    level: str = "mid"
    method: str = "pixel"

    @property
    def name(self) -> str:
        return f"{self.level}_{self.method}"

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine between rows of ``a`` and rows of ``b``; zero vectors give 0."""
    an = a / np.maximum(np.linalg.norm(a, axis=1, keepdims=True), NORM_EPS)
    bn = b / np.maximum(np.linalg.norm(b, axis=1, keepdims=True), NORM_EPS)
    return an @ bn.T


def min_max_normalize(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    lo, hi = raw.min(), raw.max()
    if hi - lo <= 0:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def _check_query(fs, fq):
    if fq.ndim != 3 or fs.shape != fq.shape:
        raise ShapeError(f"support {fs.shape} and query {fq.shape} features disagree")


def pixel_scores(fs, ms, fq) -> np.ndarray:
    """Unnormalized pixel-to-pixel map (H×W)."""
    fs, fq = np.asarray(fs, dtype=np.float64), np.asarray(fq, dtype=np.float64)
    _check_query(fs, fq)
    fg = foreground_sequence(fs, ms)
    c, h, w = fq.shape
    q = fq.reshape(c, -1).T
    return cosine_matrix(q, fg).max(axis=1).reshape(h, w)


def pixel_activation(fs, ms, fq) -> ActivationMap:
    return ActivationMap(min_max_normalize(pixel_scores(fs, ms, fq)), method="pixel")


def grid_pool(f: np.ndarray, r: int, mask: np.ndarray | None = None):
    """Average ``f`` (C×H×W) over an r×r grid of near-equal cells.

    With ``mask``, only masked pixels count; returns (regions r²×C, valid r²).
    """
    c, h, w = f.shape
    rows, cols = contiguous_bins(h, r), contiguous_bins(w, r)
    m = np.ones((h, w)) if mask is None else np.asarray(mask, dtype=np.float64)
    regions = np.zeros((r * r, c))
    valid = np.zeros(r * r, dtype=bool)
    for i, (y0, y1) in enumerate(rows):
        for j, (x0, x1) in enumerate(cols):
            wts = m[y0:y1, x0:x1]
            total = wts.sum()
            if total > 0:
                regions[i * r + j] = np.tensordot(f[:, y0:y1, x0:x1], wts, axes=([1, 2], [0, 1])) / total
                valid[i * r + j] = True
    return regions, valid


def grid_upsample(scores: np.ndarray, r: int, h: int, w: int) -> np.ndarray:
    """Nearest-neighbour spread of r×r cell scores back onto the H×W grid."""
    row_cell = np.empty(h, dtype=int)
    col_cell = np.empty(w, dtype=int)
    for i, (a, b) in enumerate(contiguous_bins(h, r)):
        row_cell[a:b] = i
    for j, (a, b) in enumerate(contiguous_bins(w, r)):
        col_cell[a:b] = j
    return scores.reshape(r, r)[row_cell[:, None], col_cell[None, :]]


def region_scores(fs, ms, fq, r: int) -> np.ndarray:
    """Unnormalized region-to-region map (H×W)."""
    fs, fq = np.asarray(fs, dtype=np.float64), np.asarray(fq, dtype=np.float64)
    _check_query(fs, fq)
    check_feature_mask(fs, np.asarray(ms))
    c, h, w = fq.shape
    if r < 1 or r > min(h, w):
        raise ConfigError(f"region grid {r} outside [1, {min(h, w)}]")
    sup, valid = grid_pool(fs, r, ms)
    if not valid.any():
        raise ForegroundEmptyError("no support region contains foreground")
    qry, _ = grid_pool(fq, r)
    best = cosine_matrix(qry, sup[valid]).max(axis=1)
    return grid_upsample(best, r, h, w)


def region_activation(fs, ms, fq, r: int = 4) -> ActivationMap:
    return ActivationMap(min_max_normalize(region_scores(fs, ms, fq, r)), method="region")


def episode_maps(ep: Episode, region_grid: int = 4) -> dict[str, ActivationMap]:
    """The four maps ``mid_pixel, mid_region, high_pixel, high_region``.

    Raw maps are averaged across shots before normalization.
    """
    maps = {}
    for level in LEVELS:
        fq = ep.query.feat(level)
        pix = np.mean([pixel_scores(s.feat(level), s.mask, fq) for s in ep.support], axis=0)
        reg = np.mean([region_scores(s.feat(level), s.mask, fq, region_grid) for s in ep.support], axis=0)
        maps[f"{level}_pixel"] = ActivationMap(min_max_normalize(pix), level, "pixel")
        maps[f"{level}_region"] = ActivationMap(min_max_normalize(reg), level, "region")
    return maps


MAP_ORDER = ("mid_pixel", "mid_region", "high_pixel", "high_region")
