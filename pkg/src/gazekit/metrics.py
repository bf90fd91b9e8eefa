"""Saliency evaluation metrics (NSS, AUC-Judd, shuffled AUC, SIM) and
Spearman rank correlation.

Grid arguments accept either a :class:`~gazekit.core.SaliencyMap` or a raw
2-D array; NSS and the AUC family are invariant to the map's scale, so the
unit-sum convention only matters for SIM, which checks it.

Conventions pinned for reproducibility:

* NSS uses the population standard deviation over all pixels;
* fixated pixels are deduplicated before AUC (a pixel fixated twice is one
  positive);
* shuffled AUC draws each split from a Philox counter-based stream derived
  from (seed, split_index), so results reproduce across platforms and
  splits can run in any order.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .core import SaliencyMap, points_of
from .errors import (
    AllPixelsFixated,
    DimensionMismatch,
    EmptyFixations,
    EmptyPool,
    LengthMismatch,
    NotNormalized,
    OutOfBounds,
    TooFew,
    ZeroVariance,
)

__all__ = [
    "DEFAULT_SAUC_SPLITS",
    "auc_judd",
    "nss",
    "shuffled_auc",
    "sim",
    "spearman",
]

DEFAULT_SAUC_SPLITS = 100
SIM_SUM_TOL = 1e-4


def _as_grid(salmap) -> np.ndarray:
    if isinstance(salmap, SaliencyMap):
        return salmap.values
    arr = np.asarray(salmap, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch("expected a 2-D grid")
    return arr


def _pixel_values(grid: np.ndarray, fixations) -> np.ndarray:
    pts = points_of(fixations)
    if not pts:
        raise EmptyFixations("need at least one fixation")
    height, width = grid.shape
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.any(xs < 0) or np.any(xs >= width) or np.any(ys < 0) or np.any(ys >= height):
        raise OutOfBounds("fixation outside the grid")
    return grid[ys, xs]


def nss(salmap, fixations: Sequence) -> float:
    """Mean z-scored map value at the fixated pixels."""
    grid = _as_grid(salmap)
    std = float(grid.std())
    if std == 0.0:
        raise ZeroVariance("map has no variance")
    normalized = (grid - grid.mean()) / std
    return float(_pixel_values(normalized, fixations).mean())


def _dedup_points(fixations) -> list[tuple[int, int]]:
    seen = set()
    out = []
    for p in points_of(fixations):
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def _auc_from_values(pos_vals: np.ndarray, neg_vals: np.ndarray) -> float:
    """ROC area with thresholds at the distinct positive values.

    TP(t) and FP(t) count values >= t; the curve runs from (0, 0) to
    (1, 1) and is integrated with the trapezoid rule.
    """
    pos_sorted = np.sort(pos_vals)
    neg_sorted = np.sort(neg_vals)
    thresholds = np.unique(pos_vals)[::-1]
    n_pos = pos_sorted.size
    n_neg = neg_sorted.size
    tp = 1.0 - np.searchsorted(pos_sorted, thresholds, side="left") / n_pos
    fp = 1.0 - np.searchsorted(neg_sorted, thresholds, side="left") / n_neg
    xs = np.concatenate(([0.0], fp, [1.0]))
    ys = np.concatenate(([0.0], tp, [1.0]))
    return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) * 0.5))


def auc_judd(salmap, fixations: Sequence) -> float:
    """ROC area treating (deduplicated) fixated pixels as positives and
    all remaining pixels as negatives."""
    grid = _as_grid(salmap)
    pts = _dedup_points(fixations)
    _pixel_values(grid, pts)  # bounds check
    height, width = grid.shape
    fixated = np.zeros(grid.shape, dtype=bool)
    for x, y in pts:
        fixated[y, x] = True
    neg_vals = grid[~fixated]
    if neg_vals.size == 0:
        raise AllPixelsFixated("no non-fixated pixels remain")
    pos_vals = np.array([grid[y, x] for x, y in pts])
    return _auc_from_values(pos_vals, neg_vals)


def sauc_rng(seed: int, split_index: int) -> np.random.Generator:
    """The per-split Philox stream used by :func:`shuffled_auc`."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(split_index))


def shuffled_auc(
    salmap,
    fixations: Sequence,
    negative_pool: Sequence,
    n_splits: int = DEFAULT_SAUC_SPLITS,
    seed: int = 0,
) -> float:
    """AUC with negatives sampled from fixations on other images.

    Each split draws ``len(fixations)`` pool entries without replacement
    (then deduplicates pixels, mirroring the positive side) and scores as
    in :func:`auc_judd`; the mean over splits is returned.
    """
    grid = _as_grid(salmap)
    pos_pts = _dedup_points(fixations)
    n_sample = len(points_of(fixations))
    if n_sample == 0:
        raise EmptyFixations("need at least one fixation")
    pool_pts = points_of(negative_pool)
    if not pool_pts:
        raise EmptyPool("negative pool is empty")
    if n_splits < 1:
        raise ValueError("n_splits must be at least 1")
    if len(pool_pts) < n_sample:
        raise ValueError("negative pool smaller than the fixation count")
    pos_vals = _pixel_values(grid, pos_pts)
    _pixel_values(grid, pool_pts)  # bounds check

    total = 0.0
    for split in range(n_splits):
        rng = sauc_rng(seed, split)
        chosen = rng.choice(len(pool_pts), size=n_sample, replace=False)
        neg_pts = _dedup_points([pool_pts[i] for i in chosen])
        neg_vals = np.array([grid[y, x] for x, y in neg_pts])
        total += _auc_from_values(pos_vals, neg_vals)
    return total / n_splits


def sim(a, b) -> float:
    """Histogram intersection of two unit-sum maps: sum of pixel minima."""
    ga = _as_grid(a)
    gb = _as_grid(b)
    if ga.shape != gb.shape:
        raise DimensionMismatch(f"{ga.shape} != {gb.shape}")
    for g in (ga, gb):
        if abs(float(g.sum()) - 1.0) > SIM_SUM_TOL:
            raise NotNormalized(f"map sums to {float(g.sum())!r}, expected 1")
    return float(np.minimum(ga, gb).sum())


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    ax = np.asarray(xs, dtype=np.float64)
    ay = np.asarray(ys, dtype=np.float64)
    if ax.shape != ay.shape or ax.ndim != 1:
        raise LengthMismatch("inputs must be equally long 1-D sequences")
    if ax.size < 3:
        raise TooFew("need at least 3 pairs")
    if np.all(ax == ax[0]) or np.all(ay == ay[0]):
        raise ZeroVariance("an input is constant")
    rx = rankdata(ax, method="average")
    ry = rankdata(ay, method="average")
    r = float(np.corrcoef(rx, ry)[0, 1])
    return max(-1.0, min(1.0, r))
