"""Temporal attention sequences and their dynamic-time-warping comparison.

A gaze session becomes a sequence of saliency maps by splitting time into
fixed bins (default 500 ms); a fixation contributes to every bin it
overlaps, weighted by overlap fraction, so total weight per fixation is 1.
Empty bins are dropped (a zero map cannot be unit-sum); their indices are
retained so reports can show the gaps.

Two sequences are aligned with classic DTW. The frame cost is
``1 - sim(frame_a, frame_b)``, and the reported distance divides the
optimal path's total cost by the number of aligned pairs (path nodes);
pass ``normalize="steps"`` to divide by the step count instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .core import FloatGridStack, GazeSession, SaliencyMap
from .errors import DimensionMismatch, EmptyFixations, EmptySequence
from .metrics import sim
from .salmap import DEFAULT_SIGMA_PX, fixations_to_salmap

__all__ = [
    "DEFAULT_BIN_MS",
    "AttentionSequence",
    "DtwResult",
    "bin_fixations",
    "dtw_distance",
    "fixation_bin_weights",
    "sequence_from_stack",
]

DEFAULT_BIN_MS = 500.0


@dataclass(frozen=True)
class AttentionSequence:
    """Ordered unit-sum frames; frame_span is the bin width in ms for human
    sequences, or 1.0 (one generated word per frame) for machine ones."""

    frames: tuple[SaliencyMap, ...]
    frame_span: float
    frame_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if len(self.frames) < 1:
            raise ValueError("a sequence holds at least one frame")
        shape = self.frames[0].values.shape
        for f in self.frames[1:]:
            if f.values.shape != shape:
                raise ValueError("sequence frames must share dimensions")
        if self.frame_indices is not None and len(self.frame_indices) != len(self.frames):
            raise ValueError("frame_indices must match frames in length")

    def __len__(self):
        return len(self.frames)


def fixation_bin_weights(
    fixations: Sequence, bin_ms: float = DEFAULT_BIN_MS
) -> np.ndarray:
    """Per-fixation weight in each time bin, shape (n_fixations, n_bins).

    Weight is overlap duration divided by fixation duration; a
    zero-duration fixation puts weight 1 in the bin containing its
    timestamp. Rows sum to 1.
    """
    fixations = list(fixations)
    if not fixations:
        raise EmptyFixations("need at least one fixation")
    if bin_ms <= 0:
        raise ValueError("bin_ms must be positive")
    n_bins = 1
    for f in fixations:
        if f.t_end > f.t_start:
            n_bins = max(n_bins, math.ceil(f.t_end / bin_ms))
        else:
            n_bins = max(n_bins, int(f.t_start // bin_ms) + 1)
    weights = np.zeros((len(fixations), n_bins), dtype=np.float64)
    for i, f in enumerate(fixations):
        duration = f.t_end - f.t_start
        if duration <= 0:
            weights[i, min(int(f.t_start // bin_ms), n_bins - 1)] = 1.0
            continue
        first = int(f.t_start // bin_ms)
        last = min(int(math.ceil(f.t_end / bin_ms)), n_bins)
        for k in range(first, last):
            overlap = min(f.t_end, (k + 1) * bin_ms) - max(f.t_start, k * bin_ms)
            if overlap > 0:
                weights[i, k] = overlap / duration
    return weights


def bin_fixations(
    session: GazeSession,
    width: int,
    height: int,
    bin_ms: float = DEFAULT_BIN_MS,
    sigma: float = DEFAULT_SIGMA_PX,
) -> AttentionSequence:
    """Split a session into time bins and render each nonempty bin as a
    saliency map."""
    if not session.fixations:
        raise EmptyFixations("session has no fixations")
    weights = fixation_bin_weights(session.fixations, bin_ms)
    frames = []
    kept = []
    for k in range(weights.shape[1]):
        col = weights[:, k]
        active = np.nonzero(col > 0)[0]
        if active.size == 0:
            continue
        pts = [session.fixations[int(i)] for i in active]
        frames.append(
            fixations_to_salmap(pts, width, height, sigma, weights=col[active])
        )
        kept.append(k)
    return AttentionSequence(
        frames=tuple(frames), frame_span=bin_ms, frame_indices=tuple(kept)
    )


def sequence_from_stack(stack: FloatGridStack, frame_span: float = 1.0) -> AttentionSequence:
    """Treat each grid of a stack as one attention frame, normalizing each
    to unit sum (machine attention weights are nonnegative)."""
    frames = tuple(SaliencyMap.normalized(stack.grids[i]) for i in range(stack.count))
    return AttentionSequence(frames=frames, frame_span=frame_span)


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: tuple[tuple[int, int], ...]
    pair_costs: tuple[float, ...]


def dtw_distance(
    a: AttentionSequence,
    b: AttentionSequence,
    normalize: Literal["pairs", "steps"] = "pairs",
) -> DtwResult:
    """Align two sequences with DTW and return the normalized distance.

    The warping path is monotone, starts at (0, 0), ends at
    (len(a)-1, len(b)-1), and uses steps (i-1,j), (i,j-1), (i-1,j-1).
    Ties between equal-cost predecessors are broken preferring diagonal,
    then vertical (advance in ``a``), so paths are deterministic.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptySequence("sequences must be nonempty")
    if a.frames[0].values.shape != b.frames[0].values.shape:
        raise DimensionMismatch("sequence frames differ in dimensions")
    n, m = len(a), len(b)
    cost = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            cost[i, j] = 1.0 - sim(a.frames[i], b.frames[j])

    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            acc[i, j] = cost[i - 1, j - 1] + min(
                acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
            )

    path = [(n - 1, m - 1)]
    i, j = n, m
    while (i, j) != (1, 1):
        candidates = (
            (acc[i - 1, j - 1], (i - 1, j - 1)),
            (acc[i - 1, j], (i - 1, j)),
            (acc[i, j - 1], (i, j - 1)),
        )
        best = min(c[0] for c in candidates)
        for value, (pi, pj) in candidates:
            if value == best:
                i, j = pi, pj
                break
        path.append((i - 1, j - 1))
    path.reverse()

    pair_costs = tuple(float(cost[i, j]) for i, j in path)
    total = float(sum(pair_costs))
    if normalize == "pairs":
        denom = len(path)
    elif normalize == "steps":
        denom = max(len(path) - 1, 1)
    else:
        raise ValueError("normalize must be 'pairs' or 'steps'")
    return DtwResult(distance=total / denom, path=tuple(path), pair_costs=pair_costs)
