"""Deterministic numeric kernels of the saliency-guided attention
pipeline: winner-take-all fixation selection, foveation, affine patch
sampling, and soft-attention pooling.

These are the forward-pass pieces a training stack would call; nothing
here is learned. Normalized patch coordinates use [-1, 1] with (-1, -1)
at the top-left, pixel-center convention (matching common grid-sampling
layers with align_corners=False).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.ndimage import convolve1d

from .core import FixationLocationSet, FloatGridStack, SaliencyMap
from .errors import EmptyFeatureSet, NonFiniteScore, NoWinner, OutOfBounds
from .resample import bilinear_resize

__all__ = [
    "DEFAULT_FOVEA_R0_PX",
    "DEFAULT_SUPPRESS_RADIUS_PX",
    "DEFAULT_WTA_LOCATIONS",
    "AffineParams",
    "AttentionPooling",
    "dot_score",
    "foveate",
    "sample_patch",
    "soft_attention",
    "wta_select",
]

# one visual degree / two visual degrees at the reference recording geometry
DEFAULT_SUPPRESS_RADIUS_PX = 39.0
DEFAULT_FOVEA_R0_PX = 78.0
DEFAULT_WTA_LOCATIONS = 8

_BINOMIAL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def wta_select(
    salmap: SaliencyMap,
    n: int = DEFAULT_WTA_LOCATIONS,
    suppress_radius: float = DEFAULT_SUPPRESS_RADIUS_PX,
    floor: float = 0.0,
) -> FixationLocationSet:
    """Iterative winner-take-all: pick the argmax (row-major first on
    ties), zero everything within ``suppress_radius`` (inhibition of
    return), repeat up to ``n`` times or until the best value drops to
    ``floor`` or below."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if suppress_radius < 0:
        raise ValueError("suppress_radius must be nonnegative")
    values = salmap.values.copy()
    height, width = values.shape
    ys, xs = np.mgrid[0:height, 0:width]
    picked: list[tuple[int, int]] = []
    for _ in range(n):
        flat_idx = int(np.argmax(values))
        y, x = divmod(flat_idx, width)
        if values[y, x] <= floor:
            break
        picked.append((x, y))
        within = (xs - x) ** 2 + (ys - y) ** 2 <= suppress_radius**2
        values[within] = 0.0
    if not picked:
        raise NoWinner("no map value above the floor")
    return FixationLocationSet(points=tuple(picked))


def _blur5(arr: np.ndarray) -> np.ndarray:
    out = convolve1d(arr, _BINOMIAL5, axis=0, mode="nearest")
    return convolve1d(out, _BINOMIAL5, axis=1, mode="nearest")


def foveate(
    image: np.ndarray,
    center: tuple[float, float],
    levels: int = 6,
    r0: float = DEFAULT_FOVEA_R0_PX,
) -> np.ndarray:
    """Emulate acuity falloff around ``center``: blend between levels of a
    Gaussian pyramid, with the level index growing as
    ``log2(1 + distance/r0)``.

    The pyramid downsamples by 2 with a 5-tap binomial blur (edge
    replication, so constants pass through untouched) and each level is
    bilinearly upsampled back to full size before blending. Returns
    float64 with the input's shape.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError("image must be 2-D or 2-D with channels")
    if levels < 2:
        raise ValueError("need at least 2 pyramid levels")
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    height, width = arr.shape[0], arr.shape[1]
    cx, cy = center
    if not (0 <= cx < width and 0 <= cy < height):
        raise OutOfBounds("fovea center outside the image")

    small = arr
    pyramid = [arr]
    for _ in range(1, levels):
        small = _blur5(small)[::2, ::2]
        pyramid.append(bilinear_resize(small, height, width))

    ys, xs = np.mgrid[0:height, 0:width]
    dist = np.hypot(xs - cx, ys - cy)
    level = np.clip(np.log2(1.0 + dist / r0), 0.0, levels - 1.0)
    lo = np.floor(level).astype(np.intp)
    hi = np.minimum(lo + 1, levels - 1)
    frac = level - lo
    if arr.ndim == 3:
        frac = frac[:, :, None]
    stacked = np.stack(pyramid)
    take_lo = stacked[lo, ys, xs]
    take_hi = stacked[hi, ys, xs]
    return take_lo * (1.0 - frac) + take_hi * frac


@dataclass(frozen=True)
class AffineParams:
    """2x2 linear map plus a center offset, both in normalized [-1, 1]
    coordinates; the affine is [theta | center^T]."""

    theta: np.ndarray
    center: tuple[float, float]

    def __post_init__(self):
        arr = np.array(self.theta, dtype=np.float64)
        if arr.shape != (2, 2):
            raise ValueError("theta must be a 2x2 matrix")
        if not (np.all(np.isfinite(arr)) and all(math.isfinite(c) for c in self.center)):
            raise ValueError("affine parameters must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "theta", arr)


def sample_patch(stack: FloatGridStack, affine: AffineParams, out_size: int) -> FloatGridStack:
    """Extract a P x P patch from each grid by mapping the normalized
    output lattice through ``theta`` plus ``center`` and sampling
    bilinearly; reads outside the grid contribute 0."""
    if out_size < 1:
        raise ValueError("out_size must be at least 1")
    height, width = stack.height, stack.width
    p = out_size
    coords = (2.0 * np.arange(p) + 1.0) / p - 1.0
    u = np.tile(coords, p)
    v = np.repeat(coords, p)
    src = affine.theta @ np.stack([u, v]) + np.asarray(affine.center)[:, None]
    sx = (src[0] + 1.0) * 0.5 * width - 0.5
    sy = (src[1] + 1.0) * 0.5 * height - 0.5

    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    fx = sx - x0
    fy = sy - y0
    out = np.zeros((stack.count, p * p), dtype=np.float64)
    for dx, dy, w in (
        (0, 0, (1 - fx) * (1 - fy)),
        (1, 0, fx * (1 - fy)),
        (0, 1, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi = x0 + dx
        yi = y0 + dy
        valid = (xi >= 0) & (xi < width) & (yi >= 0) & (yi < height)
        if not np.any(valid):
            continue
        vals = stack.grids[:, yi[valid], xi[valid]]
        out[:, valid] += vals * w[valid]
    return FloatGridStack(out.reshape(stack.count, p, p))


def dot_score(fv: np.ndarray, h: np.ndarray) -> float:
    """Plain dot-product relevance score between a feature vector and the
    decoder state."""
    return float(np.dot(fv, h))


@dataclass(frozen=True)
class AttentionPooling:
    weights: np.ndarray
    pooled: np.ndarray


def soft_attention(
    fvs: Sequence[np.ndarray] | np.ndarray,
    h: np.ndarray,
    scorer: Callable[[np.ndarray, np.ndarray], float] = dot_score,
    mode: Literal["paper_literal", "convex"] = "paper_literal",
) -> AttentionPooling:
    """Softmax-pool feature vectors against a decoder state.

    Raw scores are softmax-normalized to weights summing to 1. In the
    default ``paper_literal`` mode the pooled vector is
    (1/N) * sum_i w_i * fv_i; ``convex`` drops the leading 1/N so the
    result stays inside the feature vectors' convex hull. Both modes are
    exposed because the extra 1/N changes the pooled magnitude and
    downstream layers must know which contract they were trained against.
    """
    arr = np.asarray(fvs, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise EmptyFeatureSet("need at least one feature vector")
    if mode not in ("paper_literal", "convex"):
        raise ValueError("mode must be 'paper_literal' or 'convex'")
    hvec = np.asarray(h, dtype=np.float64)
    scores = np.array([scorer(arr[i], hvec) for i in range(arr.shape[0])], dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NonFiniteScore("scorer produced a non-finite value")
    shifted = scores - scores.max()
    expd = np.exp(shifted)
    weights = expd / expd.sum()
    pooled = weights @ arr
    if mode == "paper_literal":
        pooled = pooled / arr.shape[0]
    return AttentionPooling(weights=weights, pooled=pooled)
