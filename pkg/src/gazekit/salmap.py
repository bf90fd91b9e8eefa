"""Saliency map construction from fixations, plus aggregation,
thresholding, and segmentation of maps.

The fixation-to-map transform sums an impulse per fixation and convolves
with an isotropic Gaussian truncated at radius ceil(3*sigma), zero-padded
at the borders, then renormalizes the whole grid to unit sum. The default
sigma of 39 px corresponds to about one degree of visual angle on a
1920x1080 laptop screen viewed from ~40 cm; pass your own when the
recording geometry differs.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import convolve1d

from .core import FloatGridStack, SaliencyMap, points_of
from .errors import DimensionMismatch, EmptyFixations, EmptyList, OutOfBounds

__all__ = [
    "DEFAULT_SIGMA_PX",
    "BinaryMask",
    "Region",
    "average_map",
    "connected_components",
    "fixations_to_salmap",
    "salmap_from_stack",
    "stack_from_salmaps",
    "top_percent_mask",
]

DEFAULT_SIGMA_PX = 39.0


@dataclass(frozen=True)
class BinaryMask:
    """Boolean grid marking, e.g., the top-percent pixels of a map."""

    bits: np.ndarray
    width: int = 0
    height: int = 0

    def __post_init__(self):
        arr = np.array(self.bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("binary mask must be 2-D")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)
        object.__setattr__(self, "height", arr.shape[0])
        object.__setattr__(self, "width", arr.shape[1])


@dataclass(frozen=True)
class Region:
    """One 8-connected component of set bits; pixels as (x, y) pairs."""

    label: int
    pixels: tuple[tuple[int, int], ...]


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    return np.exp(-(offsets**2) / (2.0 * sigma * sigma))


def fixations_to_salmap(
    fixations: Sequence,
    width: int,
    height: int,
    sigma: float = DEFAULT_SIGMA_PX,
    weights: Sequence[float] | None = None,
) -> SaliencyMap:
    """Render fixations into a unit-sum saliency map.

    ``weights`` (optional, same length as ``fixations``) scales each
    fixation's impulse; used for time-binned rendering where a fixation
    contributes fractionally to several bins.
    """
    pts = points_of(fixations)
    if not pts:
        raise EmptyFixations("cannot build a map from zero fixations")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if weights is None:
        w = np.ones(len(pts), dtype=np.float64)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(pts),):
            raise ValueError("weights must match fixations in length")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive sum")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.any(xs < 0) or np.any(xs >= width) or np.any(ys < 0) or np.any(ys >= height):
        raise OutOfBounds("fixation outside image bounds")

    impulses = np.zeros((height, width), dtype=np.float64)
    np.add.at(impulses, (ys, xs), w)
    kernel = _gaussian_kernel(sigma)
    blurred = convolve1d(impulses, kernel, axis=0, mode="constant", cval=0.0)
    blurred = convolve1d(blurred, kernel, axis=1, mode="constant", cval=0.0)
    return SaliencyMap(blurred / blurred.sum())


def average_map(maps: Sequence[SaliencyMap]) -> SaliencyMap:
    """Pixel-wise mean of equally-sized maps, renormalized to unit sum.

    Accumulates in input order so repeated runs are bit-identical.
    """
    if not maps:
        raise EmptyList("need at least one map")
    shape = maps[0].values.shape
    for m in maps[1:]:
        if m.values.shape != shape:
            raise DimensionMismatch(f"{m.values.shape} != {shape}")
    acc = np.zeros(shape, dtype=np.float64)
    for m in maps:
        acc += m.values
    acc /= len(maps)
    return SaliencyMap(acc / acc.sum())


def top_percent_mask(salmap: SaliencyMap, percent: float) -> BinaryMask:
    """Mark pixels whose value reaches the top-``percent`` nearest-rank
    threshold: at least floor(percent/100 * H*W) bits are set, and ties at
    the threshold are all included."""
    if not (0.0 < percent < 100.0):
        raise ValueError("percent must lie strictly between 0 and 100")
    flat = salmap.values.ravel()
    n = flat.size
    idx = n - int(math.floor(percent * n / 100.0))
    idx = min(idx, n - 1)
    threshold = np.partition(flat, idx)[idx]
    return BinaryMask(salmap.values >= threshold)


def connected_components(mask: BinaryMask) -> list[Region]:
    """8-connected components of the set bits, labeled 1, 2, ... in
    first-encounter (row-major) order. Pixels within a region are sorted
    row-major."""
    bits = mask.bits
    height, width = bits.shape
    labels = np.zeros(bits.shape, dtype=np.int32)
    regions = []
    next_label = 1
    for y in range(height):
        for x in range(width):
            if not bits[y, x] or labels[y, x]:
                continue
            queue = deque([(x, y)])
            labels[y, x] = next_label
            pixels = []
            while queue:
                cx, cy = queue.popleft()
                pixels.append((cx, cy))
                for ny in range(max(0, cy - 1), min(height, cy + 2)):
                    for nx in range(max(0, cx - 1), min(width, cx + 2)):
                        if bits[ny, nx] and not labels[ny, nx]:
                            labels[ny, nx] = next_label
                            queue.append((nx, ny))
            pixels.sort(key=lambda p: (p[1], p[0]))
            regions.append(Region(label=next_label, pixels=tuple(pixels)))
            next_label += 1
    return regions


def salmap_from_stack(stack: FloatGridStack) -> SaliencyMap:
    """Interpret a count=1 FGRID stack as a saliency map, normalizing to
    unit sum."""
    if stack.count != 1:
        raise DimensionMismatch(f"expected a single grid, got {stack.count}")
    return SaliencyMap.normalized(stack.grids[0])


def stack_from_salmaps(maps: Sequence[SaliencyMap]) -> FloatGridStack:
    """Bundle maps (equal dimensions) into a stack for FGRID output."""
    if not maps:
        raise EmptyList("need at least one map")
    shape = maps[0].values.shape
    for m in maps[1:]:
        if m.values.shape != shape:
            raise DimensionMismatch(f"{m.values.shape} != {shape}")
    return FloatGridStack(np.stack([m.values for m in maps]))
