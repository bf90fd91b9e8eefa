"""Bilinear grid resampling shared by activation upsampling and the
foveation pyramid."""

from __future__ import annotations

import numpy as np

__all__ = ["bilinear_resize"]


def bilinear_resize(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a (H, W) or (H, W, C) grid with bilinear interpolation.

    Uses the pixel-center convention ``src = (dst + 0.5) * scale - 0.5``
    with edge clamping, so constants are preserved exactly and a resize to
    the same shape is the identity.
    """
    arr = np.asarray(grid, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError("grid must be 2-D or 2-D with channels")
    in_h, in_w = arr.shape[0], arr.shape[1]
    if out_h < 1 or out_w < 1:
        raise ValueError("output dimensions must be positive")

    def axis_coords(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.floor(src).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = src - lo
        return lo, hi, frac

    y0, y1, fy = axis_coords(out_h, in_h)
    x0, x1, fx = axis_coords(out_w, in_w)
    if arr.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]

    top = arr[np.ix_(y0, x0)] * (1.0 - fx) + arr[np.ix_(y0, x1)] * fx
    bot = arr[np.ix_(y1, x0)] * (1.0 - fx) + arr[np.ix_(y1, x1)] * fx
    return top * (1.0 - fy) + bot * fy
