"""Deterministic rasterization helpers for skeleton overlays and fixtures.

A pixel belongs to a thick line iff the distance from its center to the
segment is at most half the thickness; discs are the degenerate case.
Everything is vectorized numpy over the primitive's bounding box, so
identical inputs touch identical pixels on every run.
"""

from __future__ import annotations

import numpy as np

Color = tuple[int, int, int]


def _clip_box(img: np.ndarray, x0: float, y0: float, x1: float, y1: float, pad: float):
    h, w = img.shape[:2]
    xa = max(0, int(np.floor(min(x0, x1) - pad)))
    xb = min(w, int(np.ceil(max(x0, x1) + pad)) + 1)
    ya = max(0, int(np.floor(min(y0, y1) - pad)))
    yb = min(h, int(np.ceil(max(y0, y1) + pad)) + 1)
    return xa, xb, ya, yb


def draw_line(img: np.ndarray, p0: tuple[float, float], p1: tuple[float, float],
              color: Color, thickness: float = 3.0) -> None:
    """Draw a thick segment from p0 to p1 (x, y pixel coords) in place."""
    x0, y0 = p0
    x1, y1 = p1
    half = thickness / 2.0
    xa, xb, ya, yb = _clip_box(img, x0, y0, x1, y1, half)
    if xa >= xb or ya >= yb:
        return
    xs = np.arange(xa, xb, dtype=np.float64)[None, :]
    ys = np.arange(ya, yb, dtype=np.float64)[:, None]
    dx, dy = x1 - x0, y1 - y0
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0.0:
        dist_sq = (xs - x0) ** 2 + (ys - y0) ** 2
    else:
        t = ((xs - x0) * dx + (ys - y0) * dy) / seg_len_sq
        np.clip(t, 0.0, 1.0, out=t)
        dist_sq = (xs - (x0 + t * dx)) ** 2 + (ys - (y0 + t * dy)) ** 2
    mask = dist_sq <= half * half
    img[ya:yb, xa:xb][mask] = color


def draw_disc(img: np.ndarray, center: tuple[float, float], radius: float, color: Color) -> None:
    """Draw a filled disc in place."""
    cx, cy = center
    xa, xb, ya, yb = _clip_box(img, cx, cy, cx, cy, radius)
    if xa >= xb or ya >= yb:
        return
    xs = np.arange(xa, xb, dtype=np.float64)[None, :]
    ys = np.arange(ya, yb, dtype=np.float64)[:, None]
    mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius
    img[ya:yb, xa:xb][mask] = color
