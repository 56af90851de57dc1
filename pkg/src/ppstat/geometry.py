"""Planar geometry: points, rectangular windows, erosion and lattices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Window", "distance", "erode", "lattice_points", "radii_grid", "UNIT_SQUARE"]


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangular observation window ``[xmin, xmax] x [ymin, ymax]``."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        bounds = (self.xmin, self.xmax, self.ymin, self.ymax)
        if not all(math.isfinite(b) for b in bounds):
            raise ValueError(f"window bounds must be finite, got {bounds}")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"degenerate window {bounds}")
        # normalise ints/numpy scalars so that equality and repr are stable
        for name, value in zip(("xmin", "xmax", "ymin", "ymax"), bounds):
            object.__setattr__(self, name, float(value))

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    def contains(self, xy) -> np.ndarray:
        """Closed-set membership for an ``(n, 2)`` array (or a single point)."""
        xy = np.asarray(xy, dtype=float)
        x, y = xy[..., 0], xy[..., 1]
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    def scaled(self, c: float) -> "Window":
        return Window(c * self.xmin, c * self.xmax, c * self.ymin, c * self.ymax)


UNIT_SQUARE = Window(0.0, 1.0, 0.0, 1.0)


def distance(a, b) -> float:
    """Euclidean distance between two planar points.

    Computed as ``sqrt(dx*dx + dy*dy)``; the estimators use the same
    expression so scalar and vectorised paths agree to the last bit.
    """
    dx = float(a[0]) - float(b[0])
    dy = float(a[1]) - float(b[1])
    return math.sqrt(dx * dx + dy * dy)


def erode(w: Window, t: float) -> Window | None:
    """Shrink ``w`` by ``t`` on every side.

    Returns ``None`` when the eroded set has no interior, i.e. when ``2t`` is
    at least the shorter side length.
    """
    if t < 0:
        raise ValueError(f"erosion radius must be non-negative, got {t}")
    if 2 * t >= w.width or 2 * t >= w.height:
        return None
    if t == 0:
        return w
    return Window(w.xmin + t, w.xmax - t, w.ymin + t, w.ymax - t)


def lattice_points(w: Window, m: int) -> np.ndarray:
    """Cell-centred ``m x m`` lattice in ``w`` as an ``(m*m, 2)`` array.

    Row-major with x varying fastest, starting from the lower-left cell.
    """
    if m < 1:
        raise ValueError(f"lattice size must be >= 1, got {m}")
    idx = np.arange(m) + 0.5
    xs = w.xmin + idx * (w.width / m)
    ys = w.ymin + idx * (w.height / m)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def radii_grid(radii) -> np.ndarray:
    """Validate an evaluation grid of radii: non-negative, strictly increasing."""
    r = np.asarray(radii, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("radii grid is empty")
    if not np.all(np.isfinite(r)) or r[0] < 0:
        raise ValueError("radii must be finite and non-negative")
    if np.any(np.diff(r) <= 0):
        raise ValueError("radii must be strictly increasing")
    return r
