"""Point-pattern container, CSV I/O, scaling and independent thinning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .geometry import Window, lattice_points

__all__ = [
    "PointPattern",
    "PatternFormatError",
    "ThinningSpec",
    "ExponentialRetention",
    "read_pattern",
    "write_pattern",
    "scale_pattern",
    "thin_pattern",
]


class PatternFormatError(ValueError):
    """Raised for malformed or invalid pattern files."""


@dataclass(frozen=True, eq=False)
class PointPattern:
    """A finite simple point set observed in a rectangular window.

    Parameters
    ----------
    window : Window
    points : array_like, shape (n, 2)
        Point coordinates. Every point must lie inside ``window`` and no two
        points may coincide.
    """

    window: Window
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if not np.all(self.window.contains(pts)):
            bad = pts[~self.window.contains(pts)][0]
            raise ValueError(f"point ({bad[0]!r}, {bad[1]!r}) lies outside the window")
        if len(pts) > 1 and len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("pattern contains duplicate points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PointPattern):
            return NotImplemented
        return self.window == other.window and np.array_equal(self.points, other.points)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]


def read_pattern(path) -> PointPattern:
    """Read a pattern file.

    Line 1 is ``# window xmin xmax ymin ymax``, line 2 the header ``x,y``,
    then one ``x,y`` row per point.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if len(lines) < 2:
        raise PatternFormatError(f"{path}: expected window line and header")
    head = lines[0].split()
    if len(head) != 6 or head[:2] != ["#", "window"]:
        raise PatternFormatError(f"{path}: first line must be '# window xmin xmax ymin ymax'")
    try:
        window = Window(*(float(v) for v in head[2:]))
    except ValueError as exc:
        raise PatternFormatError(f"{path}: bad window line: {exc}") from exc
    if lines[1].strip().replace(" ", "") != "x,y":
        raise PatternFormatError(f"{path}: second line must be the header 'x,y'")
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise PatternFormatError(f"{path}:{lineno}: expected two fields, got {line!r}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise PatternFormatError(f"{path}:{lineno}: {exc}") from exc
    try:
        return PointPattern(window, np.array(rows, dtype=float).reshape(-1, 2))
    except ValueError as exc:
        raise PatternFormatError(f"{path}: {exc}") from exc


def write_pattern(pattern: PointPattern, path) -> None:
    """Write ``pattern`` using shortest round-trip float formatting."""
    w = pattern.window
    out = [f"# window {w.xmin!r} {w.xmax!r} {w.ymin!r} {w.ymax!r}", "x,y"]
    out.extend(f"{float(x)!r},{float(y)!r}" for x, y in pattern.points)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def scale_pattern(pattern: PointPattern, c: float) -> PointPattern:
    """Map the pattern ``X`` observed in ``W`` to ``cX`` observed in ``cW``."""
    if not c > 0:
        raise ValueError(f"scale factor must be positive, got {c}")
    return PointPattern(pattern.window.scaled(c), pattern.points * c)


class ExponentialRetention:
    """Retention probability ``p(x, y) = exp(-b * y)``; picklable."""

    def __init__(self, b: float = 1.0):
        self.b = float(b)

    def __call__(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return np.exp(-self.b * xy[..., 1])

    def __repr__(self):
        return f"ExponentialRetention(b={self.b!r})"


@dataclass(frozen=True)
class ThinningSpec:
    """Location-dependent retention probability ``p`` with values in ``(0, 1]``.

    ``infimum`` and ``supremum`` may be supplied when known analytically;
    otherwise :meth:`bounds` probes a 256 x 256 lattice.
    """

    retention: Callable[[np.ndarray], np.ndarray]
    infimum: float | None = None
    supremum: float | None = None

    @classmethod
    def constant(cls, p: float) -> "ThinningSpec":
        if not 0 < p <= 1:
            raise ValueError(f"retention probability must lie in (0, 1], got {p}")
        return cls(_ConstantRetention(p), p, p)

    @classmethod
    def exponential(cls, b: float = 1.0) -> "ThinningSpec":
        """``p(x, y) = exp(-b y)``; exact bounds are derived per window."""
        return cls(ExponentialRetention(b))

    def __call__(self, xy) -> np.ndarray:
        return np.asarray(self.retention(np.asarray(xy, dtype=float)), dtype=float)

    def bounds(self, window: Window, resolution: int = 256) -> tuple[float, float]:
        if self.infimum is not None and self.supremum is not None:
            lo, hi = self.infimum, self.supremum
        elif isinstance(self.retention, ExponentialRetention):
            b = self.retention.b
            ends = (math.exp(-b * window.ymin), math.exp(-b * window.ymax))
            lo, hi = min(ends), max(ends)
        else:
            vals = self(lattice_points(window, resolution))
            lo = float(vals.min()) if self.infimum is None else self.infimum
            hi = float(vals.max()) if self.supremum is None else self.supremum
        if not (0 < lo <= hi <= 1):
            raise ValueError(f"retention bounds ({lo}, {hi}) outside (0, 1]")
        return lo, hi


class _ConstantRetention:
    def __init__(self, p: float):
        self.p = float(p)

    def __call__(self, xy) -> np.ndarray:
        return np.full(np.asarray(xy).shape[:-1], self.p)

    def __repr__(self):
        return f"ConstantRetention(p={self.p!r})"


def thin_pattern(pattern: PointPattern, spec: ThinningSpec, seed) -> PointPattern:
    """Keep each point independently with probability ``p(point)``.

    One uniform variate is drawn per point in list order, so the result is a
    deterministic function of the pattern order and ``seed``.
    """
    rng = np.random.default_rng(seed)
    n = len(pattern)
    u = rng.random(n)
    if n == 0:
        return pattern
    p = spec(pattern.points)
    if np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
        raise ValueError("retention probability evaluates outside (0, 1]")
    keep = u < p
    return PointPattern(pattern.window, pattern.points[keep])
