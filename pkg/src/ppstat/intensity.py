"""Intensity functions, their bounds, kernel estimation and transforms.

Every model maps an ``(n, 2)`` coordinate array to an ``(n,)`` array of
intensities and reports ``(infimum, supremum)`` over a window. The infimum
is the constant that enters the inhomogeneous J-statistics through the
factors ``1 - lambda_bar / lambda(x)``.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy.special import logsumexp, ndtr

from .geometry import Window, lattice_points
from .pattern import PointPattern, ThinningSpec

__all__ = [
    "IntensityModel",
    "Constant",
    "ExponentialGradient",
    "Raster",
    "KernelEstimate",
    "ScaledIntensity",
    "ThinnedIntensity",
    "evaluate",
    "bounds",
    "kernel_estimate",
    "default_bandwidth",
    "scale_intensity",
    "thin_intensity",
    "read_raster",
    "write_raster",
]


class IntensityModel:
    """Base class. Subclasses implement ``_evaluate`` and ``bounds``."""

    def __call__(self, xy) -> np.ndarray:
        return self.evaluate(xy)

    def evaluate(self, xy):
        """Intensity at one point ``(x, y)`` or at an ``(n, 2)`` array of points."""
        arr = np.asarray(xy, dtype=float)
        single = arr.ndim == 1
        vals = self._evaluate(arr.reshape(-1, 2))
        if np.any(~(vals > 0)):
            raise ValueError(f"{self!r} is not strictly positive at the requested points")
        return float(vals[0]) if single else vals

    def _evaluate(self, xy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounds(self, window: Window) -> tuple[float, float]:
        raise NotImplementedError


class Constant(IntensityModel):
    def __init__(self, value: float):
        self.value = float(value)

    def _evaluate(self, xy):
        return np.full(len(xy), self.value)

    def bounds(self, window):
        return _checked(self.value, self.value)

    def __repr__(self):
        return f"Constant({self.value!r})"


class ExponentialGradient(IntensityModel):
    """``lambda(x, y) = a * exp(-b * y)``."""

    def __init__(self, a: float, b: float):
        self.a = float(a)
        self.b = float(b)

    def _evaluate(self, xy):
        return self.a * np.exp(-self.b * xy[:, 1])

    def bounds(self, window):
        # monotone in y, so the extremes sit on the bottom and top edges
        ends = (self.a * math.exp(-self.b * window.ymin), self.a * math.exp(-self.b * window.ymax))
        return _checked(min(ends), max(ends))

    def __repr__(self):
        return f"ExponentialGradient(a={self.a!r}, b={self.b!r})"


class Raster(IntensityModel):
    """Cell values on a regular grid, bilinearly interpolated between cell centres.

    Parameters
    ----------
    window : Window
        Region covered by the raster.
    values : array_like, shape (ny, nx)
        Non-negative cell values; row 0 is the smallest y.

    Outside the hull of cell centres the nearest edge value is used, so the
    interpolant stays within ``[min(values), max(values)]``.
    """

    def __init__(self, window: Window, values):
        vals = np.array(values, dtype=float)
        if vals.ndim != 2 or vals.size == 0:
            raise ValueError("raster values must be a non-empty 2-d array")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("raster values must be finite and non-negative")
        vals.setflags(write=False)
        self.window = window
        self.values = vals

    @property
    def shape(self):
        return self.values.shape

    def _axis(self, coord, lo, width, n):
        # fractional index relative to cell centres, clamped to the valid range
        f = np.clip((coord - lo) / width * n - 0.5, 0.0, n - 1)
        i0 = np.minimum(np.floor(f).astype(int), max(n - 2, 0))
        return i0, f - i0

    def _evaluate(self, xy):
        ny, nx = self.values.shape
        w = self.window
        ix, fx = self._axis(xy[:, 0], w.xmin, w.width, nx)
        iy, fy = self._axis(xy[:, 1], w.ymin, w.height, ny)
        ix1 = np.minimum(ix + 1, nx - 1)
        iy1 = np.minimum(iy + 1, ny - 1)
        v = self.values
        return (
            v[iy, ix] * (1 - fx) * (1 - fy)
            + v[iy, ix1] * fx * (1 - fy)
            + v[iy1, ix] * (1 - fx) * fy
            + v[iy1, ix1] * fx * fy
        )

    def bounds(self, window=None):
        return _checked(float(self.values.min()), float(self.values.max()))

    def integral(self) -> float:
        """Midpoint-rule integral of the raster over its window."""
        return float(self.values.mean() * self.window.area)

    def __repr__(self):
        return f"Raster({self.window}, shape={self.values.shape})"


def default_bandwidth(window: Window) -> float:
    return 0.1 * min(window.width, window.height)


class KernelEstimate(IntensityModel):
    """Isotropic Gaussian kernel intensity estimate with uniform edge correction.

    At location ``u`` the kernel sum is divided by the mass of the kernel
    centred at ``u`` that falls inside the window. Sums are formed in log
    space and floored at the smallest normal float, so the surface stays
    strictly positive far from the data.
    """

    def __init__(self, pattern: PointPattern, bandwidth: float | None = None, resolution: int = 256):
        if len(pattern) == 0:
            raise ValueError("kernel estimation needs a non-empty pattern")
        h = default_bandwidth(pattern.window) if bandwidth is None else float(bandwidth)
        if not h > 0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
        self.pattern = pattern
        self.bandwidth = h
        self.resolution = int(resolution)

    def edge_mass(self, xy) -> np.ndarray:
        w, h = self.pattern.window, self.bandwidth
        x, y = xy[:, 0], xy[:, 1]
        mx = ndtr((w.xmax - x) / h) - ndtr((w.xmin - x) / h)
        my = ndtr((w.ymax - y) / h) - ndtr((w.ymin - y) / h)
        return mx * my

    def _evaluate(self, xy, chunk: int = 4096):
        h = self.bandwidth
        pts = self.pattern.points
        out = np.empty(len(xy))
        for s in range(0, len(xy), chunk):
            q = xy[s:s + chunk]
            d2 = (q[:, None, 0] - pts[None, :, 0]) ** 2 + (q[:, None, 1] - pts[None, :, 1]) ** 2
            out[s:s + chunk] = logsumexp(-0.5 * d2 / h**2, axis=1)
        out += -math.log(2 * math.pi * h**2) - np.log(self.edge_mass(xy))
        return np.maximum(np.exp(out), np.finfo(float).tiny)

    def bounds(self, window=None):
        vals = self._evaluate(lattice_points(window or self.pattern.window, self.resolution))
        return _checked(float(vals.min()), float(vals.max()))

    def rasterize(self, resolution: int | None = None) -> Raster:
        m = self.resolution if resolution is None else int(resolution)
        w = self.pattern.window
        vals = self._evaluate(lattice_points(w, m)).reshape(m, m)
        return Raster(w, vals)

    def __repr__(self):
        return f"KernelEstimate(n={len(self.pattern)}, h={self.bandwidth!r})"


def kernel_estimate(pattern: PointPattern, bandwidth: float | None = None, resolution: int = 256) -> Raster:
    """Gaussian kernel intensity surface of ``pattern`` rasterised on ``resolution`` cells per side."""
    return KernelEstimate(pattern, bandwidth, resolution).rasterize()


class ScaledIntensity(IntensityModel):
    """Intensity of ``cX``: ``lambda_c(x) = lambda(x / c) / c**2``."""

    def __init__(self, base: IntensityModel, c: float):
        if not c > 0:
            raise ValueError(f"scale factor must be positive, got {c}")
        self.base = base
        self.c = float(c)

    def _evaluate(self, xy):
        return self.base._evaluate(xy / self.c) / self.c**2

    def bounds(self, window):
        lo, hi = self.base.bounds(window.scaled(1 / self.c))
        return _checked(lo / self.c**2, hi / self.c**2)

    def __repr__(self):
        return f"ScaledIntensity({self.base!r}, c={self.c!r})"


class ThinnedIntensity(IntensityModel):
    """Pointwise product ``lambda(x) * p(x)`` of an intensity and a retention probability."""

    def __init__(self, base: IntensityModel, spec: ThinningSpec):
        self.base = base
        self.spec = spec

    def _evaluate(self, xy):
        return self.base._evaluate(xy) * self.spec(xy)

    def bounds(self, window):
        lo, hi = self.base.bounds(window)
        plo, phi = self.spec.bounds(window)
        return _checked(lo * plo, hi * phi)

    def __repr__(self):
        return f"ThinnedIntensity({self.base!r}, {self.spec.retention!r})"


def evaluate(model: IntensityModel, p):
    return model.evaluate(p)


def bounds(model: IntensityModel, window: Window) -> tuple[float, float]:
    return model.bounds(window)


def scale_intensity(model: IntensityModel, c: float) -> IntensityModel:
    if not c > 0:
        raise ValueError(f"scale factor must be positive, got {c}")
    if c == 1:
        return model
    if isinstance(model, ScaledIntensity):
        return ScaledIntensity(model.base, model.c * c)
    return ScaledIntensity(model, c)


def thin_intensity(model: IntensityModel, spec: ThinningSpec) -> IntensityModel:
    return ThinnedIntensity(model, spec)


def _checked(lo: float, hi: float) -> tuple[float, float]:
    if not lo > 0:
        raise ValueError(f"intensity infimum must be positive, got {lo}")
    if not math.isfinite(hi):
        raise ValueError("intensity supremum is not finite")
    return lo, hi


def write_raster(raster: Raster, path) -> None:
    w = raster.window
    ny, nx = raster.values.shape
    lines = [f"# raster {w.xmin!r} {w.xmax!r} {w.ymin!r} {w.ymax!r} {nx} {ny}"]
    lines.extend(",".join(repr(float(v)) for v in row) for row in raster.values)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_raster(path) -> Raster:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty raster file")
    head = lines[0].split()
    if len(head) != 8 or head[:2] != ["#", "raster"]:
        raise ValueError(f"{path}: first line must be '# raster xmin xmax ymin ymax nx ny'")
    window = Window(*(float(v) for v in head[2:6]))
    nx, ny = int(head[6]), int(head[7])
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    vals = np.array(rows, dtype=float)
    if vals.shape != (ny, nx):
        raise ValueError(f"{path}: expected {ny} rows of {nx} values, got shape {vals.shape}")
    return Raster(window, vals)
