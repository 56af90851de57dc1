"""Generators for inhomogeneous Poisson, log-Gaussian Cox and thinned hard-core patterns.

All generators are deterministic functions of their specification, the
window and an integer seed (anything accepted by
:func:`numpy.random.default_rng`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import lapack

from .geometry import UNIT_SQUARE, Window, lattice_points
from .intensity import IntensityModel, Raster
from .pattern import PointPattern, ThinningSpec, thin_pattern

__all__ = [
    "ExponentialCorrelation",
    "GaussianFieldSpec",
    "HardCoreSpec",
    "LogIntensityMean",
    "PoissonModel",
    "HardCoreModel",
    "sim_poisson",
    "sim_gaussian_field",
    "sim_lgcp",
    "sim_hardcore",
    "sim_thinned_hardcore",
    "CholeskyError",
]

JITTER_START = 1e-10
JITTER_MAX = 1e-6
HARDCORE_GUARD = 1e6


class CholeskyError(np.linalg.LinAlgError):
    """Covariance factorisation failed even at the largest jitter."""


def sim_poisson(model: IntensityModel, w: Window, seed) -> PointPattern:
    """Inhomogeneous Poisson pattern by thinning a homogeneous one at ``sup lambda``."""
    _, sup = model.bounds(w)
    if not math.isfinite(sup):
        raise ValueError("intensity supremum is not finite")
    rng = np.random.default_rng(seed)
    n = rng.poisson(sup * w.area)
    xy = np.column_stack([
        w.xmin + w.width * rng.random(n),
        w.ymin + w.height * rng.random(n),
    ])
    u = rng.random(n)
    if n == 0:
        return PointPattern(w, xy)
    keep = u * sup < model.evaluate(xy)
    return PointPattern(w, xy[keep])


# ---------------------------------------------------------------------------
# Gaussian random fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialCorrelation:
    """``r(h) = exp(-h / scale)``."""

    scale: float = 0.1

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"correlation scale must be positive, got {self.scale}")

    def __call__(self, h):
        return np.exp(-np.asarray(h, dtype=float) / self.scale)


class LogIntensityMean:
    """Field mean ``mu = log lambda - sigma2 / 2`` so that ``E exp(Z) = lambda``."""

    def __init__(self, intensity: IntensityModel, variance: float):
        self.intensity = intensity
        self.variance = float(variance)

    def __call__(self, xy):
        return np.log(self.intensity.evaluate(np.asarray(xy, dtype=float).reshape(-1, 2))) - 0.5 * self.variance

    def __repr__(self):
        return f"LogIntensityMean({self.intensity!r}, variance={self.variance!r})"


@dataclass(frozen=True)
class GaussianFieldSpec:
    """Gaussian field with constant variance and stationary isotropic correlation.

    ``mean`` is either a constant or a callable on ``(n, 2)`` arrays.
    """

    mean: float | Callable = 0.0
    variance: float = 1.0
    correlation: Callable = field(default_factory=ExponentialCorrelation)
    n_grid: int = 128

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"field variance must be positive, got {self.variance}")
        if self.n_grid < 1:
            raise ValueError(f"grid resolution must be >= 1, got {self.n_grid}")

    def mean_at(self, xy: np.ndarray) -> np.ndarray:
        if callable(self.mean):
            return np.asarray(self.mean(xy), dtype=float).reshape(len(xy))
        return np.full(len(xy), float(self.mean))

    @classmethod
    def for_intensity(cls, intensity: IntensityModel, variance: float = 1.0, scale: float = 0.1,
                      n_grid: int = 128) -> "GaussianFieldSpec":
        """Field whose log-Gaussian Cox process has intensity ``intensity``."""
        return cls(LogIntensityMean(intensity, variance), variance, ExponentialCorrelation(scale), n_grid)


def _correlation_matrix_inplace(correlation, nx: int, ny: int, hx: float, hy: float) -> np.ndarray:
    """Dense correlation of an ``nx x ny`` node grid, built block by block.

    Nodes are ordered row-major (x fastest). The grid is block Toeplitz, so
    every entry is looked up from the table of lag correlations.
    """
    lag = correlation(np.hypot(np.arange(ny)[:, None] * hy, np.arange(nx)[None, :] * hx))
    absx = np.abs(np.arange(nx)[:, None] - np.arange(nx)[None, :])
    n = nx * ny
    c = np.empty((n, n))
    for j in range(ny):
        for jj in range(ny):
            c[j * nx:(j + 1) * nx, jj * nx:(jj + 1) * nx] = lag[abs(j - jj)][absx]
    return c


def _factor(correlation, nx, ny, hx, hy) -> np.ndarray:
    """Lower Cholesky factor of the node correlation matrix with escalating jitter."""
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        c = _correlation_matrix_inplace(correlation, nx, ny, hx, hy)
        c[np.diag_indices_from(c)] += jitter
        # c is symmetric, so its transpose is a Fortran-ordered view LAPACK can overwrite
        u, info = lapack.dpotrf(c.T, lower=0, overwrite_a=1, clean=0)
        if info == 0:
            lower = u.T
            n = lower.shape[0]
            for s in range(0, n, 1024):
                blk = lower[s:s + 1024]
                rows = np.arange(s, s + len(blk))[:, None]
                blk[np.arange(n)[None, :] > rows] = 0.0
            return lower
        del c, u
        jitter *= 10
    raise CholeskyError("correlation matrix is not positive definite even after jitter escalation")


@lru_cache(maxsize=1)
def _cached_factor(correlation, nx, ny, hx, hy):
    return _factor(correlation, nx, ny, hx, hy)


def field_nodes(spec: GaussianFieldSpec, w: Window) -> np.ndarray:
    """Cell-centred node coordinates of the field grid, row-major."""
    return lattice_points(w, spec.n_grid)


def sim_gaussian_field(spec: GaussianFieldSpec, w: Window, seed, size: int | None = None) -> np.ndarray:
    """One (or ``size``) realisations of the field on the ``n_grid x n_grid`` node lattice.

    Returns an array of shape ``(n_grid, n_grid)`` with row 0 at the smallest
    y, or ``(size, n_grid, n_grid)`` when ``size`` is given. The dense
    Cholesky factor is cached between calls with the same grid geometry.
    """
    n = spec.n_grid
    lower = _cached_factor(spec.correlation, n, n, w.width / n, w.height / n)
    rng = np.random.default_rng(seed)
    k = 1 if size is None else int(size)
    z = rng.standard_normal((n * n, k))
    mean = spec.mean_at(field_nodes(spec, w))
    vals = mean[:, None] + math.sqrt(spec.variance) * (lower @ z)
    vals = vals.T.reshape(k, n, n)
    return vals[0] if size is None else vals


def sim_lgcp(spec: GaussianFieldSpec, w: Window, seed) -> PointPattern:
    """Log-Gaussian Cox pattern: draw ``Z``, then Poisson with intensity ``exp(Z)``."""
    field_seed, poisson_seed = np.random.SeedSequence(seed).spawn(2)
    z = sim_gaussian_field(spec, w, field_seed)
    return sim_poisson(Raster(w, np.exp(z)), w, poisson_seed)


# ---------------------------------------------------------------------------
# Hard-core Gibbs process
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HardCoreSpec:
    """Hard-core process with conditional intensity ``beta * 1{d(u, X) > R}``."""

    beta: float = 200.0
    R: float = 0.05
    sweeps: int = 100_000

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.R > 0:
            raise ValueError(f"hard-core distance must be positive, got {self.R}")
        if self.sweeps < 0:
            raise ValueError(f"sweeps must be non-negative, got {self.sweeps}")


_CHUNK = 4096


def sim_hardcore(spec: HardCoreSpec, w: Window, seed) -> PointPattern:
    """Birth-death Metropolis-Hastings sampler for the hard-core process.

    Each of ``spec.sweeps`` proposals is a birth at a uniform location with
    probability 1/2, otherwise the death of a uniformly chosen point.
    Births are accepted with probability ``min(1, beta |W| / (n + 1))`` when
    they respect the hard core, deaths with ``min(1, n / (beta |W|))``. The
    chain starts from the empty pattern.

    Random variates are consumed in fixed-size blocks, so the state after
    ``k`` proposals does not depend on the total run length.
    """
    mass = spec.beta * w.area
    if mass > HARDCORE_GUARD:
        raise ValueError(f"beta * area = {mass:g} exceeds the guard {HARDCORE_GUARD:g}")
    rng = np.random.default_rng(seed)
    r2 = spec.R * spec.R
    cap = 64
    xs = np.empty(cap)
    ys = np.empty(cap)
    n = 0
    done = 0
    while done < spec.sweeps:
        block = rng.random((_CHUNK, 4))
        steps = min(_CHUNK, spec.sweeps - done)
        for move, a, b, acc in block[:steps].tolist():
            if move < 0.5:
                if acc * (n + 1) >= mass:
                    continue
                x = w.xmin + w.width * a
                y = w.ymin + w.height * b
                if n:
                    dx = xs[:n] - x
                    dy = ys[:n] - y
                    if (dx * dx + dy * dy).min() <= r2:
                        continue
                if n == cap:
                    cap *= 2
                    xs = np.resize(xs, cap)
                    ys = np.resize(ys, cap)
                xs[n] = x
                ys[n] = y
                n += 1
            elif n:
                if acc * mass >= n:
                    continue
                k = min(int(a * n), n - 1)
                n -= 1
                xs[k] = xs[n]
                ys[k] = ys[n]
        done += steps
    return PointPattern(w, np.column_stack([xs[:n], ys[:n]]))


def sim_thinned_hardcore(spec: HardCoreSpec, thin: ThinningSpec, seed, w: Window | None = None) -> PointPattern:
    """Hard-core pattern followed by independent location-dependent thinning.

    The hard-core stage uses ``seed`` exactly as :func:`sim_hardcore` does;
    the thinning stream is a child of ``SeedSequence(seed)``.
    """
    w = UNIT_SQUARE if w is None else w
    (thin_seed,) = np.random.SeedSequence(seed).spawn(1)
    return thin_pattern(sim_hardcore(spec, w, seed), thin, thin_seed)


# ---------------------------------------------------------------------------
# Models with a known conditional intensity
# ---------------------------------------------------------------------------


class PoissonModel:
    """Poisson process; its conditional intensity is the intensity function."""

    def __init__(self, intensity: IntensityModel):
        self.intensity = intensity

    def simulate(self, w: Window, seed) -> PointPattern:
        return sim_poisson(self.intensity, w, seed)

    def conditional_intensity(self, a, points: np.ndarray) -> float:
        return self.intensity.evaluate(a)


class HardCoreModel:
    """Hard-core process simulated by :func:`sim_hardcore`."""

    def __init__(self, spec: HardCoreSpec):
        self.spec = spec

    def simulate(self, w: Window, seed) -> PointPattern:
        return sim_hardcore(self.spec, w, seed)

    def conditional_intensity(self, a, points: np.ndarray) -> float:
        if len(points) == 0:
            return self.spec.beta
        d2 = ((np.asarray(points) - np.asarray(a, dtype=float)) ** 2).sum(axis=1)
        return self.spec.beta if d2.min() > self.spec.R**2 else 0.0
