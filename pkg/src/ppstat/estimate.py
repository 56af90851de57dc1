"""Minus-sampling estimators of the inhomogeneous J-, empty-space, nearest-neighbour and K-statistics.

For each radius ``t`` only anchors in the window eroded by ``t`` are used,
so every ball ``B(anchor, t)`` lies inside the window. Each data point ``x``
contributes the factor ``1 - lambda_bar / lambda(x)`` to the product of an
anchor whose closed ball contains it.

Products are accumulated in point-list order and sums over anchors are
exactly rounded (:func:`math.fsum`), so results do not depend on how the
work is split up.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Window, erode, lattice_points, radii_grid
from .intensity import IntensityModel
from .pattern import PointPattern

__all__ = [
    "EstimatorConfig",
    "EstimateTable",
    "Envelope",
    "UndefinedEstimateError",
    "empty_space_functional_hat",
    "nn_functional_hat",
    "j_inhom_hat",
    "k_inhom_hat",
    "envelope",
    "write_table",
    "read_table",
    "write_envelope",
    "TABLE_HEADER",
]

TABLE_HEADER = "t,denom,num,j,k,n_grid,n_pts"
STATISTICS = ("denom", "num", "j", "k")


class UndefinedEstimateError(ValueError):
    """The estimator has no admissible anchors at the requested radius."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator settings.

    Parameters
    ----------
    grid : int
        Side length ``m`` of the ``m x m`` anchor lattice.
    radii : sequence of float, optional
        Evaluation radii. Default: 51 values from 0 to a quarter of the
        shorter window side.
    lambda_bar : float, optional
        Overrides the intensity infimum reported by the model.
    """

    grid: int = 64
    radii: tuple | None = None
    lambda_bar: float | None = None

    def __post_init__(self):
        if self.grid < 1:
            raise ValueError(f"grid must be >= 1, got {self.grid}")
        if self.lambda_bar is not None and not self.lambda_bar > 0:
            raise ValueError(f"lambda_bar override must be positive, got {self.lambda_bar}")
        if self.radii is not None:
            object.__setattr__(self, "radii", tuple(float(r) for r in radii_grid(self.radii)))

    def resolve_radii(self, window: Window) -> np.ndarray:
        if self.radii is not None:
            return np.array(self.radii)
        return np.linspace(0.0, 0.25 * min(window.width, window.height), 51)


def _factors(pattern: PointPattern, model: IntensityModel, cfg: EstimatorConfig):
    lam_bar = cfg.lambda_bar if cfg.lambda_bar is not None else model.bounds(pattern.window)[0]
    if len(pattern) == 0:
        return lam_bar, np.empty(0), np.empty(0)
    lam = np.asarray(model.evaluate(pattern.points), dtype=float).reshape(len(pattern))
    if np.any(lam < lam_bar):
        raise ValueError(
            f"lambda_bar = {lam_bar!r} exceeds the intensity at {int((lam < lam_bar).sum())} data point(s)"
        )
    return lam_bar, lam, 1.0 - lam_bar / lam


def _distances(anchors: np.ndarray, points: np.ndarray, j: int) -> np.ndarray:
    dx = anchors[:, 0] - points[j, 0]
    dy = anchors[:, 1] - points[j, 1]
    return np.sqrt(dx * dx + dy * dy)


def _products(anchors, points, factors, radii, self_index: bool = False) -> np.ndarray:
    """``prod`` of factors of points within distance ``t`` of each anchor, for every radius.

    With ``self_index`` the anchors are the points themselves and each
    anchor skips its own factor.
    """
    prod = np.ones((len(anchors), len(radii)))
    for j in range(len(points)):
        within = _distances(anchors, points, j)[:, None] <= radii[None, :]
        if self_index:
            within[j] = False
        prod *= np.where(within, factors[j], 1.0)
    return prod


@dataclass
class _Raw:
    radii: np.ndarray
    denom: np.ndarray
    num: np.ndarray
    k: np.ndarray
    n_grid: np.ndarray
    n_pts: np.ndarray


def _compute(pattern: PointPattern, model: IntensityModel, cfg: EstimatorConfig, radii, which=STATISTICS) -> _Raw:
    radii = radii_grid(radii)
    w = pattern.window
    lam_bar, lam, fac = _factors(pattern, model, cfg)
    pts = pattern.points
    nr = len(radii)
    eroded = [erode(w, t) for t in radii]
    denom = np.full(nr, np.nan)
    num = np.full(nr, np.nan)
    kval = np.full(nr, np.nan)
    n_grid = np.zeros(nr, dtype=int)
    n_pts = np.zeros(nr, dtype=int)

    if "denom" in which or "j" in which:
        anchors = lattice_points(w, cfg.grid)
        prod = _products(anchors, pts, fac, radii)
        for r, e in enumerate(eroded):
            if e is None:
                continue
            keep = e.contains(anchors)
            n_grid[r] = int(keep.sum())
            if n_grid[r]:
                denom[r] = math.fsum(prod[keep, r].tolist()) / n_grid[r]

    need_pairs = "num" in which or "j" in which or "k" in which
    if need_pairs and len(pts):
        in_eroded = [np.zeros(len(pts), bool) if e is None else e.contains(pts) for e in eroded]
        for r in range(nr):
            n_pts[r] = int(in_eroded[r].sum())
        if "num" in which or "j" in which:
            prod = _products(pts, pts, fac, radii, self_index=True)
            for r in range(nr):
                if n_pts[r]:
                    num[r] = math.fsum(prod[in_eroded[r], r].tolist()) / n_pts[r]
        if "k" in which:
            d = np.column_stack([_distances(pts, pts, j) for j in range(len(pts))])
            inv = 1.0 / (lam[:, None] * lam[None, :])
            np.fill_diagonal(d, np.inf)
            for r, e in enumerate(eroded):
                if e is None:
                    continue
                mask = (d <= radii[r]) & in_eroded[r][:, None]
                kval[r] = math.fsum(inv[mask].tolist()) / e.area
    elif "k" in which:
        for r, e in enumerate(eroded):
            if e is not None:
                kval[r] = 0.0
    return _Raw(radii, denom, num, kval, n_grid, n_pts)


def _scalar(value: float, what: str, t: float) -> float:
    if math.isnan(value):
        raise UndefinedEstimateError(f"{what} is undefined at t={t!r}: no anchors in the eroded window")
    return float(value)


def empty_space_functional_hat(pattern: PointPattern, model: IntensityModel, cfg: EstimatorConfig | None = None,
                               t: float = 0.0) -> float:
    """Grid average, over lattice anchors in the eroded window, of the product of factors in ``B(l, t)``."""
    raw = _compute(pattern, model, cfg or EstimatorConfig(), [t], which=("denom",))
    return _scalar(raw.denom[0], "empty-space functional", t)


def nn_functional_hat(pattern: PointPattern, model: IntensityModel, cfg: EstimatorConfig | None = None,
                      t: float = 0.0) -> float:
    """Average, over data points in the eroded window, of the product of factors of the other points in ``B(x, t)``."""
    raw = _compute(pattern, model, cfg or EstimatorConfig(), [t], which=("num",))
    return _scalar(raw.num[0], "nearest-neighbour functional", t)


def k_inhom_hat(pattern: PointPattern, model: IntensityModel, cfg: EstimatorConfig | None = None,
                t: float = 0.0) -> float:
    """Minus-sampling ``K_inhom``: ordered pairs with the first point in the eroded window, over its area."""
    raw = _compute(pattern, model, cfg or EstimatorConfig(), [t], which=("k",))
    if math.isnan(raw.k[0]):
        raise UndefinedEstimateError(f"K_inhom is undefined at t={t!r}: the eroded window is empty")
    return float(raw.k[0])


@dataclass
class EstimateTable:
    """Per-radius estimates. Undefined cells are masked, never filled in."""

    t: np.ndarray
    denom: np.ma.MaskedArray
    num: np.ma.MaskedArray
    j: np.ma.MaskedArray
    k: np.ma.MaskedArray
    n_grid: np.ndarray
    n_pts: np.ndarray

    def __len__(self):
        return len(self.t)

    def column(self, name: str) -> np.ma.MaskedArray:
        return getattr(self, name)

    def undefined(self, name: str) -> np.ndarray:
        return np.ma.getmaskarray(self.column(name))

    def rows(self):
        for i in range(len(self.t)):
            yield tuple(
                [float(self.t[i])]
                + [None if self.undefined(s)[i] else float(self.column(s)[i]) for s in STATISTICS]
                + [int(self.n_grid[i]), int(self.n_pts[i])]
            )


def _masked(values: np.ndarray, undefined: np.ndarray) -> np.ma.MaskedArray:
    return np.ma.masked_array(np.where(undefined, 0.0, values), mask=undefined.copy())


def _table(raw: _Raw) -> EstimateTable:
    d_undef = np.isnan(raw.denom)
    n_undef = np.isnan(raw.num)
    j_undef = d_undef | n_undef | (np.nan_to_num(raw.denom) == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        jv = raw.num / raw.denom
    return EstimateTable(
        t=raw.radii.copy(),
        denom=_masked(raw.denom, d_undef),
        num=_masked(raw.num, n_undef),
        j=_masked(jv, j_undef),
        k=_masked(raw.k, np.isnan(raw.k)),
        n_grid=raw.n_grid,
        n_pts=raw.n_pts,
    )


def j_inhom_hat(pattern: PointPattern, model: IntensityModel, cfg: EstimatorConfig | None = None) -> EstimateTable:
    """Estimate table with the two functionals, their ratio ``J_inhom`` and ``K_inhom`` at every radius."""
    cfg = cfg or EstimatorConfig()
    return _table(_compute(pattern, model, cfg, cfg.resolve_radii(pattern.window)))


def write_table(table: EstimateTable, path) -> None:
    lines = [TABLE_HEADER]
    for row in table.rows():
        cells = [repr(row[0])] + ["NA" if v is None else repr(v) for v in row[1:5]] + [str(row[5]), str(row[6])]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path) -> EstimateTable:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != TABLE_HEADER:
        raise ValueError(f"{path}: not an estimate table (header must be {TABLE_HEADER!r})")
    rows = [ln.split(",") for ln in lines[1:] if ln.strip()]
    if not rows:
        raise ValueError(f"{path}: estimate table has no rows")
    if any(len(r) != 7 for r in rows):
        raise ValueError(f"{path}: every row needs 7 fields")
    t = np.array([float(r[0]) for r in rows])
    cols = {}
    for c, name in enumerate(STATISTICS, start=1):
        undef = np.array([r[c].strip() == "NA" for r in rows])
        vals = np.array([0.0 if u else float(r[c]) for r, u in zip(rows, undef)])
        cols[name] = np.ma.masked_array(vals, mask=undef)
    return EstimateTable(t=t, n_grid=np.array([int(r[5]) for r in rows]),
                         n_pts=np.array([int(r[6]) for r in rows]), **cols)


# ---------------------------------------------------------------------------
# Monte Carlo envelopes
# ---------------------------------------------------------------------------


@dataclass
class Envelope:
    """Pointwise ``lo``/``hi``/``mean`` of each statistic over the simulated tables.

    ``n_used[stat]`` counts, per radius, the simulations whose cell was
    defined; radii where no simulation is defined stay masked.
    """

    t: np.ndarray
    lo: dict = field(default_factory=dict)
    hi: dict = field(default_factory=dict)
    mean: dict = field(default_factory=dict)
    n_used: dict = field(default_factory=dict)
    n_sim: int = 0

    def contains(self, stat: str, values) -> np.ma.MaskedArray:
        values = np.ma.asarray(values)
        return (values >= self.lo[stat]) & (values <= self.hi[stat])


def _worker_count(workers):
    if workers is None:
        env = os.environ.get("PPSTAT_THREADS", "1")
        workers = int(env) if env.strip() else 1
    if workers == 0:
        workers = os.cpu_count() or 1
    return max(1, int(workers))


def _one_table(args):
    null, model, cfg, seed = args
    pattern = null(seed)
    m = model(pattern) if not isinstance(model, IntensityModel) and callable(model) else model
    return j_inhom_hat(pattern, m, cfg)


def envelope(null, model, cfg: EstimatorConfig | None = None, n_sim: int = 99, seed=0,
             workers: int | None = None, return_tables: bool = False):
    """Simulation envelope of the estimate table under a null model.

    Parameters
    ----------
    null : callable
        ``null(seed) -> PointPattern``; must be picklable for ``workers > 1``.
    model : IntensityModel or callable
        Intensity used by the estimators, or ``model(pattern)`` returning one
        (e.g. a kernel estimate per simulated pattern).
    n_sim : int
        Number of simulations, at least 2.
    seed : int
        Root seed; simulation ``i`` uses the ``i``-th child of
        ``SeedSequence(seed)``, so results do not depend on ``workers``.
    workers : int, optional
        Process count; ``None`` reads ``PPSTAT_THREADS`` (0 = all cores).
    """
    if n_sim < 2:
        raise ValueError(f"an envelope needs n_sim >= 2, got {n_sim}")
    cfg = cfg or EstimatorConfig()
    seeds = [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(n_sim)]
    jobs = [(null, model, cfg, s) for s in seeds]
    nw = _worker_count(workers)
    if nw > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            tables = list(pool.map(_one_table, jobs))
    else:
        tables = [_one_table(j) for j in jobs]
    lens = {len(tb) for tb in tables}
    if len(lens) != 1:
        raise ValueError("simulated tables use different radii")
    env = Envelope(t=tables[0].t.copy(), n_sim=n_sim)
    for stat in STATISTICS:
        stack = np.ma.vstack([tb.column(stat) for tb in tables])
        env.lo[stat] = stack.min(axis=0)
        env.hi[stat] = stack.max(axis=0)
        env.mean[stat] = stack.mean(axis=0)
        env.n_used[stat] = stack.count(axis=0)
    return (env, tables) if return_tables else env


ENVELOPE_HEADER = ",".join(["t"] + [f"{s}_{q}" for s in STATISTICS for q in ("lo", "hi", "mean", "n")])


def write_envelope(env: Envelope, path) -> None:
    lines = [ENVELOPE_HEADER]
    for i, t in enumerate(env.t):
        cells = [repr(float(t))]
        for s in STATISTICS:
            for arr in (env.lo[s], env.hi[s], env.mean[s]):
                cells.append("NA" if np.ma.getmaskarray(arr)[i] else repr(float(arr[i])))
            cells.append(str(int(env.n_used[s][i])))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
