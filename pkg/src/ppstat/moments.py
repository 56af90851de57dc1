"""Correlation-function machinery and theory oracles for the inhomogeneous J-function.

Product densities normalised by the intensity and n-point correlation
functions are linked by a sum over all set partitions; this module converts
between the two, evaluates the power series of J in the correlation
integrals, and provides Monte Carlo oracles for the log-Gaussian Cox closed
form and the conditional-intensity representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .geometry import UNIT_SQUARE, Window
from .intensity import IntensityModel
from .simulate import GaussianFieldSpec, _factor

__all__ = [
    "enumerate_partitions",
    "bell_number",
    "CorrelationStack",
    "NormalizedDensityStack",
    "xi_from_rho",
    "rho_from_xi",
    "QuadratureSpec",
    "Estimate",
    "SeriesResult",
    "j_n_integral",
    "j_series",
    "j_second_order",
    "lgcp_j_oracle",
    "ci_weighted_j_oracle",
    "DegenerateWeightError",
]

MAX_PARTITION_ORDER = 10


# ---------------------------------------------------------------------------
# set partitions
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _partitions(n: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    # restricted growth strings in lexicographic order
    out = []
    a = [0] * n

    def rec(i, top):
        if i == n:
            blocks = [[] for _ in range(top + 1)]
            for idx, b in enumerate(a):
                blocks[b].append(idx + 1)
            out.append(tuple(tuple(b) for b in blocks))
            return
        for b in range(top + 2):
            a[i] = b
            rec(i + 1, max(top, b))

    a[0] = 0
    rec(1, 0)
    return tuple(out)


def enumerate_partitions(n: int) -> list[list[list[int]]]:
    """All set partitions of ``{1, ..., n}``.

    Partitions are generated from restricted growth strings in lexicographic
    order, so the first one is the single block and the last one the
    partition into singletons. Blocks are listed by their smallest element.
    """
    if not 1 <= n <= MAX_PARTITION_ORDER:
        raise ValueError(f"partition order must lie in 1..{MAX_PARTITION_ORDER}, got {n}")
    return [[list(b) for b in p] for p in _partitions(n)]


def bell_number(n: int) -> int:
    """Bell number via the Bell triangle (independent of the enumeration)."""
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[-1] if n >= 1 else 1


# ---------------------------------------------------------------------------
# correlation stacks
# ---------------------------------------------------------------------------

# A stack maps order n to a function of an array of shape (..., n, 2) that
# returns the values at the configurations, shape (...).
StackFunction = Callable[[np.ndarray], np.ndarray]


def _one(x):
    return np.ones(np.asarray(x).shape[:-2])


def _zero(x):
    return np.zeros(np.asarray(x).shape[:-2])


class _Stack:
    kind = "function"

    def __init__(self, functions: dict[int, StackFunction]):
        orders = sorted(functions)
        if not orders or orders != list(range(1, orders[-1] + 1)):
            missing = sorted(set(range(1, max(orders or [1]) + 1)) - set(orders)) or [1]
            raise ValueError(f"{self.kind} stack is missing order(s) {missing}")
        self.functions = dict(functions)

    @property
    def max_order(self) -> int:
        return max(self.functions)

    def __call__(self, n: int, x) -> np.ndarray:
        if n not in self.functions:
            raise ValueError(f"order {n} not available (max order {self.max_order})")
        x = np.asarray(x, dtype=float)
        if x.shape[-2:] != (n, 2):
            raise ValueError(f"order-{n} arguments must have shape (..., {n}, 2), got {x.shape}")
        return np.asarray(self.functions[n](x), dtype=float)


class CorrelationStack(_Stack):
    """n-point correlation functions ``xi_1, ..., xi_N`` (``xi_1 == 1``)."""

    kind = "correlation"

    def __init__(self, functions: dict[int, StackFunction]):
        functions = dict(functions)
        functions.setdefault(1, _one)
        super().__init__(functions)

    @classmethod
    def poisson(cls, max_order: int) -> "CorrelationStack":
        return cls({n: (_one if n == 1 else _zero) for n in range(1, max_order + 1)})

    def is_poisson(self) -> bool:
        return all(self.functions[n] is _zero for n in range(2, self.max_order + 1))

    def scaled(self, c: float) -> "CorrelationStack":
        """Correlation functions of ``cX``: ``xi_n(x / c)``."""
        return CorrelationStack({n: _Scaled(f, c) for n, f in self.functions.items() if n > 1})


class NormalizedDensityStack(_Stack):
    """Product densities divided by the intensities, ``rho^(n) / prod lambda(x_i)``."""

    kind = "normalized density"


class _Scaled:
    def __init__(self, f, c):
        self.f, self.c = f, c

    def __call__(self, x):
        return self.f(np.asarray(x) / self.c)


def _partition_sum(n, x, lookup, skip_single_block):
    total = np.zeros(x.shape[:-2])
    for part in _partitions(n):
        if skip_single_block and len(part) == 1:
            continue
        term = np.ones(x.shape[:-2])
        for block in part:
            k = len(block)
            if k == 1:
                continue  # xi_1 == 1
            idx = [i - 1 for i in block]
            term = term * lookup(k, x[..., idx, :])
        total = total + term
    return total


class _XiFromRho:
    def __init__(self, rho: NormalizedDensityStack, n: int, cache: dict):
        self.rho, self.n, self.cache = rho, n, cache

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lookup = lambda k, y: self.cache[k](y)  # noqa: E731
        return self.rho(self.n, x) - _partition_sum(self.n, x, lookup, skip_single_block=True)


class _RhoFromXi:
    def __init__(self, xi: CorrelationStack, n: int):
        self.xi, self.n = xi, n

    def __call__(self, x):
        return _partition_sum(self.n, np.asarray(x, dtype=float), self.xi, skip_single_block=False)


def xi_from_rho(stack: NormalizedDensityStack) -> CorrelationStack:
    """Solve the partition recursion order by order for the correlation functions.

    ``xi_n`` is the normalised density minus the sum, over every partition
    with at least two blocks, of products of lower-order ``xi``.
    """
    cache: dict[int, StackFunction] = {1: _one}
    for n in range(2, stack.max_order + 1):
        cache[n] = _XiFromRho(stack, n, cache)
    return CorrelationStack(cache)


def rho_from_xi(stack: CorrelationStack) -> NormalizedDensityStack:
    """Normalised product densities as sums over set partitions of products of ``xi``."""
    return NormalizedDensityStack({n: _RhoFromXi(stack, n) for n in range(1, stack.max_order + 1)})


# ---------------------------------------------------------------------------
# J series
# ---------------------------------------------------------------------------


class Estimate(NamedTuple):
    value: float
    stderr: float


class SeriesResult(NamedTuple):
    value: float
    terms: list[float]
    converged: bool
    stderr: float


@dataclass(frozen=True)
class QuadratureSpec:
    """``method`` is ``"mc"`` (uniform samples on the ball) or ``"gauss"`` (n = 1 only)."""

    method: str = "mc"
    n_samples: int = 100_000
    n_nodes: int = 48
    seed: int = 0


def _unit_disc(rng, shape):
    r = np.sqrt(rng.random(shape))
    theta = 2 * math.pi * rng.random(shape)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def _gauss_polar(f, t, n_nodes):
    # Gauss-Legendre in the radius, equispaced (spectrally accurate) in the angle
    r_nodes, r_w = np.polynomial.legendre.leggauss(n_nodes)
    r = 0.5 * t * (r_nodes + 1)
    wr = 0.5 * t * r_w * r
    n_theta = 2 * n_nodes
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    pts = np.stack([r[:, None] * np.cos(theta)[None, :], r[:, None] * np.sin(theta)[None, :]], axis=-1)
    vals = f(pts)
    return float((vals * wr[:, None]).sum() * (2 * math.pi / n_theta))


def j_n_integral(stack: CorrelationStack, n: int, t: float, quadrature: QuadratureSpec | None = None) -> Estimate:
    """``J_n(t)``: integral of ``xi_{n+1}(0, x_1, ..., x_n)`` over ``B(0, t)^n``.

    Monte Carlo samples are drawn on the unit disc and scaled by ``t``, so a
    fixed seed gives exactly corresponding samples at every radius.
    """
    q = quadrature or QuadratureSpec()
    if n < 1 or n + 1 > stack.max_order:
        raise ValueError(f"J_{n} needs xi_{n + 1}, stack has max order {stack.max_order}")
    if t < 0:
        raise ValueError(f"radius must be non-negative, got {t}")
    if t == 0:
        return Estimate(0.0, 0.0)
    if q.method == "gauss":
        if n != 1:
            raise ValueError("product Gauss quadrature is only available for n = 1")

        def f(pts):
            z = np.zeros_like(pts)
            return stack(2, np.stack([z, pts], axis=-2))

        hi = _gauss_polar(f, t, q.n_nodes)
        lo = _gauss_polar(f, t, max(q.n_nodes // 2, 1))
        return Estimate(hi, abs(hi - lo))
    if q.method != "mc":
        raise ValueError(f"unknown quadrature method {q.method!r}")
    rng = np.random.default_rng([q.seed, n])
    x = t * _unit_disc(rng, (q.n_samples, n))
    args = np.concatenate([np.zeros((q.n_samples, 1, 2)), x], axis=1)
    vals = stack(n + 1, args)
    vol = (math.pi * t * t) ** n
    se = vol * float(vals.std(ddof=1)) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
    return Estimate(vol * float(vals.mean()), se)


def j_series(stack: CorrelationStack, lambda_bar: float, t: float, n_trunc: int = 3,
             quadrature: QuadratureSpec | None = None) -> SeriesResult:
    """Truncated series ``1 + sum_{n<=N} (-lambda_bar)^n / n! J_n(t)``.

    ``terms`` holds ``lambda_bar^n |J_n(t)| / n!``. ``converged`` is False
    when the last term exceeds the first, a finite stand-in for the
    asymptotic root test.
    """
    if not lambda_bar > 0:
        raise ValueError(f"lambda_bar must be positive, got {lambda_bar}")
    if not 1 <= n_trunc <= stack.max_order - 1:
        raise ValueError(f"truncation order {n_trunc} needs stack order {n_trunc + 1}, have {stack.max_order}")
    value = 1.0
    var = 0.0
    terms = []
    for n in range(1, n_trunc + 1):
        jn = j_n_integral(stack, n, t, quadrature)
        coef = lambda_bar**n / math.factorial(n)
        value += (-1) ** n * coef * jn.value
        var += (coef * jn.stderr) ** 2
        terms.append(coef * abs(jn.value))
    converged = not (len(terms) > 1 and terms[-1] > terms[0])
    return SeriesResult(value, terms, converged, math.sqrt(var))


def j_second_order(k_inhom_value, lambda_bar: float, t):
    """Second-order approximation ``1 - lambda_bar (K_inhom(t) - pi t^2)``."""
    t = np.asarray(t, dtype=float)
    out = 1.0 - lambda_bar * (np.asarray(k_inhom_value, dtype=float) - math.pi * t * t)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Monte Carlo oracles
# ---------------------------------------------------------------------------


def _ratio_stderr(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Ratio of means ``mean(a) / mean(b)`` with a delta-method standard error."""
    ma, mb = float(a.mean()), float(b.mean())
    r = ma / mb
    n = len(a)
    if n < 2:
        return r, float("inf")
    resid = a - r * b
    return r, float(np.sqrt(np.sum(resid**2) / (n - 1) / n) / abs(mb))


def _mean_infimum(spec: GaussianFieldSpec, window: Window, resolution: int = 257) -> float:
    if not callable(spec.mean):
        return math.exp(float(spec.mean))
    xs = np.linspace(window.xmin, window.xmax, resolution)
    ys = np.linspace(window.ymin, window.ymax, resolution)
    gx, gy = np.meshgrid(xs, ys)
    return float(np.exp(spec.mean_at(np.column_stack([gx.ravel(), gy.ravel()]))).min())


def lgcp_j_oracle(spec: GaussianFieldSpec, t, n_mc: int = 2000, seed=0, mu_bar: float | None = None,
                  window: Window | None = None, spacing: float | None = None, batch: int = 500):
    """Monte Carlo evaluation of the log-Gaussian Cox closed form for ``J_inhom(t)``.

    ``Y`` is the centred field on a square node grid covering ``B(0, t)``
    with node spacing ``spacing`` (default: one field cell of the unit
    square, ``1 / n_grid``). The integral of ``exp(Y)`` over the disc is the
    mean of ``exp(Y)`` over nodes inside the disc times ``pi t^2``.
    ``mu_bar`` defaults to the infimum of ``exp(mean)`` over ``window``.

    Returns an :class:`Estimate` for scalar ``t``, otherwise an array of
    shape ``(len(t), 2)`` with value and standard error per radius; all radii
    share the same field draws.
    """
    window = UNIT_SQUARE if window is None else window
    mu_bar = _mean_infimum(spec, window) if mu_bar is None else float(mu_bar)
    h = 1.0 / spec.n_grid if spacing is None else float(spacing)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValueError("radii must be non-negative")
    k = max(int(math.ceil(ts.max() / h)), 0)
    idx = np.arange(-k, k + 1)
    gx, gy = np.meshgrid(idx * h, idx * h)
    r_nodes = np.hypot(gx.ravel(), gy.ravel())
    side = 2 * k + 1
    origin = (side * side) // 2
    lower = _factor(spec.correlation, side, side, h, h)
    sigma = math.sqrt(spec.variance)
    rng = np.random.default_rng(seed)
    inside = [r_nodes <= tt for tt in ts]
    weights = [math.pi * tt * tt / m.sum() for tt, m in zip(ts, inside)]
    e0_all, ex_all = [], [[] for _ in ts]
    remaining = n_mc
    while remaining > 0:
        b = min(batch, remaining)
        y = sigma * (lower @ rng.standard_normal((side * side, b)))
        ey = np.exp(y)
        e0_all.append(ey[origin])
        for i, m in enumerate(inside):
            ex_all[i].append(np.exp(-mu_bar * weights[i] * ey[m].sum(axis=0)))
        remaining -= b
    e0 = np.concatenate(e0_all)
    out = np.empty((len(ts), 2))
    for i in range(len(ts)):
        w = np.concatenate(ex_all[i])
        if ts[i] == 0:
            out[i] = (1.0, 0.0)
            continue
        # J = E[e0 w] / (E[e0] E[w]); delta method on the three sample means
        a, m0, mw = (e0 * w).mean(), e0.mean(), w.mean()
        val = a / (m0 * mw)
        g = np.column_stack([e0 * w - a, e0 - m0, w - mw])
        grad = np.array([1 / (m0 * mw), -a / (m0**2 * mw), -a / (m0 * mw**2)])
        cov = np.cov(g, rowvar=False) / len(w)
        out[i] = (val, float(math.sqrt(max(grad @ cov @ grad, 0.0))))
    if np.ndim(t) == 0:
        return Estimate(float(out[0, 0]), float(out[0, 1]))
    return out


class DegenerateWeightError(ZeroDivisionError):
    """All Monte Carlo weights vanished, so the weighted expectation is undefined."""


@dataclass(frozen=True)
class WeightedOracleResult:
    value: float
    stderr: float
    weighted_mean: float
    weight_mean: float


def ci_weighted_j_oracle(model, intensity: IntensityModel, a, t: float, n_mc: int = 10_000, seed=0,
                         window: Window | None = None, lambda_bar: float | None = None) -> WeightedOracleResult:
    """Weighted expectation of ``lambda(a; X) / lambda(a)`` with weights ``prod(1 - u(x))``.

    ``u(x) = lambda_bar / lambda(x)`` for ``x`` within distance ``t`` of
    ``a``, zero elsewhere. ``model`` must provide ``simulate(window, seed)``
    and ``conditional_intensity(a, points)``; patterns are drawn on
    ``window`` (default unit square), which should contain ``B(a, t)``.
    """
    window = UNIT_SQUARE if window is None else window
    if lambda_bar is None:
        lambda_bar = intensity.bounds(window)[0]
    a = np.asarray(a, dtype=float)
    lam_a = intensity.evaluate(a)
    seeds = np.random.SeedSequence(seed).spawn(n_mc)
    ratio = np.empty(n_mc)
    weight = np.empty(n_mc)
    for i, s in enumerate(seeds):
        pts = model.simulate(window, s).points
        wgt = 1.0
        if len(pts):
            d = np.sqrt(((pts - a) ** 2).sum(axis=1))
            near = pts[d <= t]
            if len(near):
                wgt = float(np.prod(1.0 - lambda_bar / intensity.evaluate(near)))
        weight[i] = wgt
        ratio[i] = model.conditional_intensity(a, pts) / lam_a
    if not np.any(weight > 0):
        raise DegenerateWeightError("every sampled weight is zero")
    value, se = _ratio_stderr(ratio * weight, weight)
    return WeightedOracleResult(value, se, float((ratio * weight).mean()), float(weight.mean()))
