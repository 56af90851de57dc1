import math

import numpy as np
import pytest
from scipy import stats

from ppstat.estimate import EstimatorConfig, j_inhom_hat
from ppstat.geometry import UNIT_SQUARE, Window
from ppstat.intensity import Constant, ExponentialGradient, scale_intensity
from ppstat.pattern import ThinningSpec, scale_pattern
from ppstat.simulate import (
    CholeskyError,
    ExponentialCorrelation,
    GaussianFieldSpec,
    HardCoreSpec,
    field_nodes,
    sim_gaussian_field,
    sim_hardcore,
    sim_lgcp,
    sim_poisson,
    sim_thinned_hardcore,
)

GRADIENT_MEAN = 100 * (1 - math.exp(-1))


def _min_pair_distance(points):
    if len(points) < 2:
        return math.inf
    d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    return d.min()


# -- Poisson --------------------------------------------------------------


def test_poisson_deterministic(gradient_intensity):
    assert sim_poisson(gradient_intensity, UNIT_SQUARE, 7) == sim_poisson(gradient_intensity, UNIT_SQUARE, 7)
    assert sim_poisson(gradient_intensity, UNIT_SQUARE, 7) != sim_poisson(gradient_intensity, UNIT_SQUARE, 8)


def test_poisson_near_empty():
    counts = [len(sim_poisson(Constant(1e-3), UNIT_SQUARE, s)) for s in range(50)]
    assert sum(counts) <= 2


def test_poisson_gradient_mean_count(gradient_intensity):
    assert GRADIENT_MEAN == pytest.approx(63.21, abs=5e-3)
    counts = [len(sim_poisson(gradient_intensity, UNIT_SQUARE, s)) for s in range(500)]
    assert np.mean(counts) == pytest.approx(GRADIENT_MEAN, abs=1.0)


def test_poisson_constant_rectangle():
    w = Window(0, 2, 0, 1)
    pats = [sim_poisson(Constant(50), w, s) for s in range(500)]
    assert np.mean([len(p) for p in pats]) == pytest.approx(100, abs=2)
    assert all(np.all(w.contains(p.points)) for p in pats)


def test_poisson_counts_chi_square(gradient_intensity):
    counts = np.array([len(sim_poisson(gradient_intensity, UNIT_SQUARE, 10_000 + s)) for s in range(1000)])
    dist = stats.poisson(GRADIENT_MEAN)
    edges = [-np.inf, *range(int(dist.ppf(0.02)), int(dist.ppf(0.98)) + 1, 3), np.inf]
    observed = np.histogram(counts, bins=np.array(edges) + 0.5)[0]
    expected = np.diff(dist.cdf(np.array(edges) + 0.5)) * len(counts)
    assert expected.min() >= 5
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_poisson_scaling_equivariance(gradient_intensity):
    c = 2.5
    radii = np.arange(1, 11) * 0.02
    cfg = EstimatorConfig(grid=16, radii=tuple(radii))
    cfg_c = EstimatorConfig(grid=16, radii=tuple(c * radii))
    scaled_model = scale_intensity(gradient_intensity, c)
    cw = UNIT_SQUARE.scaled(c)
    mapped, direct = [], []
    n_mapped, n_direct = [], []
    for s in range(200):
        p = scale_pattern(sim_poisson(gradient_intensity, UNIT_SQUARE, s), c)
        q = sim_poisson(scaled_model, cw, 5000 + s)
        n_mapped.append(len(p))
        n_direct.append(len(q))
        mapped.append(j_inhom_hat(p, scaled_model, cfg_c).k / c**2)
        direct.append(j_inhom_hat(q, scaled_model, cfg_c).k / c**2)
    # count moments agree with each other and with Poisson(63.2)
    for n in (n_mapped, n_direct):
        assert np.mean(n) == pytest.approx(GRADIENT_MEAN, abs=4 * math.sqrt(GRADIENT_MEAN / 200))
        assert np.var(n, ddof=1) == pytest.approx(GRADIENT_MEAN, rel=0.3)
    km, kd = np.ma.vstack(mapped), np.ma.vstack(direct)
    se = np.sqrt(km.var(0) / 200 + kd.var(0) / 200)
    assert np.all(np.abs(km.mean(0) - kd.mean(0)) < 4 * se)


# -- Gaussian fields and LGCP ----------------------------------------------


def test_field_moments():
    spec = GaussianFieldSpec(0.0, 1.0, ExponentialCorrelation(0.1), n_grid=20)
    draws = sim_gaussian_field(spec, UNIT_SQUARE, 3, size=2000)
    assert draws.shape == (2000, 20, 20)
    a, b = draws[:, 10, 4], draws[:, 10, 6]  # nodes 0.1 apart
    assert a.var() == pytest.approx(1.0, abs=0.07)
    assert np.corrcoef(a, b)[0, 1] == pytest.approx(math.exp(-1), abs=0.05)
    assert spec.correlation(0.0) == 1.0


def test_field_single_draws_match_batching():
    spec = GaussianFieldSpec(0.0, 1.0, n_grid=8)
    one = [sim_gaussian_field(spec, UNIT_SQUARE, s)[2, 3] for s in range(20_000)]
    # standard error of the sample variance is about 0.01
    assert np.var(one) == pytest.approx(1.0, abs=0.04)
    np.testing.assert_array_equal(sim_gaussian_field(spec, UNIT_SQUARE, 5), sim_gaussian_field(spec, UNIT_SQUARE, 5))


def test_field_degenerate_variance():
    spec = GaussianFieldSpec(5.0, 1e-14, n_grid=10)
    z = sim_gaussian_field(spec, UNIT_SQUARE, 0)
    np.testing.assert_allclose(z, 5.0, atol=1e-5)


def test_field_mean_function():
    spec = GaussianFieldSpec(lambda xy: 3 * xy[:, 1], 1e-14, n_grid=4)
    z = sim_gaussian_field(spec, UNIT_SQUARE, 0)
    np.testing.assert_allclose(z[:, 0], 3 * field_nodes(spec, UNIT_SQUARE)[::4, 1], atol=1e-5)


def test_cholesky_failure_is_reported():
    def indefinite(h):
        h = np.asarray(h)
        return np.where(h == 0, 1.0, -0.5)

    with pytest.raises(CholeskyError):
        sim_gaussian_field(GaussianFieldSpec(0.0, 1.0, indefinite, n_grid=4), UNIT_SQUARE, 0)


def test_lgcp_gradient_mean_count(gradient_intensity):
    spec = GaussianFieldSpec.for_intensity(gradient_intensity, variance=1.0, scale=0.1, n_grid=32)
    # e^mu = 100 e^{-y - 1/2}
    assert math.exp(spec.mean_at(np.array([[0.3, 0.4]]))[0]) == pytest.approx(100 * math.exp(-0.9))
    counts = [len(sim_lgcp(spec, UNIT_SQUARE, s)) for s in range(500)]
    assert np.mean(counts) == pytest.approx(GRADIENT_MEAN, abs=2.0)


def test_lgcp_degenerate_field_is_poisson():
    spec = GaussianFieldSpec(math.log(50), 1e-12, n_grid=16)
    counts = [len(sim_lgcp(spec, UNIT_SQUARE, s)) for s in range(500)]
    assert np.mean(counts) == pytest.approx(50, abs=1.5)
    assert np.var(counts) == pytest.approx(50, rel=0.25)


def test_lgcp_deterministic(gradient_intensity):
    spec = GaussianFieldSpec.for_intensity(gradient_intensity, n_grid=16)
    assert sim_lgcp(spec, UNIT_SQUARE, 11) == sim_lgcp(spec, UNIT_SQUARE, 11)


# -- hard core --------------------------------------------------------------


def test_hardcore_constraint_every_prefix():
    # the sampler consumes randomness in fixed blocks, so a run of k proposals
    # is the k-step prefix of a longer chain
    for seed in range(3):
        for sweeps in [0, 1, 2, 5, 50, 500, 1000, 2500, 4095, 4096, 4097, 8000, 20_000]:
            pat = sim_hardcore(HardCoreSpec(200, 0.05, sweeps), UNIT_SQUARE, seed)
            assert _min_pair_distance(pat.points) > 0.05


def test_hardcore_prefix_consistency():
    short = sim_hardcore(HardCoreSpec(200, 0.05, 3000), UNIT_SQUARE, 9)
    again = sim_hardcore(HardCoreSpec(200, 0.05, 3000), UNIT_SQUARE, 9)
    assert short == again


def test_hardcore_output_always_respects_R():
    for seed in range(30):
        pat = sim_hardcore(HardCoreSpec(200, 0.05, 30_000), UNIT_SQUARE, seed)
        assert _min_pair_distance(pat.points) > 0.05


def test_hardcore_tiny_beta_is_empty():
    assert all(len(sim_hardcore(HardCoreSpec(1e-6, 0.05, 20_000), UNIT_SQUARE, s)) == 0 for s in range(10))


def test_hardcore_guard():
    with pytest.raises(ValueError):
        sim_hardcore(HardCoreSpec(2e6, 0.001, 10), UNIT_SQUARE, 0)
    with pytest.raises(ValueError):
        HardCoreSpec(beta=-1)


@pytest.mark.slow
def test_hardcore_mean_count_envelope():
    counts = [len(sim_hardcore(HardCoreSpec(), UNIT_SQUARE, s)) for s in range(100)]
    assert 55 <= np.mean(counts) <= 95


def test_thinned_hardcore_identity_and_subset():
    spec = HardCoreSpec(200, 0.05, 20_000)
    assert sim_thinned_hardcore(spec, ThinningSpec.constant(1.0), 4) == sim_hardcore(spec, UNIT_SQUARE, 4)
    full = sim_hardcore(spec, UNIT_SQUARE, 4)
    thinned = sim_thinned_hardcore(spec, ThinningSpec.exponential(1.0), 4)
    rows = {tuple(p) for p in full.points.tolist()}
    assert len(thinned) < len(full)
    assert all(tuple(p) in rows for p in thinned.points.tolist())
    assert _min_pair_distance(thinned.points) > 0.05


def test_thinned_hardcore_gradient():
    spec = HardCoreSpec(200, 0.05, 30_000)
    lower = upper = 0
    for s in range(100):
        pat = sim_thinned_hardcore(spec, ThinningSpec.exponential(1.0), s)
        lower += int((pat.y < 0.5).sum())
        upper += int((pat.y >= 0.5).sum())
    assert lower > upper
