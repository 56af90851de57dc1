import math

import numpy as np
import pytest

from ppstat.geometry import UNIT_SQUARE, Window, lattice_points
from ppstat.intensity import (
    Constant,
    ExponentialGradient,
    KernelEstimate,
    Raster,
    kernel_estimate,
    read_raster,
    scale_intensity,
    thin_intensity,
)
from ppstat.pattern import PointPattern, ThinningSpec
from ppstat.simulate import sim_poisson


def test_evaluate_examples(gradient_intensity):
    assert gradient_intensity.evaluate((0.5, 0.0)) == 100.0
    assert gradient_intensity.evaluate((0.5, 0.5)) == pytest.approx(60.653, abs=1e-3)
    assert Constant(7.5).evaluate((123.0, -4.0)) == 7.5
    np.testing.assert_allclose(gradient_intensity.evaluate([[0, 0], [0, 1]]), [100, 100 * math.exp(-1)])


def test_evaluate_rejects_nonpositive():
    with pytest.raises(ValueError):
        Constant(0.0).evaluate((0.5, 0.5))


def test_bounds_examples(gradient_intensity):
    lo, hi = gradient_intensity.bounds(UNIT_SQUARE)
    assert lo == pytest.approx(36.788, abs=1e-3) and hi == 100.0
    assert Constant(5).bounds(UNIT_SQUARE) == (5, 5)
    assert Raster(UNIT_SQUARE, [[1, 2, 9]]).bounds() == (1, 9)
    with pytest.raises(ValueError):
        Raster(UNIT_SQUARE, [[0.0, 1.0]]).bounds()


@pytest.mark.parametrize("model", [
    ExponentialGradient(100, 1),
    ExponentialGradient(3, -2.5),
    Constant(4.0),
    Raster(Window(0, 2, -1, 1), np.arange(1, 13, dtype=float).reshape(3, 4)),
    thin_intensity(ExponentialGradient(50, 0.5), ThinningSpec.exponential(1.0)),
    scale_intensity(ExponentialGradient(100, 1), 0.4),
])
def test_bounds_contain_random_probes(model, rng):
    w = getattr(model, "window", Window(0, 2, 0, 1.5))
    lo, hi = model.bounds(w)
    probes = np.column_stack([rng.uniform(w.xmin, w.xmax, 10_000), rng.uniform(w.ymin, w.ymax, 10_000)])
    vals = model.evaluate(probes)
    assert np.all(vals >= lo * (1 - 1e-14)) and np.all(vals <= hi * (1 + 1e-14))


def test_raster_bilinear():
    r = Raster(Window(0, 2, 0, 1), [[1.0, 3.0]])  # cell centres at x = 0.5, 1.5
    assert r.evaluate((1.0, 0.5)) == pytest.approx(2.0)
    assert r.evaluate((0.1, 0.5)) == 1.0  # clamped beyond the outermost centre
    r2 = Raster(UNIT_SQUARE, [[0.0, 1.0], [2.0, 3.0]])
    assert r2.evaluate((0.5, 0.5)) == pytest.approx(1.5)
    assert Raster(UNIT_SQUARE, [[4.0]]).evaluate((0.9, 0.1)) == 4.0


def test_raster_file_round_trip(tmp_path, rng):
    r = Raster(Window(0, 2, 0, 1), rng.random((3, 5)) + 0.1)
    path = tmp_path / "r.txt"
    from ppstat.intensity import write_raster

    write_raster(r, path)
    assert path.read_text().splitlines()[0] == "# raster 0.0 2.0 0.0 1.0 5 3"
    back = read_raster(path)
    assert back.window == r.window
    np.testing.assert_array_equal(back.values, r.values)


def test_kernel_single_point_large_bandwidth():
    pat = PointPattern(UNIT_SQUARE, [[0.5, 0.5]])
    r = kernel_estimate(pat, bandwidth=20.0, resolution=64)
    assert r.values.max() / r.values.min() == pytest.approx(1.0, abs=1e-3)
    assert r.integral() == pytest.approx(1.0, abs=1e-3)


def test_kernel_mass_conservation(gradient_intensity):
    pat = sim_poisson(Constant(500), UNIT_SQUARE, 4)
    r = kernel_estimate(pat)
    assert r.integral() == pytest.approx(len(pat), rel=0.02)
    pat = sim_poisson(ExponentialGradient(800, 1), UNIT_SQUARE, 5)
    assert kernel_estimate(pat).integral() == pytest.approx(len(pat), rel=0.02)


def test_kernel_positive_everywhere(rng):
    pat = PointPattern(UNIT_SQUARE, rng.random((5, 2)) * 0.1)
    r = kernel_estimate(pat, bandwidth=0.01, resolution=128)
    assert np.all(r.values > 0)
    assert r.bounds()[0] > 0


def test_kernel_errors():
    with pytest.raises(ValueError):
        KernelEstimate(PointPattern(UNIT_SQUARE), 0.1)
    with pytest.raises(ValueError):
        KernelEstimate(PointPattern(UNIT_SQUARE, [[0.5, 0.5]]), 0.0)


def test_scale_examples(gradient_intensity):
    assert scale_intensity(gradient_intensity, 1) is gradient_intensity
    scaled = scale_intensity(gradient_intensity, 2)
    assert scaled.evaluate((1, 1)) == pytest.approx(100 * math.exp(-0.5) / 4)
    assert scaled.evaluate((1, 1)) == pytest.approx(15.163, abs=1e-3)
    lo, _ = gradient_intensity.bounds(UNIT_SQUARE)
    assert scaled.bounds(UNIT_SQUARE.scaled(2))[0] == pytest.approx(lo / 4, rel=1e-15)
    with pytest.raises(ValueError):
        scale_intensity(gradient_intensity, -1)


def test_scale_composes(gradient_intensity, rng):
    pts = rng.random((100, 2)) * 3
    a, b = 1.3, 2.9
    nested = scale_intensity(scale_intensity(gradient_intensity, a), b).evaluate(pts)
    direct = scale_intensity(gradient_intensity, a * b).evaluate(pts)
    np.testing.assert_allclose(nested, direct, rtol=1e-12)
    raster = Raster(UNIT_SQUARE, rng.random((4, 4)) + 1)
    nested = scale_intensity(scale_intensity(raster, a), b).evaluate(pts)
    np.testing.assert_allclose(nested, scale_intensity(raster, a * b).evaluate(pts), rtol=1e-12)


def test_thin_examples():
    base = Constant(200.0)
    assert thin_intensity(base, ThinningSpec.constant(1.0)).evaluate((0.3, 0.3)) == 200.0
    th = thin_intensity(base, ThinningSpec.exponential(1.0))
    lo, hi = th.bounds(UNIT_SQUARE)
    assert lo == pytest.approx(200 * math.exp(-1)) and hi == pytest.approx(200)
    assert th.evaluate((0, 0.5)) == pytest.approx(121.31, abs=1e-2)
    # infimum of the product is at least the product of the infima
    g = thin_intensity(ExponentialGradient(100, 1), ThinningSpec.exponential(1.0))
    probes = lattice_points(UNIT_SQUARE, 64)
    assert g.evaluate(probes).min() >= g.bounds(UNIT_SQUARE)[0]
