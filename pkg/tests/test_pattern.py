import math

import numpy as np
import pytest

from ppstat.geometry import UNIT_SQUARE, Window
from ppstat.intensity import ExponentialGradient
from ppstat.pattern import (
    PatternFormatError,
    PointPattern,
    ThinningSpec,
    read_pattern,
    scale_pattern,
    thin_pattern,
    write_pattern,
)
from ppstat.simulate import sim_poisson


def _write(tmp_path, text):
    p = tmp_path / "pat.csv"
    p.write_text(text, encoding="utf-8")
    return p


def test_read_single_point(tmp_path):
    pat = read_pattern(_write(tmp_path, "# window 0 1 0 1\nx,y\n0.5,0.5\n"))
    assert len(pat) == 1 and pat.window == UNIT_SQUARE
    np.testing.assert_array_equal(pat.points, [[0.5, 0.5]])


def test_read_empty(tmp_path):
    assert len(read_pattern(_write(tmp_path, "# window 0 1 0 1\nx,y\n"))) == 0


@pytest.mark.parametrize("body", [
    "1.5,0.2\n",            # outside the window
    "0.1,0.2\n0.1,0.2\n",   # duplicate
    "0.1;0.2\n",            # malformed row
    "0.1,abc\n",
])
def test_read_rejects(tmp_path, body):
    with pytest.raises(PatternFormatError):
        read_pattern(_write(tmp_path, "# window 0 1 0 1\nx,y\n" + body))


def test_read_rejects_bad_header(tmp_path):
    with pytest.raises(PatternFormatError):
        read_pattern(_write(tmp_path, "x,y\n0.1,0.2\n"))


def test_write_empty_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    write_pattern(PointPattern(UNIT_SQUARE), path)
    assert path.read_text().splitlines() == ["# window 0.0 1.0 0.0 1.0", "x,y"]


def test_write_preserves_order(tmp_path):
    path = tmp_path / "two.csv"
    write_pattern(PointPattern(UNIT_SQUARE, [[0.9, 0.1], [0.2, 0.3]]), path)
    assert path.read_text().splitlines()[2:] == ["0.9,0.1", "0.2,0.3"]


def test_round_trip_bitwise(tmp_path, rng):
    w = Window(-1.25, 3.5, 0.0, 2.0)
    pts = np.column_stack([rng.uniform(w.xmin, w.xmax, 1000), rng.uniform(w.ymin, w.ymax, 1000)])
    pat = PointPattern(w, pts)
    path = tmp_path / "rt.csv"
    write_pattern(pat, path)
    back = read_pattern(path)
    assert back.window == w
    assert back.points.tobytes() == pat.points.tobytes()
    assert path.read_bytes().count(b"\r") == 0


def test_pattern_validation():
    with pytest.raises(ValueError):
        PointPattern(UNIT_SQUARE, [[0.1, 0.1], [0.1, 0.1]])
    with pytest.raises(ValueError):
        PointPattern(UNIT_SQUARE, [[1.1, 0.1]])


def test_scale_examples():
    pat = PointPattern(UNIT_SQUARE, [[0.3, 0.4]])
    assert scale_pattern(pat, 1) == pat
    doubled = scale_pattern(pat, 2)
    assert doubled.window == Window(0, 2, 0, 2)
    np.testing.assert_allclose(doubled.points, [[0.6, 0.8]])
    back = scale_pattern(scale_pattern(pat, 0.5), 2)
    np.testing.assert_allclose(back.points, pat.points, atol=1e-15)
    with pytest.raises(ValueError):
        scale_pattern(pat, 0)


def test_scale_composes(rng):
    pat = PointPattern(UNIT_SQUARE, rng.random((50, 2)))
    a, b = 1.7, 0.37
    np.testing.assert_allclose(scale_pattern(scale_pattern(pat, a), b).points,
                               scale_pattern(pat, a * b).points, rtol=1e-12)


def test_thin_identity_and_determinism(rng):
    pat = PointPattern(UNIT_SQUARE, rng.random((200, 2)))
    assert thin_pattern(pat, ThinningSpec.constant(1.0), 5) == pat
    spec = ThinningSpec.constant(0.999999)
    assert thin_pattern(pat, spec, 11) == thin_pattern(pat, spec, 11)


def test_thin_is_subset(rng):
    pat = PointPattern(UNIT_SQUARE, rng.random((300, 2)))
    out = thin_pattern(pat, ThinningSpec.exponential(2.0), 3)
    rows = {tuple(p) for p in pat.points.tolist()}
    assert all(tuple(p) in rows for p in out.points.tolist())
    assert out.window == pat.window
    # list order is preserved
    idx = [pat.points.tolist().index(p) for p in out.points.tolist()]
    assert idx == sorted(idx)


def test_thin_rejects_invalid_probability():
    pat = PointPattern(UNIT_SQUARE, [[0.5, 0.5]])
    with pytest.raises(ValueError):
        thin_pattern(pat, ThinningSpec(lambda xy: np.full(len(xy), 1.5)), 0)
    with pytest.raises(ValueError):
        thin_pattern(pat, ThinningSpec(lambda xy: np.zeros(len(xy))), 0)


def test_thin_poisson_mean_count():
    # E N = int_0^1 100 e^{-y} e^{-y} dy = 50 (1 - e^{-2})
    expected = 50 * (1 - math.exp(-2))
    assert expected == pytest.approx(43.233, abs=1e-3)
    model = ExponentialGradient(100, 1)
    spec = ThinningSpec.exponential(1.0)
    counts = [len(thin_pattern(sim_poisson(model, UNIT_SQUARE, s), spec, 10_000 + s)) for s in range(200)]
    assert np.mean(counts) == pytest.approx(expected, abs=1.5)


def test_thinning_bounds():
    spec = ThinningSpec.exponential(1.0)
    lo, hi = spec.bounds(UNIT_SQUARE)
    assert lo == pytest.approx(math.exp(-1)) and hi == 1.0
    probed = ThinningSpec(lambda xy: 0.5 + 0.25 * xy[:, 0]).bounds(UNIT_SQUARE)
    assert probed[0] == pytest.approx(0.5, abs=1e-3) and probed[1] == pytest.approx(0.75, abs=1e-3)
