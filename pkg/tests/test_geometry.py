import numpy as np
import pytest
from scipy.integrate import quad

from rpmlbie.errors import ConfigError
from rpmlbie.geometry import (bump_dip_curve, build_mesh, curve_from_spec, flat_curve,
                              grading, squares_curve)


@pytest.mark.parametrize("p", [2, 4, 6, 8])
def test_grading_maps_panel_and_is_monotone(p):
    t = np.linspace(0.25, 0.75, 401)
    s, ds = grading(t, 0.25, 0.75, -1.0, 2.0, p, deriv=True)
    assert s[0] == pytest.approx(-1.0, abs=1e-15)
    assert s[-1] == pytest.approx(2.0, abs=1e-15)
    assert np.all(np.diff(s) >= 0) and np.all(ds >= 0)


def test_grading_derivative_against_differences():
    t = np.linspace(0.31, 0.69, 17)
    h = 1e-6
    _, ds = grading(t, 0.3, 0.7, 0.0, 1.0, 6, deriv=True)
    fd = (grading(t + h, 0.3, 0.7, 0.0, 1.0, 6) - grading(t - h, 0.3, 0.7, 0.0, 1.0, 6)) / (2 * h)
    assert np.allclose(ds, fd, rtol=1e-7, atol=1e-8)


def test_grading_endpoint_derivatives_vanish():
    # the first p-1 derivatives vanish at both endpoints
    p, h = 6, 1e-3
    for end, sgn in ((0.0, 1), (1.0, -1)):
        t = end + sgn * h * np.arange(0, 4)
        _, ds = grading(np.clip(t, 0, 1), 0.0, 1.0, 0.0, 1.0, p, deriv=True)
        assert ds[0] <= 1e-8
        # ds ~ C h^{p-1} near the end
        slope = np.log(ds[2] / ds[1]) / np.log(2.0)
        assert slope == pytest.approx(p - 1, abs=0.2)


def test_grading_rejects_outside_and_low_order():
    with pytest.raises(ConfigError):
        grading(1.5, 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        grading(0.5, 0.0, 1.0, 0.0, 1.0, p=1)


def test_flat_mesh():
    m = build_mesh(flat_curve(1.0, 1.0, 200))
    assert m.n == 200 and m.h == pytest.approx(1 / 200)
    assert np.allclose(m.x[:, 1], 0) and np.allclose(m.x[-1], [2.0, 0.0])
    assert np.allclose(m.normal[1:-1], [0.0, -1.0])
    # the periodic trapezoidal rule integrates the graded speed to the length
    assert m.arclength() == pytest.approx(4.0, rel=1e-13)
    assert m.perturbed.sum() == np.sum(np.abs(m.x[:, 0]) < 1.0)


def test_bump_dip_length_and_corners():
    c = bump_dip_curve(l1=2.0, d1=1.5, n_per_segment=100)
    m = build_mesh(c)
    assert m.arclength() == pytest.approx(2 * (3.5 - 2.0) + 2 * np.pi, rel=1e-10)
    # corners are grid nodes
    cum = np.cumsum(c.nodes)
    assert np.allclose(m.x[cum[:-1] - 1], [[-2.0, 0.0], [0.0, 0.0], [2.0, 0.0]], atol=1e-14)
    assert np.all(m.speed[cum[:-1] - 1] < 1e-12)
    assert c.fits_physical_region()
    # left semicircle bulges upward, right one downward
    assert m.x[m.seg == 1, 1].max() == pytest.approx(1.0, abs=1e-4)
    assert m.x[m.seg == 2, 1].min() == pytest.approx(-1.0, abs=1e-4)


def test_squares_geometry():
    c = squares_curve(n_per_segment=40)
    assert len(c.segments) == 13 and c.n_total == 520
    m = build_mesh(c)
    assert m.arclength() == pytest.approx(10.0 + 3 * 2.0, rel=1e-8)
    assert m.x[:, 1].min() == pytest.approx(-1.0)
    with pytest.raises(ConfigError):
        squares_curve(l1=1.0, d1=0.5)


def test_curve_evaluate_matches_quad_length():
    c = bump_dip_curve(l1=2.0, d1=1.5, n_per_segment=50)

    def speed(t):
        _, dx, _ = c.evaluate(np.array([t]))
        return np.hypot(*dx[0])

    bp = c.breakpoints
    total = sum(quad(speed, a, b, epsabs=1e-13)[0] for a, b in zip(bp[:-1], bp[1:]))
    assert total == pytest.approx(3.0 + 2 * np.pi, rel=1e-10)


def test_curve_spec_errors():
    with pytest.raises(ConfigError):
        curve_from_spec({"kind": "zigzag", "l1": 1, "d1": 1})
    with pytest.raises(ConfigError):
        curve_from_spec({"kind": "segments", "l1": 1, "d1": 1,
                         "segments": [{"type": "line", "start": [-2, 0], "end": [1.9, 0]}]})
    with pytest.raises(ConfigError):
        build_mesh(flat_curve(n_total=201))


def test_segments_spec_matches_builtin():
    spec = {"kind": "segments", "l1": 2.0, "d1": 1.5, "n_per_segment": 30,
            "segments": [{"type": "line", "start": [-3.5, 0], "end": [-2, 0]},
                         {"type": "arc", "center": [-1, 0], "radius": 1, "theta0": np.pi,
                          "theta1": 0.0},
                         {"type": "arc", "center": [1, 0], "radius": 1, "theta0": np.pi,
                          "theta1": 2 * np.pi},
                         {"type": "line", "start": [2, 0], "end": [3.5, 0]}]}
    a = build_mesh(curve_from_spec(spec))
    b = build_mesh(bump_dip_curve(n_per_segment=30))
    assert np.allclose(a.x, b.x, atol=1e-14)
