import numpy as np
import pytest
from scipy.integrate import quad

from rpmlbie.errors import ConfigError
from rpmlbie.media import derive_medium
from rpmlbie.rpml import StretchProfile, lower_transition, side_maps


@pytest.mark.parametrize("form", ["full", "literal"])
def test_profile_integral_against_quad(form):
    pr = StretchProfile(1.0, 1.0, 2.0, 6, form)
    for x in (1.3, 1.77, 2.0, 2.6):
        ref = quad(lambda s: float(pr.sigma(s)), 0, x, points=[1.0, 2.0], epsabs=1e-14)[0]
        assert pr.integral(x) == pytest.approx(ref, abs=1e-12)
        assert pr.integral(-x) == pytest.approx(-ref, abs=1e-12)


def test_full_profile_has_mean_S():
    pr = StretchProfile(1.0, 0.7, 3.0)
    assert pr.integral(1.7) == pytest.approx(3.0 * 0.7, rel=1e-13)
    assert pr.sigma(1.7) == pytest.approx(6.0, rel=1e-14)


def test_literal_profile_reaches_S():
    pr = StretchProfile(1.0, 1.0, 2.0, form="literal")
    assert pr.sigma(2.0) == pytest.approx(2.0, rel=1e-14)


def test_profile_support_and_smoothness():
    pr = StretchProfile(1.0, 1.0, 2.0)
    x = np.linspace(-3, 3, 601)
    s = pr.sigma(x)
    assert np.all(s[np.abs(x) <= 1.0] == 0.0) and np.all(s >= 0)
    assert np.all(s == pr.sigma(-x))
    # sigma and its first derivatives vanish at the inner edge
    h = 1e-3
    assert pr.sigma(1.0 + h) < 1e-12


def test_stretch_is_real_inside():
    pr = StretchProfile(1.0, 1.0, 2.0)
    z = pr.stretch(np.linspace(-1, 1, 11))
    assert np.all(z.imag == 0)
    assert pr.stretch(2.0).imag == pytest.approx(2.0, rel=1e-13)


def test_scaled_profile():
    pr = StretchProfile(1.0, 1.0, 2.0)
    sp = pr.scaled(3.0)
    assert sp.L1 == 3.0 and sp.D1 == 3.0
    assert sp.integral(6.0) == pytest.approx(3.0 * pr.integral(2.0), rel=1e-14)


@pytest.mark.parametrize("kw", [dict(l1=0), dict(d1=-1), dict(S=-0.1), dict(p=1),
                                dict(form="cubic")])
def test_profile_validation(kw):
    args = dict(l1=1.0, d1=1.0, S=1.0, p=6, form="full")
    args.update(kw)
    with pytest.raises(ConfigError):
        StretchProfile(**args)


def test_side_maps_agree_on_physical_part(medium):
    pr = StretchProfile(1.0, 1.0, 2.0)
    x = np.column_stack([np.linspace(-0.9, 0.9, 7), np.zeros(7)])
    dx = np.tile([1.0, 0.0], (7, 1))
    for variant in ("rpml2", "rpml1", "upml"):
        up, lo = side_maps(pr, medium, variant)
        Zu, _ = up.curve_points(x, dx)
        Zl, _ = lo.curve_points(x, dx)
        assert np.allclose(Zu, x) and np.allclose(Zl, x @ lo.t.T)


def test_rpml2_curve_points_match_points(medium):
    """On the flat layer the image-stretched nodes coincide with the direct map."""
    pr = StretchProfile(1.0, 1.0, 2.0)
    x = np.column_stack([np.linspace(-2, 2, 41), np.zeros(41)])
    dx = np.tile([4.0, 0.0], (41, 1))
    _, lo = side_maps(pr, medium, "rpml2")
    Z, dZ = lo.curve_points(x, dx)
    Z2, dZ2 = lo.points(x, dx)
    assert np.allclose(Z, Z2, atol=1e-13) and np.allclose(dZ, dZ2, atol=1e-12)


def test_lower_transitions(medium):
    assert np.allclose(lower_transition(medium, "rpml2"), medium.t)
    t1 = lower_transition(medium, "rpml1")
    assert np.allclose(t1, derive_medium(medium.m, rotate=False).t)
    with pytest.raises(ConfigError):
        lower_transition(medium, "cpml")


def test_physical_masks(medium):
    pr = StretchProfile(1.0, 1.0, 2.0)
    up, lo = side_maps(pr, medium, "rpml2")
    assert up.physical(np.array([0.5, 0.5])) and not up.physical(np.array([1.5, 0.5]))
    # the lower physical region is a strip in image coordinates
    X = np.array([2.9, -0.3])
    assert lo.physical(medium.t_inv @ X)
    assert not lo.physical(medium.t_inv @ np.array([3.1, -0.3]))
