"""Complex special functions used by every kernel.

All square roots use the principal branch: cut on the negative real axis,
argument of the result in (-pi/2, pi/2].  Hankel functions of complex
argument are taken from scipy (AMOS); see ``tests/test_specfun.py`` for the
multiprecision cross-check.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .errors import BranchCutError, ConfigError

# relative size of Im(z) below which a negative real z counts as on the cut
CUT_TOL = 1e-13


def bsqrt(z):
    """Branched square root, Re >= 0 and Im > 0 when Re == 0."""
    z = np.asarray(z, dtype=complex)
    r = np.sqrt(z)
    # numpy returns -0j imaginary parts for z = -a - 0j, fold onto the upper side
    neg = (r.real == 0) & (r.imag < 0)
    if np.any(neg):
        r = np.where(neg, -r, r)
    return r if r.ndim else complex(r)


def mu(xi, k0: float):
    """mu(xi) = sqrt(k0^2 - xi^2) with the branched square root."""
    xi = np.asarray(xi, dtype=complex)
    return bsqrt(k0 * k0 - xi * xi)


def hankel0(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ConfigError("Hankel function evaluated at zero argument")
    return special.hankel1(0, z)


def hankel1(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ConfigError("Hankel function evaluated at zero argument")
    return special.hankel1(1, z)


def wronskian_defect(z):
    """|pi z (H1 H0^(2) - H0 H1^(2)) / (-4i) - 1|, zero in exact arithmetic.

    Checks the two Hankel kinds against each other through
    W[H0^(1), H0^(2)] = -4i / (pi z).
    """
    z = np.asarray(z, dtype=complex)
    w = hankel1(z) * special.hankel2(0, z) - hankel0(z) * special.hankel2(1, z)
    return np.abs(np.pi * z * w / (-4j) - 1.0)


def on_cut(s2, tol: float = CUT_TOL):
    """Mask of squared distances lying on (or numerically at) the negative axis."""
    s2 = np.asarray(s2, dtype=complex)
    scale = np.abs(s2)
    return (s2.real < 0) & (np.abs(s2.imag) <= tol * scale)


def complex_distance(x, y, check: bool = True):
    """rho(x, y) = [(x1 - y1)^2 + (x2 - y2)^2]^(1/2) for complex points.

    ``x`` and ``y`` hold coordinates along the last axis and broadcast.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    d = x - y
    s2 = d[..., 0] ** 2 + d[..., 1] ** 2
    if check:
        bad = on_cut(s2)
        if np.any(bad):
            idx = np.argwhere(np.atleast_1d(bad))
            raise BranchCutError(
                f"complexified distance crosses the branch cut at {len(idx)} point(s)",
                pairs=[tuple(int(v) for v in row) for row in idx[:20]],
            )
    return bsqrt(s2)


def crosses_cut(s2, axis: int = -1):
    """True where a sampled path of squared distances crosses the cut.

    A crossing happens when Im(s2) changes sign between consecutive samples
    while Re(s2) < 0, or when a sample lies on the cut itself.  The principal
    square root is discontinuous there, so a kernel built from it is no longer
    the analytic continuation of the physical one.
    """
    s2 = np.asarray(s2, dtype=complex)
    s2 = np.moveaxis(s2, axis, -1)
    a, b = s2[..., :-1], s2[..., 1:]
    flip = (np.sign(a.imag) * np.sign(b.imag) < 0)
    # real part where the imaginary part vanishes, linear interpolation
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = a.imag / (a.imag - b.imag)
        re_cross = a.real + lam * (b.real - a.real)
    hit = flip & (re_cross < 0)
    return np.any(hit, axis=-1) | np.any(on_cut(s2), axis=-1)
