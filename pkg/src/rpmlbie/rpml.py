"""Regionalized perfectly matched layer.

The upper half-plane is stretched in x-coordinates and the image of the lower
half-plane in X-coordinates,

    x1~ = x1 + i int_0^x1 sigma1(t) dt,     X1~ = X1 + i int_0^X1 sigma1N(t) dt,

with sigma1N(X1) = sigma1(X1 / alpha).  On the interface X1 = alpha x1, hence
X1~ = alpha x1~ and both stretched half-planes still meet along the image of
the same complex line.  Vertical stretching is not used by the boundary
integral solver (sigma2 = 0).

Two negative controls are available through :class:`SideMap`: ``upml``
stretches x1 in both half-planes before the change of coordinates, and
``rpml1`` uses the symmetric transition matrix M^{-1/2} instead of the
triangular Q M^{-1/2}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .media import DerivedMedium, derive_medium

VARIANTS = ("rpml2", "rpml1", "upml")

_GLX, _GLW = np.polynomial.legendre.leggauss(24)


def _f1(xb, p):
    return (0.5 - 1.0 / p) * xb**3 + xb / p + 0.5


@dataclass(frozen=True)
class StretchProfile:
    """Absorbing function sigma1 on l1 <= |x1| <= l1 + d1.

    ``form='full'`` normalizes the layer coordinate to xb in [-1, 1], so the
    profile rises smoothly from 0 to 2S and has mean S over the layer.
    ``form='literal'`` uses xb = (x1 - l1 - d1)/d1 in [-1, 0], which reaches S
    at the outer edge and carries about a quarter of the absorption.
    """

    l1: float
    d1: float
    S: float
    p: int = 6
    form: str = "full"

    def __post_init__(self):
        if not (self.l1 > 0 and self.d1 > 0 and self.S >= 0):
            raise ConfigError(
                f"invalid layer parameters l1={self.l1}, d1={self.d1}, S={self.S}")
        if self.p < 2:
            raise ConfigError("profile exponent p must be at least 2")
        if self.form not in ("full", "literal"):
            raise ConfigError(f"unknown profile form {self.form!r}")

    def _xbar(self, a):
        if self.form == "full":
            return (2.0 * a - 2.0 * self.l1 - self.d1) / self.d1
        return (a - (self.l1 + self.d1)) / self.d1

    def sigma(self, x1):
        """sigma1(x1), even in x1, zero outside the layer."""
        a = np.abs(np.asarray(x1, dtype=float))
        inside = (a > self.l1) & (a <= self.l1 + self.d1)
        xb = self._xbar(np.where(inside, a, self.l1 + self.d1))
        f1 = _f1(xb, self.p)
        f2 = 1.0 - f1
        val = 2.0 * self.S * f1**self.p / (f1**self.p + f2**self.p)
        return np.where(inside, val, 0.0)

    def q(self, x1):
        return 1.0 + 1j * self.sigma(x1)

    def integral(self, x1):
        """Sigma(x1) = int_0^x1 sigma1(t) dt, odd in x1."""
        x1 = np.asarray(x1, dtype=float)
        a = np.minimum(np.abs(x1), self.l1 + self.d1)
        out = np.zeros_like(a)
        m = a > self.l1
        if np.any(m):
            # two Gauss panels on [l1, a]
            lo = self.l1
            hi = a[m]
            acc = np.zeros_like(hi)
            for k in range(2):
                pa = lo + (hi - lo) * k / 2
                pb = lo + (hi - lo) * (k + 1) / 2
                half = 0.5 * (pb - pa)
                nodes = 0.5 * (pa + pb)[:, None] + half[:, None] * _GLX[None, :]
                acc += half * (self.sigma(nodes) @ _GLW)
            out[m] = acc
        return np.sign(x1) * out

    def stretch(self, x1):
        """x1~ = x1 + i Sigma(x1)."""
        x1 = np.asarray(x1, dtype=float)
        return x1 + 1j * self.integral(x1)

    def scaled(self, s: float) -> "ScaledProfile":
        """Profile of the image side, sigmaN(X1) = sigma1(X1 / s)."""
        return ScaledProfile(self, float(s))

    def describe(self) -> dict:
        return {"l1": self.l1, "d1": self.d1, "S": self.S, "p": self.p, "form": self.form}


@dataclass(frozen=True)
class ScaledProfile:
    """sigmaN(X1) = sigma1(X1/s) with layer [s l1, s (l1 + d1)]."""

    base: StretchProfile
    s: float

    @property
    def L1(self):
        return self.s * self.base.l1

    @property
    def D1(self):
        return self.s * self.base.d1

    def sigma(self, X1):
        return self.base.sigma(np.asarray(X1, dtype=float) / self.s)

    def q(self, X1):
        return 1.0 + 1j * self.sigma(X1)

    def integral(self, X1):
        return self.s * self.base.integral(np.asarray(X1, dtype=float) / self.s)

    def stretch(self, X1):
        X1 = np.asarray(X1, dtype=float)
        return X1 + 1j * self.integral(X1)


def pml_coefficients(x, profile, profile2=None):
    """Coefficient tensor A = diag(q2/q1, q1/q2) and Jacobian J = q1 q2.

    ``x`` holds points along the last axis; ``profile2`` (optional) acts on the
    second coordinate.  Returns A with shape (..., 2, 2) and J with shape (...).
    """
    x = np.asarray(x, dtype=float)
    q1 = profile.q(x[..., 0])
    q2 = profile2.q(x[..., 1]) if profile2 is not None else np.ones_like(q1)
    A = np.zeros(x.shape[:-1] + (2, 2), dtype=complex)
    A[..., 0, 0] = q2 / q1
    A[..., 1, 1] = q1 / q2
    return A, q1 * q2


def conormal(normal, x, profile, profile2=None):
    """nu_c = A^T nu."""
    A, _ = pml_coefficients(x, profile, profile2)
    return np.einsum("...ji,...j->...i", A, np.asarray(normal))


# ---------------------------------------------------------------------------
# side maps


@dataclass(frozen=True)
class SideMap:
    """Complexified coordinates of one side of the interface.

    ``side`` is 'upper' (identity medium, x-coordinates) or 'lower'.  For the
    lower side ``t`` is the transition matrix in use and ``variant`` selects
    how stretching and the change of coordinates are combined.
    """

    side: str
    profile: StretchProfile
    t: np.ndarray
    variant: str = "rpml2"

    def __post_init__(self):
        if self.side not in ("upper", "lower"):
            raise ConfigError(f"unknown side {self.side!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown layer variant {self.variant!r}; expected one of {VARIANTS}")

    @property
    def image_profile(self):
        return self.profile.scaled(self.t[0, 0])

    def real_coords(self, x):
        """Uncomplexified coordinates of physical points."""
        x = np.asarray(x, dtype=float)
        return x if self.side == "upper" else x @ self.t.T

    def points(self, x, dx=None):
        """Complex coordinates (and velocities) of physical points ``x``."""
        x = np.asarray(x, dtype=float)
        pr = self.profile
        if self.side == "upper":
            Z = np.stack([pr.stretch(x[..., 0]), x[..., 1] + 0j], axis=-1)
            if dx is None:
                return Z
            dZ = np.stack([pr.q(x[..., 0]) * dx[..., 0], dx[..., 1] + 0j], axis=-1)
            return Z, dZ
        t = self.t
        if self.variant == "upml":
            xs = np.stack([pr.stretch(x[..., 0]), x[..., 1] + 0j], axis=-1)
            Z = xs @ t.T
            if dx is None:
                return Z
            dxs = np.stack([pr.q(x[..., 0]) * dx[..., 0], dx[..., 1] + 0j], axis=-1)
            return Z, dxs @ t.T
        ip = self.image_profile
        X = x @ t.T
        Z = np.stack([ip.stretch(X[..., 0]), X[..., 1] + 0j], axis=-1)
        if dx is None:
            return Z
        dX = np.asarray(dx) @ t.T
        dZ = np.stack([ip.q(X[..., 0]) * dX[..., 0], dX[..., 1] + 0j], axis=-1)
        return Z, dZ

    def curve_points(self, x, dx):
        """Complex coordinates of interface points.

        The lower curve is always the image under ``t`` of the stretched upper
        curve, so nodes correspond through the change of coordinates.  For
        rpml2 this coincides with :meth:`points` because the curve is flat in
        the layer; for rpml1 the rotated stretch would otherwise leave X2 real
        along the slanted image of the layer.
        """
        x = np.asarray(x, dtype=float)
        pr = self.profile
        xs = np.stack([pr.stretch(x[..., 0]), x[..., 1] + 0j], axis=-1)
        dxs = np.stack([pr.q(x[..., 0]) * dx[..., 0], dx[..., 1] + 0j], axis=-1)
        if self.side == "upper":
            return xs, dxs
        return xs @ self.t.T, dxs @ self.t.T

    def scaled_normal(self, dZ):
        """Outward scaled normal of the side's domain, |x'| nu_c in stretched form.

        Upper: (Z2', -Z1') points toward the lower half-plane.  Lower:
        (-Z2', Z1') points away from the image of the lower half-plane.
        """
        dZ = np.asarray(dZ)
        if self.side == "upper":
            return np.stack([dZ[..., 1], -dZ[..., 0]], axis=-1)
        return np.stack([-dZ[..., 1], dZ[..., 0]], axis=-1)

    def physical(self, x):
        """Mask of physical points whose complex coordinates are real."""
        x = np.asarray(x, dtype=float)
        l1 = self.profile.l1
        if self.side == "upper":
            return (np.abs(x[..., 0]) < l1) & (x[..., 1] > 0)
        if self.variant == "upml":
            return (np.abs(x[..., 0]) < l1) & (x[..., 1] < 0)
        X = x @ self.t.T
        return (np.abs(X[..., 0]) < self.t[0, 0] * l1) & (X[..., 1] < 0)


def lower_transition(medium: DerivedMedium, variant: str) -> np.ndarray:
    """Transition matrix used for the lower side under ``variant``."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown layer variant {variant!r}")
    if variant == "rpml1":
        return derive_medium(medium.m, rotate=False).t
    return medium.t


def side_maps(profile: StretchProfile, medium: DerivedMedium, variant: str = "rpml2"):
    up = SideMap("upper", profile, np.eye(2), variant)
    lo = SideMap("lower", profile, lower_transition(medium, variant), variant)
    return up, lo
