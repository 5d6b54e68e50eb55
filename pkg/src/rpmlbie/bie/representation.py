"""Green's representation of outgoing fields on a closed contour.

For an outgoing field u and a closed contour enclosing its sources,

    u(x) = int [d_nu_c(y) G(y; x) u(y) - G(y; x) d_nu_c u(y)] ds(y)

outside the contour, with nu_c = nu above the interface and M- nu below.
Replacing G(y; x) by the far-field pattern of G(.; y) gives the far-field
pattern of u.  Both serve as oracles for the background Green's function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..background import BackgroundGreens
from ..errors import ConfigError

PANEL = 20


@dataclass
class Contour:
    """Composite Gauss-Legendre nodes on a circle, split at the interface."""

    center: np.ndarray
    radius: float
    y: np.ndarray
    normal: np.ndarray
    weight: np.ndarray

    @property
    def upper(self):
        return self.y[:, 1] > 0


def circle_contour(center, radius, n=400, panel=PANEL) -> Contour:
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ConfigError("contour radius must be positive")
    if n % panel:
        raise ConfigError(f"node count must be a multiple of {panel}")
    # breakpoints where the circle meets x2 = 0
    cuts = [0.0, 2 * np.pi]
    if abs(center[1]) < radius:
        a = np.arcsin(-center[1] / radius)
        cuts += [np.mod(a, 2 * np.pi), np.mod(np.pi - a, 2 * np.pi)]
    cuts = np.unique(np.round(cuts, 15))
    arcs = np.diff(cuts)
    npan = n // panel
    if npan < arcs.size:
        raise ConfigError("too few panels for the interface crossings")
    share = np.maximum(1, np.floor(arcs / arcs.sum() * npan).astype(int))
    while share.sum() < npan:
        share[np.argmax(arcs / share)] += 1
    while share.sum() > npan:
        share[np.argmax(np.where(share > 1, share, 0))] -= 1
    gx, gw = np.polynomial.legendre.leggauss(panel)
    th, wt = [], []
    for a0, a1, m in zip(cuts[:-1], cuts[1:], share):
        edges = np.linspace(a0, a1, m + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            th.append(0.5 * (e0 + e1) + 0.5 * (e1 - e0) * gx)
            wt.append(0.5 * (e1 - e0) * gw)
    th = np.concatenate(th)
    wt = np.concatenate(wt) * radius
    nrm = np.stack([np.cos(th), np.sin(th)], axis=1)
    return Contour(center=center, radius=float(radius), y=center + radius * nrm,
                   normal=nrm, weight=wt)


@dataclass
class RepresentationResult:
    targets: np.ndarray
    direct: np.ndarray
    represented: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.direct - self.represented))
                     / np.max(np.abs(self.direct)))


def _traces(greens: BackgroundGreens, contour: Contour, xs):
    u, gu = greens.evaluate(contour.y, np.asarray(xs, dtype=float), grad=True)
    nu_c = conormal(greens, contour)
    return u, np.sum(nu_c * gu, axis=1), nu_c


def conormal(greens: BackgroundGreens, contour: Contour):
    m = greens.medium.m
    return np.where(contour.upper[:, None], contour.normal, contour.normal @ m.T)


def representation_check(greens: BackgroundGreens, xs, contour: Contour, targets):
    """Reconstruct G(.; xs) at exterior targets from its contour traces."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    d = np.hypot(*(targets - contour.center).T)
    if np.any(d <= contour.radius):
        raise ConfigError("representation targets must lie outside the contour")
    if np.hypot(*(np.asarray(xs) - contour.center)) >= contour.radius:
        raise ConfigError("the source must lie inside the contour")
    u, du, nu_c = _traces(greens, contour, xs)
    rep = np.empty(targets.shape[0], dtype=complex)
    for i, x in enumerate(targets):
        g, gg = greens.evaluate(contour.y, x, grad=True)
        dg = np.sum(nu_c * gg, axis=1)
        rep[i] = np.sum(contour.weight * (dg * u - g * du))
    direct = greens.evaluate(targets, np.asarray(xs, dtype=float))
    return RepresentationResult(targets=targets, direct=direct, represented=rep)


def farfield_from_contour(greens: BackgroundGreens, xs, contour: Contour, angles):
    """Far-field pattern of G(.; xs) from its contour traces.

    Angles in [0, pi] are upper directions in x; angles in (pi, 2 pi) are
    lower directions in X-coordinates.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    u, du, nu_c = _traces(greens, contour, xs)
    out = np.empty(angles.size, dtype=complex)
    for i, b in enumerate(angles):
        f, gf = greens.farfield(np.full(contour.y.shape[0], b), contour.y, grad=True)
        df = np.sum(nu_c * gf, axis=1)
        out[i] = np.sum(contour.weight * (df * u - f * du))
    return out


def direct_farfield(greens: BackgroundGreens, xs, angles, R):
    """sqrt(R) e^{-ik0 R} G at distance R along each direction.

    Lower directions are taken in X-coordinates and mapped back.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    k = greens.k0
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1) * R
    lower = np.sin(angles) < 0
    x = d.copy()
    if np.any(lower):
        x[lower] = d[lower] @ np.linalg.inv(greens.medium.t).T
    val = greens.evaluate(x, np.asarray(xs, dtype=float))
    return np.sqrt(R) * np.exp(-1j * k * R) * val
