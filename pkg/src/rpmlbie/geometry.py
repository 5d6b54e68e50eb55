"""Interface curves, corner grading and uniform-in-t meshes.

The truncated interface runs from A = (-l1-d1, 0) to B = (l1+d1, 0) and is a
chain of smooth segments.  Each segment k owns n_k consecutive nodes of the
global grid t_j = j/N (j = 1..N), so every corner and the endpoints fall on
grid nodes.  Inside a segment the local parameter is graded,

    u = w(t) = w1^p / (w1^p + w2^p),
    w1 = (1/2 - 1/p) xi^3 + xi/p + 1/2,  w2 = 1 - w1,  xi = (2t - t0 - t1)/(t1 - t0),

so that all derivatives of w up to order p - 1 vanish at the segment ends.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# grading


def _v(xi, p):
    return (0.5 - 1.0 / p) * xi**3 + xi / p + 0.5


def _dv(xi, p):
    return 3 * (0.5 - 1.0 / p) * xi**2 + 1.0 / p


def grading(t, t0, t1, s0, s1, p=6, deriv=False):
    """Colton-Kress grading of [t0, t1] onto [s0, s1].

    Returns s, and ds/dt when ``deriv`` is set.
    """
    t = np.asarray(t, dtype=float)
    if p < 2:
        raise ConfigError("grading exponent p must be at least 2")
    span = t1 - t0
    tol = 1e-12 * max(1.0, abs(span))
    if np.any(t < t0 - tol) or np.any(t > t1 + tol):
        raise ConfigError(f"grading parameter outside panel [{t0}, {t1}]")
    xi = np.clip((2 * t - (t0 + t1)) / span, -1.0, 1.0)
    w1 = _v(xi, p)
    w2 = 1.0 - w1
    a, b = w1**p, w2**p
    den = a + b
    s = (s0 * b + s1 * a) / den
    if not deriv:
        return s
    # d/dxi [a / (a + b)] = p (w1^{p-1} w2^p + w1^p w2^{p-1}) v' / den^2
    dfrac = p * (w1 ** (p - 1) * w2**p + w1**p * w2 ** (p - 1)) * _dv(xi, p) / den**2
    ds = (s1 - s0) * dfrac * 2.0 / span
    return s, ds


# ---------------------------------------------------------------------------
# segments


class Segment:
    """Smooth parameterized piece, local parameter u in [0, 1]."""

    def point(self, u):
        raise NotImplementedError

    def deriv(self, u):
        raise NotImplementedError

    @property
    def start(self):
        return self.point(np.array([0.0]))[0]

    @property
    def end(self):
        return self.point(np.array([1.0]))[0]

    def length(self, n=64):
        x, w = np.polynomial.legendre.leggauss(n)
        u = 0.5 * (x + 1)
        d = self.deriv(u)
        return float(0.5 * np.sum(w * np.hypot(d[:, 0], d[:, 1])))

    def is_flat(self) -> bool:
        return False

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Line(Segment):
    p0: tuple
    p1: tuple

    def point(self, u):
        u = np.asarray(u, dtype=float)[..., None]
        a, b = np.asarray(self.p0, float), np.asarray(self.p1, float)
        return a + u * (b - a)

    def deriv(self, u):
        u = np.asarray(u, dtype=float)
        d = np.asarray(self.p1, float) - np.asarray(self.p0, float)
        return np.broadcast_to(d, u.shape + (2,)).copy()

    def is_flat(self) -> bool:
        return self.p0[1] == 0 and self.p1[1] == 0

    def describe(self):
        return {"type": "line", "start": list(self.p0), "end": list(self.p1)}


@dataclass(frozen=True)
class Arc(Segment):
    """Circular arc center + r (cos th, sin th), th from th0 to th1."""

    center: tuple
    radius: float
    th0: float
    th1: float

    def point(self, u):
        th = self.th0 + np.asarray(u, dtype=float) * (self.th1 - self.th0)
        c = np.asarray(self.center, float)
        return c + self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def deriv(self, u):
        dth = self.th1 - self.th0
        th = self.th0 + np.asarray(u, dtype=float) * dth
        return self.radius * dth * np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def describe(self):
        return {"type": "arc", "center": list(self.center), "radius": self.radius,
                "theta0": self.th0, "theta1": self.th1}


def polyline(points) -> list:
    """Chain of straight segments; interior vertices become corners."""
    pts = [tuple(map(float, p)) for p in points]
    if len(pts) < 2:
        raise ConfigError("polyline needs at least two points")
    return [Line(a, b) for a, b in zip(pts[:-1], pts[1:])]


# ---------------------------------------------------------------------------
# curve and mesh


@dataclass
class BoundaryCurve:
    """Chain of segments from A = (-l1-d1, 0) to B = (l1+d1, 0).

    ``nodes`` gives the number of grid nodes owned by each segment.
    """

    segments: list
    nodes: list
    l1: float
    d1: float
    p: int = 6
    name: str = "custom"

    def __post_init__(self):
        if len(self.segments) != len(self.nodes):
            raise ConfigError("one node count per segment is required")
        if self.l1 <= 0 or self.d1 <= 0:
            raise ConfigError("l1 and d1 must be positive")
        if any(int(n) != n or n < 2 for n in self.nodes):
            raise ConfigError("each segment needs an integer number of nodes >= 2")
        if self.p < 2:
            raise ConfigError("grading exponent p must be at least 2")
        self.nodes = [int(n) for n in self.nodes]
        A, B = self.A, self.B
        if np.linalg.norm(self.segments[0].start - A) > 1e-12:
            raise ConfigError(f"curve must start at A = {tuple(A)}")
        if np.linalg.norm(self.segments[-1].end - B) > 1e-12:
            raise ConfigError(f"curve must end at B = {tuple(B)}")
        for k, (s0, s1) in enumerate(zip(self.segments[:-1], self.segments[1:])):
            if np.linalg.norm(s0.end - s1.start) > 1e-12:
                raise ConfigError(f"segments {k} and {k + 1} do not join")

    @property
    def A(self):
        return np.array([-(self.l1 + self.d1), 0.0])

    @property
    def B(self):
        return np.array([self.l1 + self.d1, 0.0])

    @property
    def n_total(self) -> int:
        return int(sum(self.nodes))

    @property
    def breakpoints(self) -> np.ndarray:
        """Global t of segment boundaries, including 0 and 1."""
        c = np.concatenate([[0], np.cumsum(self.nodes)])
        return c / c[-1]

    def perturbation_extent(self) -> float:
        """Largest |x1| reached by a non-flat part of the curve."""
        ext = 0.0
        u = np.linspace(0, 1, 201)
        for seg in self.segments:
            x = seg.point(u)
            bent = np.abs(x[:, 1]) > 1e-14
            if np.any(bent):
                ext = max(ext, float(np.abs(x[bent, 0]).max()))
        return ext

    def fits_physical_region(self) -> bool:
        """True when the bent part stays where the layer does not act."""
        return self.perturbation_extent() <= self.l1 + 1e-12

    def check_physical_region(self) -> None:
        if not self.fits_physical_region():
            log.warning(
                "perturbation reaches |x1| = %.4g beyond l1 = %.4g; the layer then "
                "acts on a bent interface and the interface matching is no longer exact",
                self.perturbation_extent(), self.l1)

    def with_nodes(self, nodes) -> "BoundaryCurve":
        return BoundaryCurve(self.segments, list(nodes), self.l1, self.d1, self.p, self.name)

    def scaled_nodes(self, n_total: int) -> "BoundaryCurve":
        """Same curve with ``n_total`` nodes split evenly over the segments."""
        ns = len(self.segments)
        if n_total % ns:
            raise ConfigError(f"N_tot={n_total} is not divisible by {ns} segments")
        return self.with_nodes([n_total // ns] * ns)

    def evaluate(self, t):
        """Point, velocity dx/dt and segment index at global parameters t.

        ``t`` is taken modulo 1.
        """
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        bp = self.breakpoints
        seg = np.clip(np.searchsorted(bp, t, side="right") - 1, 0, len(self.segments) - 1)
        x = np.empty(t.shape + (2,))
        dx = np.empty(t.shape + (2,))
        for k, s in enumerate(self.segments):
            m = seg == k
            if not np.any(m):
                continue
            u, du = grading(t[m], bp[k], bp[k + 1], 0.0, 1.0, self.p, deriv=True)
            x[m] = s.point(u)
            dx[m] = s.deriv(u) * du[:, None]
        return x, dx, seg

    def describe(self) -> dict:
        return {"name": self.name, "l1": self.l1, "d1": self.d1, "p": self.p,
                "nodes": list(self.nodes),
                "segments": [s.describe() for s in self.segments]}


@dataclass
class GradedMesh:
    """Per-node data of a graded curve on the grid t_j = j h, j = 1..N."""

    curve: BoundaryCurve
    t: np.ndarray
    x: np.ndarray
    dx: np.ndarray
    seg: np.ndarray
    h: float
    perturbed: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.t.size

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.dx[:, 0], self.dx[:, 1])

    @property
    def normal(self) -> np.ndarray:
        """Unit normal pointing into the lower half-plane side (toward Omega-)."""
        sp = self.speed
        n = np.stack([self.dx[:, 1], -self.dx[:, 0]], axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(sp[:, None] > 0, n / sp[:, None], 0.0)

    def arclength(self) -> float:
        return float(self.h * self.speed.sum())

    def evaluate(self, t):
        x, dx, _ = self.curve.evaluate(t)
        return x, dx


def build_mesh(curve: BoundaryCurve, n_total: int | None = None, p: int | None = None) -> GradedMesh:
    """Sample ``curve`` on t_j = j/N; corners land on grid nodes."""
    if n_total is not None:
        curve = curve.scaled_nodes(n_total)
    if p is not None and p != curve.p:
        curve = BoundaryCurve(curve.segments, curve.nodes, curve.l1, curve.d1, p, curve.name)
    N = curve.n_total
    if N % 2:
        raise ConfigError(f"N_tot must be even, got {N}")
    j = np.arange(1, N + 1)
    t = j / N
    # integer bookkeeping so corners are exact grid nodes
    cum = np.concatenate([[0], np.cumsum(curve.nodes)])
    seg = np.searchsorted(cum, j, side="left") - 1
    seg = np.clip(seg, 0, len(curve.segments) - 1)
    x = np.empty((N, 2))
    dx = np.empty((N, 2))
    bp = curve.breakpoints
    for k, s in enumerate(curve.segments):
        m = seg == k
        u, du = grading(t[m], bp[k], bp[k + 1], 0.0, 1.0, curve.p, deriv=True)
        x[m] = s.point(u)
        dx[m] = s.deriv(u) * du[:, None]
    x[-1] = curve.B
    # physical part of the interface plus every bent segment
    flat = np.array([s.is_flat() for s in curve.segments])
    perturbed = (np.abs(x[:, 0]) < curve.l1 - 1e-12) | ~flat[seg]
    return GradedMesh(curve=curve, t=t, x=x, dx=dx, seg=seg, h=1.0 / N, perturbed=perturbed)


# ---------------------------------------------------------------------------
# built-in geometries


def flat_curve(l1=1.0, d1=1.0, n_total=1600, p=6) -> BoundaryCurve:
    L = l1 + d1
    return BoundaryCurve([Line((-L, 0.0), (L, 0.0))], [n_total], l1, d1, p, name="flat")


def bump_dip_curve(l1=2.0, d1=1.5, radius=1.0, n_per_segment=800, p=6,
                   bump_first=True) -> BoundaryCurve:
    """Two semicircles of ``radius`` joined at the origin.

    With ``bump_first`` the left one bulges into the upper half-plane and the
    right one into the lower half-plane.
    """
    L = l1 + d1
    r = float(radius)
    if 2 * r >= L:
        raise ConfigError(f"semicircles of radius {r} do not fit inside |x1| < {L}")
    s = 1.0 if bump_first else -1.0
    segs = [
        Line((-L, 0.0), (-2 * r, 0.0)),
        Arc((-r, 0.0), r, np.pi, np.pi - s * np.pi),
        Arc((r, 0.0), r, np.pi, np.pi + s * np.pi),
        Line((2 * r, 0.0), (L, 0.0)),
    ]
    return BoundaryCurve(segs, [n_per_segment] * 4, l1, d1, p, name="bump_dip")


def squares_curve(l1=3.5, d1=1.5, centers=(-2.0, 0.0, 2.0), size=1.0, depth=None,
                  n_per_segment=200, p=6, downward=True) -> BoundaryCurve:
    """Flat interface with square notches of side ``size`` at ``centers``.

    ``downward`` makes the notches extend into the lower half-plane (the upper
    medium fills them); otherwise they rise into the upper half-plane.
    """
    L = l1 + d1
    h = size if depth is None else depth
    sgn = -1.0 if downward else 1.0
    cs = sorted(float(c) for c in centers)
    pts = [(-L, 0.0)]
    segs = []
    for c in cs:
        a, b = c - size / 2, c + size / 2
        if a <= pts[-1][0] + 1e-12 or b >= L:
            raise ConfigError("squares overlap, touch or leave the truncated interface")
        segs.append(Line(pts[-1], (a, 0.0)))
        segs += polyline([(a, 0.0), (a, sgn * h), (b, sgn * h), (b, 0.0)])
        pts.append((b, 0.0))
    segs.append(Line(pts[-1], (L, 0.0)))
    return BoundaryCurve(segs, [n_per_segment] * len(segs), l1, d1, p, name="squares")


def curve_from_spec(spec: dict) -> BoundaryCurve:
    """Build a curve from a configuration dictionary."""
    kind = spec.get("kind", "flat")
    p = int(spec.get("p", 6))
    l1 = float(spec["l1"])
    d1 = float(spec["d1"])
    if kind == "flat":
        return flat_curve(l1, d1, int(spec.get("n_total", 1600)), p)
    if kind == "bump_dip":
        return bump_dip_curve(l1, d1, float(spec.get("radius", 1.0)),
                              int(spec.get("n_per_segment", 800)), p,
                              bool(spec.get("bump_first", True)))
    if kind == "squares":
        return squares_curve(l1, d1, tuple(spec.get("centers", (-2.0, 0.0, 2.0))),
                             float(spec.get("size", 1.0)), spec.get("depth"),
                             int(spec.get("n_per_segment", 200)), p,
                             bool(spec.get("downward", True)))
    if kind == "segments":
        segs = []
        for item in spec["segments"]:
            typ = item.get("type")
            if typ == "line":
                segs.append(Line(tuple(item["start"]), tuple(item["end"])))
            elif typ == "arc":
                segs.append(Arc(tuple(item["center"]), float(item["radius"]),
                                float(item["theta0"]), float(item["theta1"])))
            elif typ == "polyline":
                segs += polyline(item["points"])
            else:
                raise ConfigError(f"unknown segment type {typ!r}")
        nodes = spec.get("nodes")
        if nodes is None:
            nodes = [int(spec.get("n_per_segment", 200))] * len(segs)
        return BoundaryCurve(segs, list(nodes), l1, d1, p, name=spec.get("name", "custom"))
    raise ConfigError(f"unknown geometry kind {kind!r}")
