"""Background Green's function of two homogeneous half-planes.

The upper half-plane carries the identity medium, the lower one a general
orthotropic medium described by a :class:`~rpmlbie.media.DerivedMedium` with
transition matrix t (X = t x), alpha = t11 and c = |M|^{1/2} alpha.  Writing
mu(xi) = sqrt(k0^2 - xi^2), R+ = (mu - c mu(xi/alpha)) / (mu + c mu(xi/alpha))
and R- = (c mu - mu(alpha xi)) / (c mu + mu(alpha xi)), the four pairings are

    x2*>0, x2>0:  Phi(x;x*) + i/(4 pi) int R+/mu e^{i mu (x2+x2*) + i xi (x1*-x1)}
    x2*>0, x2<0:  i alpha/(2 pi) int e^{i mu(alpha xi) x2* - i mu X2 + i xi (alpha x1* - X1)}
                                    / (mu(alpha xi) + c mu)
    x2*<0, x2>0:  i/(2 pi) int e^{-i mu(xi/alpha) X2* + i mu x2 + i xi (X1*/alpha - x1)}
                                    / (c mu(xi/alpha) + mu)
    x2*<0, x2<0:  |M|^{-1/2} [Phi(X;X*) + i/(4 pi) int R-/mu e^{-i mu (X2+X2*) + i xi (X1*-X1)}]

The xi-integrals are evaluated on a contour that leaves the real axis around
the branch points (below +k0, above -k0) and returns to it in the
exponentially decaying tails.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, QuadratureError
from .media import DerivedMedium
from .specfun import hankel0, hankel1, mu

log = logging.getLogger(__name__)

_GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
# exp(-38) ~ 3e-17: tail cut-off in units of the decay exponent
_TAIL_EXPONENT = 40.0
# max (phase + decay) change across one Gauss panel
_PANEL_PHASE = 8.0


def free_space(x, y, k0, grad=False):
    """Phi(x;y) = (i/4) H0(k0 |x-y|) and optionally grad_x Phi."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = np.hypot(d[..., 0], d[..., 1])
    val = 0.25j * hankel0(k0 * r)
    if not grad:
        return val
    g = (-0.25j * k0 * hankel1(k0 * r) / r)[..., None] * d
    return val, g


# ---------------------------------------------------------------------------
# contour quadrature


@dataclass
class SpectralContour:
    """Gauss-Legendre discretization of the deformed xi-path."""

    xi: np.ndarray
    w: np.ndarray  # complex weights including d(xi)/ds
    delta: float
    tail: float
    npanel: int

    @property
    def size(self) -> int:
        return self.xi.size


def _split(a: complex, b: complex, maxw, out: list):
    """Append panels [a, b] split until ``maxw(center) >= width``."""
    stack = [(a, b)]
    while stack:
        lo, hi = stack.pop()
        c = 0.5 * (lo + hi)
        if abs(hi - lo) <= maxw(c):
            out.append((lo, hi))
        else:
            stack.append((c, hi))
            stack.append((lo, c))


def build_contour(k0: float, branch_points, decay: float, qmax: float,
                  refine: int = 0, delta: float | None = None) -> SpectralContour:
    """Deformed Sommerfeld path for integrands decaying like exp(-decay |xi|).

    ``branch_points`` are the positive branch points; the path crosses the
    real axis only at the origin and at +-(max branch point + 2 delta).
    """
    if decay <= 0:
        raise QuadratureError(
            f"spectral integral does not converge: non-positive decay exponent {decay}"
        )
    bp = np.sort(np.asarray(branch_points, dtype=float))
    big, small = bp[-1], bp[0]
    if delta is None:
        delta = min(k0 / 10.0, 0.4 * small, 1.5 / max(qmax, 1e-300))
    b0 = 0.5 * small
    tail = max(big + 3 * delta, np.sqrt((_TAIL_EXPONENT / decay) ** 2 + big**2))
    allbp = np.concatenate([-bp, bp])
    freq = np.hypot(qmax, decay)
    osc = _PANEL_PHASE / max(freq, 1e-300) / 2**refine

    def maxw(c):
        dist = np.min(np.abs(allbp - c))
        return min(max(2.0 * delta, 0.5 * dist) / 2**refine, osc)

    verts = [
        -tail, -(big + 2 * delta), -(big + delta) + 1j * delta, -b0 + 1j * delta,
        b0 - 1j * delta, (big + delta) - 1j * delta, big + 2 * delta, tail,
    ]
    panels: list = []
    for a, b in zip(verts[:-1], verts[1:]):
        _split(complex(a), complex(b), maxw, panels)
    lo = np.array([p[0] for p in panels])
    hi = np.array([p[1] for p in panels])
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    xi = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return SpectralContour(xi=xi, w=w, delta=delta, tail=tail, npanel=len(panels))


@dataclass
class SpectralKernel:
    """One Sommerfeld integral family sharing amplitude and exponent shape.

    The integrand is ``amp(xi) * exp(i(sum_k mu(s_k xi) p_k + xi q))`` with
    non-negative ``p_k``.  ``extra`` lists multiplier functions of xi producing
    additional integrals with the same exponent (used for gradients).
    """

    k0: float
    scales: tuple
    amp: callable
    branch_points: tuple
    extra: tuple = ()
    tol: float = 1e-12
    max_refine: int = 3
    _cache: dict = field(default_factory=dict, repr=False)

    def _contour(self, decay, qmax, refine):
        # conservative representatives of the bin: decay rounded down, |q| up
        kd = int(np.floor(np.log2(decay) * 4))
        kq = int(np.ceil(np.log2(max(qmax, 1e-3)) * 4))
        key = (kd, kq, refine)
        if key not in self._cache:
            self._cache[key] = build_contour(self.k0, self.branch_points,
                                             2.0 ** (kd / 4), 2.0 ** (kq / 4), refine)
        return self._cache[key]

    def _apply(self, contour, p, q):
        xi = contour.xi
        base = self.amp(xi) * contour.w
        facs = [base] + [base * f(xi) for f in self.extra]
        A = np.stack(facs)  # (nf, nxi)
        mus = [mu(s * xi, self.k0) for s in self.scales]
        out = np.empty((A.shape[0], q.size), dtype=complex)
        chunk = max(1, int(4_000_000 // max(xi.size, 1)))
        for s0 in range(0, q.size, chunk):
            sl = slice(s0, s0 + chunk)
            ph = np.multiply.outer(xi, q[sl])
            for m, pk in zip(mus, p):
                ph += np.multiply.outer(m, pk[sl])
            out[:, sl] = A @ np.exp(1j * ph)
        return out

    def integrate(self, p, q):
        """Evaluate for targets with exponents ``p`` (list of arrays) and ``q``.

        Returns an array of shape (1 + len(extra), ntarget).
        """
        q = np.atleast_1d(np.asarray(q, dtype=float))
        p = [np.broadcast_to(np.asarray(pk, dtype=float), q.shape) for pk in p]
        decay = sum(s * pk for s, pk in zip(self.scales, p))
        if np.any(decay <= 0):
            raise QuadratureError("non-positive total decay exponent in spectral integral")
        out = np.empty((1 + len(self.extra), q.size), dtype=complex)
        if q.size == 0:
            return out
        # bins of decay (factor 2^(1/4)) and |q| (factor 2^(1/4))
        dkey = np.floor(np.log2(np.maximum(decay, 1e-300)) * 4).astype(int)
        qkey = np.ceil(np.log2(np.maximum(np.abs(q), 1e-3)) * 4).astype(int)
        keys = np.stack([dkey, qkey], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        for b in range(len(uniq)):
            idx = np.nonzero(inv == b)[0]
            dmin = float(decay[idx].min())
            qmax = float(np.abs(q[idx]).max())
            out[:, idx] = self._integrate_bin(dmin, qmax, [pk[idx] for pk in p], q[idx])
        return out

    def _integrate_bin(self, dmin, qmax, p, q):
        # verify accuracy on a few extreme targets, refine the bin if needed
        probe = np.unique(np.concatenate([
            np.argsort([sum(s * pk[i] for s, pk in zip(self.scales, p))
                        for i in range(q.size)])[:2],
            np.argsort(-np.abs(q))[:2],
        ]))
        for level in range(self.max_refine + 1):
            c = self._contour(dmin, qmax, level)
            cf = self._contour(dmin, qmax, level + 1)
            pp = [pk[probe] for pk in p]
            v0 = self._apply(c, pp, q[probe])
            v1 = self._apply(cf, pp, q[probe])
            scale = np.maximum(np.abs(v1).max(axis=0), 1e-300)
            err = float((np.abs(v1 - v0).max(axis=0) / scale).max())
            if err <= self.tol:
                return self._apply(c, p, q)
        raise QuadratureError(
            f"spectral quadrature did not converge (relative estimate {err:.2e})",
            estimate=v1, error=err,
        )


# ---------------------------------------------------------------------------
# Green's function


def _as_points(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x), single


class BackgroundGreens:
    """Spectral evaluation of the two-medium Green's function.

    Parameters
    ----------
    k0 : float
        Free-space wavenumber.
    medium : DerivedMedium
        Lower medium (the upper one is the identity).
    tol : float
        Relative tolerance for the spectral integrals.
    """

    def __init__(self, k0: float, medium: DerivedMedium, tol: float = 1e-12):
        if k0 <= 0:
            raise ConfigError("k0 must be positive")
        self.k0 = float(k0)
        self.medium = medium
        self.tol = tol
        a, c, sd = medium.alpha, medium.c, medium.sqrt_det
        self.alpha, self.c, self.sd = a, c, sd
        k = self.k0
        self.branch_points = tuple(sorted({k, k / a, k * a}))
        self.matched = abs(a - 1) < 1e-15 and abs(c - 1) < 1e-15

        def m(z, s=1.0):
            return mu(s * z, k)

        def a_uu(z):
            m0, m1 = m(z), m(z, 1 / a)
            return 0.25j / np.pi * (m0 - c * m1) / (m0 + c * m1) / m0

        def a_ul(z):
            return 0.5j * a / np.pi / (m(z, a) + c * m(z))

        def a_lu(z):
            return 0.5j / np.pi / (c * m(z, 1 / a) + m(z))

        def a_ll(z):
            m0, m1 = m(z), m(z, a)
            return 0.25j / (np.pi * sd) * (c * m0 - m1) / (c * m0 + m1) / m0

        def dx1(z):
            return -1j * z

        def up(z):
            return 1j * m(z)

        def down(z):
            return -1j * m(z)

        bp = self.branch_points
        kw = dict(branch_points=bp, tol=tol)
        self._uu = SpectralKernel(k, (1.0,), a_uu, extra=(dx1, up), **kw)
        self._ul = SpectralKernel(k, (a, 1.0), a_ul, extra=(dx1, down), **kw)
        self._lu = SpectralKernel(k, (1 / a, 1.0), a_lu, extra=(dx1, up), **kw)
        self._ll = SpectralKernel(k, (1.0,), a_ll, extra=(dx1, down), **kw)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, x, xs, side=None, grad=False, native=False):
        """G(x; xs) for targets ``x`` (n, 2) and one source ``xs``.

        ``side`` selects the formula ('upper' or 'lower'); by default it is
        chosen from the sign of x2, which allows analytic extension across
        the interface when given explicitly.  Gradients are returned with
        respect to x unless ``native`` is set, in which case lower-side
        gradients are with respect to X = t x.
        """
        x, single = _as_points(x)
        xs = np.asarray(xs, dtype=float)
        if xs[1] == 0:
            raise ConfigError("source on the interface is not supported")
        if side is None:
            upper = x[:, 1] >= 0
        else:
            if side not in ("upper", "lower"):
                raise ConfigError(f"unknown side {side!r}")
            upper = np.full(x.shape[0], side == "upper")
        val = np.empty(x.shape[0], dtype=complex)
        g = np.empty((x.shape[0], 2), dtype=complex)
        for flag in (True, False):
            idx = np.nonzero(upper == flag)[0]
            if idx.size == 0:
                continue
            v, gg = self._eval_side(x[idx], xs, flag, native)
            val[idx] = v
            g[idx] = gg
        if single:
            val, g = val[0], g[0]
        return (val, g) if grad else val

    __call__ = evaluate

    def gradient(self, x, xs, side=None, native=False):
        return self.evaluate(x, xs, side=side, grad=True, native=native)[1]

    def _eval_side(self, x, xs, upper, native):
        t = self.medium.t
        X = x @ t.T
        k = self.k0
        if xs[1] > 0:
            if upper:
                p = [x[:, 1] + xs[1]]
                self._check_decay(p, self._uu.scales)
                out = self._uu.integrate(p, xs[0] - x[:, 0])
                v0, g0 = free_space(x, xs, k, grad=True)
                val = out[0] + v0
                g = np.stack([out[1], out[2]], axis=1) + g0
                return val, g
            p = [np.full(x.shape[0], xs[1]), -X[:, 1]]
            self._check_decay(p, self._ul.scales)
            out = self._ul.integrate(p, self.alpha * xs[0] - X[:, 0])
            gX = np.stack([out[1], out[2]], axis=1)
            return out[0], (gX if native else gX @ t)
        Xs = t @ xs
        if upper:
            p = [np.full(x.shape[0], -Xs[1]), x[:, 1]]
            self._check_decay(p, self._lu.scales)
            out = self._lu.integrate(p, Xs[0] / self.alpha - x[:, 0])
            return out[0], np.stack([out[1], out[2]], axis=1)
        p = [-(X[:, 1] + Xs[1])]
        self._check_decay(p, self._ll.scales)
        out = self._ll.integrate(p, Xs[0] - X[:, 0])
        v0, g0 = free_space(X, Xs, k, grad=True)
        val = out[0] + v0 / self.sd
        gX = np.stack([out[1], out[2]], axis=1) + g0 / self.sd
        return val, (gX if native else gX @ t)

    @staticmethod
    def _check_decay(p, scales):
        decay = sum(s * pk for s, pk in zip(scales, p))
        if np.any(decay <= 0):
            raise ConfigError(
                "target too far across the interface for analytic extension "
                "(geometry too deep relative to the source height)"
            )

    # -- far field ----------------------------------------------------------

    def _farfield_terms(self, ang, upper_source):
        """Pattern terms (coef, wavevector) with G_inf = sum coef e^{i w.y}.

        The phase is linear in the source: y for upper sources and Y = T y for
        lower ones.  Rows of the returned arrays follow ``ang``.
        """
        k, a, c, sd = self.k0, self.alpha, self.c, self.sd
        cb, sb = np.cos(ang), np.sin(ang)
        pre = np.exp(0.25j * np.pi) / np.sqrt(8 * np.pi * k)
        pre2 = np.exp(0.25j * np.pi) / np.sqrt(2 * np.pi * k)
        up = sb >= 0
        z = np.zeros_like(ang, dtype=complex)

        def w(a1, a2):
            return np.stack([a1 + z, a2 + z], axis=-1)

        m1 = mu(k * cb / a, k)
        ma = mu(a * k * cb, k)
        if upper_source:
            R = (k * sb - c * m1) / (k * sb + c * m1)
            terms_up = [(pre + z, w(-k * cb, -k * sb)), (pre * R, w(-k * cb, k * sb))]
            terms_lo = [(a * pre2 * (-k * sb) / (ma - c * k * sb), w(-a * k * cb, ma))]
        else:
            terms_up = [(k * sb * pre2 / (k * sb + c * m1), w(-k * cb / a, -m1))]
            R = (-c * k * sb - ma) / (-c * k * sb + ma)
            terms_lo = [(pre / sd + z, w(-k * cb, -k * sb)),
                        (pre / sd * R, w(-k * cb, k * sb))]
        # pad to two terms so both branches stack
        if len(terms_up) == 1:
            terms_up.append((z, w(0.0, 0.0)))
        if len(terms_lo) == 1:
            terms_lo.append((z, w(0.0, 0.0)))
        coef = np.stack([np.where(up, tu[0], tl[0]) for tu, tl in zip(terms_up, terms_lo)])
        vec = np.stack([np.where(up[..., None], tu[1], tl[1]) for tu, tl in zip(terms_up, terms_lo)])
        return coef, vec

    def farfield(self, angle, xs, grad=False):
        """Far-field pattern of G(.; xs) in direction ``angle``.

        Upper targets use beta in [0, pi] and the factor e^{ik0|x|}/sqrt|x|;
        lower targets use the angle in X-coordinates in [pi, 2 pi] and the
        factor e^{ik0|X|}/sqrt|X|.  ``xs`` may hold several sources (one per
        angle, broadcasting); with ``grad`` the gradient with respect to the
        source in x-coordinates is returned too.
        """
        xs = np.asarray(xs, dtype=float)
        ang = np.asarray(angle, dtype=float)
        pts = np.atleast_2d(xs)
        ang_b, _ = np.broadcast_arrays(ang, pts[:, 0] if xs.ndim > 1 else ang)
        val = np.zeros(np.broadcast(ang_b, pts[:, 0]).shape if xs.ndim > 1 else ang_b.shape,
                       dtype=complex)
        gr = np.zeros(val.shape + (2,), dtype=complex)
        src_up = pts[:, 1] > 0
        for flag in (True, False):
            sel = src_up == flag
            if not np.any(sel):
                continue
            if xs.ndim > 1:
                a_sel = np.broadcast_to(ang_b, val.shape)[sel]
                y = pts[sel]
            else:
                a_sel = ang_b
                y = pts[0]
            with np.errstate(divide="ignore", invalid="ignore"):
                # the branch not selected by the angle may divide by zero
                coef, vec = self._farfield_terms(a_sel, flag)
            Y = y if flag else y @ self.medium.t.T
            ph = np.exp(1j * np.sum(vec * Y, axis=-1))
            v = np.sum(coef * ph, axis=0)
            g = np.sum((1j * coef * ph)[..., None] * vec, axis=0)
            if not flag:
                g = g @ self.medium.t
            if xs.ndim > 1:
                val[sel] = v
                gr[sel] = g
            else:
                val, gr = v, g
        return (val, gr) if grad else val


# ---------------------------------------------------------------------------
# plane wave background


@dataclass(frozen=True)
class PlaneBackground:
    """Incident plane wave e^{ik0(cos th x1 - sin th x2)} with its reflection
    in the upper half-plane and the transmitted wave in the lower one."""

    k0: float
    medium: DerivedMedium
    theta: float

    def __post_init__(self):
        if not 0 < self.theta < np.pi:
            raise ConfigError("plane-wave angle must lie in (0, pi)")

    @property
    def reflection(self) -> complex:
        k, a, c = self.k0, self.medium.alpha, self.medium.c
        ks = k * np.sin(self.theta)
        m1 = mu(k * np.cos(self.theta) / a, k)
        return complex((ks - c * m1) / (ks + c * m1))

    @property
    def transmission(self) -> complex:
        return 1.0 + self.reflection

    def incident(self, x, grad=False):
        x = np.asarray(x)
        k, th = self.k0, self.theta
        kv = np.array([k * np.cos(th), -k * np.sin(th)])
        v = np.exp(1j * (x @ kv))
        if not grad:
            return v
        return v, 1j * v[..., None] * kv

    def upper(self, x, grad=False):
        """u_b^tot in the upper medium, analytic in x."""
        x = np.asarray(x)
        k, th = self.k0, self.theta
        ki = np.array([k * np.cos(th), -k * np.sin(th)])
        kr = np.array([k * np.cos(th), k * np.sin(th)])
        ei = np.exp(1j * (x @ ki))
        er = self.reflection * np.exp(1j * (x @ kr))
        v = ei + er
        if not grad:
            return v
        return v, 1j * (ei[..., None] * ki + er[..., None] * kr)

    def lower(self, X, grad=False):
        """U_b^tot in image coordinates X of the lower medium."""
        X = np.asarray(X)
        k, a = self.k0, self.medium.alpha
        kx = k * np.cos(self.theta) / a
        kv = np.array([kx, -mu(kx, k)])
        v = self.transmission * np.exp(1j * (X @ kv))
        if not grad:
            return v
        return v, 1j * v[..., None] * kv

    def total(self, x):
        """Total background field at physical points, side by sign of x2."""
        x = np.asarray(x, dtype=float)
        X = x @ self.medium.t.T
        return np.where(x[..., 1] >= 0, self.upper(x), self.lower(X))
