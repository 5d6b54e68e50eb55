"""Nystrom matrices of the complexified layer operators on one side.

For a graded mesh t_j = j h of the truncated interface and complex
coordinates Z(t) of the side (stretched, and mapped to image coordinates on
the lower side), with outward scaled normal n(t) = |Z'| nu_c:

    S[psi](t_j)  = int (i/2) H0(k rho) psi(t) dt
    K[u](t_j)    = int -(i k/2) H1(k rho) n(t).(Z(t) - Z_j)/rho u(t) dt
    K0[1](t_j)   = -ang_j/pi + int -(1/pi) n(t).(Z(t) - Z_j)/rho^2 dt

where rho = rho(Z_j, Z(t)) is the complexified distance and ang_j the angle
subtended at the node by the closing contour in the stretched region.  The
integrals use the periodic trapezoidal rule with the order-6 log correction
of :mod:`alpert`; off-grid density values come from global trigonometric
interpolation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import BranchCutError
from ..geometry import GradedMesh
from ..rpml import SideMap
from ..specfun import bsqrt, hankel0, hankel1, on_cut
from . import alpert

log = logging.getLogger(__name__)

_ROW_BLOCK = 256


@dataclass
class SideGeometry:
    """Mesh data of one side in its own complex coordinates."""

    mesh: GradedMesh
    side: SideMap
    Z: np.ndarray  # (N, 2) complex
    dZ: np.ndarray
    n: np.ndarray  # outward scaled normal
    Zr: np.ndarray  # uncomplexified coordinates
    on_line: np.ndarray  # nodes on the flat interface line

    @classmethod
    def build(cls, mesh: GradedMesh, side: SideMap) -> "SideGeometry":
        Z, dZ = side.curve_points(mesh.x, mesh.dx)
        flat = np.array([s.is_flat() for s in mesh.curve.segments])
        return cls(mesh=mesh, side=side, Z=Z, dZ=dZ, n=side.scaled_normal(dZ),
                   Zr=side.real_coords(mesh.x), on_line=flat[mesh.seg])

    @property
    def N(self) -> int:
        return self.Z.shape[0]

    @property
    def h(self) -> float:
        return self.mesh.h

    def at(self, t):
        """Complex points and scaled normals at arbitrary parameters."""
        x, dx = self.mesh.evaluate(t)
        Z, dZ = self.side.curve_points(x, dx)
        return Z, self.side.scaled_normal(dZ)

    def endpoints(self):
        """Real and complexified images of A and B."""
        c = self.mesh.curve
        P = np.stack([c.A, c.B])
        return self.side.real_coords(P), self.side.points(P)


def _coincident(s2, Z):
    """Pairs whose complexified distance vanishes up to roundoff.

    Graded nodes next to a corner or an endpoint can coincide in floating
    point; the scaled densities vanish there, so such pairs carry no weight.
    """
    return np.abs(s2) <= 1e-26 * (1.0 + np.sum(np.abs(Z) ** 2, axis=-1))


def _check_cut(s2, mask, where):
    bad = on_cut(s2) & mask
    if np.any(bad):
        idx = np.argwhere(bad)
        raise BranchCutError(
            f"complexified distance on the branch cut{where} "
            f"(first target/source pair {tuple(idx[0])})",
            pairs=[tuple(int(v) for v in r) for r in idx[:20]])


def _pair(Zt, Zs, check=True, where=""):
    """Differences Zs - Zt and complexified distance, targets along axis 0."""
    d = Zs[None, :, :] - Zt[:, None, :]
    s2 = d[..., 0] ** 2 + d[..., 1] ** 2
    if check:
        _check_cut(s2, True, where)
    return d, s2, bsqrt(s2)


def _angle(geo: SideGeometry) -> np.ndarray:
    """Angle of the stretched closing contour seen from each node."""
    (Ar, Br), (At, Bt) = geo.endpoints()
    Zr, Z = geo.Zr, geo.Z
    upper = geo.side.side == "upper"

    def arg(P):
        d = P[None, :] - Zr
        return np.arctan2(d[:, 1], d[:, 0])

    def phi_shift(Preal, Pt):
        # phi(P~) - phi(P), phi = (1/2i) log(w+/w-), w± = (P1 - Z1) ± i (P2 - Z2)
        def w(P, sgn):
            return (P[0] - Z[:, 0]) + sgn * 1j * (P[1] - Z[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = np.log(w(Pt, 1) / w(Preal, 1))
            lm = np.log(w(Pt, -1) / w(Preal, -1))
            out = (lp - lm) / 2j
        # nodes at A or B themselves: no shift
        return np.where(np.isfinite(out), out, 0.0)

    dA = phi_shift(Ar, At)
    dB = phi_shift(Br, Bt)
    if upper:
        ang = np.mod(arg(Ar) - arg(Br), 2 * np.pi) + dA - dB
    else:
        ang = np.mod(arg(Br) - arg(Ar), 2 * np.pi) - (dA - dB)
    return np.where(geo.on_line, np.pi + 0j, ang)


def assemble(geo: SideGeometry, k: float, closed: bool = False, check: bool = True):
    """Return the matrices S, K and the vector K0[1] for one side.

    With ``closed`` the mesh is treated as a closed curve and the angle term
    of K0 is omitted.
    """
    N, h = geo.N, geo.h
    Z, nrm = geo.Z, geo.n
    dist = alpert.periodic_distance(N)
    far = dist >= alpert.SKIP
    S = np.zeros((N, N), dtype=complex)
    K = np.zeros((N, N), dtype=complex)
    K0 = np.zeros(N, dtype=complex)
    for r0 in range(0, N, _ROW_BLOCK):
        rows = slice(r0, min(N, r0 + _ROW_BLOCK))
        d, s2, rho = _pair(Z[rows], Z, check=False)
        fr = far[rows] & ~_coincident(s2, Z[rows][:, None, :])
        if check:
            _check_cut(s2, fr, " during assembly")
        rho = np.where(fr, rho, 1.0)
        s2 = np.where(fr, s2, 1.0)
        kr = k * rho
        dn = np.einsum("jmi,mi->jm", d, nrm)
        S[rows] = np.where(fr, (0.5j * h) * hankel0(kr), 0.0)
        K[rows] = np.where(fr, (-0.5j * k * h) * hankel1(kr) * dn / rho, 0.0)
        K0[rows] = np.sum(np.where(fr, (-h / np.pi) * dn / s2, 0.0), axis=1)

    # local corrections at t_j +- x_k h
    j = np.arange(N)
    circ = (j[:, None] - j[None, :]) % N
    for xk, wk in zip(*alpert.offsets()):
        Zc, nc = geo.at(geo.mesh.t + xk * h)
        d = Zc - Z
        s2 = d[:, 0] ** 2 + d[:, 1] ** 2
        live = ~_coincident(s2, Z)
        if check and np.any(on_cut(s2) & live):
            raise BranchCutError("complexified distance on the branch cut at a correction node")
        s2 = np.where(live, s2, 1.0)
        rho = bsqrt(s2)
        dn = np.where(live, np.sum(d * nc, axis=1), 0.0)
        sv = np.where(live, 0.5j * hankel0(k * rho), 0.0)
        kv = -0.5j * k * hankel1(k * rho) * dn / rho
        K0 += h * wk * (-1.0 / np.pi) * dn / s2
        c = alpert.interpolation_row(xk, N)[circ]
        S += (h * wk * sv)[:, None] * c
        K += (h * wk * kv)[:, None] * c
    if not closed:
        K0 = K0 - _angle(geo) / np.pi
    return S, K, K0


def layer_potentials(geo: SideGeometry, k: float, targets, psi, u, check: bool = True):
    """Representation u(x) = int Phi psi dt - int d_n Phi u dt at targets.

    ``targets`` are complex coordinates of the side.  Plain trapezoidal rule.
    """
    targets = np.atleast_2d(targets)
    out = np.empty(targets.shape[0], dtype=complex)
    h = geo.h
    for r0 in range(0, targets.shape[0], _ROW_BLOCK):
        rows = slice(r0, r0 + _ROW_BLOCK)
        d, s2, rho = _pair(targets[rows], geo.Z, check=check, where=" during field evaluation")
        kr = k * rho
        dn = np.einsum("jmi,mi->jm", d, geo.n)
        single = 0.25j * hankel0(kr)
        double = 0.25j * k * hankel1(kr) * dn / rho
        out[rows] = h * (single @ psi + double @ u)
    return out


def crossing_mask(geo: SideGeometry, targets) -> np.ndarray:
    """Targets whose squared distance to the curve winds across the cut."""
    from ..specfun import crosses_cut

    targets = np.atleast_2d(targets)
    out = np.zeros(targets.shape[0], dtype=bool)
    for r0 in range(0, targets.shape[0], _ROW_BLOCK):
        rows = slice(r0, r0 + _ROW_BLOCK)
        d = geo.Z[None, :, :] - targets[rows][:, None, :]
        s2 = d[..., 0] ** 2 + d[..., 1] ** 2
        out[rows] = crosses_cut(s2, axis=1)
    return out
