"""NtD maps, the coupled interface system and field evaluation.

On the truncated interface the outgoing parts satisfy u+ = N+ psi+ and
U- = N- Psi- with the NtD matrices N = (K - diag K0[1])^{-1} S.  The interface
conditions, written for scaled densities psi = |x'| d_nu_c u, read

    N+ psi+ - N- Psi- = F,       psi+ + |M-|^{1/2} Psi- = G,

and are solved by eliminating psi+:

    (|M-|^{1/2} N+ + N-) Psi- = N+ G - F,     psi+ = G - |M-|^{1/2} Psi-.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from ..background import BackgroundGreens, PlaneBackground, free_space
from ..errors import BranchCutError, ConfigError, EigenfrequencyError
from ..geometry import BoundaryCurve, GradedMesh, build_mesh
from ..media import DerivedMedium
from ..rpml import StretchProfile, side_maps
from ..specfun import bsqrt, hankel0, hankel1
from .operators import SideGeometry, assemble, crossing_mask, layer_potentials

log = logging.getLogger(__name__)

COND_WARN = 1e12


class NearBoundaryWarning(UserWarning):
    """Evaluation point too close to the interface for the plain trapezoidal rule."""


def lu_with_condition(A):
    """LU factors of A and the LAPACK 1-norm reciprocal condition estimate."""
    lu, piv = linalg.lu_factor(A, check_finite=True)
    anorm = np.abs(A).sum(axis=0).max()
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    return (lu, piv), float(rcond)


@dataclass
class NtD:
    matrix: np.ndarray
    cond: float


def ntd(S, K, K0) -> NtD:
    """N = (K - diag(K0))^{-1} S with a condition estimate."""
    A = K - np.diag(K0)
    fac, rcond = lu_with_condition(A)
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not np.isfinite(cond) or cond > COND_WARN:
        log.warning("NtD system ill conditioned (cond ~ %.2e): k0 may be close to an "
                    "eigenfrequency; perturb the truncated interface or layer parameters",
                    cond)
        if not np.isfinite(cond) or rcond < 1e-15:
            raise EigenfrequencyError(f"NtD system singular (cond ~ {cond:.2e})")
    return NtD(matrix=linalg.lu_solve(fac, S), cond=cond)


@dataclass
class CoupledSolution:
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    cond: float
    residual: float


def duplicate_nodes(mesh: GradedMesh) -> np.ndarray:
    """Nodes that coincide in floating point with a faster node.

    Strong grading puts the last nodes before an endpoint within roundoff of
    it.  Their NtD rows are then identical, which makes the coupled system
    singular although the scaled densities there are negligible.
    """
    _, inv, counts = np.unique(mesh.x, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    out = np.zeros(mesh.n, dtype=bool)
    for g in np.flatnonzero(counts > 1):
        idx = np.flatnonzero(inv == g)
        out[idx[idx != idx[np.argmax(mesh.speed[idx])]]] = True
    return out


def couple_and_solve(Np, Nm, sd, F, G, pinned=None) -> CoupledSolution:
    """Solve [Np, -Nm; I, sd I][psi+; Psi-] = [F; G].

    Rows in ``pinned`` are replaced by Psi- = 0 (duplicate nodes).
    """
    F = np.asarray(F, dtype=complex)
    G = np.asarray(G, dtype=complex)
    A = sd * Np + Nm
    rhs = Np @ G - F
    if pinned is not None and np.any(pinned):
        A[pinned] = 0.0
        A[pinned, pinned] = 1.0
        rhs[pinned] = 0.0
    fac, rcond = lu_with_condition(A)
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not np.isfinite(cond) or rcond < 1e-15:
        raise EigenfrequencyError(f"coupled interface system singular (cond ~ {cond:.2e})")
    if cond > COND_WARN:
        log.warning("coupled interface system ill conditioned (cond ~ %.2e)", cond)
    Psi = linalg.lu_solve(fac, rhs)
    if pinned is not None:
        Psi[pinned] = 0.0
    psi = G - sd * Psi
    r1 = Np @ psi - Nm @ Psi - F
    r2 = psi + sd * Psi - G
    rhs = max(np.linalg.norm(np.concatenate([F, G])), 1e-300)
    res = float(np.linalg.norm(np.concatenate([r1, r2])) / rhs)
    return CoupledSolution(psi_plus=psi, psi_minus=Psi, cond=cond, residual=res)


# ---------------------------------------------------------------------------
# incidences


@dataclass(frozen=True)
class Cylindrical:
    """Point source x* in the upper medium.

    ``condition='rc2'`` splits the total field as Phi + u+ above and U- below.
    ``condition='rc1'`` subtracts the background Green's function on both
    sides instead (needs the spectral evaluator).
    """

    source: tuple
    condition: str = "rc2"

    def __post_init__(self):
        if self.condition not in ("rc1", "rc2"):
            raise ConfigError(f"unknown radiation condition {self.condition!r}")


@dataclass(frozen=True)
class Plane:
    theta: float


def is_above(curve_mesh: GradedMesh, x) -> np.ndarray:
    """True for points on the upper-medium side of the interface.

    Counts crossings of the upward vertical ray with the interface polyline;
    outside the truncated interface the sign of x2 decides.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    P = np.vstack([curve_mesh.curve.A, curve_mesh.x])
    a, b = P[:-1], P[1:]
    x1 = x[:, 0][:, None]
    lo = np.minimum(a[:, 0], b[:, 0])[None, :]
    hi = np.maximum(a[:, 0], b[:, 0])[None, :]
    span = (x1 >= lo) & (x1 < hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (x1 - a[:, 0][None, :]) / (b[:, 0] - a[:, 0])[None, :]
        yc = a[:, 1][None, :] + lam * (b[:, 1] - a[:, 1])[None, :]
    hits = np.sum(span & (yc > x[:, 1][:, None]), axis=1)
    inside = (x[:, 0] > P[0, 0]) & (x[:, 0] < P[-1, 0])
    return np.where(inside, hits % 2 == 0, x[:, 1] >= 0)


# ---------------------------------------------------------------------------
# problem


@dataclass
class InterfaceProblem:
    """Scattering problem on a truncated interface with the layer.

    Parameters
    ----------
    k0 : float
        Wavenumber of the upper (identity) medium.
    medium : DerivedMedium
        Lower medium.
    curve : BoundaryCurve
        Truncated interface from A to B with node counts.
    profile : StretchProfile
        Layer parameters; l1 and d1 must match the curve.
    incidence : Cylindrical or Plane
    variant : str
        'rpml2' (default), 'rpml1' or 'upml'.
    """

    k0: float
    medium: DerivedMedium
    curve: BoundaryCurve
    profile: StretchProfile
    incidence: object
    variant: str = "rpml2"
    greens: BackgroundGreens | None = None

    mesh: GradedMesh = field(init=False)
    upper: SideGeometry = field(init=False)
    lower: SideGeometry = field(init=False)

    def __post_init__(self):
        if self.k0 <= 0:
            raise ConfigError("k0 must be positive")
        if abs(self.profile.l1 - self.curve.l1) > 1e-14 or abs(self.profile.d1 - self.curve.d1) > 1e-14:
            raise ConfigError("layer l1/d1 differ from the interface truncation")
        self.curve.check_physical_region()
        self.mesh = build_mesh(self.curve)
        up, lo = side_maps(self.profile, self.medium, self.variant)
        self.upper = SideGeometry.build(self.mesh, up)
        self.lower = SideGeometry.build(self.mesh, lo)
        if isinstance(self.incidence, Cylindrical):
            xs = np.asarray(self.incidence.source, dtype=float)
            if not bool(is_above(self.mesh, xs[None, :])[0]) or xs[1] <= 0:
                raise ConfigError("the point source must lie in the upper medium, above the interface")
            if np.min(np.hypot(*(self.mesh.x - xs).T)) < 1e-8:
                raise ConfigError("the point source lies on the interface")
            if self.incidence.condition == "rc1" and self.greens is None:
                self.greens = BackgroundGreens(self.k0, self.medium)
        elif isinstance(self.incidence, Plane):
            self._plane = PlaneBackground(self.k0, self.medium, self.incidence.theta)
        else:
            raise ConfigError(f"unsupported incidence {self.incidence!r}")

    @property
    def sd(self) -> float:
        return self.medium.sqrt_det

    # -- right-hand sides -----------------------------------------------------

    def _physical_normals(self):
        dx = self.mesh.dx
        return np.stack([dx[:, 1], -dx[:, 0]], axis=1)

    def interface_data(self):
        """F and scaled G at the nodes."""
        inc = self.incidence
        k = self.k0
        M = self.medium.m
        if isinstance(inc, Cylindrical) and inc.condition == "rc2":
            xs = np.asarray(inc.source, dtype=float)
            Z = self.upper.Z
            d = Z - xs
            rho = bsqrt(d[:, 0] ** 2 + d[:, 1] ** 2)
            F = -0.25j * hankel0(k * rho)
            dn = np.sum(self.upper.n * d, axis=1)
            G = 0.25j * k * hankel1(k * rho) * dn / rho
            return F, G
        n = self._physical_normals()
        x = self.mesh.x
        flat = np.array([s.is_flat() for s in self.curve.segments])[self.mesh.seg]
        F = np.zeros(self.mesh.n, dtype=complex)
        G = np.zeros(self.mesh.n, dtype=complex)
        act = ~flat
        if isinstance(inc, Plane):
            pb = self._plane
            X = x @ self.medium.t.T
            ub, gu = pb.upper(x, grad=True)
            Ub, gU = pb.lower(X, grad=True)
            gU = gU @ self.medium.t
            F = Ub - ub
            G = np.einsum("ji,ji->j", n, gU @ M.T - gu)
            # exactly zero on the flat interface; drop roundoff there
            F[flat] = 0.0
            G[flat] = 0.0
            return F, G
        xs = np.asarray(inc.source, dtype=float)
        if np.any(act):
            vu, gu = self.greens.evaluate(x[act], xs, side="upper", grad=True)
            vl, gl = self.greens.evaluate(x[act], xs, side="lower", grad=True)
            F[act] = vl - vu
            G[act] = np.einsum("ji,ji->j", n[act], gl @ M.T - gu)
        return F, G

    # -- solve ---------------------------------------------------------------

    def solve(self) -> "Solution":
        k = self.k0
        Sp, Kp, K0p = assemble(self.upper, k)
        Sm, Km, K0m = assemble(self.lower, k)
        Np = ntd(Sp, Kp, K0p)
        Nm = ntd(Sm, Km, K0m)
        F, G = self.interface_data()
        sol = couple_and_solve(Np.matrix, Nm.matrix, self.sd, F, G,
                               pinned=duplicate_nodes(self.mesh))
        if sol.residual > 1e-12:
            log.warning("block residual %.2e above 1e-12", sol.residual)
        return Solution(problem=self, psi_plus=sol.psi_plus, psi_minus=sol.psi_minus,
                        u_plus=Np.matrix @ sol.psi_plus, u_minus=Nm.matrix @ sol.psi_minus,
                        F=F, G=G, cond={"ntd_plus": Np.cond, "ntd_minus": Nm.cond,
                                        "coupled": sol.cond},
                        residual=sol.residual, K0_plus=K0p, K0_minus=K0m)


@dataclass
class Solution:
    problem: InterfaceProblem
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray
    F: np.ndarray
    G: np.ndarray
    cond: dict
    residual: float
    K0_plus: np.ndarray = field(repr=False, default=None)
    K0_minus: np.ndarray = field(repr=False, default=None)

    # -- background parts ----------------------------------------------------

    def _background(self, x, upper):
        pr = self.problem
        inc = pr.incidence
        out = np.zeros(x.shape[0], dtype=complex)
        if isinstance(inc, Cylindrical):
            xs = np.asarray(inc.source, dtype=float)
            if inc.condition == "rc2":
                if np.any(upper):
                    out[upper] = free_space(x[upper], xs, pr.k0)
                return out
            for flag, side in ((True, "upper"), (False, "lower")):
                m = upper == flag
                if np.any(m):
                    out[m] = pr.greens.evaluate(x[m], xs, side=side)
            return out
        pb = pr._plane
        if np.any(upper):
            out[upper] = pb.upper(x[upper])
        lo = ~upper
        if np.any(lo):
            out[lo] = pb.lower(x[lo] @ pr.medium.t.T)
        return out

    def boundary_total(self):
        """Total field at the interface nodes seen from the upper side."""
        pr = self.problem
        x = pr.mesh.x
        return self.u_plus + self._background(x, np.ones(x.shape[0], dtype=bool))

    def boundary_total_lower(self):
        pr = self.problem
        x = pr.mesh.x
        return self.u_minus + self._background(x, np.zeros(x.shape[0], dtype=bool))

    # -- field evaluation ----------------------------------------------------

    def field(self, x, total=True, warn=True, flag_cut=False):
        """Field at physical points; sides chosen by position.

        Points whose complexified distance to the interface crosses the
        square-root branch cut have no valid representation.  By default they
        raise BranchCutError; with ``flag_cut`` their values are NaN and the
        mask is returned alongside.
        """
        pr = self.problem
        x = np.atleast_2d(np.asarray(x, dtype=float))
        upper = is_above(pr.mesh, x)
        if warn:
            self._near_check(x)
        val = np.full(x.shape[0], np.nan + 0j)
        cut = np.zeros(x.shape[0], dtype=bool)
        for flag, geo, psi, u in ((True, pr.upper, self.psi_plus, self.u_plus),
                                  (False, pr.lower, self.psi_minus, self.u_minus)):
            idx = np.flatnonzero(upper == flag)
            if idx.size == 0:
                continue
            Zt = geo.side.points(x[idx])
            bad = crossing_mask(geo, Zt)
            if np.any(bad) and not flag_cut:
                first = x[idx[np.argmax(bad)]]
                raise BranchCutError(
                    f"{int(bad.sum())} evaluation point(s) lie beyond the branch cut of the "
                    f"complexified distance for variant {pr.variant!r} (first at {first.tolist()})",
                    pairs=[(int(i), -1) for i in idx[bad][:20]])
            cut[idx] = bad
            ok = idx[~bad]
            if ok.size:
                val[ok] = layer_potentials(geo, pr.k0, Zt[~bad], psi, u, check=False)
        if total:
            ok = ~cut
            val[ok] += self._background(x[ok], upper[ok])
        return (val, cut) if flag_cut else val

    def _near_check(self, x):
        pr = self.problem
        lim = 5 * pr.mesh.h * pr.mesh.arclength()
        d = np.min(np.hypot(x[:, None, 0] - pr.mesh.x[None, :, 0],
                            x[:, None, 1] - pr.mesh.x[None, :, 1]), axis=1)
        if np.any(d < lim):
            warnings.warn(f"{int(np.sum(d < lim))} evaluation point(s) closer than "
                          f"{lim:.3g} to the interface; accuracy degrades",
                          NearBoundaryWarning, stacklevel=2)

    def physical_mask(self, x):
        """Points inside the physical (unstretched) region of their side."""
        pr = self.problem
        x = np.atleast_2d(np.asarray(x, dtype=float))
        upper = is_above(pr.mesh, x)
        up = pr.upper.side.physical(x) | (upper & (np.abs(x[:, 0]) < pr.profile.l1))
        lo_map = pr.lower.side
        lo = lo_map.physical(x)
        if lo_map.variant != "upml":
            X = x @ lo_map.t.T
            lo = lo | (~upper & (np.abs(X[:, 0]) < lo_map.t[0, 0] * pr.profile.l1))
        else:
            lo = lo | (~upper & (np.abs(x[:, 0]) < pr.profile.l1))
        return np.where(upper, up, lo)
