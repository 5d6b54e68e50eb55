"""Material algebra for homogeneous orthotropic half-planes.

For TM polarization the scalar field u = H3 satisfies

    div(M grad u) + k0^2 u = 0,   M = [e11 e12; e12 e22] / (e11 e22 - e12^2).

The
change of coordinates X = T x with T = Q M^{-1/2} maps the equation to the
isotropic Helmholtz equation.  Q is the rotation that makes T upper
triangular, so the horizontal interface x2 = 0 is mapped onto X2 = 0 and
X1 = alpha x1 there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

_MAX_COND = 1e12


@dataclass(frozen=True)
class PermittivityTensor:
    """Relative permittivity with symmetric in-plane block and e33."""

    e11: float
    e12: float
    e22: float
    e33: float = 1.0

    def __post_init__(self):
        vals = (self.e11, self.e12, self.e22, self.e33)
        if not all(np.isfinite(v) for v in vals):
            raise ConfigError(f"permittivity entries must be finite, got {vals}")
        det = self.e11 * self.e22 - self.e12**2
        if self.e11 <= 0 or det <= 0:
            raise ConfigError(
                f"in-plane permittivity block is not positive definite "
                f"(e11={self.e11}, det={det})"
            )
        if self.e33 <= 0:
            raise ConfigError(f"e33 must be positive, got {self.e33}")

    @classmethod
    def from_sequence(cls, seq) -> "PermittivityTensor":
        """Accept [e11, e12, e22(, e33)] or a 2x2/3x3 nested list."""
        arr = np.asarray(seq, dtype=float)
        if arr.shape == (3, 3) or arr.shape == (2, 2):
            if abs(arr[0, 1] - arr[1, 0]) > 1e-14 * max(1.0, abs(arr[0, 1])):
                raise ConfigError("permittivity block must be symmetric")
            e33 = float(arr[2, 2]) if arr.shape == (3, 3) else 1.0
            return cls(float(arr[0, 0]), float(arr[0, 1]), float(arr[1, 1]), e33)
        if arr.shape in [(3,), (4,)]:
            return cls(*map(float, arr))
        raise ConfigError(f"cannot interpret permittivity of shape {arr.shape}")


def material_matrix(eps: PermittivityTensor) -> np.ndarray:
    """M = [e11 e12; e12 e22] / (e11 e22 - e12^2)."""
    det = eps.e11 * eps.e22 - eps.e12**2
    return np.array([[eps.e11, eps.e12], [eps.e12, eps.e22]]) / det


def spd_sqrt(A: np.ndarray) -> np.ndarray:
    """Principal square root of a 2x2 SPD matrix in closed form."""
    A = np.asarray(A, dtype=float)
    sd = np.sqrt(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    tau = np.sqrt(A[0, 0] + A[1, 1] + 2.0 * sd)
    R = (A + sd * np.eye(2)) / tau
    R[1, 0] = R[0, 1]  # exact symmetry
    return R


def _check_spd(M: np.ndarray) -> None:
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2) or not np.all(np.isfinite(M)):
        raise ConfigError("material matrix must be a finite 2x2 array")
    if abs(M[0, 1] - M[1, 0]) > 1e-13 * np.abs(M).max():
        raise ConfigError("material matrix must be symmetric")
    ev = np.linalg.eigvalsh(M)
    if ev[0] <= 0:
        raise ConfigError(f"material matrix is not positive definite (eigs {ev})")
    if ev[1] / ev[0] > _MAX_COND:
        raise ConfigError(f"material matrix is nearly singular (cond {ev[1] / ev[0]:.3e})")


@dataclass(frozen=True)
class DerivedMedium:
    """All algebra derived from one material matrix.

    ``t`` maps physical coordinates to image coordinates, X = t @ x.  With
    ``rotate=False`` in :func:`derive_medium` the rotation is skipped (Q = I),
    which gives a symmetric rather than triangular ``t``.
    """

    m: np.ndarray
    a: np.ndarray  # M^{-1/2}
    q: np.ndarray
    t: np.ndarray
    t_inv: np.ndarray
    alpha: float
    det_m: float
    rotated: bool = True

    m11: float = field(init=False)
    m12: float = field(init=False)
    m22: float = field(init=False)
    a11: float = field(init=False)
    a12: float = field(init=False)
    a22: float = field(init=False)

    def __post_init__(self):
        for name, val in (
            ("m11", self.m[0, 0]),
            ("m12", self.m[0, 1]),
            ("m22", self.m[1, 1]),
            ("a11", self.a[0, 0]),
            ("a12", self.a[0, 1]),
            ("a22", self.a[1, 1]),
        ):
            object.__setattr__(self, name, float(val))

    @property
    def sqrt_det(self) -> float:
        """|M|^{1/2}."""
        return float(np.sqrt(self.det_m))

    @property
    def c(self) -> float:
        """|M|^{1/2} alpha, the interface impedance ratio of the flat part."""
        return self.sqrt_det * self.alpha

    @property
    def is_identity(self) -> bool:
        return bool(np.allclose(self.m, np.eye(2), rtol=0, atol=1e-15))

    def to_image(self, x):
        """X = t x for points stored along the last axis (complex allowed)."""
        x = np.asarray(x)
        return x @ self.t.T

    def from_image(self, X):
        X = np.asarray(X)
        return X @ self.t_inv.T

    def to_image_grad(self, grad_X):
        """Convert a gradient in X to a gradient in x: grad_x = t^T grad_X."""
        return np.asarray(grad_X) @ self.t


def derive_medium(M, rotate: bool = True) -> DerivedMedium:
    """Compute M^{-1/2}, Q, alpha and the transition matrix t = Q M^{-1/2}."""
    M = np.array(M, dtype=float)
    _check_spd(M)
    M = 0.5 * (M + M.T)
    det_m = M[0, 0] * M[1, 1] - M[0, 1] ** 2
    minv = np.array([[M[1, 1], -M[0, 1]], [-M[0, 1], M[0, 0]]]) / det_m
    a = spd_sqrt(minv)
    a11, a12 = a[0, 0], a[0, 1]
    alpha = float(np.hypot(a11, a12))
    if rotate:
        q = np.array([[a11, a12], [-a12, a11]]) / alpha
        t = q @ a
        t[1, 0] = 0.0
    else:
        q = np.eye(2)
        t = a.copy()
    det_t = t[0, 0] * t[1, 1] - t[0, 1] * t[1, 0]
    t_inv = np.array([[t[1, 1], -t[0, 1]], [-t[1, 0], t[0, 0]]]) / det_t
    if rotate:
        t_inv[1, 0] = 0.0
    return DerivedMedium(m=M, a=a, q=q, t=t, t_inv=t_inv, alpha=alpha,
                         det_m=float(det_m), rotated=rotate)


def medium_from_permittivity(eps, rotate: bool = True) -> DerivedMedium:
    if not isinstance(eps, PermittivityTensor):
        eps = PermittivityTensor.from_sequence(eps)
    return derive_medium(material_matrix(eps), rotate=rotate)


@dataclass(frozen=True)
class Normalization:
    """Affine map y = T+ x that turns the upper medium into the identity.

    Green's functions transform as G_x(x; x*) = |det T+| G_y(T+ x; T+ x*).
    """

    t_plus: np.ndarray
    m_minus: np.ndarray
    source_scale: float

    @property
    def is_trivial(self) -> bool:
        return bool(np.allclose(self.t_plus, np.eye(2), rtol=0, atol=1e-15))


def normalize_media(m_plus, m_minus) -> Normalization:
    """Re-express both media in coordinates where the upper medium is I."""
    up = derive_medium(m_plus)
    tp = up.t
    m_new = tp @ np.asarray(m_minus, dtype=float) @ tp.T
    m_new = 0.5 * (m_new + m_new.T)
    return Normalization(t_plus=tp, m_minus=m_new,
                         source_scale=float(abs(np.linalg.det(tp))))
