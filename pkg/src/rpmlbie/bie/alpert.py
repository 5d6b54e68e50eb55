"""Hybrid Gauss-trapezoidal correction for logarithmic singularities.

For a 1-periodic integrand f(t) = phi(t) + psi(t) log|t - t0| with smooth phi
and psi, the rule

    int_0^1 f dt ~ h sum_{|m - j| >= a} f(t_m) + h sum_k w_k [f(t0 + x_k h) + f(t0 - x_k h)]

with t0 = t_j has order 6 for the node set below (a = 3, five nodes per
side).  The nodes solve the moment equations

    sum_k w_k x_k^n          = -zeta(-n, a)
    sum_k w_k x_k^n log x_k  =  zeta'(-n, a),     n = 0..4,

with the Hurwitz zeta function; :func:`solve_nodes` recomputes them in
multiprecision.
"""

from __future__ import annotations

import numpy as np

SKIP = 3  # trapezoidal nodes with |m - j| < SKIP are replaced

NODES = np.array([
    4.0048841949265696177e-3,
    7.7456553733366861324e-2,
    3.9728499935232485938e-1,
    1.0756733529151037443e0,
    2.0037969271118719440e0,
])
WEIGHTS = np.array([
    1.6718796911471017151e-2,
    1.6369583714473597011e-1,
    4.9818565697706365444e-1,
    8.3722662455789122024e-1,
    9.8417308440883813806e-1,
])


def solve_nodes(dps: int = 40, a: int = SKIP, guess=None):
    """Solve the moment equations with mpmath Newton iteration.

    Returns (nodes, weights, residual) as mpmath numbers.
    """
    import mpmath as mp

    with mp.workdps(dps):
        x0 = list(NODES if guess is None else guess[0])
        w0 = list(WEIGHTS if guess is None else guess[1])
        J = len(x0)

        def eqs(*v):
            x, w = v[:J], v[J:]
            out = []
            for n in range(J):
                out.append(mp.fsum(w[k] * x[k] ** n for k in range(J)) + mp.zeta(-n, a))
                out.append(mp.fsum(w[k] * x[k] ** n * mp.log(x[k]) for k in range(J))
                           - mp.zeta(-n, a, 1))
            return out

        sol = mp.findroot(eqs, [mp.mpf(v) for v in x0 + w0])
        sol = [sol[i] for i in range(2 * J)]
        res = max(abs(e) for e in eqs(*sol))
        return sol[:J], sol[J:], res


def lagrange_periodic(tau, n: int):
    """Trigonometric cardinal function of an even n-point periodic grid.

    L(tau) = sin(n pi tau) / (n tan(pi tau)), L(0) = 1; tau in units of the
    period.  Interpolates the span of exp(2 pi i k t), |k| < n/2, plus the
    cosine Nyquist mode.
    """
    tau = np.asarray(tau, dtype=float)
    tau = tau - np.round(tau)
    out = np.ones_like(tau)
    m = np.abs(tau) > 1e-15
    out[m] = np.sin(n * np.pi * tau[m]) / (n * np.tan(np.pi * tau[m]))
    return out


def interpolation_row(shift: float, n: int) -> np.ndarray:
    """c[d] with f(t_j + shift h) = sum_m c[(j - m) mod n] f(t_m)."""
    d = np.arange(n)
    return lagrange_periodic((d + shift) / n, n)


def offsets():
    """Signed node offsets (in units of h) and matching weights."""
    x = np.concatenate([NODES, -NODES])
    w = np.concatenate([WEIGHTS, WEIGHTS])
    return x, w


def periodic_distance(n: int) -> np.ndarray:
    j = np.arange(n)
    d = np.abs(j[:, None] - j[None, :])
    return np.minimum(d, n - d)


def log_integral(f_smooth, f_log, n: int, t0: float = 0.5, g_grid=None):
    """Integrate f_smooth(t) + f_log(t) log|sin(pi (t - t0))| over one period.

    With ``g_grid`` (values of a density on the grid) the kernel is
    f_log and the density is interpolated trigonometrically at the off-grid
    points, which is how the operator matrices use the rule.
    """
    h = 1.0 / n
    t = np.arange(1, n + 1) * h
    j = int(round(t0 / h)) - 1
    if abs(t[j] - t0) > 1e-12:
        raise ValueError("t0 must be a grid node")
    dist = np.abs(np.arange(n) - j)
    dist = np.minimum(dist, n - dist)
    far = dist >= SKIP

    def kern(s):
        return f_log(s) * np.log(np.abs(np.sin(np.pi * (s - t0))))

    if g_grid is None:
        total = h * np.sum(f_smooth(t[far]) + kern(t[far]))
        for xk, wk in zip(*offsets()):
            s = t0 + xk * h
            total += h * wk * (f_smooth(s) + kern(s))
        return total
    total = h * np.sum(kern(t[far]) * g_grid[far])
    for xk, wk in zip(*offsets()):
        s = t0 + xk * h
        c = interpolation_row(xk, n)
        gval = np.sum(c[(j - np.arange(n)) % n] * g_grid)
        total += h * wk * kern(s) * gval
    return total
