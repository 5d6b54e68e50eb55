"""Experiment drivers: single solves, parameter sweeps and the layer comparison.

Errors are sup-norm relative errors

    E_rel = max |u_num - u_ref| / max |u_ref|

over a stated node set.  For a flat interface the reference is exact (the
background field).  Otherwise it is a stored or in-process run with a larger
layer, compared on the nodes of the interior segments, whose positions do not
depend on d1 or S; runs with a different mesh are compared at probe points.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .background import BackgroundGreens, PlaneBackground
from .bie.solver import Cylindrical, InterfaceProblem, NearBoundaryWarning, Plane, Solution
from .config import RunConfig
from .errors import ConfigError
from .io import read_csv, write_csv

log = logging.getLogger(__name__)

VARIANT_ORDER = ("upml", "rpml1", "rpml2")


# ---------------------------------------------------------------------------
# problem construction


def build_problem(cfg: RunConfig, greens: BackgroundGreens | None = None) -> InterfaceProblem:
    inc = cfg.incidence
    if inc["type"] == "cylindrical":
        incidence = Cylindrical(tuple(inc["source"]), inc["condition"])
    else:
        incidence = Plane(inc["theta"])
    return InterfaceProblem(cfg.k0, cfg.medium, cfg.curve(), cfg.profile(), incidence,
                            variant=cfg.variant, greens=greens)


def is_flat(cfg: RunConfig) -> bool:
    return all(s.is_flat() for s in cfg.curve().segments)


def comparison_mask(sol: Solution) -> np.ndarray:
    """Nodes used for E_rel.

    Flat interface: nodes with |x1| < l1.  Otherwise nodes of the interior
    segments (plus the corner closing the first segment), which stay fixed
    when the layer changes.
    """
    mesh = sol.problem.mesh
    nseg = len(mesh.curve.segments)
    if nseg == 1:
        return mesh.perturbed.copy()
    inner = (mesh.seg > 0) & (mesh.seg < nseg - 1)
    last0 = np.flatnonzero(mesh.seg == 0)[-1]
    inner[last0] = True
    return inner


def probe_points(cfg: RunConfig, n: int, seed: int = 0) -> np.ndarray:
    """Seeded points in the physical regions on both sides of the interface.

    Upper probes lie in |x1| < l1 above the interface; lower probes are drawn
    in the rectangle |X1| < alpha l1 of the image coordinates.  Points closer
    than 0.1 to the interface are rejected.
    """
    if n <= 0:
        return np.zeros((0, 2))
    rng = np.random.default_rng(seed)
    curve = cfg.curve()
    l1 = curve.l1
    pts = curve_points(curve)
    top = max(0.0, pts[:, 1].max())
    bot = min(0.0, pts[:, 1].min())
    t = cfg.medium.t
    out = []
    n_up = n // 2
    while len(out) < n:
        if len(out) < n_up:
            x = np.array([rng.uniform(-0.9 * l1, 0.9 * l1), rng.uniform(bot + 0.05, top + 1.0)])
        else:
            X = np.array([rng.uniform(-0.9 * t[0, 0] * l1, 0.9 * t[0, 0] * l1),
                          rng.uniform(t[1, 1] * (bot - 1.0), t[1, 1] * (top - 0.05))])
            x = np.linalg.solve(t, X)
        if np.min(np.hypot(*(pts - x).T)) < 0.1:
            continue
        out.append(x)
    return np.array(out)


def curve_points(curve, n=4000):
    x, _, _ = curve.evaluate(np.linspace(0, 1, n, endpoint=False))
    return x


def probe_sides(sol: Solution, probes):
    from .bie.solver import is_above
    return is_above(sol.problem.mesh, probes)


# ---------------------------------------------------------------------------
# references


@dataclass
class Reference:
    """Reference values on nodes and probes for one physical problem."""

    key: str
    descriptor: str
    node_x: np.ndarray
    node_u: np.ndarray
    probe_x: np.ndarray
    probe_u: np.ndarray

    @classmethod
    def from_solution(cls, cfg: RunConfig, sol: Solution, probes) -> "Reference":
        m = comparison_mask(sol)
        u = sol.boundary_total()[m] * cfg.field_scale
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearBoundaryWarning)
            pu = sol.field(probes) * cfg.field_scale if len(probes) else np.zeros(0, complex)
        desc = (f"run S={cfg.layer['S']} d1={cfg.layer['d1']} "
                f"N={sol.problem.mesh.n} variant={cfg.variant}")
        return cls(cfg.problem_key(), desc, sol.problem.mesh.x[m], u, np.asarray(probes), pu)

    def save(self, path, cfg: RunConfig):
        kind = np.array(["node"] * len(self.node_u) + ["probe"] * len(self.probe_u))
        x = np.vstack([self.node_x, self.probe_x]) if len(self.probe_u) else self.node_x
        u = np.concatenate([self.node_u, self.probe_u])
        meta = cfg.metadata()
        meta["reference"] = self.descriptor
        return write_csv(path, meta, {"kind": kind, "x1": x[:, 0], "x2": x[:, 1],
                                      "re": u.real, "im": u.imag})

    @classmethod
    def load(cls, path, cfg: RunConfig) -> "Reference":
        meta, cols = read_csv(path)
        key = meta.get("problem_key")
        if key != cfg.problem_key():
            raise ConfigError(f"reference {path} belongs to a different problem "
                              f"(key {key}, expected {cfg.problem_key()})")
        kind = cols["kind"]
        x = np.stack([cols["x1"], cols["x2"]], axis=1)
        u = cols["re"] + 1j * cols["im"]
        n, p = kind == "node", kind == "probe"
        return cls(key, f"file {path} ({meta.get('reference', '')}, sha256 "
                   f"{meta.get('data_sha256', '')[:12]})", x[n], u[n], x[p], u[p])


@dataclass
class ErrorReport:
    e_rel: float
    n_nodes: int
    reference: str
    errors: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    where: str = "nodes"

    def summary(self) -> dict:
        return {"E_rel": self.e_rel, "nodes": self.n_nodes, "reference": self.reference,
                "compared_on": self.where}


def _report(num, ref, x, desc, where):
    den = np.max(np.abs(ref))
    err = np.abs(num - ref)
    return ErrorReport(float(np.max(err) / den), int(len(ref)), desc, err, x, where)


def exact_values(cfg: RunConfig, x, upper, greens: BackgroundGreens | None = None):
    """Exact total field for a flat interface at physical points."""
    x = np.atleast_2d(x)
    upper = np.asarray(upper, dtype=bool)
    out = np.zeros(x.shape[0], dtype=complex)
    inc = cfg.incidence
    if inc["type"] == "cylindrical":
        g = greens or BackgroundGreens(cfg.k0, cfg.medium)
        xs = np.asarray(inc["source"], dtype=float)
        for flag, side in ((True, "upper"), (False, "lower")):
            m = upper == flag
            if np.any(m):
                out[m] = g.evaluate(x[m], xs, side=side)
        return out * cfg.field_scale
    pb = PlaneBackground(cfg.k0, cfg.medium, inc["theta"])
    if np.any(upper):
        out[upper] = pb.upper(x[upper])
    if np.any(~upper):
        out[~upper] = pb.lower(x[~upper] @ cfg.medium.t.T)
    return out


def exact_report(cfg: RunConfig, sol: Solution, greens=None) -> ErrorReport:
    m = comparison_mask(sol)
    x = sol.problem.mesh.x[m]
    ref = exact_values(cfg, x, np.ones(len(x), dtype=bool), greens)
    num = sol.boundary_total()[m] * cfg.field_scale
    return _report(num, ref, x, "exact (background field of the flat interface)", "nodes")


def reference_report(cfg: RunConfig, sol: Solution, ref: Reference) -> ErrorReport:
    if ref.key != cfg.problem_key():
        raise ConfigError("reference and run describe different problems")
    m = comparison_mask(sol)
    x = sol.problem.mesh.x[m]
    if x.shape == ref.node_x.shape and np.max(np.abs(x - ref.node_x), initial=0) < 1e-12:
        num = sol.boundary_total()[m] * cfg.field_scale
        return _report(num, ref.node_u, x, ref.descriptor, "nodes")
    if len(ref.probe_u) == 0:
        raise ConfigError("reference nodes do not match this mesh and it holds no probes")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearBoundaryWarning)
        num = sol.field(ref.probe_x) * cfg.field_scale
    return _report(num, ref.probe_u, ref.probe_x, ref.descriptor, "probes")


# ---------------------------------------------------------------------------
# grids


def field_grid(cfg: RunConfig, sol: Solution):
    """Total field on the physical region.

    Upper points form a rectangle in x over |x1| < l1; lower points form a
    rectangle in X-coordinates over |X1| < alpha l1 and are reported in both
    coordinate systems.  Points within 5 h * arclength of the interface are
    tagged ``*_near``; points that close to a point source are dropped.
    """
    g = cfg.output.get("grid", {})
    step = float(g.get("spacing", 0.05))
    height = float(g.get("height", 1.5))
    depth = float(g.get("depth", 1.5))
    if step <= 0 or height <= 0 or depth <= 0:
        raise ConfigError("output.grid spacing, height and depth must be positive")
    pr = sol.problem
    l1 = pr.profile.l1
    t = pr.lower.side.t
    pts = curve_points(pr.curve)
    top, bot = max(0.0, pts[:, 1].max()), min(0.0, pts[:, 1].min())
    x1 = _axis(-l1, l1, step)
    x2 = _axis(bot, top + height, step)
    U = np.stack(np.meshgrid(x1, x2, indexing="xy"), -1).reshape(-1, 2)
    XL1 = _axis(-t[0, 0] * l1, t[0, 0] * l1, step)
    XL2 = _axis(t[1, 1] * (bot - depth), t[1, 1] * top, step)
    XL = np.stack(np.meshgrid(XL1, XL2, indexing="xy"), -1).reshape(-1, 2)
    L = np.linalg.solve(t, XL.T).T
    from .bie.solver import is_above
    U = U[is_above(pr.mesh, U)]
    keep = ~is_above(pr.mesh, L)
    L, XL = L[keep], XL[keep]
    lim = 5 * pr.mesh.h * pr.mesh.arclength()
    if cfg.incidence["type"] == "cylindrical":
        # the point source itself is singular
        U = U[np.hypot(*(U - np.asarray(cfg.incidence["source"])).T) > lim]
    x = np.vstack([U, L])
    X = np.vstack([U @ t.T, XL])
    side = np.array(["upper"] * len(U) + ["lower"] * len(L))
    dmin = np.array([np.min(np.hypot(*(pr.mesh.x - p).T)) for p in x])
    near = dmin < lim
    tag = np.where(near, np.char.add(side, "_near"), side)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearBoundaryWarning)
        u = sol.field(x) * cfg.field_scale
    return x, X, u, tag


def _axis(a, b, step):
    n = max(2, int(round((b - a) / step)) + 1)
    return np.linspace(a, b, n)[1:-1]


# ---------------------------------------------------------------------------
# drivers


@dataclass
class RunResult:
    config: RunConfig
    solution: Solution
    report: ErrorReport | None
    probe_report: ErrorReport | None
    timings: dict

    def summary(self) -> dict:
        s = {"problem_key": self.config.problem_key(), "N_tot": self.solution.problem.mesh.n,
             "variant": self.config.variant, "residual": self.solution.residual,
             "condition": self.solution.cond, "timings": self.timings}
        if self.report is not None:
            s["error"] = self.report.summary()
        if self.probe_report is not None:
            s["probe_error"] = self.probe_report.summary()
        return s


def solve(cfg: RunConfig, greens=None) -> Solution:
    return build_problem(cfg, greens).solve()


def run_solve(cfg: RunConfig, reference: Reference | None = None, probes: int | None = None,
              greens=None) -> RunResult:
    t0 = time.perf_counter()
    sol = solve(cfg, greens)
    t1 = time.perf_counter()
    report = probe_rep = None
    nprobe = int(cfg.output.get("probes", 100) if probes is None else probes)
    if is_flat(cfg):
        g = greens or (sol.problem.greens if sol.problem.greens is not None
                       else BackgroundGreens(cfg.k0, cfg.medium))
        report = exact_report(cfg, sol, g)
        if nprobe:
            P = probe_points(cfg, nprobe, int(cfg.output.get("seed", 0)))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NearBoundaryWarning)
                num = sol.field(P) * cfg.field_scale
            ref = exact_values(cfg, P, probe_sides(sol, P), g)
            probe_rep = _report(num, ref, P, report.reference, "probes")
    elif reference is not None:
        report = reference_report(cfg, sol, reference)
    t2 = time.perf_counter()
    return RunResult(cfg, sol, report, probe_rep,
                     {"solve_s": round(t1 - t0, 3), "errors_s": round(t2 - t1, 3)})


def make_reference(cfg: RunConfig, probes: int | None = None) -> Reference:
    sol = solve(cfg)
    n = int(cfg.output.get("probes", 100) if probes is None else probes)
    P = probe_points(cfg, n, int(cfg.output.get("seed", 0)))
    return Reference.from_solution(cfg, sol, P)


SWEEP_PARAMS = {"S": "S", "d1": "d1", "Ntot": "n_total"}


def sweep_values(param, start, stop, steps):
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep parameter must be one of {list(SWEEP_PARAMS)}")
    if steps < 1:
        raise ConfigError("sweep needs at least one step")
    vals = np.linspace(float(start), float(stop), int(steps))
    if param == "Ntot":
        vals = np.round(vals).astype(int)
    return vals


def default_reference_config(cfg: RunConfig, param: str, values) -> RunConfig:
    """Reference for self-convergence: a strong, wide layer on a fixed mesh."""
    lay = cfg.layer
    over = {}
    if param == "S":
        over["S"] = max(4.0, float(np.max(values)))
    else:
        over["S"] = max(4.0, float(lay["S"]))
    if param == "d1":
        over["d1"] = max(float(np.max(values)), float(lay["d1"]))
    if param == "Ntot":
        over["n_total"] = 2 * int(np.max(values))
    return cfg.with_overrides(**over)


def run_sweep(cfg: RunConfig, param: str, values, reference: Reference | None = None):
    """E_rel for each sweep value against one fixed reference."""
    values = list(values)
    if not is_flat(cfg) and reference is None:
        rc = default_reference_config(cfg, param, values)
        log.info("building self-convergence reference (%s)", rc.layer)
        reference = make_reference(rc)
    greens = None
    if is_flat(cfg) and cfg.incidence["type"] == "cylindrical":
        greens = BackgroundGreens(cfg.k0, cfg.medium)
    rows = []
    for v in values:
        key = SWEEP_PARAMS[param]
        c = cfg.with_overrides(**{key: (int(v) if key == "n_total" else float(v))})
        res = run_solve(c, reference=reference, probes=0, greens=greens)
        rows.append({"value": v, "E_rel": res.report.e_rel, "nodes": res.report.n_nodes,
                     "N_tot": res.solution.problem.mesh.n, "compared_on": res.report.where,
                     "residual": res.solution.residual})
        log.info("%s=%s E_rel=%.3e", param, v, res.report.e_rel)
    desc = reference.descriptor if reference is not None else "exact"
    return rows, desc


# ---------------------------------------------------------------------------
# layer comparison


@dataclass
class CompareResult:
    x: np.ndarray
    exact: np.ndarray
    values: dict
    errors: dict
    cut: dict
    physical: dict

    def summary(self) -> dict:
        out = {}
        tri = np.logical_and.reduce([self.physical[v] for v in self.values])
        ph2 = self.physical["rpml2"]
        for v in self.values:
            e, c, ph = self.errors[v], self.cut[v], self.physical[v]
            own = ph & ~c
            outside = ph & ~ph2
            out[v] = {
                "sup_physical": _smax(e[own]),
                "sup_triple": _smax(e[tri & ~c]),
                "sup_outside_rpml2": _smax(e[outside & ~c]),
                "cut_points_physical": int(np.sum(ph & c)),
                "cut_points_outside_rpml2": int(np.sum(outside & c)),
            }
        return out


def _smax(a):
    return float(np.max(a)) if a.size else None


def run_pml_compare(cfg: RunConfig, box=(-2.0, 2.0, -2.0, 2.0), n=81, variants=VARIANT_ORDER):
    """Pointwise errors of the three layers against the exact flat solution.

    Points whose evaluation crosses the branch cut are flagged; their raw
    (continued past the cut) values are kept in the error map.
    """
    if not is_flat(cfg):
        raise ConfigError("the layer comparison needs a flat interface")
    g1 = np.linspace(box[0], box[1], n)
    g2 = np.linspace(box[2], box[3], n)
    P = np.stack(np.meshgrid(g1, g2, indexing="xy"), -1).reshape(-1, 2)
    base = cfg.with_overrides(variant="rpml2")
    greens = BackgroundGreens(cfg.k0, cfg.medium) if cfg.incidence["type"] == "cylindrical" \
        else None
    prob = build_problem(base, greens)
    lim = 5 * prob.mesh.h * prob.mesh.arclength()
    P = P[np.abs(P[:, 1]) > lim]
    if cfg.incidence["type"] == "cylindrical":
        xs = np.asarray(cfg.incidence["source"])
        P = P[np.hypot(*(P - xs).T) > lim]
    from .bie.operators import crossing_mask, layer_potentials
    from .bie.solver import is_above
    upper = is_above(prob.mesh, P)
    exact = exact_values(cfg, P, upper, greens)
    vals, errs, cuts, phys = {}, {}, {}, {}
    for v in variants:
        c = cfg.with_overrides(variant=v)
        sol = build_problem(c, greens).solve()
        pr = sol.problem
        val = np.zeros(len(P), dtype=complex)
        cut = np.zeros(len(P), dtype=bool)
        for flag, geo, psi, u in ((True, pr.upper, sol.psi_plus, sol.u_plus),
                                  (False, pr.lower, sol.psi_minus, sol.u_minus)):
            m = upper == flag
            Zt = geo.side.points(P[m])
            cut[m] = crossing_mask(geo, Zt)
            val[m] = layer_potentials(geo, pr.k0, Zt, psi, u, check=False)
        val = (val + sol._background(P, upper)) * c.field_scale
        vals[v], cuts[v] = val, cut
        errs[v] = np.abs(val - exact)
        phys[v] = sol.physical_mask(P)
    return CompareResult(P, exact, vals, errs, cuts, phys)
