"""Command line driver.

    rpmlbie solve --config run.json
    rpmlbie sweep --config run.json --param S --from 0.1 --to 2 --steps 20
    rpmlbie compare-pml --config cmp.json
    rpmlbie greens --config greens.json
    rpmlbie selftest

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .background import BackgroundGreens
from .config import RunConfig
from .errors import ConfigError, NumericalError, RpmlBieError
from .io import write_csv

log = logging.getLogger("rpmlbie")


def _outdir(cfg: RunConfig, override=None) -> Path:
    d = Path(override or cfg.output.get("dir", "out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=_default))


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _load_reference(cfg, args):
    ref_cfg = cfg.raw.get("reference") or {}
    path = getattr(args, "reference", None) or ref_cfg.get("load")
    return ex.Reference.load(path, cfg) if path else None


def cmd_solve(args) -> int:
    cfg = RunConfig.load(args.config)
    out = _outdir(cfg, args.out)
    ref = _load_reference(cfg, args)
    res = ex.run_solve(cfg, reference=ref)
    sol = res.solution
    meta = cfg.metadata()
    meta["summary"] = res.summary()
    mesh = sol.problem.mesh
    scale = cfg.field_scale
    cols = {"t": mesh.t, "x1": mesh.x[:, 0], "x2": mesh.x[:, 1],
            "perturbed": ex.comparison_mask(sol)}
    for name, arr in (("u_plus", sol.boundary_total() * scale),
                      ("psi_plus", sol.psi_plus * scale),
                      ("u_minus", sol.u_minus * scale), ("psi_minus", sol.psi_minus * scale)):
        cols[f"re_{name}"] = arr.real
        cols[f"im_{name}"] = arr.imag
    write_csv(out / "nodes.csv", meta, cols)
    x, X, u, tag = ex.field_grid(cfg, sol)
    write_csv(out / "field.csv", meta, {"x1": x[:, 0], "x2": x[:, 1], "X1": X[:, 0],
                                        "X2": X[:, 1], "re_u": u.real, "im_u": u.imag,
                                        "region": tag})
    if res.report is not None:
        r = res.report
        write_csv(out / "errors.csv", meta, {"x1": r.x[:, 0], "x2": r.x[:, 1], "error": r.errors})
    save = (cfg.raw.get("reference") or {}).get("save")
    if save:
        P = ex.probe_points(cfg, int(cfg.output.get("probes", 100)), int(cfg.output.get("seed", 0)))
        ex.Reference.from_solution(cfg, sol, P).save(save, cfg)
    _emit(res.summary())
    return 0


def cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    sw = dict(cfg.raw.get("sweep") or {})
    param = args.param or sw.get("param")
    start = args.start if args.start is not None else sw.get("from")
    stop = args.stop if args.stop is not None else sw.get("to")
    steps = args.steps if args.steps is not None else sw.get("steps")
    if param is None or start is None or stop is None or steps is None:
        raise ConfigError("sweep needs --param, --from, --to and --steps (or a 'sweep' block)")
    values = ex.sweep_values(param, start, stop, int(steps))
    out = _outdir(cfg, args.out)
    ref = _load_reference(cfg, args)
    rows, desc = ex.run_sweep(cfg, param, values, reference=ref)
    meta = cfg.metadata()
    meta["sweep"] = {"param": param, "from": start, "to": stop, "steps": int(steps),
                     "values": [float(v) for v in values], "reference": desc}
    write_csv(out / f"sweep_{param}.csv", meta,
              {param: [r["value"] for r in rows], "E_rel": [r["E_rel"] for r in rows],
               "N_tot": [r["N_tot"] for r in rows], "nodes": [r["nodes"] for r in rows],
               "compared_on": [r["compared_on"] for r in rows]})
    _emit({"param": param, "reference": desc,
           "rows": [{param: r["value"], "E_rel": r["E_rel"]} for r in rows]})
    return 0


def cmd_compare(args) -> int:
    cfg = RunConfig.load(args.config)
    cmp = cfg.raw.get("compare") or {}
    box = tuple(float(v) for v in cmp.get("box", (-2, 2, -2, 2)))
    n = int(cmp.get("grid_n", 81))
    res = ex.run_pml_compare(cfg, box=box, n=n)
    out = _outdir(cfg, args.out)
    meta = cfg.metadata()
    meta["compare"] = {"box": box, "grid_n": n, "summary": res.summary()}
    cols = {"x1": res.x[:, 0], "x2": res.x[:, 1], "re_exact": res.exact.real,
            "im_exact": res.exact.imag}
    for v in res.values:
        cols[f"err_{v}"] = res.errors[v]
        cols[f"cut_{v}"] = res.cut[v]
        cols[f"physical_{v}"] = res.physical[v]
    write_csv(out / "compare_pml.csv", meta, cols)
    _emit(res.summary())
    return 0


def cmd_greens(args) -> int:
    cfg = RunConfig.load(args.config)
    gspec = cfg.raw.get("greens") or {}
    src = gspec.get("source", cfg.incidence.get("source"))
    if src is None:
        raise ConfigError("greens.source is required")
    xs = np.asarray(src, dtype=float)
    tg = np.atleast_2d(np.asarray(gspec.get("targets", [[0.5, 0.5], [0.5, -0.5]]), dtype=float))
    G = BackgroundGreens(cfg.k0, cfg.medium)
    v, g = G.evaluate(tg, xs, grad=True)
    scale = cfg.field_scale
    out = _outdir(cfg, args.out)
    meta = cfg.metadata()
    write_csv(out / "greens.csv", meta,
              {"x1": tg[:, 0], "x2": tg[:, 1], "re_G": (v * scale).real, "im_G": (v * scale).imag,
               "re_dG1": (g[:, 0] * scale).real, "im_dG1": (g[:, 0] * scale).imag,
               "re_dG2": (g[:, 1] * scale).real, "im_dG2": (g[:, 1] * scale).imag})
    result = {"values": [[float(z.real), float(z.imag)] for z in v * scale]}
    angles = gspec.get("angles")
    if angles:
        ang = np.asarray(angles, dtype=float)
        f = G.farfield(ang, xs) * scale
        write_csv(out / "farfield.csv", meta, {"angle": ang, "re": f.real, "im": f.imag})
        result["farfield"] = [[float(z.real), float(z.imag)] for z in f]
    _emit(result)
    return 0


def cmd_selftest(args) -> int:
    """Fast consistency checks of the main building blocks."""
    from .bie import alpert
    from .bie.representation import circle_contour, representation_check
    from .media import medium_from_permittivity
    from .specfun import wronskian_defect

    checks = {}
    z = np.array([0.3 + 0.1j, 2.0, 7.5 + 3j, 40.0 - 0.5j])
    checks["hankel_wronskian"] = float(wronskian_defect(z).max())
    import mpmath as mp

    with mp.workdps(30):
        ref = float(mp.quad(lambda t: mp.exp(mp.cos(2 * mp.pi * t))
                            * mp.log(abs(mp.sin(mp.pi * (t - 0.5)))), [0, 0.5, 1]))
    errs = [abs(alpert.log_integral(lambda t: 0 * t, lambda t: np.exp(np.cos(2 * np.pi * t)), n)
                - ref) for n in (16, 32)]
    checks["alpert_order"] = float(np.log2(errs[0] / errs[1]))
    med = medium_from_permittivity([4, 1, 9])
    G = BackgroundGreens(2 * np.pi, med)
    a = G.evaluate(np.array([[0.3, 0.4]]), np.array([-0.2, -0.5]))[0]
    b = G.evaluate(np.array([[-0.2, -0.5]]), np.array([0.3, 0.4]))[0]
    checks["reciprocity"] = float(abs(a - b) / abs(a))
    c = circle_contour((0, 0.1), 0.6, 200)
    r = representation_check(G, (0.1, 0.2), c, np.array([[1.5, 0.4], [-1.2, -0.7]]))
    checks["representation"] = r.residual
    limits = {"hankel_wronskian": 1e-12, "reciprocity": 1e-9, "representation": 1e-9}
    ok = all(checks[k] <= v for k, v in limits.items()) and checks["alpert_order"] >= 5.7
    _emit({"checks": checks, "ok": ok})
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rpmlbie", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one configuration and write nodes/field CSVs")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (overrides output.dir)")
    s.add_argument("--reference", help="reference CSV for self-convergence errors")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="E_rel against S, d1 or N_tot")
    s.add_argument("--config", required=True)
    s.add_argument("--param", choices=sorted(ex.SWEEP_PARAMS))
    s.add_argument("--from", dest="start", type=float)
    s.add_argument("--to", dest="stop", type=float)
    s.add_argument("--steps", type=int)
    s.add_argument("--out")
    s.add_argument("--reference")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("compare-pml", help="UPML / RPML-I / RPML-II error maps")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("greens", help="background Green's function and far field")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_greens)

    s = sub.add_parser("selftest", help="quick internal consistency checks")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return exc.exit_code
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except RpmlBieError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
