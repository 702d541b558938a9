"""Command-line front end.

    proxreg project --set hyperbolic-strip --point 0.3,3
    proxreg reproduce sphere --plot --out out/sphere.json
    proxreg check hess --manifold sphere2 --n 100
    proxreg solve --set sphere-cap --curve start.json --plot

Exit status is 0 when every assertion in the report passes, 1 when one fails
and 2 on input or solver errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import curves as cv
from . import experiments as ex
from . import scenarios as sc
from .errors import ProxRegError
from .manifolds import load_manifold
from .projection import project
from .report import ExperimentReport
from .sets import CombSet, load_set

log = logging.getLogger("proxreg")


def _point(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad point {text!r}: {err}") from None


def _resolve_set(args):
    manifold = load_manifold(args.manifold) if args.manifold else None
    return load_set(args.set, manifold)


# commands ----------------------------------------------------------------------

def cmd_project(args) -> ExperimentReport:
    pset = _resolve_set(args)
    z = args.point
    rep = ExperimentReport("project", args.seed, inputs={"set": args.set, "point": z})
    if isinstance(pset, CombSet):
        h = args.tol if args.tol is not None else 1e-3
        res = pset.project(z, tie_tol=h)
        rep.inputs["tie_tol"] = h
        rep.outputs.update(res.to_dict(), minimizers=res.minimizers,
                           nearest_candidates=res.extra["nearest_candidates"])
        if args.grid:
            rep.outputs["grid_dist"] = _comb_grid_distance(pset, z, h)
            rep.check("grid_agrees", res.dist, "~", rep.outputs["grid_dist"], h)
        return rep
    res = project(pset, z, m_start=args.m_start, seed=args.seed)
    rep.outputs.update(res.to_dict(), minimizers=res.minimizers)
    rep.check("point_in_set", float(pset.psi_value(res.point)), "<=", 0.0, pset.tol_bd(res.point))
    rep.check("dist_consistent", res.dist, "~", float(pset.manifold.distance(z, res.point)), 1e-12)
    return rep


def _comb_grid_distance(comb: CombSet, z, h):
    """Brute-force distance to a sampling of the comb at spacing ``h``."""
    ts = np.linspace(0.0, 1.0, int(round(1.0 / h)) + 1)
    a, b = comb.seg_a, comb.seg_b
    pts = (a[:, None, :] + ts[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)
    return float(np.min(np.linalg.norm(pts - np.asarray(z, float), axis=1)))


def cmd_cones(args) -> ExperimentReport:
    return ex.cone_report(_resolve_set(args), args.point, args.seed)


def cmd_reproduce(args) -> ExperimentReport:
    if args.example == "sphere":
        rep = ex.reproduce_sphere(n=args.n or 200, seed=args.seed)
    elif args.example == "hyperbolic":
        rep = ex.reproduce_hyperbolic(n=args.n or 200, seed=args.seed)
    else:
        rep = ex.reproduce_comb(seed=args.seed)
    if args.plot and "solver" in rep.outputs:
        _plot_solver(args, rep)
    return rep


def cmd_check(args) -> ExperimentReport:
    suite = args.suite
    if suite == "cones":
        return ex.check_cones(seed=args.seed, n=args.n or 1000)
    if suite == "ddp":
        return ex.check_ddp(load_set(args.set or "sphere-cap"), n=args.n or 50, seed=args.seed,
                            tol=args.tol or 1e-4)
    if suite == "hess":
        return ex.check_hess(load_manifold(args.manifold or "sphere2"), n=args.n or 100, seed=args.seed,
                             tol=args.tol or 1e-6)
    if suite == "lip":
        return ex.check_lip(load_set(args.set or "sphere-cap"), n=args.n or 50, seed=args.seed)
    if suite == "shapiro":
        return ex.check_shapiro(seed=args.seed)
    return ex.check_variation(n=args.n or 20, seed=args.seed)


_STARTS = {
    "sphere-cap": lambda: sc.sphere_cap_start(),
    "hyperbolic-strip": lambda: sc.hyperbolic_start(),
    "euclidean-halfplane": lambda: sc.halfplane_start(),
}


def cmd_solve(args) -> ExperimentReport:
    pset = _resolve_set(args)
    if args.curve:
        start = cv.DiscreteCurve.from_dict(pset.manifold, json.loads(Path(args.curve).read_text()))
    else:
        key = pset.name.split(":")[0]
        if key not in _STARTS:
            raise ProxRegError(f"no default start curve for {pset.name}; pass --curve")
        start = _STARTS[key]()
    params = json.loads(Path(args.params).read_text()) if args.params else {}
    if args.tol is not None:
        params.setdefault("tol_stat", args.tol)
    rep = ExperimentReport("solve", args.seed, inputs={"set": pset.name, "params": params,
                                                        "n_nodes": start.n_nodes})
    curve, sol = cv.minimize_curve(start, pset, **params)
    res = cv.necessary_condition_residual(curve, pset)
    steps = np.diff(sol.lengths)
    rep.outputs["solver"] = sol.to_dict()
    rep.outputs["curve"] = curve.to_dict()
    rep.outputs["residual"] = res.to_dict()
    rep.check("solver_converged", sol.converged, "is", True)
    rep.check("solver_length_monotone", float(steps.max()) if len(steps) else 0.0, "<=", 0.0, 1e-10)
    if args.plot:
        _plot_solver(args, rep, curve=curve, residual=res)
    return rep


def _plot_solver(args, rep, curve=None, residual=None):
    from .plotting import plot_residuals, plot_traces

    stem = Path(args.out).with_suffix("") if args.out else Path(rep.scenario)
    sol = rep.outputs["solver"]
    paths = [plot_traces(f"{stem}-length.svg", {"length": sol["lengths"]}, ylabel="length",
                         title=rep.scenario)]
    if curve is not None and residual is not None:
        t = cv.reparametrize_arclength(curve).times
        paths.append(plot_residuals(f"{stem}-residual.svg", t, residual.values, residual.tol_stat,
                                    title=rep.scenario))
    rep.outputs["plots"] = [str(p) for p in paths]


# entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifold", help="manifold name (euclidean[:dim=n], sphere2, hyperbolic2) or JSON file")
    common.add_argument("--set", help="builtin set name with parameters, or JSON config")
    common.add_argument("--curve", help="curve JSON file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--plot", action="store_true", help="write SVG line plots next to the report")
    common.add_argument("--n", type=int, default=None, help="sample count or node count")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="proxreg", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("project", parents=[common], help="metric projection of a point")
    q.add_argument("--point", type=_point, required=True)
    q.add_argument("--grid", action="store_true", help="also run a brute-force grid oracle (comb)")
    q.add_argument("--m-start", type=int, default=8)
    q.set_defaults(func=cmd_project, needs_set=True)

    q = sub.add_parser("cones", parents=[common], help="proximal normal and tangent cones at a point")
    q.add_argument("--point", type=_point, required=True)
    q.set_defaults(func=cmd_cones, needs_set=True)

    q = sub.add_parser("reproduce", parents=[common], help="run a worked example end to end")
    q.add_argument("example", choices=("sphere", "hyperbolic", "comb"))
    q.set_defaults(func=cmd_reproduce, needs_set=False)

    q = sub.add_parser("check", parents=[common], help="run a property suite")
    q.add_argument("suite", choices=("cones", "ddp", "hess", "lip", "shapiro", "variation"))
    q.set_defaults(func=cmd_check, needs_set=False)

    q = sub.add_parser("solve", parents=[common], help="shorten a curve inside a set")
    q.add_argument("--params", help='solver params JSON file {"max_iter", "tol_stat", "step0"}')
    q.set_defaults(func=cmd_solve, needs_set=True)
    return p


def render(rep: ExperimentReport, fmt: str) -> str:
    return rep.to_json() if fmt == "json" else rep.to_csv()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.needs_set and not args.set:
        parser.error(f"{args.command} needs --set")
    try:
        rep = args.func(args)
    except (ProxRegError, ValueError, OSError, json.JSONDecodeError) as err:
        print(f"proxreg: error: {err}", file=sys.stderr)
        return 2
    text = render(rep, args.format)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
    else:
        sys.stdout.write(text)
    for a in rep.assertions:
        if not a.passed:
            print(a.line(), file=sys.stderr)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
