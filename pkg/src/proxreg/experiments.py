"""Scenario runners behind the ``reproduce`` and ``check`` commands.

Each runner returns an :class:`ExperimentReport` whose assertions carry the
tolerance they were judged at.
"""

from __future__ import annotations

import math

import numpy as np

from . import curves as cv
from . import scenarios as sc
from .cones import Cone, ConeKind
from .errors import AmbiguousProjectionError, PreconditionError
from .manifolds import Manifold, Sphere2
from .projection import (cone_project, ddp_problem_pair, directional_derivative, lipschitz_ball,
                         lipschitz_estimate, project, shapiro_check, ShapiroProblem)
from .report import ExperimentReport
from .sets import (CombSet, ProxSet, bouligand_tangent_cone, estimate_phi, estimate_reach,
                   euclidean_disk_complement, hyperbolic_strip, normal_cones_split,
                   proximal_normal_cone, sphere_cap, tangent_intersection_check,
                   SPHERE_CAP_THETA0)


# boundary parametrizations of the builtin sets ---------------------------------

def boundary_points(pset: ProxSet, rng, n) -> np.ndarray:
    """Random boundary points of a builtin set."""
    name = pset.name.split(":")[0]
    u = rng.random(n)
    if name == "sphere-cap":
        th = pset.params["theta0"]
        return np.column_stack([np.full(n, th), -2.5 + 5.0 * u])
    if name == "hyperbolic-strip":
        y = np.where(rng.random(n) < 0.5, pset.params["ymin"], pset.params["ymax"])
        return np.column_stack([-2.0 + 4.0 * u, y])
    if name in ("euclidean-halfplane", "euclidean-line"):
        return np.column_stack([-2.0 + 4.0 * u, np.zeros(n)])
    if name == "euclidean-disk-complement":
        a = 2 * math.pi * u
        return pset.params["r"] * np.column_stack([np.cos(a), np.sin(a)])
    raise PreconditionError(f"no boundary parametrization for {pset.name}")


def unit_vectors(M: Manifold, x, rng, n):
    E = M.orthonormal_frame(x)
    u = rng.standard_normal((n, M.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u @ E.T


# reproduce ----------------------------------------------------------------------

def reproduce_sphere(theta0=SPHERE_CAP_THETA0, n=200, seed=0, solve=True) -> ExperimentReport:
    rep = ExperimentReport("reproduce-sphere", seed, inputs={"theta0": theta0, "n": n})
    S = sphere_cap(theta0)
    gamma = sc.sphere_cap_gamma(theta0, n)
    alpha = sc.sphere_cap_alpha(theta0, n)
    lg, la = cv.length(gamma), cv.length(alpha)
    rep.outputs.update(length_gamma=lg, length_alpha=la)
    rep.check("length_gamma", lg, "~", math.pi * math.sin(theta0), 1e-3)
    rep.check("length_alpha", la, "~", 2 * theta0, 1e-3)
    rep.check("length_gamma_below_pi", lg, "<", math.pi)
    rep.check("length_alpha_above_pi", la, ">", math.pi)

    A = cv.accelerations(gamma)
    lam = -math.cos(theta0) / math.sin(theta0)
    err = float(np.max(np.abs(A[1:-1] - [lam, 0.0])))
    res_g = cv.necessary_condition_residual(gamma, S)
    rep.outputs.update(lambda_=lam, accel_mean=np.mean(A[1:-1], axis=0))
    rep.check("accel_gamma_max_error", err, "<=", 0.0, 5e-3)
    rep.check("lambda_positive", lam, ">", 0.0)
    rep.check("residual_gamma", res_g.max, "<=", 0.0, 1e-4)

    res_a = cv.necessary_condition_residual(alpha, S)
    rep.outputs["alpha_breakpoints"] = list(alpha.breakpoints)
    rep.check("residual_alpha_off_breakpoints", res_a.max, "<=", 0.0, 1e-4)
    rep.check("length_gap_alpha_gamma", la - lg, ">=", 1.4, 0.0)

    step = max(1, n // 20)
    rep.tables["gamma_nodes"] = [
        {"t": gamma.times[i], "theta": gamma.points[i, 0], "phi": gamma.points[i, 1],
         "accel_theta": A[i, 0], "accel_phi": A[i, 1], "residual": res_g.values[i]}
        for i in range(0, gamma.n_nodes, step)
    ]
    if solve:
        _solve_into(rep, sc.sphere_cap_start(theta0), S, target=math.pi * math.sin(theta0), target_tol=1e-2)
    return rep


def reproduce_hyperbolic(n=200, seed=0, solve=True) -> ExperimentReport:
    rep = ExperimentReport("reproduce-hyperbolic", seed, inputs={"n": n, "ymin": 1.0, "ymax": 2.0})
    S = hyperbolic_strip(1.0, 2.0)
    rows = []
    for i, z in enumerate([(0.3, 3.0), (0.3, 0.5), (-1.2, 2.7), (2.0, 0.8), (0.0, 5.0)]):
        res = project(S, z, seed=seed + i)
        y = z[1]
        expect = (z[0], 2.0) if y > 2 else (z[0], 1.0)
        dist = math.log(y / 2.0) if y > 2 else math.log(1.0 / y)
        err = float(np.max(np.abs(res.point - expect)))
        rows.append({"z": list(z), "point": res.point, "dist": res.dist, "expected": list(expect),
                     "expected_dist": dist, "unique": res.unique})
        rep.check(f"project_{z[0]:g}_{z[1]:g}_point", err, "<=", 0.0, 1e-6)
        rep.check(f"project_{z[0]:g}_{z[1]:g}_dist", res.dist, "~", dist, 1e-8)
    rep.tables["projections"] = rows

    gamma = sc.hyperbolic_gamma(n)
    A = cv.accelerations(gamma)
    err = float(np.max(np.abs(A[1:-1] - [0.0, 2.0])))
    res = cv.necessary_condition_residual(gamma, S)
    rep.outputs["accel_mean"] = np.mean(A[1:-1], axis=0)
    rep.check("accel_gamma_max_error", err, "<=", 0.0, 5e-3)
    rep.check("residual_gamma", res.max, "<=", 0.0, 1e-4)
    if solve:
        curve, sol = _solve_into(rep, sc.hyperbolic_start(), S)
        M = curve.manifold
        worst_tan, worst_dir = 0.0, math.inf
        acc = cv.accelerations(cv.reparametrize_arclength(curve))
        for i in range(1, curve.n_nodes - 1):
            p = curve.points[i]
            if abs(float(S.psi_value(p))) <= 1e-7:
                nu = S.unit_normal(p)
                worst_dir = min(worst_dir, float(M.metric(p, acc[i], nu)))
                tang = acc[i] - float(M.metric(p, acc[i], nu)) * nu
                worst_tan = max(worst_tan, float(M.norm(p, tang)))
        rep.check("solver_boundary_accel_outward", worst_dir, ">=", 0.0, sol.tol_stat)
        rep.check("solver_boundary_accel_tangential", worst_tan, "<=", 0.0, sol.tol_stat)
    return rep


def reproduce_comb(Ns=(5, 10, 20, 50), grid_radius=0.2, grid_n=200, seed=0) -> ExperimentReport:
    rep = ExperimentReport("reproduce-comb", seed,
                           inputs={"N": list(Ns), "x": [0.0, 0.5], "grid_radius": grid_radius, "grid_n": grid_n})
    reach = []
    for N in Ns:
        r = estimate_reach(CombSet(N), [0.0, 0.5], grid_radius, grid_n)
        reach.append(r)
    rep.tables["reach"] = [{"N": N, "reach": r, "tooth_gap_half": 0.5 / N} for N, r in zip(Ns, reach)]
    for k in range(1, len(reach)):
        rep.check(f"reach_decreases_N{Ns[k]}", reach[k], "<", reach[k - 1])
    rep.check("reach_last_below_half_gap", reach[-1], "<=", 0.5 / Ns[-1], grid_radius / grid_n)
    disk = euclidean_disk_complement(1.0)
    res = project(disk, [0.0, 0.0], seed=seed)
    spread = max((float(np.linalg.norm(a - b)) for a in res.minimizers for b in res.minimizers), default=0.0)
    rep.outputs.update(disk_minimizers=res.minimizers, disk_unique=res.unique)
    rep.check("disk_origin_ambiguous", res.unique, "is", False)
    rep.check("disk_origin_minimizers", len(res.minimizers), ">=", 2, 0)
    rep.check("disk_origin_spread", spread, ">", 0.5)
    return rep


def _solve_into(rep, start, pset, target=None, target_tol=None, **opts):
    curve, sol = cv.minimize_curve(start, pset, **opts)
    steps = np.diff(sol.lengths)
    rep.outputs["solver"] = sol.to_dict()
    rep.check("solver_converged", sol.converged, "is", True)
    rep.check("solver_residual", sol.residual_max, "<=", sol.tol_stat, 0.0)
    rep.check("solver_length_monotone", float(steps.max()) if len(steps) else 0.0, "<=", 0.0, 1e-10)
    if target is not None:
        rep.check("solver_final_length", sol.lengths[-1], "~", target, target_tol)
    return curve, sol


# check suites ----------------------------------------------------------------------

def check_cones(seed=0, n=1000) -> ExperimentReport:
    rep = ExperimentReport("check-cones", seed, inputs={"n": n})
    rng = np.random.default_rng(seed)
    M = Sphere2()
    x = np.array([SPHERE_CAP_THETA0, 0.3])
    g = M.metric_tensor(x)
    gen = np.array([0.7, -0.4])
    for kind in ConeKind:
        c = Cone.of(kind, M, x, gen if kind not in (ConeKind.ZERO, ConeKind.FULL) else None)
        rep.check(f"involution_{kind.value}", c.polar().polar() == c, "is", True)
        C, P = c, c.polar()
        u = C.sample(rng, n)
        w = P.sample(rng, n)
        nu = np.maximum(C.norm(u), 1e-300)[:, None]
        nw = np.maximum(P.norm(w), 1e-300)[:, None]
        worst = float(np.max(C.inner((u / nu)[:, None, :], (w / nw)[None, :, :])))
        rep.check(f"polar_pairs_{kind.value}", worst, "<=", 0.0, 1e-12)
        v = rng.standard_normal((n, 2))
        p = C.project(v)
        q = C.sample(rng, n)
        var = float(np.max(np.einsum("ij,jk,ik->i", v - p, g, q - p)))
        rep.check(f"projection_variational_{kind.value}", var, "<=", 0.0, 1e-12)
        hom = float(np.max(np.abs(C.project(2.5 * v) - 2.5 * p)))
        rep.check(f"projection_homogeneous_{kind.value}", hom, "<=", 0.0, 1e-12)

    for pset in (sphere_cap(), hyperbolic_strip(), euclidean_disk_complement()):
        xs = boundary_points(pset, rng, 3)
        worst = 0
        split = True
        for xb in xs:
            chk = tangent_intersection_check(pset, xb, n_dirs=n, seed=seed)
            worst += len(chk.counterexamples)
            split &= normal_cones_split(pset, xb, seed=seed)
        name = pset.name.split(":")[0]
        rep.check(f"tangent_intersection_{name}", worst, "<=", 0, 0)
        rep.check(f"normal_cones_split_{name}", split, "is", True)
    return rep


def check_ddp(pset: ProxSet, n=50, seed=0, tol=1e-4) -> ExperimentReport:
    rep = ExperimentReport("check-ddp", seed, inputs={"set": pset.name, "n": n})
    rng = np.random.default_rng(seed)
    M = pset.manifold
    xs = boundary_points(pset, rng, n)
    rows = []
    worst = 0.0
    for i, x in enumerate(xs):
        v = unit_vectors(M, x, rng, 1)[0]
        dd = directional_derivative(pset, x, v, seed=seed + i)
        ref = cone_project(bouligand_tangent_cone(pset, x), v)
        err = float(M.norm(x, dd - ref))
        worst = max(worst, err)
        rows.append({"x": x, "v": v, "derivative": dd, "cone_projection": ref, "error": err})
    rep.tables["samples"] = rows
    rep.outputs["max_error"] = worst
    rep.check("ddp_max_error", worst, "<=", 0.0, tol)
    return rep


def check_hess(M: Manifold, n=100, seed=0, tol=1e-6) -> ExperimentReport:
    rep = ExperimentReport("check-hess", seed, inputs={"manifold": repr(M), "n": n, "k0": M.k0})
    rng = np.random.default_rng(seed)
    margins = []
    rows = []
    while len(margins) < n:
        c = _random_point(M, rng)
        rad = min(M.hessian_radius(c), 3.0)
        u = unit_vectors(M, c, rng, 1)[0]
        z = M.exp(c, 0.95 * rad * rng.random() * u)
        if not M.in_chart(z) or float(M.distance(c, z)) >= 0.95 * rad:
            continue
        w = unit_vectors(M, z, rng, 1)[0] * (0.5 + rng.random())
        d = float(M.distance(c, z))
        h = M.hessian_dist_sq(c, z, w)
        bound = M.hessian_lower_bound(d) * float(M.norm(z, w)) ** 2
        margins.append(h - bound)
        rows.append({"center": c, "z": z, "w": w, "d": d, "hessian": h, "bound": bound})
    rep.tables["samples"] = rows
    rep.outputs["min_margin"] = min(margins)
    rep.check("hess_min_margin", min(margins), ">=", 0.0, tol)
    return rep


def _random_point(M: Manifold, rng):
    if M.kind == "sphere2":
        return np.array([0.3 + (math.pi - 0.6) * rng.random(), -2.5 + 5 * rng.random()])
    if M.kind == "hyperbolic2":
        return np.array([-2 + 4 * rng.random(), math.exp(-1 + 2 * rng.random())])
    return rng.uniform(-2, 2, M.dim)


def check_lip(pset: ProxSet, n=50, seed=0) -> ExperimentReport:
    rep = ExperimentReport("check-lip", seed, inputs={"set": pset.name, "n_pairs": n})
    rng = np.random.default_rng(seed)
    M = pset.manifold
    x = boundary_points(pset, rng, 1)[0]
    rho = estimate_phi(pset, x, seed=seed)
    rbar = estimate_reach(pset, x, grid_radius=0.5, grid_n=5, seed=seed, m_start=4)
    R = min(M.convexity_radius(x), 10.0)
    r, sigma = lipschitz_ball(R, rbar, rho, M.k0)
    L = lipschitz_estimate(pset, x, r, n_pairs=n, seed=seed)
    rep.outputs.update(x=x, rho_hat=rho, reach_hat=rbar, radius=r, sigma=sigma, lipschitz=L)
    rep.check("sigma_positive", sigma, ">", 0.0)
    rep.check("lipschitz_finite", bool(np.isfinite(L)), "is", True)
    if pset.name.startswith("euclidean-halfplane"):
        rep.check("lipschitz_nonexpansive", L, "<=", 1.0, 1e-9)
    return rep


def check_shapiro(seed=0) -> ExperimentReport:
    rep = ExperimentReport("check-shapiro", seed)
    xs = np.linspace(-1, 1, 401)[:, None]
    f = ShapiroProblem(lambda p: p[:, 0] ** 2, xs, np.array([0.0]))
    same = shapiro_check(f, f)
    rep.outputs["identical"] = same.to_dict()
    rep.check("identical_actual_le_bound", same.actual, "<=", same.bound, 1e-12)
    rep.check("identical_kappa", same.kappa, "~", 0.0, 1e-12)

    g = ShapiroProblem(lambda p: (p[:, 0] - 0.1) ** 2, xs, np.array([0.1]))
    one = shapiro_check(f, g)
    rep.outputs["shifted_parabola"] = one.to_dict()
    rep.check("shifted_actual", one.actual, "~", 0.1, 1e-12)
    rep.check("shifted_actual_le_bound", one.actual, "<=", one.bound, 1e-12)

    S = sphere_cap()
    rng = np.random.default_rng(seed)
    worst = -math.inf
    rows = []
    for i in range(5):
        x = boundary_points(S, rng, 1)[0]
        v = unit_vectors(S.manifold, x, rng, 1)[0]
        first, second, W = ddp_problem_pair(S, x, v, t=0.01, seed=seed + i)
        r = shapiro_check(first, second, W, alpha=1.0)
        rows.append({"x": x, "v": v, **r.to_dict()})
        worst = max(worst, r.actual - r.bound)
    rep.tables["ddp_pairs"] = rows
    rep.check("ddp_pairs_actual_le_bound", worst, "<=", 0.0, 1e-12)
    return rep


def proper_field(curve: cv.DiscreteCurve, pset: ProxSet, rng, inward=0.5) -> np.ndarray:
    """Random smooth variation field vanishing at the endpoints, scaled to sup-norm 1.

    At boundary nodes the normal part points strictly inward, so the field
    lies in the tangent cone but off the boundary's tangent space.
    """
    M = curve.manifold
    s = (curve.times - curve.times[0]) / (curve.times[-1] - curve.times[0])
    env = np.sin(math.pi * s)
    coef = []
    for _ in range(M.dim):
        a = rng.standard_normal(3) / np.arange(1, 4)
        coef.append(sum(a[k] * np.sin((k + 1) * math.pi * s) for k in range(3)))
    coef = np.array(coef).T
    out = np.zeros_like(curve.points)
    for i, p in enumerate(curve.points):
        E = M.orthonormal_frame(p)
        v = E @ coef[i]
        if pset.classify(p).value == "boundary":
            nu = pset.unit_normal(p)
            v = v - float(M.metric(p, v, nu)) * nu - (inward + abs(coef[i, 0])) * env[i] * nu
        out[i] = v
    out[0] = out[-1] = 0.0
    return out / float(np.max(M.norm(curve.points, out)))


def check_variation(n=20, seed=0, s=1e-4) -> ExperimentReport:
    rep = ExperimentReport("check-variation", seed, inputs={"n": n, "s": s})
    rng = np.random.default_rng(seed)
    cases = [("sphere-gamma", sc.sphere_cap_gamma(n=200), sphere_cap()),
             ("sphere-alpha", sc.sphere_cap_alpha(n=200), sphere_cap()),
             ("hyperbolic-gamma", sc.hyperbolic_gamma(n=200), hyperbolic_strip())]
    rows = []
    worst = 0.0
    for k in range(n):
        name, curve, S = cases[k % len(cases)]
        V = proper_field(curve, S, rng)
        bad = cv.check_variation_field(curve, V, S)
        fv = cv.first_variation(curve, V)
        moved = cv.variation_apply(curve, V, s, S)
        fd = (cv.length(moved) - cv.length(curve)) / s
        err = abs(fv - fd)
        worst = max(worst, err)
        rows.append({"curve": name, "first_variation": fv, "finite_difference": fd, "error": err,
                     "bad_nodes": len(bad)})
    rep.tables["variations"] = rows
    rep.check("first_variation_vs_fd", worst, "<=", 0.0, 1e-3)
    rep.check("fields_admissible", sum(r["bad_nodes"] for r in rows), "<=", 0, 0)
    return rep


def safe_project(pset, z, **opts):
    res = project(pset, z, **opts)
    if not res.unique:
        raise AmbiguousProjectionError(f"ambiguous projection at {np.asarray(z).tolist()}")
    return res


def cone_report(pset: ProxSet, x, seed=0) -> ExperimentReport:
    rep = ExperimentReport("cones", seed, inputs={"set": pset.name, "point": np.asarray(x, float)})
    where = pset.classify(x)
    normal = proximal_normal_cone(pset, x)
    tangent = bouligand_tangent_cone(pset, x)
    rep.outputs.update(classification=where.value, normal_cone=normal.to_dict(),
                       tangent_cone=tangent.to_dict())
    rep.check("tangent_is_polar_of_normal", tangent.polar() == normal, "is", True)
    return rep


def sample_exterior(pset: ProxSet, rng, n):
    """Exterior points inside the unique-projection region of each builtin set."""
    name = pset.name.split(":")[0]
    u, w = rng.random(n), rng.random(n)
    if name == "sphere-cap":
        th = pset.params["theta0"]
        return np.column_stack([th + 0.02 + 0.5 * u, -2.5 + 5 * w])
    if name == "hyperbolic-strip":
        lo, hi = pset.params["ymin"], pset.params["ymax"]
        y = np.where(rng.random(n) < 0.5, hi * (1.02 + 1.5 * u), lo * (0.3 + 0.65 * u))
        return np.column_stack([-2 + 4 * w, y])
    if name == "euclidean-halfplane":
        return np.column_stack([-2 + 4 * w, 0.02 + 2 * u])
    if name == "euclidean-line":
        return np.column_stack([-2 + 4 * w, np.where(u < 0.5, -1, 1) * (0.02 + 2 * rng.random(n))])
    if name == "euclidean-disk-complement":
        a = 2 * math.pi * w
        rad = pset.params["r"] * (0.2 + 0.75 * u)
        return np.column_stack([rad * np.cos(a), rad * np.sin(a)])
    raise PreconditionError(f"no exterior sampler for {pset.name}")


__all__ = [
    "boundary_points", "check_cones", "check_ddp", "check_hess", "check_lip", "check_shapiro",
    "check_variation", "cone_report", "proper_field", "reproduce_comb", "reproduce_hyperbolic",
    "reproduce_sphere", "sample_exterior", "safe_project",
]
