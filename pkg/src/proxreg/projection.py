"""Metric projection onto sets given by a boundary submersion, and its diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .cones import Cone
from .errors import (
    AmbiguousProjectionError,
    ConvergenceError,
    PreconditionError,
    QuadraticGrowthError,
)
from .sets import ProxSet, bouligand_tangent_cone

log = logging.getLogger(__name__)

M_START = 8


@dataclass
class ProjectionResult:
    point: np.ndarray
    dist: float
    unique: bool
    minimizers: list
    iterations: int
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "point": [float(c) for c in self.point],
            "dist": float(self.dist),
            "unique": bool(self.unique),
            "iterations": int(self.iterations),
        }
        if not self.unique:
            out["minimizers"] = [[float(c) for c in m] for m in self.minimizers]
        out.update(self.extra)
        return out


def cone_project(cone: Cone, v, at=None):
    """Nearest point of a closed convex cone to ``v`` (closed form per cone shape)."""
    return cone.project(v, at)


def _to_boundary(pset: ProxSet, p, max_iter=60):
    """Newton iterations along the metric gradient onto ``psi = 0``; None on failure."""
    M = pset.manifold
    p = np.array(p, dtype=float)
    for _ in range(max_iter):
        val = float(pset.psi_value(p))
        grad = pset.gradient(p)
        g2 = float(M.metric(p, grad, grad))
        if not g2 > 1e-28:
            return None
        step = (-val / g2) * grad
        lam = 1.0
        while not M.in_chart(p + lam * step):
            lam *= 0.5
            if lam < 1e-8:
                return None
        p = p + lam * step
        if lam == 1.0 and np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(p)):
            return p
    if abs(float(pset.psi_value(p))) <= pset.tol_bd(p):
        return p
    return None


def _descend(pset: ProxSet, z, p, max_iter):
    """Projected Riemannian gradient descent of ``d(z, .)^2`` on the boundary.

    Barzilai-Borwein trial steps with Armijo backtracking; the retraction is a
    chart step followed by Newton back onto the boundary.
    """
    M = pset.manifold

    def f(q):
        return float(M.distance(z, q)) ** 2

    def tangential_grad(q):
        g = -2.0 * M.log(q, z)
        nu = pset.unit_normal(q)
        return g - float(M.metric(q, g, nu)) * nu

    fp = f(p)
    gt = tangential_grad(p)
    alpha = 0.5
    it = 0
    for it in range(1, max_iter + 1):
        gnorm = float(M.norm(p, gt))
        if gnorm <= 1e-11 * (1.0 + math.sqrt(fp)):
            return p, fp, it - 1, True
        a = alpha
        q = None
        for _ in range(50):
            trial = p - a * gt
            if M.in_chart(trial):
                trial = _to_boundary(pset, trial)
                if trial is not None:
                    fq = f(trial)
                    if fq <= fp - 1e-4 * a * gnorm**2 + 1e-15 * (1.0 + fp):
                        q = trial
                        break
            a *= 0.5
        if q is None:
            return p, fp, it, gnorm <= 1e-7 * (1.0 + math.sqrt(fp))
        gq = tangential_grad(q)
        s, y = q - p, gq - gt
        sy = float(M.metric(q, s, y))
        alpha = float(M.metric(q, s, s)) / sy if sy > 0 else 0.5
        alpha = min(max(alpha, 1e-4), 1e4)
        p, fp, gt = q, fq, gq
    return p, fp, it, False


def project(pset: ProxSet, z, m_start=M_START, max_iter=500, seed=0, center=None, radius=None,
            tie_tol=None) -> ProjectionResult:
    """Metric projection of ``z`` onto ``pset``.

    Points of the set project to themselves.  For an exterior point the
    minimizer lies on the boundary, so ``d(z, .)^2`` is minimized over
    ``psi = 0`` from ``m_start`` starts: ``z`` itself and perturbations of
    radius ``0.1 d(z, b0)`` where ``b0`` is the first boundary point found.
    The result is unique when all converged global minimizers agree within
    ``1e-6 * max(dist, 1)``.
    """
    M = pset.manifold
    z = M.check_point(z)
    if center is not None and radius is not None and float(M.distance(center, z)) >= radius:
        raise PreconditionError(f"z lies outside the working ball of radius {radius:g}")
    if float(pset.psi_value(z)) <= pset.tol_bd(z) and pset.solid:
        return ProjectionResult(z.copy(), 0.0, True, [z.copy()], 0)
    if not pset.solid and abs(float(pset.psi_value(z))) <= pset.tol_bd(z):
        return ProjectionResult(z.copy(), 0.0, True, [z.copy()], 0)

    rng = np.random.default_rng(seed)
    E = M.orthonormal_frame(z)
    starts = []
    b0 = _to_boundary(pset, z)
    if b0 is not None:
        starts.append(b0)
        rad = 0.1 * float(M.distance(z, b0))
    else:
        rad = 0.1
    rad = rad if rad > 0 else 1e-3
    for _ in range(m_start - len(starts)):
        u = rng.standard_normal(M.dim)
        u = rad * u / np.linalg.norm(u)
        p0 = M.exp(z, E @ u)
        if not M.in_chart(p0):
            continue
        b = _to_boundary(pset, p0)
        if b is not None:
            starts.append(b)
    if not starts:
        raise ConvergenceError("every projection start failed to reach the boundary")

    found = []
    total = 0
    for p0 in starts:
        p, fp, its, ok = _descend(pset, z, p0, max_iter)
        total += its
        if ok:
            found.append((math.sqrt(fp), p, its))
    if not found:
        raise ConvergenceError(f"projection did not converge within {max_iter} iterations")

    dmin = min(d for d, _, _ in found)
    tie = tie_tol if tie_tol is not None else 1e-9 * (1.0 + dmin)
    best = [(d, p, its) for d, p, its in found if d <= dmin + tie]
    tol_unique = 1e-6 * max(dmin, 1.0)
    points = sorted((p for _, p, _ in best), key=lambda q: tuple(q))
    distinct = []
    for q in points:
        if all(float(M.distance(q, r)) > tol_unique for r in distinct):
            distinct.append(q)
    d0, p_best, its_best = min(best, key=lambda item: item[0])
    return ProjectionResult(p_best, float(M.distance(z, p_best)), len(distinct) == 1, distinct, its_best)


def directional_derivative(pset: ProxSet, x, v, t0=1e-2, halvings=6, m_start=2, seed=0,
                           max_extra=14):
    """Richardson-extrapolated limit of ``log_x(P_S(exp_x(t v))) / t`` as ``t -> 0+``.

    The step sequence is halved until the last three trial points agree on
    being inside or outside the set, so the extrapolation never straddles a
    change of regime.
    """
    M = pset.manifold
    x = M.check_point(x)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return np.zeros_like(v)
    ts, vals, inside = [], [], []

    def sample(t):
        z = M.exp(x, t * v)
        res = project(pset, z, m_start=m_start, seed=seed)
        if not res.unique:
            raise AmbiguousProjectionError(f"projection ambiguous at t={t:g}")
        ts.append(t)
        vals.append(M.log(x, res.point) / t)
        inside.append(res.dist == 0.0)

    t = t0
    for _ in range(halvings):
        sample(t)
        t *= 0.5
    extra = 0
    while len(set(inside[-3:])) > 1 and extra < max_extra:
        sample(t)
        t *= 0.5
        extra += 1
    rich = [2 * vals[k + 1] - vals[k] for k in range(len(vals) - 1)]
    spread = float(M.norm(x, rich[-1] - rich[-2]))
    if spread > 1e-3 * (1.0 + float(M.norm(x, v))):
        raise ConvergenceError(f"directional derivative extrapolation did not settle (spread {spread:.3g})")
    return rich[-1]


def lipschitz_estimate(pset: ProxSet, center, radius, n_pairs=50, seed=0, m_start=4) -> float:
    """Largest sampled ratio ``d(P z1, P z2) / d(z1, z2)`` over pairs in ``B(center, radius)``."""
    from .sets import sample_ball

    M = pset.manifold
    rng = np.random.default_rng(seed)
    pts = sample_ball(M, center, radius, 2 * n_pairs, rng)
    proj = []
    for i, z in enumerate(pts):
        res = project(pset, z, m_start=m_start, seed=seed + i)
        if not res.unique:
            raise AmbiguousProjectionError(f"ambiguous projection at {z.tolist()}: ball exceeds Unp(S)")
        proj.append(res.point)
    proj = np.array(proj)
    a, b = slice(0, None, 2), slice(1, None, 2)
    den = M.distance(pts[a], pts[b])
    num = M.distance(proj[a], proj[b])
    good = den > 1e-12
    return float(np.max(num[good] / den[good])) if np.any(good) else 0.0


def two_t_cot_root() -> float:
    """Root of ``2 t cot t = 1`` on ``(0, pi/2)``."""
    return brentq(lambda t: 2 * t / math.tan(t) - 1.0, 0.5, 1.5, xtol=1e-15)


def lipschitz_ball(R, rbar, rho, k0, shrink=0.99):
    """Radius ``r < min{R/2, rbar, 1/(4 rho), a/sqrt(k0)}`` and growth constant ``1/2 - 2 rho r``."""
    a = two_t_cot_root()
    caps = [R / 2, rbar]
    if rho > 0:
        caps.append(1 / (4 * rho))
    if k0 > 0:
        caps.append(a / math.sqrt(k0))
    r = shrink * min(caps)
    return r, 0.5 - 2 * rho * r


# Shapiro's stability estimate ------------------------------------------------------

@dataclass
class ShapiroProblem:
    """``min objective(x)`` over a feasible set represented by samples inside ``W``.

    ``objective`` maps an ``(m, n)`` array to ``(m,)`` values.  When given,
    ``dist_to_feasible`` returns exact distances to the feasible set; otherwise
    distances are taken to the nearest sample.
    """

    objective: Callable
    samples: np.ndarray
    minimizer: np.ndarray
    dist_to_feasible: Callable | None = None

    def distance_to(self, pts):
        pts = np.atleast_2d(pts)
        if self.dist_to_feasible is not None:
            return np.asarray(self.dist_to_feasible(pts), float)
        diff = pts[:, None, :] - self.samples[None, :, :]
        return np.linalg.norm(diff, axis=-1).min(axis=1)


@dataclass
class ShapiroReport:
    alpha: float
    kappa: float
    delta1: float
    delta2: float
    k1: float
    k2: float
    bound: float
    actual: float

    @property
    def ok(self) -> bool:
        return self.actual <= self.bound + 1e-12

    def to_dict(self):
        out = {k: float(getattr(self, k)) for k in
               ("alpha", "kappa", "delta1", "delta2", "k1", "k2", "bound", "actual")}
        out["ok"] = self.ok
        out["constants"] = "empirical maxima over sampled pairs"
        return out


def _lipschitz(fn, pts, chunk=512):
    vals = np.asarray(fn(pts), float)
    best = 0.0
    for s in range(0, len(pts), chunk):
        d = np.linalg.norm(pts[s:s + chunk, None, :] - pts[None, :, :], axis=-1)
        dv = np.abs(vals[s:s + chunk, None] - vals[None, :])
        mask = d > 1e-12
        if np.any(mask):
            best = max(best, float(np.max(dv[mask] / d[mask])))
    return best


def shapiro_check(first: ShapiroProblem, second: ShapiroProblem, w_samples=None, alpha=None) -> ShapiroReport:
    """Evaluate ``|x̄ - x0| <= kappa/alpha + 2 delta1 + alpha^(-1/2) (k1 delta1 + k2 delta2)^(1/2)``.

    Lipschitz constants are empirical maxima over pairs of ``w_samples``
    (default: both sample sets together).
    """
    x0 = np.asarray(first.minimizer, float)
    xbar = np.asarray(second.minimizer, float)
    W = np.vstack([first.samples, second.samples]) if w_samples is None else np.asarray(w_samples, float)

    f0 = float(first.objective(x0[None])[0])
    fs = np.asarray(first.objective(first.samples), float)
    r2 = np.sum((first.samples - x0) ** 2, axis=1)
    mask = r2 > 1e-24
    if alpha is None:
        if not np.any(mask):
            raise QuadraticGrowthError("no samples away from the minimizer")
        alpha = float(np.min((fs[mask] - f0) / r2[mask]))
        if not alpha > 0:
            raise QuadraticGrowthError(f"sampled growth constant {alpha:.3g} is not positive")
    elif np.any(fs[mask] < f0 + alpha * r2[mask] - 1e-12):
        raise QuadraticGrowthError(f"quadratic growth with alpha={alpha} fails on samples")

    kappa = _lipschitz(lambda p: second.objective(p) - first.objective(p), W)
    k1 = _lipschitz(first.objective, W)
    k2 = _lipschitz(second.objective, W)
    delta1 = float(np.max(first.distance_to(second.samples))) if len(second.samples) else 0.0
    delta2 = float(second.distance_to(x0[None])[0])
    bound = kappa / alpha + 2 * delta1 + alpha ** -0.5 * math.sqrt(k1 * delta1 + k2 * delta2)
    actual = float(np.linalg.norm(xbar - x0))
    return ShapiroReport(alpha, kappa, delta1, delta2, k1, k2, bound, actual)


def ddp_problem_pair(pset: ProxSet, x, v, t=0.01, n_grid=41, seed=0):
    """The two problems compared in the directional-derivative argument, in orthonormal
    tangent coordinates at ``x``: projecting ``t v`` onto ``T^B_S(x)`` and projecting
    ``exp_x(t v)`` onto ``S``, both restricted to ``W = B(0, 2 t |v|)``.
    """
    M = pset.manifold
    x = M.check_point(x)
    v = np.asarray(v, float)
    E = M.orthonormal_frame(x)
    Einv = np.linalg.inv(E)
    cone = bouligand_tangent_cone(pset, x)
    tv = Einv @ (t * v)
    rad = 2 * t * float(M.norm(x, v))
    ticks = np.linspace(-rad, rad, n_grid)
    grid = np.stack(np.meshgrid(*([ticks] * M.dim), indexing="ij"), axis=-1).reshape(-1, M.dim)
    grid = grid[np.linalg.norm(grid, axis=1) <= rad]
    vecs = grid @ E.T

    in_cone = cone.contains(vecs, 1e-12)
    target = M.exp(x, t * v)
    in_set = pset.contains(M.exp(x, vecs), tol=0.0)

    v_star = Einv @ cone.project(t * v)
    res = project(pset, target, seed=seed)
    v_bar = Einv @ M.log(x, res.point)

    first = ShapiroProblem(
        objective=lambda w: np.sum((w - tv) ** 2, axis=-1),
        samples=np.vstack([grid[in_cone], v_star[None]]),
        minimizer=v_star,
        dist_to_feasible=lambda w: cone.distance(w @ E.T),
    )
    second = ShapiroProblem(
        objective=lambda w: M.distance(M.exp(x, w @ E.T), target) ** 2,
        samples=np.vstack([grid[in_set], v_bar[None]]),
        minimizer=v_bar,
    )
    return first, second, grid
