"""Discrete admissible curves: length, covariant acceleration, first variation,
the normal-cone stationarity residual and a projected curve-shortening solver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import solve

from .cones import ConeKind
from .errors import ConvergenceError, InfeasibleVariationError, PreconditionError
from .manifolds import Manifold
from .sets import PointClass, ProxSet, proximal_normal_cone

log = logging.getLogger(__name__)


@dataclass
class DiscreteCurve:
    manifold: Manifold
    times: np.ndarray
    points: np.ndarray
    breakpoints: tuple[int, ...] = ()

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        self.breakpoints = tuple(sorted(int(b) for b in self.breakpoints))
        if self.points.ndim != 2 or self.points.shape != (len(self.times), self.manifold.dim):
            raise ValueError(f"points must have shape ({len(self.times)}, {self.manifold.dim})")
        if len(self.times) < 2 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing with at least two nodes")
        if any(b <= 0 or b >= len(self.times) - 1 for b in self.breakpoints):
            raise ValueError("breakpoints must be interior node indices")
        self.manifold.check_point(self.points)

    @property
    def n_nodes(self) -> int:
        return len(self.times)

    def with_points(self, points) -> "DiscreteCurve":
        return DiscreteCurve(self.manifold, self.times.copy(), points, self.breakpoints)

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "points": self.points.tolist(),
            "breakpoints": list(self.breakpoints),
        }

    @classmethod
    def from_dict(cls, manifold: Manifold, data: dict) -> "DiscreteCurve":
        return cls(manifold, data["times"], data["points"], data.get("breakpoints", ()))

    def pieces(self):
        """Index ranges ``(start, stop)`` (inclusive) of the smooth pieces."""
        cuts = [0, *self.breakpoints, self.n_nodes - 1]
        return list(zip(cuts[:-1], cuts[1:]))


def check_admissible(curve: DiscreteCurve, pset: ProxSet) -> None:
    """Raise if a node is outside the set or two consecutive nodes coincide."""
    M = curve.manifold
    for i, p in enumerate(curve.points):
        if float(pset.psi_value(p)) > pset.tol_bd(p):
            raise PreconditionError(f"node {i} at {p.tolist()} is outside {pset.name}")
    seg = M.distance(curve.points[:-1], curve.points[1:])
    if np.any(seg <= 0):
        raise PreconditionError("consecutive nodes coincide; the curve is not regular")
    if np.any(seg >= M.convexity_radius(curve.points[0])):
        raise PreconditionError("consecutive nodes do not share a convex ball")


def length(curve: DiscreteCurve) -> float:
    """Sum of geodesic distances between consecutive nodes."""
    return float(np.sum(curve.manifold.distance(curve.points[:-1], curve.points[1:])))


def energy(curve: DiscreteCurve) -> float:
    d = curve.manifold.distance(curve.points[:-1], curve.points[1:])
    return float(np.sum(d**2 / (2.0 * np.diff(curve.times))))


def _fd_weights(nodes, t0, order):
    """Finite-difference weights for the ``order``-th derivative at ``t0`` from ``nodes``."""
    h = np.asarray(nodes, float) - t0
    k = len(h)
    V = np.vander(h, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[order] = np.prod(np.arange(1, order + 1))
    return np.linalg.solve(V, rhs)


def _derivs(curve: DiscreteCurve, i: int, lo: int, hi: int):
    """Chart velocity and acceleration at node ``i`` from nodes inside ``[lo, hi]``."""
    ts, ps = curve.times, curve.points
    if lo < i < hi:
        idx = [i - 1, i, i + 1]
        idx2 = idx
    elif i == lo:
        idx = list(range(i, min(i + 3, hi + 1)))
        idx2 = list(range(i, min(i + 4, hi + 1)))
    else:
        idx = list(range(max(i - 2, lo), i + 1))
        idx2 = list(range(max(i - 3, lo), i + 1))
    if len(idx) < 2:
        raise PreconditionError(f"not enough nodes around {i}")
    vel = _fd_weights(ts[idx], ts[i], 1) @ ps[idx]
    acc = _fd_weights(ts[idx2], ts[i], 2) @ ps[idx2] if len(idx2) >= 3 else np.zeros_like(vel)
    return vel, acc


def _covariant(M: Manifold, p, vel, acc):
    return acc + np.einsum("kij,i,j->k", M.christoffel(p), vel, vel)


def covariant_accel(curve: DiscreteCurve, i: int) -> np.ndarray:
    """``D_t gamma'`` at interior node ``i``: central differences plus the Christoffel term."""
    if i <= 0 or i >= curve.n_nodes - 1:
        raise PreconditionError("covariant acceleration needs an interior node")
    if i in curve.breakpoints:
        raise PreconditionError(f"node {i} is a breakpoint")
    vel, acc = _derivs(curve, i, i - 1, i + 1)
    return _covariant(curve.manifold, curve.points[i], vel, acc)


def accelerations(curve: DiscreteCurve) -> np.ndarray:
    """Covariant accelerations at every node; NaN at endpoints and breakpoints."""
    out = np.full(curve.points.shape, np.nan)
    skip = set(curve.breakpoints)
    for i in range(1, curve.n_nodes - 1):
        if i not in skip:
            out[i] = covariant_accel(curve, i)
    return out


@dataclass
class Residual:
    values: np.ndarray
    max: float
    tol_stat: float
    skipped: list = field(default_factory=list)
    classes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "max": float(self.max),
            "tol_stat": float(self.tol_stat),
            "skipped": list(self.skipped),
            "values": [None if np.isnan(v) else float(v) for v in self.values],
        }


def necessary_condition_residual(curve: DiscreteCurve, pset: ProxSet) -> Residual:
    """Distance of ``D_t gamma'`` from the proximal normal cone, node by node.

    The condition concerns unit-speed curves, so the curve is first
    reparametrized by arc length; uneven node spacing then does not show up as
    tangential acceleration.  Endpoints and declared breakpoints are skipped.
    Nodes within noise of the boundary but technically outside are treated as
    boundary nodes.
    """
    curve = reparametrize_arclength(curve)
    M = curve.manifold
    A = accelerations(curve)
    vals = np.full(curve.n_nodes, np.nan)
    classes = []
    norms = []
    for i, p in enumerate(curve.points):
        where = pset.classify(p)
        classes.append(where.value)
        if np.isnan(A[i, 0]):
            continue
        if where is PointClass.EXTERIOR:
            cone = _boundary_cone(pset, p)
        else:
            cone = proximal_normal_cone(pset, p)
        vals[i] = float(M.norm(p, A[i] - cone.project(A[i])))
        norms.append(float(M.norm(p, A[i])))
    skipped = [i for i in range(curve.n_nodes) if np.isnan(vals[i])]
    tol_stat = 1e-5 * (1.0 + (float(np.mean(norms)) if norms else 0.0))
    mx = float(np.nanmax(vals)) if len(skipped) < curve.n_nodes else 0.0
    return Residual(vals, mx, tol_stat, skipped, classes)


def _boundary_cone(pset, p):
    from .cones import Cone

    kind = ConeKind.RAY if pset.solid else ConeKind.LINE
    return Cone.of(kind, pset.manifold, p, pset.unit_normal(p))


def reparametrize_arclength(curve: DiscreteCurve) -> DiscreteCurve:
    """Times from chart chords measured in the midpoint metric.

    This is the length of the chart-linear interpolant, which is what the
    finite-difference stencils differentiate. Geodesic chords would leave an
    O(h^2) tangential acceleration on non-geodesic boundary arcs.
    """
    P = curve.points
    seg = curve.manifold.norm(0.5 * (P[:-1] + P[1:]), np.diff(P, axis=0))
    times = np.concatenate([[0.0], np.cumsum(seg)])
    return DiscreteCurve(curve.manifold, times, curve.points.copy(), curve.breakpoints)


def velocity_jumps(curve: DiscreteCurve) -> dict[int, np.ndarray]:
    """``gamma'(a+) - gamma'(a-)`` at each breakpoint (one-sided differences)."""
    out = {}
    pieces = curve.pieces()
    for k, b in enumerate(curve.breakpoints):
        lo_left, _ = pieces[k]
        _, hi_right = pieces[k + 1]
        v_minus, _ = _derivs(curve, b, lo_left, b)
        v_plus, _ = _derivs(curve, b, b, hi_right)
        out[b] = v_plus - v_minus
    return out


def first_variation(curve: DiscreteCurve, field) -> float:
    """``dL/ds`` at ``s = 0`` for a variation with field ``V``.

    After reparametrizing by arc length: trapezoid rule for
    ``-∫ <V, D_t gamma'>`` on each smooth piece, minus ``<V(a_i), jump>`` at
    breakpoints, plus the endpoint terms ``<V, gamma'>|_a^b``.
    """
    c = reparametrize_arclength(curve)
    M = c.manifold
    V = np.asarray(field, dtype=float)
    if V.shape != c.points.shape:
        raise ValueError("field must have one vector per node")
    total = 0.0
    for lo, hi in c.pieces():
        idx = np.arange(lo, hi + 1)
        f = np.empty(len(idx))
        for k, i in enumerate(idx):
            vel, acc = _derivs(c, i, lo, hi)
            f[k] = -float(M.metric(c.points[i], V[i], _covariant(M, c.points[i], vel, acc)))
        total += float(trapezoid(f, c.times[idx]))
    for b, jump in velocity_jumps(c).items():
        total -= float(M.metric(c.points[b], V[b], jump))
    first, last = c.pieces()[0], c.pieces()[-1]
    v0, _ = _derivs(c, 0, first[0], first[1])
    v1, _ = _derivs(c, c.n_nodes - 1, last[0], last[1])
    total += float(M.metric(c.points[-1], V[-1], v1)) - float(M.metric(c.points[0], V[0], v0))
    return total


def variation_apply(curve: DiscreteCurve, field, s: float, pset: ProxSet | None = None) -> DiscreteCurve:
    """Nodes ``exp_{gamma(t_i)}(s V_i)``; with a set, every node must stay admissible."""
    M = curve.manifold
    V = np.asarray(field, dtype=float)
    pts = M.exp(curve.points, s * V)
    if not np.all(M.in_chart(pts)):
        raise InfeasibleVariationError("variation leaves the chart")
    if pset is not None:
        bad = [i for i, p in enumerate(pts) if float(pset.psi_value(p)) > pset.tol_bd(p)]
        if bad:
            raise InfeasibleVariationError(f"nodes {bad[:10]} leave {pset.name} at s={s:g}")
    return curve.with_points(pts)


def feasibility_horizon(curve: DiscreteCurve, field, pset: ProxSet, s_max=1.0, iters=40) -> float:
    """Largest ``s`` (by per-node bisection) such that each node stays in the set on ``[0, s]``.

    Feasibility along a node's path is sampled at the bisection points only.
    """
    M = curve.manifold
    V = np.asarray(field, dtype=float)
    best = s_max
    for p, v in zip(curve.points, V):
        if not np.any(v):
            continue

        def ok(s):
            q = M.exp(p, s * v)
            return bool(M.in_chart(q)) and float(pset.psi_value(q)) <= pset.tol_bd(q)

        if ok(best):
            continue
        lo, hi = 0.0, best
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        best = lo
    return best


def check_variation_field(curve: DiscreteCurve, field, pset: ProxSet, tol=1e-12) -> list[int]:
    """Boundary nodes whose vector is not in ``(T^B \\ T∂S) ∪ {0}``."""
    M = curve.manifold
    V = np.asarray(field, dtype=float)
    bad = []
    for i, (p, v) in enumerate(zip(curve.points, V)):
        if pset.classify(p) is not PointClass.BOUNDARY or float(M.norm(p, v)) <= tol:
            continue
        ip = float(M.metric(p, v, pset.unit_normal(p)))
        if ip >= -tol:
            bad.append(i)
    return bad


# solver ------------------------------------------------------------------------

@dataclass
class SolverReport:
    lengths: list
    energies: list
    residual_max: float
    tol_stat: float
    iterations: int
    status: str
    jumps: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self):
        return {
            "lengths": [float(v) for v in self.lengths],
            "energies": [float(v) for v in self.energies],
            "residual_max": float(self.residual_max),
            "tol_stat": float(self.tol_stat),
            "iterations": int(self.iterations),
            "status": self.status,
            "jumps": {str(k): float(v) for k, v in self.jumps.items()},
        }


def _sqrtm_spd(G):
    w, U = np.linalg.eigh(G)
    return (U * np.sqrt(w)) @ U.T


def _tangent_basis(M, p, nu):
    """Chart components of an orthonormal basis of the metric complement of ``nu``."""
    E = M.orthonormal_frame(p)
    c = E.T @ M.metric_tensor(p) @ nu
    c /= np.linalg.norm(c)
    Q, _ = np.linalg.qr(np.column_stack([c, np.eye(len(c))]))
    return E @ Q[:, 1:len(c)]


def _search_direction(curve, pset, cov, grads, active_tol):
    """Preconditioned descent step with boundary nodes that push outward held tangential."""
    M = curve.manifold
    P = curve.points
    m, n = len(P) - 2, M.dim
    dt = np.diff(curve.times)
    K = np.zeros((m, m))
    for k in range(m):
        K[k, k] = 1 / dt[k] + 1 / dt[k + 1]
        if k + 1 < m:
            K[k, k + 1] = K[k + 1, k] = -1 / dt[k + 1]
    S = np.array([_sqrtm_spd(M.metric_tensor(p)) for p in P[1:-1]])
    H = np.einsum("ij,iab,jbc->iajc", K, S, S).reshape(m * n, m * n)

    on_bd = np.array([abs(float(pset.psi_value(p))) <= active_tol for p in P[1:-1]])
    normals = {k: pset.unit_normal(P[k + 1]) for k in np.flatnonzero(on_bd)}
    active = {k for k, nu in normals.items() if float(M.metric(P[k + 1], -grads[k], nu)) > 0}
    for _ in range(6):
        cols = []
        for k in range(m):
            if k in active:
                T = _tangent_basis(M, P[k + 1], normals[k])
                for j in range(T.shape[1]):
                    col = np.zeros((m, n))
                    col[k] = T[:, j]
                    cols.append(col.ravel())
            else:
                for a in range(n):
                    col = np.zeros((m, n))
                    col[k, a] = 1.0
                    cols.append(col.ravel())
        B = np.array(cols).T
        y = solve(B.T @ H @ B, -(B.T @ cov.ravel()), assume_a="pos")
        delta = (B @ y).reshape(m, n)
        new = {k for k, nu in normals.items()
               if k not in active and float(M.metric(P[k + 1], delta[k], nu)) > 0}
        if not new:
            return delta
        active |= new
    return delta


def minimize_curve(initial: DiscreteCurve, pset: ProxSet, max_iter=200, tol_stat=None, step0=1.0,
                   min_step=1e-12):
    """Shorten a curve inside the set with endpoints fixed.

    Each iteration takes a preconditioned step on the discrete energy (interior
    nodes only, Jacobi-style from the previous iterate), projects any node that
    left the set back onto it and backtracks until the energy satisfies an
    Armijo condition along the projection arc and the length does not grow by
    more than 1e-10.  Stops when the stationarity residual drops below
    ``tol_stat``.

    Returns:
        ``(curve, SolverReport)``.
    """
    from .projection import project

    check_admissible(initial, pset)
    curve = initial
    M = curve.manifold
    dt = np.diff(curve.times)
    lengths = [length(curve)]
    energies = [energy(curve)]
    status = "max_iter"
    res = necessary_condition_residual(curve, pset)
    tol = tol_stat if tol_stat is not None else res.tol_stat
    it = 0
    for it in range(1, max_iter + 1):
        if res.max <= tol:
            status = "converged"
            it -= 1
            break
        P = curve.points
        grads = np.array([
            -(M.log(P[i], P[i + 1]) / dt[i] + M.log(P[i], P[i - 1]) / dt[i - 1])
            for i in range(1, len(P) - 1)
        ])
        G = M.metric_tensor(P[1:-1])
        cov = np.einsum("kab,kb->ka", G, grads)
        active_tol = 1e-7 * (1.0 + max(float(M.norm(p, pset.gradient(p))) for p in P[1:-1]))
        delta = _search_direction(curve, pset, cov, grads, active_tol)

        a = step0
        accepted = None
        while a >= min_step:
            Q = P.copy()
            Q[1:-1] += a * delta
            if np.all(M.in_chart(Q)):
                try:
                    for i in range(1, len(Q) - 1):
                        if float(pset.psi_value(Q[i])) > 0:
                            Q[i] = project(pset, Q[i], m_start=1).point
                except ConvergenceError:
                    Q = None
                if Q is not None:
                    cand = curve.with_points(Q)
                    e_new, l_new = energy(cand), length(cand)
                    decrease = min(0.0, float(np.sum(cov * (Q[1:-1] - P[1:-1]))))
                    if e_new <= energies[-1] + 1e-4 * decrease and l_new <= lengths[-1] + 1e-10:
                        accepted = (cand, e_new, l_new)
                        break
            a *= 0.5
        if accepted is None:
            status = "line_search_failed"
            break
        curve, e_new, l_new = accepted
        energies.append(e_new)
        lengths.append(l_new)
        res = necessary_condition_residual(curve, pset)
        log.debug("iter %d: step %.3g energy %.12g length %.12g residual %.3g", it, a, e_new, l_new, res.max)
    else:
        if res.max <= tol:
            status = "converged"
    jumps = {b: float(M.norm(curve.points[b], j)) for b, j in velocity_jumps(curve).items()}
    report = SolverReport(lengths, energies, res.max, tol, it, status, jumps)
    return curve, report
