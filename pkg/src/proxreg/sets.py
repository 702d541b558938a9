"""Prox-regular sets given by a boundary submersion, plus the comb space.

A :class:`ProxSet` is ``{psi <= 0}`` (solid) or ``{psi = 0}`` (thin) for a C^2
function ``psi`` on the chart.  Its proximal normal cone at a boundary point
is the ray (solid) or line (thin) spanned by the metric gradient of ``psi``,
and the Bouligand tangent cone is the polar of that.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cones import Cone, ConeKind
from .errors import ChartError, PreconditionError, SubmersionError
from .expr import PsiExpr
from .manifolds import Euclidean, Hyperbolic2, Manifold, Sphere2, manifold_from_config

SPHERE_CAP_THETA0 = 2 * math.pi / 3


class PointClass(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


@dataclass
class ProxSet:
    manifold: Manifold
    psi: PsiExpr
    solid: bool = True
    name: str = "custom"
    phi_bound: float | None = None
    params: dict = field(default_factory=dict)

    def __repr__(self):
        kind = "solid" if self.solid else "thin"
        return f"ProxSet({self.name!r}, {self.manifold!r}, psi={self.psi.source!r}, {kind})"

    def psi_value(self, x):
        return self.psi.value(x)

    def gradient(self, x):
        """Metric gradient of psi (inverse metric applied to the partials)."""
        return self.manifold.sharp(x, self.psi.gradient(x))

    def tol_bd(self, x) -> float:
        g = self.gradient(x)
        return 1e-9 * (1.0 + float(self.manifold.norm(x, g)))

    def unit_normal(self, x) -> np.ndarray:
        g = self.gradient(x)
        n = float(self.manifold.norm(x, g))
        if not n > 1e-14:
            raise SubmersionError(f"{self.name}: gradient of psi vanishes at {np.asarray(x).tolist()}")
        return g / n

    def classify(self, x) -> PointClass:
        x = self.manifold.check_point(x)
        val = float(self.psi_value(x))
        tol = self.tol_bd(x)
        if abs(val) <= tol:
            return PointClass.BOUNDARY
        if val < 0 and self.solid:
            return PointClass.INTERIOR
        return PointClass.EXTERIOR

    def contains(self, x, tol=None):
        """Vectorized membership test ``psi <= tol`` (``|psi| <= tol`` for thin sets)."""
        x = np.asarray(x, dtype=float)
        val = self.psi_value(x)
        if tol is None:
            tol = 1e-9
        ok = np.abs(val) <= tol if not self.solid else val <= tol
        return ok & self.manifold.in_chart(x)

    def complement(self) -> "ProxSet":
        """Closure of the complement, described by ``-psi``."""
        if not self.solid:
            raise PreconditionError("the complement of a thin set is not given by a submersion")
        return ProxSet(self.manifold, self.psi.negated(), True, f"complement({self.name})")


def classify(pset: ProxSet, x) -> PointClass:
    return pset.classify(x)


def proximal_normal_cone(pset: ProxSet, x) -> Cone:
    where = pset.classify(x)
    x = np.asarray(x, dtype=float)
    if where is PointClass.EXTERIOR:
        raise PreconditionError(f"{pset.name}: {x.tolist()} is not in the set")
    if where is PointClass.INTERIOR:
        return Cone.of(ConeKind.ZERO, pset.manifold, x)
    kind = ConeKind.RAY if pset.solid else ConeKind.LINE
    return Cone.of(kind, pset.manifold, x, pset.unit_normal(x))


def bouligand_tangent_cone(pset: ProxSet, x) -> Cone:
    return proximal_normal_cone(pset, x).polar()


def boundary_tangent_space(pset: ProxSet, x) -> Cone:
    """Tangent space of the boundary at ``x`` as a hyperplane cone."""
    return Cone.of(ConeKind.HYPERPLANE, pset.manifold, x, pset.unit_normal(x))


def polar(cone: Cone) -> Cone:
    return cone.polar()


def sample_ball(manifold: Manifold, x, radius, n, rng):
    """Points ``exp_x(u)`` with ``u`` uniform in the tangent ball of the given radius."""
    x = np.asarray(x, dtype=float)
    dim = manifold.dim
    E = manifold.orthonormal_frame(x)
    dirs = rng.standard_normal((n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rad = radius * rng.random(n) ** (1.0 / dim)
    u = (dirs * rad[:, None]) @ E.T
    y = manifold.exp(x, u)
    keep = manifold.in_chart(y)
    return y[keep]


@dataclass
class InequalityCheck:
    ok: bool
    worst_violation: float
    n_samples: int


def verify_proximal_inequality(pset: ProxSet, x, xi, sigma, n_samples=10_000, r_sample=0.3,
                               seed=0, tol=1e-12) -> InequalityCheck:
    """Sample ``y`` in ``S ∩ B(x, r)`` and check ``<xi, log_x y> <= sigma d(x, y)^2``."""
    M = pset.manifold
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    y = sample_ball(M, x, r_sample, n_samples, rng)
    y = y[pset.contains(y, tol=0.0)]
    if len(y) == 0:
        raise PreconditionError("no sampled point fell inside the set")
    lhs = M.metric(x, np.asarray(xi, float), M.log(x, y))
    excess = lhs - sigma * M.distance(x, y) ** 2
    worst = float(np.max(excess))
    return InequalityCheck(worst <= tol, worst, len(y))


def phi_defect(pset: ProxSet, x, y) -> float:
    """``d(log_x y, T^B_S(x)) / d(x, y)^2``."""
    M = pset.manifold
    d = float(M.distance(x, y))
    if d == 0.0:
        raise PreconditionError("phi_defect needs y != x")
    v = M.log(x, y)
    return float(bouligand_tangent_cone(pset, x).distance(v)) / d**2


def estimate_phi(pset: ProxSet, x, radius=0.3, n=4000, seed=0, n_boundary=400) -> float:
    """Empirical modulus: max of ``<nu, log_x y> / d(x, y)^2`` over unit normals nu and sampled y in S.

    The sup is typically attained on the boundary, so ``n_boundary`` of the
    samples are also pushed onto ``psi = 0`` by Newton steps.
    """
    from .projection import _to_boundary

    M = pset.manifold
    x = np.asarray(x, dtype=float)
    cone = proximal_normal_cone(pset, x)
    if cone.kind is ConeKind.ZERO:
        return 0.0
    rng = np.random.default_rng(seed)
    raw = sample_ball(M, x, radius, n, rng)
    pushed = [_to_boundary(pset, q) for q in raw[:n_boundary]]
    pushed = [q for q in pushed if q is not None and float(M.distance(x, q)) <= radius]
    y = raw[pset.contains(raw, tol=0.0)]
    if pushed:
        y = np.vstack([y, np.array(pushed)])
    d = M.distance(x, y)
    y, d = y[d > 0], d[d > 0]
    proj = M.metric(x, cone.generator, M.log(x, y))
    if cone.kind is ConeKind.LINE:
        proj = np.abs(proj)
    return float(max(0.0, np.max(proj / d**2))) if len(y) else 0.0


@dataclass
class IntersectionCheck:
    ok: bool
    n_checked: int
    counterexamples: list = field(default_factory=list)


def tangent_intersection_check(pset: ProxSet, x, n_dirs=1000, seed=0, tol=1e-10) -> IntersectionCheck:
    """Check ``T^B_S(x) ∩ T^B_Ŝ(x) = T_x∂S`` direction by direction.

    The two tangent cones come from the metric normals of ``psi`` and ``-psi``;
    membership in the boundary tangent space is decided independently, from the
    differential ``dpsi(v) = 0``.
    """
    if not pset.solid:
        raise PreconditionError("the complement of a thin set is not representable")
    M = pset.manifold
    x = np.asarray(x, dtype=float)
    if pset.classify(x) is not PointClass.BOUNDARY:
        raise PreconditionError("tangent_intersection_check needs a boundary point")
    t_s = bouligand_tangent_cone(pset, x)
    t_hat = bouligand_tangent_cone(pset.complement(), x)
    dpsi = pset.psi.gradient(x)
    dpsi_scale = float(M.norm(x, pset.gradient(x)))
    nu = pset.unit_normal(x)

    rng = np.random.default_rng(seed)
    E = M.orthonormal_frame(x)
    k = n_dirs // 3
    raw = rng.standard_normal((n_dirs, M.dim)) @ E.T
    raw /= M.norm(x, raw)[:, None]
    tangential = raw[k:2 * k] - M.metric(x, raw[k:2 * k], nu)[:, None] * nu
    nrm = M.norm(x, tangential)
    raw[k:2 * k] = tangential / np.where(nrm > 0, nrm, 1.0)[:, None]
    raw[2 * k] = nu
    raw[2 * k + 1] = -nu

    bad = []
    for v in raw:
        in_both = bool(t_s.contains(v, tol)) and bool(t_hat.contains(v, tol))
        in_tangent = abs(float(dpsi @ v)) <= tol * dpsi_scale * max(1.0, float(M.norm(x, v)))
        if in_both != in_tangent:
            bad.append(v.tolist())
    return IntersectionCheck(not bad, len(raw), bad)


def normal_cones_split(pset: ProxSet, x, n=1000, seed=0, tol=1e-12) -> bool:
    """``N_S(x) ∩ N_Ŝ(x) = {0}`` and ``N_S(x) ∪ N_Ŝ(x)`` is the normal line."""
    n_s = proximal_normal_cone(pset, x)
    n_hat = proximal_normal_cone(pset.complement(), x)
    line = Cone(ConeKind.LINE, n_s.base, n_s.gram, n_s.generator)
    rng = np.random.default_rng(seed)
    for v in line.sample(rng, n):
        a, b = bool(n_s.contains(v, tol)), bool(n_hat.contains(v, tol))
        zero = float(n_s.norm(v)) <= tol
        if not (a or b) or (a and b and not zero):
            return False
    return bool(n_s.contains(np.zeros(len(n_s.base))) and n_hat.contains(np.zeros(len(n_s.base))))


def check_solidity(pset: ProxSet, x, radius=1e-3, n=200, seed=0) -> bool:
    """True when a small ball around ``x`` contains sampled points with ``psi < 0``."""
    rng = np.random.default_rng(seed)
    y = sample_ball(pset.manifold, x, radius, n, rng)
    return bool(np.any(pset.psi_value(y) < 0))


# comb space -------------------------------------------------------------------

@dataclass
class CombSet:
    """Comb space with teeth at ``1/n`` for ``n <= N``, as a union of segments in the plane."""

    N: int
    manifold: Manifold = field(default_factory=lambda: Euclidean(2))
    name: str = "comb"

    def __post_init__(self):
        segs = [((0.0, 0.0), (1.0, 0.0)), ((0.0, 0.0), (0.0, 1.0))]
        segs += [((1.0 / n, 0.0), (1.0 / n, 1.0)) for n in range(1, self.N + 1)]
        arr = np.array(segs, dtype=float)
        self.seg_a = arr[:, 0]
        self.seg_b = arr[:, 1]

    def __repr__(self):
        return f"CombSet(N={self.N})"

    def nearest_on_segments(self, z):
        """Nearest point on each segment; returns points ``(..., k, 2)`` and distances ``(..., k)``."""
        z = np.asarray(z, dtype=float)[..., None, :]
        ab = self.seg_b - self.seg_a
        t = np.clip(np.sum((z - self.seg_a) * ab, axis=-1) / np.sum(ab * ab, axis=-1), 0.0, 1.0)
        pts = self.seg_a + t[..., None] * ab
        return pts, np.linalg.norm(pts - z, axis=-1)

    def contains(self, x, tol=1e-12):
        _, d = self.nearest_on_segments(x)
        return d.min(axis=-1) <= tol

    def ambiguous(self, z, tie_tol):
        """Vectorized near-tie test: a candidate within ``tie_tol`` of the best distance
        whose foot point lies farther than ``tie_tol`` from the best foot point."""
        pts, d = self.nearest_on_segments(z)
        best = np.argmin(d, axis=-1)
        dmin = np.take_along_axis(d, best[..., None], axis=-1)
        p0 = np.take_along_axis(pts, best[..., None, None], axis=-2)
        near = d <= dmin + tie_tol
        far = np.linalg.norm(pts - p0, axis=-1) > max(tie_tol, 1e-12)
        return np.any(near & far, axis=-1)

    def project(self, z, tie_tol=1e-9):
        from .projection import ProjectionResult

        z = np.asarray(z, dtype=float)
        pts, d = self.nearest_on_segments(z)
        dmin = float(d.min())
        cand = pts[d <= dmin + tie_tol]
        cand = _dedup(cand, max(tie_tol, 1e-12))
        order = np.argsort(d)
        gaps = [{"point": pts[i].tolist(), "dist": float(d[i])} for i in order[:4]]
        best = pts[int(np.argmin(d))]
        return ProjectionResult(best, dmin, len(cand) == 1,
                                [c for c in cand], 0, extra={"nearest_candidates": gaps})


def _dedup(points, tol):
    points = sorted((np.asarray(p, float) for p in points), key=lambda p: tuple(p))
    out = []
    for p in points:
        if all(np.linalg.norm(p - q) > tol for q in out):
            out.append(p)
    return out


# reach ------------------------------------------------------------------------

def estimate_reach(pset, x, grid_radius=1.0, grid_n=20, seed=0, **project_opts) -> float:
    """Largest tested radius ``r = k h`` (``h = grid_radius / grid_n``) whose open ball
    contains only lattice points with a unique projection.

    The lattice lives in orthonormal tangent coordinates at ``x`` and is mapped
    by ``exp_x``.  For the comb, two candidates count as tied when their
    distances differ by at most ``h``.
    """
    M = pset.manifold
    x = np.asarray(x, dtype=float)
    h = grid_radius / grid_n
    ticks = np.arange(-grid_n, grid_n + 1)
    mesh = np.stack(np.meshgrid(*([ticks] * M.dim), indexing="ij"), axis=-1).reshape(-1, M.dim)
    radii = np.linalg.norm(mesh, axis=1)
    keep = radii <= grid_n + 1e-9
    mesh, radii = mesh[keep], radii[keep] * h
    order = np.argsort(radii, kind="stable")
    mesh, radii = mesh[order], radii[order]
    E = M.orthonormal_frame(x)
    pts = M.exp(x, (mesh * h) @ E.T)
    ok_chart = M.in_chart(pts)

    if isinstance(pset, CombSet):
        bad = pset.ambiguous(pts, tie_tol=h) | ~ok_chart
    else:
        from .projection import project

        bad = np.zeros(len(pts), dtype=bool)
        bad[~ok_chart] = True
        inside = pset.contains(pts, tol=0.0)
        for i in np.flatnonzero(ok_chart & ~inside):
            if radii[i] >= grid_radius:
                break
            if bad[:i].any():
                break
            res = project(pset, pts[i], seed=seed + i, **project_opts)
            bad[i] = not res.unique
    if not bad.any():
        return float(grid_radius)
    r_bad = float(radii[np.argmax(bad)])
    # open balls B(x, k h) that exclude the first bad point
    k = math.ceil(r_bad / h - 1e-9)
    return float(min(grid_radius, k * h))


# construction -----------------------------------------------------------------

def sphere_cap(theta0: float = SPHERE_CAP_THETA0) -> ProxSet:
    """``{theta <= theta0}`` on the unit sphere."""
    M = Sphere2()
    return ProxSet(M, PsiExpr(f"theta - {theta0!r}", M.coord_names, M.aliases), True,
                   f"sphere-cap:theta0={theta0:g}", params={"theta0": theta0})


def hyperbolic_strip(ymin: float = 1.0, ymax: float = 2.0) -> ProxSet:
    """``{ymin <= y <= ymax}`` in the half-plane, encoded without max: ``(y - ymin)(y - ymax)``."""
    M = Hyperbolic2()
    return ProxSet(M, PsiExpr(f"(y - {ymin!r})*(y - {ymax!r})", M.coord_names, M.aliases), True,
                   f"hyperbolic-strip:ymin={ymin:g},ymax={ymax:g}", params={"ymin": ymin, "ymax": ymax})


def euclidean_halfplane() -> ProxSet:
    """``{x2 <= 0}``."""
    M = Euclidean(2)
    return ProxSet(M, PsiExpr("x2", M.coord_names, M.aliases), True, "euclidean-halfplane")


def euclidean_disk_complement(r: float = 1.0) -> ProxSet:
    """Plane minus the open disk of radius ``r`` about the origin."""
    M = Euclidean(2)
    return ProxSet(M, PsiExpr(f"{r!r}**2 - (x1*x1 + x2*x2)", M.coord_names, M.aliases), True,
                   f"euclidean-disk-complement:r={r:g}", params={"r": r})


def euclidean_line() -> ProxSet:
    """The thin set ``{x2 = 0}``."""
    M = Euclidean(2)
    return ProxSet(M, PsiExpr("x2", M.coord_names, M.aliases), False, "euclidean-line")


BUILTINS = {
    "sphere-cap": lambda p: sphere_cap(float(p.get("theta0", SPHERE_CAP_THETA0))),
    "hyperbolic-strip": lambda p: hyperbolic_strip(float(p.get("ymin", 1.0)), float(p.get("ymax", 2.0))),
    "euclidean-halfplane": lambda p: euclidean_halfplane(),
    "euclidean-disk-complement": lambda p: euclidean_disk_complement(float(p.get("r", 1.0))),
    "euclidean-line": lambda p: euclidean_line(),
    "comb": lambda p: CombSet(int(p.get("N", 10))),
}


def set_from_config(cfg: dict, manifold: Manifold | None = None) -> ProxSet:
    """Build a set from ``{"psi": ..., "solidity": ..., "interior_sample": [...]}``.

    ``psi`` is negated when the interior sample evaluates positive, so that
    ``psi <= 0`` on the set.
    """
    if manifold is None:
        manifold = manifold_from_config(cfg["manifold"]) if "manifold" in cfg else Euclidean(2)
    solidity = cfg.get("solidity", "solid")
    if solidity not in ("solid", "thin"):
        raise ValueError(f"solidity must be 'solid' or 'thin', got {solidity!r}")
    psi = PsiExpr(cfg["psi"], manifold.coord_names, manifold.aliases)
    sample = cfg.get("interior_sample")
    if sample is not None:
        sample = manifold.check_point(sample)
        if float(psi.value(sample)) > 0:
            psi = psi.negated()
    return ProxSet(manifold, psi, solidity == "solid", cfg.get("name", "custom"))


def load_set(spec: str, manifold: Manifold | None = None):
    """Resolve a builtin name such as ``sphere-cap:theta0=2.0944`` or a JSON config file."""
    path = Path(spec)
    if spec.endswith(".json") or path.is_file():
        return set_from_config(json.loads(path.read_text()), manifold)
    name, _, raw = spec.partition(":")
    params = {}
    for item in filter(None, raw.split(",")):
        key, _, val = item.partition("=")
        params[key.strip()] = val.strip()
    if name not in BUILTINS:
        raise ValueError(f"unknown set {name!r}; builtins: {sorted(BUILTINS)}")
    out = BUILTINS[name](params)
    if manifold is not None and out.manifold != manifold:
        raise ChartError(f"set {name} lives on {out.manifold!r}, not {manifold!r}")
    return out
