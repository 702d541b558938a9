"""Model Riemannian manifolds in one global chart.

Points are numpy arrays of chart coordinates and tangent vectors are arrays of
components in the coordinate frame at an explicitly passed base point.  The
closed-form maps (``exp``, ``log``, ``distance``, ``metric``) broadcast over
leading axes; the ODE-based ones (``geodesic``, ``parallel_transport``) work
on a single point.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ChartError, ConvergenceError, PreconditionError

RADIUS_CAP = 1e9
TOL_ODE = 1e-9


def _as_points(x):
    return np.asarray(x, dtype=float)


class Manifold:
    """Common interface for the model spaces."""

    kind = "abstract"
    dim = 0
    k0 = 0.0
    coord_names: tuple[str, ...] = ()
    aliases: dict[str, int] = {}

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other) and self.dim == other.dim

    def __hash__(self):
        return hash((self.kind, self.dim))

    def to_config(self) -> dict:
        return {"kind": self.kind}

    # chart ---------------------------------------------------------------
    def in_chart(self, x):
        x = _as_points(x)
        return np.all(np.isfinite(x), axis=-1)

    def check_point(self, x) -> np.ndarray:
        x = _as_points(x)
        if x.shape[-1] != self.dim:
            raise ChartError(f"{self.kind}: expected {self.dim} coordinates, got shape {x.shape}")
        if not np.all(self.in_chart(x)):
            raise ChartError(f"{self.kind}: point {x.tolist()} outside the chart domain")
        return x

    # metric --------------------------------------------------------------
    def metric_tensor(self, x):
        raise NotImplementedError

    def metric(self, x, u, v):
        """Inner product of two tangent vectors based at ``x``."""
        G = self.metric_tensor(x)
        return np.einsum("...i,...ij,...j->...", np.asarray(u, float), G, np.asarray(v, float))

    def norm(self, x, u):
        return np.sqrt(np.maximum(self.metric(x, u, u), 0.0))

    def sharp(self, x, covector):
        """Raise an index: metric gradient components from chart partials."""
        G = self.metric_tensor(x)
        return np.linalg.solve(G, np.asarray(covector, float)[..., None])[..., 0]

    def orthonormal_frame(self, x):
        """Matrix ``E`` whose columns are an orthonormal basis of ``T_xM``."""
        G = self.metric_tensor(x)
        L = np.linalg.cholesky(G)
        return np.linalg.inv(L).swapaxes(-1, -2)

    def christoffel(self, x):
        """Christoffel symbols ``Gamma[k, i, j]`` at ``x``."""
        raise NotImplementedError

    def convexity_radius(self, x) -> float:
        return RADIUS_CAP

    # maps ----------------------------------------------------------------
    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def distance(self, x, y):
        raise NotImplementedError

    def geodesic(self, x, v, t=1.0, tol=TOL_ODE):
        """Integrate the geodesic equation from ``x`` with velocity ``v`` up to time ``t``."""
        x = self.check_point(x)
        v = np.asarray(v, dtype=float)
        if t == 0 or not np.any(v):
            return x.copy()
        n = self.dim

        def rhs(_, state):
            p, dp = state[:n], state[n:]
            if not self.in_chart(p):
                raise ChartError(f"{self.kind}: geodesic left the chart at {p.tolist()}")
            acc = -np.einsum("kij,i,j->k", self.christoffel(p), dp, dp)
            return np.concatenate([dp, acc])

        sol = solve_ivp(rhs, (0.0, t), np.concatenate([x, v]), method="DOP853",
                        rtol=tol * 1e-2, atol=tol * 1e-3)
        if not sol.success:
            raise ConvergenceError(f"geodesic integration failed: {sol.message}")
        end = sol.y[:n, -1]
        if not np.all(self.in_chart(sol.y[:n].T)):
            raise ChartError(f"{self.kind}: geodesic left the chart")
        return end

    def parallel_transport(self, x, y, v, tol=TOL_ODE):
        """Transport ``v`` from ``x`` to ``y`` along the minimizing geodesic."""
        x = self.check_point(x)
        y = self.check_point(y)
        v = np.asarray(v, dtype=float)
        if np.array_equal(x, y):
            return v.copy()
        w = self.log(x, y)
        n = self.dim

        def rhs(_, state):
            p, dp, V = state[:n], state[n:2 * n], state[2 * n:]
            gam = self.christoffel(p)
            acc = -np.einsum("kij,i,j->k", gam, dp, dp)
            dV = -np.einsum("kij,i,j->k", gam, dp, V)
            return np.concatenate([dp, acc, dV])

        sol = solve_ivp(rhs, (0.0, 1.0), np.concatenate([x, w, v]), method="DOP853",
                        rtol=tol * 1e-2, atol=tol * 1e-3)
        if not sol.success:
            raise ConvergenceError(f"transport integration failed: {sol.message}")
        return sol.y[2 * n:, -1]

    # curvature-dependent bounds ---------------------------------------------
    def hessian_radius(self, center, R=math.inf) -> float:
        """Radius inside which the squared distance from ``center`` is controlled."""
        lim = math.pi / (2 * math.sqrt(self.k0)) if self.k0 > 0 else math.inf
        return min(self.convexity_radius(center), R, lim)

    def hessian_lower_bound(self, d: float) -> float:
        """``min{2, 2 sqrt(k0) d cot(sqrt(k0) d)}``; equals 2 for flat space."""
        if self.k0 <= 0 or d == 0:
            return 2.0
        s = math.sqrt(self.k0) * d
        return min(2.0, 2.0 * s / math.tan(s))

    def hessian_dist_sq(self, center, z, w, R=math.inf, h_fd=1e-4):
        """Second derivative of ``t -> d(center, exp_z(t w))**2`` at ``t = 0``.

        Central five-point stencil with step ``h_fd / |w|``.
        """
        center = self.check_point(center)
        z = self.check_point(z)
        w = np.asarray(w, dtype=float)
        rad = self.hessian_radius(center, R)
        if self.distance(center, z) >= rad:
            raise PreconditionError(f"d(center, z) must be below {rad:.6g}")
        nw = float(self.norm(z, w))
        if nw == 0.0:
            return 0.0
        h = h_fd / nw
        f = [float(self.distance(center, self.exp(z, k * h * w)) ** 2) for k in (-2, -1, 0, 1, 2)]
        return (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)


class Euclidean(Manifold):
    kind = "euclidean"
    k0 = 0.0

    def __init__(self, dim: int = 2):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        self.coord_names = tuple(f"x{i + 1}" for i in range(self.dim))
        self.aliases = {"x": 0, "y": 1, "z": 2} if self.dim <= 3 else {}
        self.aliases = {k: i for k, i in self.aliases.items() if i < self.dim}

    def __repr__(self):
        return f"Euclidean({self.dim})"

    def to_config(self):
        return {"kind": self.kind, "dim": self.dim}

    def metric_tensor(self, x):
        x = _as_points(x)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim))

    def christoffel(self, x):
        return np.zeros((self.dim,) * 3)

    def exp(self, x, v):
        return _as_points(x) + _as_points(v)

    def log(self, x, y):
        return _as_points(y) - _as_points(x)

    def distance(self, x, y):
        return np.linalg.norm(_as_points(y) - _as_points(x), axis=-1)

    def geodesic(self, x, v, t=1.0, tol=TOL_ODE):
        return self.check_point(x) + t * np.asarray(v, dtype=float)

    def parallel_transport(self, x, y, v, tol=TOL_ODE):
        return np.asarray(v, dtype=float).copy()


class Sphere2(Manifold):
    """Unit 2-sphere in spherical coordinates ``(theta, phi)``."""

    kind = "sphere2"
    dim = 2
    k0 = 1.0
    coord_names = ("theta", "phi")
    aliases = {"t": 0, "p": 1}

    def in_chart(self, x):
        x = _as_points(x)
        th, ph = x[..., 0], x[..., 1]
        return (th > 0) & (th < math.pi) & (ph > -math.pi) & (ph < math.pi)

    def metric_tensor(self, x):
        x = _as_points(x)
        G = np.zeros(x.shape[:-1] + (2, 2))
        G[..., 0, 0] = 1.0
        G[..., 1, 1] = np.sin(x[..., 0]) ** 2
        return G

    def christoffel(self, x):
        th = float(x[0])
        s, c = math.sin(th), math.cos(th)
        gam = np.zeros((2, 2, 2))
        gam[0, 1, 1] = -s * c
        gam[1, 0, 1] = gam[1, 1, 0] = c / s
        return gam

    def convexity_radius(self, x):
        return math.pi / 2

    @staticmethod
    def embed(x):
        x = _as_points(x)
        th, ph = x[..., 0], x[..., 1]
        st = np.sin(th)
        return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1)

    @staticmethod
    def frame(x):
        """Embedded images of the coordinate vectors d/dtheta and d/dphi."""
        x = _as_points(x)
        th, ph = x[..., 0], x[..., 1]
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        d_th = np.stack([ct * cp, ct * sp, -st], axis=-1)
        d_ph = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1)
        return d_th, d_ph

    def from_embedded(self, P):
        P = _as_points(P)
        th = np.arctan2(np.hypot(P[..., 0], P[..., 1]), P[..., 2])
        ph = np.arctan2(P[..., 1], P[..., 0])
        return np.stack([th, ph], axis=-1)

    def exp(self, x, v):
        x = _as_points(x)
        v = _as_points(v)
        P = self.embed(x)
        d_th, d_ph = self.frame(x)
        V = v[..., :1] * d_th + v[..., 1:] * d_ph
        a = np.linalg.norm(V, axis=-1, keepdims=True)
        Q = np.cos(a) * P + np.sinc(a / math.pi) * V
        return np.where(a == 0, x, self.from_embedded(Q))

    def log(self, x, y):
        x = _as_points(x)
        P, Q = self.embed(x), self.embed(y)
        c = np.sum(P * Q, axis=-1, keepdims=True)
        W = Q - c * P
        s = np.linalg.norm(W, axis=-1, keepdims=True)
        ang = np.arctan2(s, c)
        if np.any(ang > math.pi - 1e-9):
            raise PreconditionError("sphere2 log: points are (nearly) antipodal")
        scale = np.where(s > 1e-300, ang / np.where(s > 1e-300, s, 1.0), 1.0)
        U = W * scale
        d_th, d_ph = self.frame(x)
        sin2 = np.sin(x[..., 0]) ** 2
        return np.stack([np.sum(U * d_th, axis=-1), np.sum(U * d_ph, axis=-1) / sin2], axis=-1)

    def distance(self, x, y):
        P, Q = self.embed(x), self.embed(y)
        cross = np.linalg.norm(np.cross(P, Q), axis=-1)
        return np.arctan2(cross, np.sum(P * Q, axis=-1))


class Hyperbolic2(Manifold):
    """Upper half-plane model ``(dx^2 + dy^2) / y^2``."""

    kind = "hyperbolic2"
    dim = 2
    k0 = 1.0
    coord_names = ("x", "y")
    aliases = {"x1": 0, "x2": 1}

    def in_chart(self, x):
        x = _as_points(x)
        return (x[..., 1] > 0) & np.isfinite(x[..., 0])

    def metric_tensor(self, x):
        x = _as_points(x)
        G = np.zeros(x.shape[:-1] + (2, 2))
        inv = 1.0 / x[..., 1] ** 2
        G[..., 0, 0] = inv
        G[..., 1, 1] = inv
        return G

    def christoffel(self, x):
        y = float(x[1])
        gam = np.zeros((2, 2, 2))
        gam[0, 0, 1] = gam[0, 1, 0] = -1.0 / y
        gam[1, 0, 0] = 1.0 / y
        gam[1, 1, 1] = -1.0 / y
        return gam

    # Isometry T(w) = x + y*w moves i to the base point; the Cayley map sends
    # i to the centre of the Poincare disk, where geodesics are radii.
    def exp(self, x, v):
        x = _as_points(x)
        v = _as_points(v)
        y0 = x[..., 1]
        u = (v[..., 0] + 1j * v[..., 1]) / y0
        d = np.abs(u)
        small = d < 1e-8
        fac = np.where(small, 0.5 - d * d / 24.0, np.tanh(d / 2) / np.where(small, 1.0, d))
        q = -1j * u * fac
        w = 1j * (1 + q) / (1 - q)
        return np.stack([x[..., 0] + y0 * w.real, y0 * w.imag], axis=-1)

    def log(self, x, y):
        x = _as_points(x)
        y = _as_points(y)
        y0 = x[..., 1]
        w = ((y[..., 0] - x[..., 0]) + 1j * y[..., 1]) / y0
        q = (w - 1j) / (w + 1j)
        r = np.abs(q)
        small = r < 1e-8
        fac = np.where(small, 2.0 + 2.0 * r * r / 3.0, 2.0 * np.arctanh(np.minimum(r, 1 - 1e-16)) / np.where(small, 1.0, r))
        u = 1j * q * fac
        return np.stack([y0 * u.real, y0 * u.imag], axis=-1)

    def distance(self, x, y):
        x = _as_points(x)
        y = _as_points(y)
        chord = np.hypot(y[..., 0] - x[..., 0], y[..., 1] - x[..., 1])
        return 2.0 * np.arcsinh(chord / (2.0 * np.sqrt(x[..., 1] * y[..., 1])))


def distance_formula_upper_half_plane(z1, z2) -> float:
    """Logarithmic form of the half-plane distance, kept as an independent check."""
    (x1, y1), (x2, y2) = z1, z2
    a = math.hypot(x2 - x1, y2 - y1)
    b = math.hypot(x2 - x1, y2 + y1)
    return 2.0 * math.log((a + b) / (2.0 * math.sqrt(y1 * y2)))


def make_manifold(kind: str, dim: int | None = None) -> Manifold:
    if kind == "euclidean":
        return Euclidean(dim or 2)
    if kind == "sphere2":
        return Sphere2()
    if kind == "hyperbolic2":
        return Hyperbolic2()
    raise ValueError(f"unknown manifold kind {kind!r}")


def manifold_from_config(cfg) -> Manifold:
    """Build from ``{"kind": ..., "dim": ...}`` or a name accepted by ``load_manifold``."""
    if isinstance(cfg, str):
        return load_manifold(cfg)
    return make_manifold(cfg["kind"], cfg.get("dim"))


def load_manifold(spec: str) -> Manifold:
    """Resolve ``euclidean``, ``euclidean:dim=3``, ``sphere2``, ``hyperbolic2`` or a JSON file."""
    path = Path(spec)
    if spec.endswith(".json") or path.is_file():
        return manifold_from_config(json.loads(path.read_text()))
    name, _, params = spec.partition(":")
    dim = None
    for item in filter(None, params.split(",")):
        key, _, val = item.partition("=")
        if key.strip() == "dim":
            dim = int(val)
    return make_manifold(name.strip(), dim)
