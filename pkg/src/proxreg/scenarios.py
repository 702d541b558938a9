"""Reference curves for the sphere cap and the hyperbolic strip, plus solver starts."""

from __future__ import annotations

import math

import numpy as np

from .curves import DiscreteCurve
from .manifolds import Euclidean, Hyperbolic2, Sphere2
from .sets import SPHERE_CAP_THETA0


def sphere_cap_gamma(theta0=SPHERE_CAP_THETA0, n=200) -> DiscreteCurve:
    """Unit-speed boundary arc ``(theta0, t / sin theta0)`` from ``phi = -pi/2`` to ``pi/2``."""
    s = math.sin(theta0)
    t = np.linspace(-0.5 * math.pi * s, 0.5 * math.pi * s, n + 1)
    pts = np.column_stack([np.full_like(t, theta0), t / s])
    return DiscreteCurve(Sphere2(), t, pts)


def sphere_cap_alpha(theta0=SPHERE_CAP_THETA0, n=200) -> DiscreteCurve:
    """Meridian up to the equator, along the equator, meridian back down to the cap edge.

    Nodes are spread over the three geodesic pieces in proportion to their
    lengths, and the two junctions are declared breakpoints.
    """
    a = theta0 - 0.5 * math.pi
    lens = np.array([a, math.pi, a])
    counts = np.maximum(2, np.round(n * lens / lens.sum()).astype(int))
    counts[1] = n - counts[0] - counts[2]
    edges = np.concatenate([[0.0], np.cumsum(lens)])
    ts = [np.linspace(edges[k], edges[k + 1], counts[k] + 1)[:-1] for k in range(3)]
    t = np.concatenate([*ts, [edges[-1]]])
    theta = np.where(t <= edges[1], theta0 - t, np.where(t <= edges[2], 0.5 * math.pi, t - theta0))
    phi = np.where(t <= edges[1], -0.5 * math.pi, np.where(t <= edges[2], t - theta0, 0.5 * math.pi))
    breaks = (int(counts[0]), int(counts[0] + counts[1]))
    return DiscreteCurve(Sphere2(), t, np.column_stack([theta, phi]), breaks)


def hyperbolic_gamma(n=200, y=2.0) -> DiscreteCurve:
    """``gamma(t) = (2t, y)`` on ``[-1/2, 1/2]``."""
    t = np.linspace(-0.5, 0.5, n + 1)
    return DiscreteCurve(Hyperbolic2(), t, np.column_stack([2 * t, np.full_like(t, y)]))


def _bump(t):
    s = (t - t[0]) / (t[-1] - t[0])
    return np.sin(math.pi * s) ** 2


def sphere_cap_start(theta0=SPHERE_CAP_THETA0, n=60, depth=0.2) -> DiscreteCurve:
    """Boundary arc pushed into the cap by a smooth bump; endpoints stay on the edge."""
    c = sphere_cap_gamma(theta0, n)
    pts = c.points.copy()
    pts[:, 0] -= depth * _bump(c.times)
    return c.with_points(pts)


def hyperbolic_start(n=60, depth=0.3) -> DiscreteCurve:
    """Straight chart segment from ``(-1, 2)`` to ``(1, 2)`` sagging to ``y = 2 - depth``."""
    c = hyperbolic_gamma(n)
    pts = c.points.copy()
    pts[:, 1] -= depth * _bump(c.times)
    return c.with_points(pts)


def halfplane_start(n=40) -> DiscreteCurve:
    """Wiggly curve between two interior points of ``{x2 <= 0}``."""
    t = np.linspace(0.0, 1.0, n + 1)
    p0, p1 = np.array([-1.0, -1.0]), np.array([1.0, -0.5])
    pts = p0 + t[:, None] * (p1 - p0)
    pts[:, 1] -= 0.3 * np.sin(2 * math.pi * t)
    pts[:, 1] = np.minimum(pts[:, 1], -0.05)
    return DiscreteCurve(Euclidean(2), t, pts)
