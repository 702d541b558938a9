"""Closed convex cones of the form met at boundary points of smooth sets.

Six shapes cover every normal and tangent cone that arises for a set whose
boundary is a hypersurface: the apex, the whole tangent space, a ray, a line,
a half-space and a hyperplane.  Inner products use the metric at the base
point, passed in as its Gram matrix.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import BasePointError


class ConeKind(enum.Enum):
    ZERO = "zero"
    FULL = "full"
    RAY = "ray"
    LINE = "line"
    HALFSPACE = "halfspace"
    HYPERPLANE = "hyperplane"


_POLAR = {
    ConeKind.ZERO: ConeKind.FULL,
    ConeKind.FULL: ConeKind.ZERO,
    ConeKind.RAY: ConeKind.HALFSPACE,
    ConeKind.HALFSPACE: ConeKind.RAY,
    ConeKind.LINE: ConeKind.HYPERPLANE,
    ConeKind.HYPERPLANE: ConeKind.LINE,
}
_NEEDS_GENERATOR = {ConeKind.RAY, ConeKind.LINE, ConeKind.HALFSPACE, ConeKind.HYPERPLANE}


class Cone:
    """A cone in ``T_xM``.

    ``generator`` is the spanning direction for rays and lines and the outward
    normal for half-spaces and hyperplanes.  It is stored with unit length.
    """

    __slots__ = ("kind", "base", "gram", "generator")

    def __init__(self, kind: ConeKind, base, gram, generator=None, normalize=True):
        self.kind = ConeKind(kind)
        self.base = np.asarray(base, dtype=float)
        self.gram = np.asarray(gram, dtype=float)
        if self.kind in _NEEDS_GENERATOR:
            if generator is None:
                raise ValueError(f"{self.kind.value} cone needs a generator")
            g = np.asarray(generator, dtype=float)
            if normalize:
                n = float(np.sqrt(g @ self.gram @ g))
                if not n > 0:
                    raise ValueError("cone generator must be nonzero")
                g = g / n
            self.generator = g
        else:
            self.generator = None

    @classmethod
    def of(cls, kind, manifold, base, generator=None):
        return cls(kind, base, manifold.metric_tensor(base), generator)

    def __repr__(self):
        g = None if self.generator is None else self.generator.tolist()
        return f"Cone({self.kind.value}, base={self.base.tolist()}, g={g})"

    def __eq__(self, other):
        if not isinstance(other, Cone) or self.kind is not other.kind:
            return False
        if not np.array_equal(self.base, other.base):
            return False
        if self.generator is None:
            return other.generator is None
        return np.array_equal(self.generator, other.generator)

    __hash__ = None

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "base": self.base.tolist(),
            "generator": None if self.generator is None else self.generator.tolist(),
        }

    def inner(self, u, v):
        return np.einsum("...i,ij,...j->...", np.asarray(u, float), self.gram, np.asarray(v, float))

    def norm(self, u):
        return np.sqrt(np.maximum(self.inner(u, u), 0.0))

    def _check_base(self, at):
        if at is not None and not np.allclose(np.asarray(at, float), self.base, rtol=0, atol=1e-12):
            raise BasePointError(f"vector based at {np.asarray(at).tolist()} but cone at {self.base.tolist()}")

    def polar(self) -> "Cone":
        """Polar cone; an exact involution on the six shapes."""
        out = Cone.__new__(Cone)
        out.kind = _POLAR[self.kind]
        out.base = self.base
        out.gram = self.gram
        out.generator = self.generator
        return out

    def project(self, v, at=None):
        """Nearest point of the cone to ``v`` in the metric norm."""
        self._check_base(at)
        v = np.asarray(v, dtype=float)
        k = self.kind
        if k is ConeKind.FULL:
            return v.copy()
        if k is ConeKind.ZERO:
            return np.zeros_like(v)
        g = self.generator
        c = self.inner(v, g)[..., None]
        if k is ConeKind.RAY:
            return np.maximum(c, 0.0) * g
        if k is ConeKind.LINE:
            return c * g
        if k is ConeKind.HYPERPLANE:
            return v - c * g
        return v - np.maximum(c, 0.0) * g

    def distance(self, v, at=None):
        v = np.asarray(v, dtype=float)
        return self.norm(v - self.project(v, at))

    def contains(self, v, tol=1e-10):
        """Membership up to ``tol`` relative to ``max(1, |v|)``."""
        v = np.asarray(v, dtype=float)
        scale = np.maximum(1.0, self.norm(v))
        return self.distance(v) <= tol * scale

    def complement_basis(self):
        """Metric-orthonormal basis (columns) of the complement of the generator."""
        E = np.linalg.inv(np.linalg.cholesky(self.gram)).T
        c = np.linalg.solve(E, self.generator)
        Q, _ = np.linalg.qr(np.column_stack([c, np.eye(len(c))]))
        return E @ Q[:, 1:len(c)]

    def sample(self, rng, n):
        """Draw ``n`` elements of the cone (directions of random length)."""
        dim = self.base.shape[-1]
        if self.kind is ConeKind.ZERO:
            return np.zeros((n, dim))
        if self.kind is ConeKind.FULL:
            E = np.linalg.inv(np.linalg.cholesky(self.gram)).T
            return rng.standard_normal((n, dim)) @ E.T
        lam = rng.standard_normal(n)
        if self.kind in (ConeKind.RAY, ConeKind.LINE):
            if self.kind is ConeKind.RAY:
                lam = np.abs(lam)
            return lam[:, None] * self.generator
        # built from the complement basis rather than by projection, so the
        # normal component is exactly zero or exactly nonpositive
        T = self.complement_basis()
        out = rng.standard_normal((n, T.shape[1])) @ T.T
        if self.kind is ConeKind.HALFSPACE:
            out = out - np.abs(lam)[:, None] * self.generator
        return out
