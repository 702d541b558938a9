import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxreg.cones import Cone, ConeKind
from proxreg.errors import BasePointError
from proxreg.manifolds import Hyperbolic2, Sphere2
from proxreg.projection import cone_project

HYP = Hyperbolic2()
X = np.array([0.4, 2.0])
GEN = np.array([0.3, 1.0])
KINDS = list(ConeKind)


def make(kind, x=X, g=GEN):
    return Cone.of(kind, HYP, x, None if kind in (ConeKind.ZERO, ConeKind.FULL) else g)


@pytest.mark.parametrize("kind", KINDS)
def test_polar_involution_exact(kind):
    c = make(kind)
    assert c.polar().polar() == c
    assert c.polar() != c


def test_polar_pairs():
    assert make(ConeKind.FULL).polar().kind is ConeKind.ZERO
    assert make(ConeKind.RAY).polar().kind is ConeKind.HALFSPACE
    assert make(ConeKind.LINE).polar().kind is ConeKind.HYPERPLANE


def test_generator_normalized():
    c = make(ConeKind.RAY)
    assert float(c.norm(c.generator)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Cone.of(ConeKind.RAY, HYP, X, [0.0, 0.0])
    with pytest.raises(ValueError):
        Cone.of(ConeKind.LINE, HYP, X)


def test_closed_forms():
    g = make(ConeKind.RAY).generator
    assert np.allclose(cone_project(make(ConeKind.HALFSPACE), g), 0)
    assert np.allclose(cone_project(make(ConeKind.RAY), -g), 0)
    assert np.allclose(cone_project(make(ConeKind.RAY), 2 * g), 2 * g)
    v = np.array([1.0, -0.5])
    assert np.array_equal(cone_project(make(ConeKind.FULL), v), v)
    assert np.array_equal(cone_project(make(ConeKind.ZERO), v), [0, 0])
    h = cone_project(make(ConeKind.HYPERPLANE), v)
    assert abs(float(HYP.metric(X, h, g))) < 1e-15


def test_ray_projection_by_parameter_sweep():
    c = make(ConeKind.RAY)
    g = c.generator
    for v in (-g, np.array([0.5, -3.0]), np.array([2.0, 1.0])):
        lam = np.linspace(0, 10, 200001)
        d = c.norm(v[None] - lam[:, None] * g[None])
        best = lam[np.argmin(d)] * g
        assert np.allclose(c.project(v), best, atol=1e-4)


def test_strip_normal_example():
    # hyperbolic strip at (0, 2): v = (1, 1), normal +d/dy
    c = Cone.of(ConeKind.HALFSPACE, HYP, [0.0, 2.0], [0.0, 1.0])
    assert np.allclose(cone_project(c, [1.0, 1.0]), [1.0, 0.0])


def test_base_mismatch():
    with pytest.raises(BasePointError):
        cone_project(make(ConeKind.RAY), [1.0, 0.0], at=[0.0, 1.0])


@pytest.mark.parametrize("kind", KINDS)
def test_sampled_polar_definition(kind, rng):
    c = make(kind)
    p = c.polar()
    u = c.sample(rng, 1000)
    w = p.sample(rng, 1000)
    un = u / np.maximum(c.norm(u), 1e-300)[:, None]
    wn = w / np.maximum(p.norm(w), 1e-300)[:, None]
    assert c.inner(un[:, None], wn[None]).max() <= 1e-12


vec = st.tuples(st.floats(-5, 5), st.floats(-5, 5)).map(np.array)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(KINDS), vec, vec, st.floats(0, 10))
def test_projection_properties(kind, v, w_raw, t):
    c = make(kind)
    p = c.project(v)
    assert c.contains(p, 1e-12)
    assert np.allclose(c.project(p), p, atol=1e-12)
    assert np.allclose(c.project(t * v), t * p, rtol=1e-12, atol=1e-12)
    w = c.project(w_raw)
    assert float(c.inner(v - p, w - p)) <= 1e-10 * (1 + float(c.norm(v)) * (1 + float(c.norm(w))))
    # Moreau decomposition: v = P_C v + P_{C°} v with orthogonal parts
    q = c.polar().project(v)
    assert np.allclose(p + q, v, atol=1e-12)
    assert abs(float(c.inner(p, q))) <= 1e-10 * (1 + float(c.inner(v, v)))


def test_to_dict_and_sphere_metric():
    S = Sphere2()
    c = Cone.of(ConeKind.RAY, S, [2.0, 0.0], [1.0, 0.0])
    d = c.to_dict()
    assert d["kind"] == "ray" and d["generator"] == [1.0, 0.0]
    c2 = Cone.of(ConeKind.RAY, S, [2.0, 0.0], [0.0, 1.0])
    assert float(c2.norm(c2.generator)) == pytest.approx(1.0)
    assert c2.generator[1] == pytest.approx(1 / np.sin(2.0))
