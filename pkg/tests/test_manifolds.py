import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxreg.errors import ChartError, PreconditionError
from proxreg.manifolds import (Euclidean, Hyperbolic2, Sphere2, distance_formula_upper_half_plane,
                               load_manifold)

SPHERE, HYP, EUC = Sphere2(), Hyperbolic2(), Euclidean(2)


def christoffel_oracle(M, x, h=1e-5):
    """Levi-Civita formula with finite-difference metric derivatives."""
    n = M.dim
    dG = np.zeros((n, n, n))  # dG[l, i, j] = d_l g_ij
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        dG[l] = (M.metric_tensor(x + e) - M.metric_tensor(x - e)) / (2 * h)
    Ginv = np.linalg.inv(M.metric_tensor(x))
    gam = np.zeros((n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                gam[k, i, j] = 0.5 * sum(Ginv[k, l] * (dG[i, j, l] + dG[j, i, l] - dG[l, i, j])
                                         for l in range(n))
    return gam


def sphere_points(draw_th, draw_ph):
    return np.array([draw_th, draw_ph])


theta = st.floats(0.2, math.pi - 0.2)
phi = st.floats(-2.8, 2.8)
hx = st.floats(-3, 3)
hy = st.floats(0.2, 5)


def test_metric_examples():
    assert HYP.metric([0, 2], [0, 1], [0, 1]) == pytest.approx(0.25)
    assert SPHERE.metric([math.pi / 2, 0], [0, 1], [0, 1]) == pytest.approx(1.0)
    assert SPHERE.metric([1.0, 0.3], [0, 0], [0.4, 2.0]) == 0.0


@pytest.mark.parametrize("M,x", [(SPHERE, [1.1, 0.4]), (SPHERE, [2.5, -1.0]), (HYP, [0.3, 0.7]),
                                 (HYP, [-1.0, 2.5]), (EUC, [0.2, 0.1])])
def test_christoffel_against_levi_civita(M, x):
    x = np.array(x)
    gam = M.christoffel(x)
    np.testing.assert_allclose(gam, christoffel_oracle(M, x), atol=1e-7)
    np.testing.assert_allclose(gam, gam.transpose(0, 2, 1))


def test_christoffel_closed_forms():
    th = 1.0
    g = SPHERE.christoffel(np.array([th, 0.2]))
    assert g[0, 1, 1] == pytest.approx(-math.sin(th) * math.cos(th))
    assert g[1, 0, 1] == pytest.approx(math.cos(th) / math.sin(th))
    assert g[0, 0, 0] == g[1, 1, 1] == 0
    y = 2.0
    g = HYP.christoffel(np.array([0.0, y]))
    assert (g[0, 0, 1], g[1, 0, 0], g[1, 1, 1], g[0, 0, 0]) == (-1 / y, 1 / y, -1 / y, 0)


def test_geodesic_examples():
    np.testing.assert_allclose(SPHERE.geodesic([math.pi / 2, 0], [0, 1], math.pi / 2), [math.pi / 2, math.pi / 2],
                               atol=1e-9)
    np.testing.assert_allclose(HYP.geodesic([0, 1], [0, 1], math.log(2)), [0, 2], atol=1e-9)
    np.testing.assert_array_equal(SPHERE.geodesic([1.0, 0.5], [0, 0], 3.0), [1.0, 0.5])
    np.testing.assert_array_equal(EUC.geodesic([1, 1], [2, 3], 0.5), [2, 2.5])


def test_geodesic_ode_residual():
    for M, x, v in [(SPHERE, [1.0, 0.2], [0.3, 0.8]), (HYP, [0.0, 1.0], [0.7, 0.4])]:
        h = 1e-3
        ts = np.arange(0.2, 0.8, 0.1)
        for t in ts:
            p = [M.geodesic(x, v, s) for s in (t - h, t, t + h)]
            vel = (p[2] - p[0]) / (2 * h)
            acc = (p[2] - 2 * p[1] + p[0]) / h**2
            res = acc + np.einsum("kij,i,j->k", M.christoffel(p[1]), vel, vel)
            assert np.abs(res).max() < 1e-4


def test_exp_examples():
    np.testing.assert_allclose(EUC.exp([1, 1], [2, 3]), [3, 4])
    np.testing.assert_allclose(SPHERE.exp([math.pi / 2, 0], [0, math.pi / 2]), [math.pi / 2, math.pi / 2])
    np.testing.assert_array_equal(HYP.exp([0.5, 1.5], [0, 0]), [0.5, 1.5])


@settings(max_examples=50, deadline=None)
@given(theta, phi, st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_sphere_closed_form_exp_matches_ode(th, ph, a, b):
    x = np.array([th, ph])
    v = np.array([a, b / math.sin(th)])
    y = SPHERE.exp(x, v)
    if not SPHERE.in_chart(y) or abs(y[1] - ph) > 2:
        return
    try:
        z = SPHERE.geodesic(x, v, 1.0)
    except ChartError:
        return
    np.testing.assert_allclose(y, z, atol=1e-7)


@settings(max_examples=50, deadline=None)
@given(hx, hy, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_hyperbolic_closed_form_exp_matches_ode(x0, y0, a, b):
    x = np.array([x0, y0])
    v = np.array([a, b]) * y0
    np.testing.assert_allclose(HYP.exp(x, v), HYP.geodesic(x, v, 1.0), rtol=1e-7, atol=1e-7 * y0)


def test_log_examples():
    np.testing.assert_allclose(HYP.log([0, 1], [0, 2]), [0, math.log(2)], atol=1e-14)
    np.testing.assert_allclose(EUC.log([1, 2], [4, -1]), [3, -3])
    np.testing.assert_allclose(SPHERE.log([1.0, 1.0], [1.0, 1.0]), [0, 0], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(theta, phi, theta, phi)
def test_sphere_log_exp_roundtrip(t1, p1, t2, p2):
    x, y = np.array([t1, p1]), np.array([t2, p2])
    d = float(SPHERE.distance(x, y))
    if d >= SPHERE.convexity_radius(x):
        return
    v = SPHERE.log(x, y)
    assert float(SPHERE.norm(x, v)) == pytest.approx(d, abs=1e-8)
    np.testing.assert_allclose(SPHERE.embed(SPHERE.exp(x, v)), SPHERE.embed(y), atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(hx, hy, hx, hy)
def test_hyperbolic_log_exp_roundtrip(a, b, c, d):
    x, y = np.array([a, b]), np.array([c, d])
    v = HYP.log(x, y)
    assert float(HYP.norm(x, v)) == pytest.approx(float(HYP.distance(x, y)), rel=1e-8, abs=1e-10)
    np.testing.assert_allclose(HYP.exp(x, v), y, rtol=1e-8, atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(hx, hy, hx, hy)
def test_hyperbolic_distance_two_formulas(a, b, c, d):
    assert float(HYP.distance([a, b], [c, d])) == pytest.approx(
        distance_formula_upper_half_plane((a, b), (c, d)), rel=1e-9, abs=1e-12)


def test_distance_examples():
    assert float(HYP.distance([0, 1], [0, 2])) == pytest.approx(math.log(2))
    assert float(SPHERE.distance([math.pi / 2, -math.pi / 2], [math.pi / 2, math.pi / 2])) == pytest.approx(math.pi)
    assert float(SPHERE.distance([1.0, 0.3], [1.0, 0.3])) == 0.0
    assert float(EUC.distance([0, 0], [3, 4])) == 5.0


@settings(max_examples=60, deadline=None)
@given(theta, phi, theta, phi)
def test_sphere_distance_haversine(t1, p1, t2, p2):
    lat1, lat2 = math.pi / 2 - t1, math.pi / 2 - t2
    hav = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((p2 - p1) / 2) ** 2
    ref = 2 * math.asin(min(1.0, math.sqrt(hav)))
    assert float(SPHERE.distance([t1, p1], [t2, p2])) == pytest.approx(ref, abs=1e-9)


def test_parallel_transport_examples():
    np.testing.assert_allclose(SPHERE.parallel_transport([math.pi / 2, 0], [math.pi / 2, math.pi / 2], [1, 0]),
                               [1, 0], atol=1e-9)
    np.testing.assert_array_equal(EUC.parallel_transport([0, 0], [1, 2], [3, 4]), [3, 4])
    np.testing.assert_array_equal(HYP.parallel_transport([0, 1], [0, 1], [3, 4]), [3, 4])


@pytest.mark.parametrize("M", [SPHERE, HYP])
def test_parallel_transport_identities(M, rng):
    for _ in range(100):
        if M is SPHERE:
            x = np.array([rng.uniform(0.4, 2.7), rng.uniform(-2.5, 2.5)])
        else:
            x = np.array([rng.uniform(-2, 2), rng.uniform(0.3, 3)])
        E = M.orthonormal_frame(x)
        y = M.exp(x, E @ rng.uniform(-0.5, 0.5, 2))
        if not M.in_chart(y):
            continue
        w = M.log(x, y)
        np.testing.assert_allclose(M.parallel_transport(x, y, w), -M.log(y, x), atol=1e-7)
        v = E @ rng.standard_normal(2)
        pv = M.parallel_transport(x, y, v)
        assert float(M.norm(y, pv)) == pytest.approx(float(M.norm(x, v)), rel=1e-7)


def test_orthonormal_frame(rng):
    for M, x in [(SPHERE, [0.7, 0.2]), (HYP, [1.0, 0.3])]:
        E = M.orthonormal_frame(np.array(x))
        np.testing.assert_allclose(E.T @ M.metric_tensor(x) @ E, np.eye(2), atol=1e-12)


def test_hessian_examples():
    w = np.array([0.3, -1.2])
    assert EUC.hessian_dist_sq([0, 0], [1, 2], w) == pytest.approx(2 * w @ w, rel=1e-6)
    h = SPHERE.hessian_dist_sq([math.pi / 2, 0], [math.pi / 2, math.pi / 4], [1, 0])
    assert SPHERE.hessian_lower_bound(math.pi / 4) == pytest.approx(math.pi / 2)
    assert h >= math.pi / 2 - 1e-6
    assert SPHERE.hessian_dist_sq([1.0, 0], [1.2, 0.1], [0, 0]) == 0.0
    assert EUC.hessian_lower_bound(5.0) == 2.0


def test_hessian_radius_precondition():
    with pytest.raises(PreconditionError):
        SPHERE.hessian_dist_sq([math.pi / 2, 0], [math.pi / 2, 2.0], [1, 0])


@pytest.mark.parametrize("M,bad", [(SPHERE, [0.0, 1.0]), (SPHERE, [1.0, math.pi]), (HYP, [0.0, -1.0]),
                                   (HYP, [1.0, 0.0]), (EUC, [1.0, 2.0, 3.0])])
def test_chart_errors(M, bad):
    with pytest.raises(ChartError):
        M.check_point(bad)


def test_geodesic_leaving_chart():
    with pytest.raises(ChartError):
        HYP.geodesic([0, 1], [0, -1], 50.0)


def test_load_manifold(tmp_path):
    assert load_manifold("sphere2") == SPHERE
    assert load_manifold("euclidean:dim=3").dim == 3
    p = tmp_path / "m.json"
    p.write_text('{"kind": "hyperbolic2"}')
    assert load_manifold(str(p)) == HYP
    with pytest.raises(ValueError):
        load_manifold("torus")


def test_manifold_config_accepts_name_or_dict():
    from proxreg.manifolds import manifold_from_config

    assert manifold_from_config("sphere2") == Sphere2()
    assert manifold_from_config({"kind": "euclidean", "dim": 3}).dim == 3
