import numpy as np
import pytest
from scipy.integrate import quad

import kreinlab as kl
from kreinlab.measure import (default_centers, ifs_barycenter, ifs_leaves,
                              mesh_quadrature)


def area_rect():
    return kl.AreaMeasure(kl.RectDomain(1, 1))


# ---------------------------------------------------------------------------
# total mass
# ---------------------------------------------------------------------------

def test_total_mass_area():
    assert kl.total_mass(area_rect()) == pytest.approx(4.0, abs=1e-14)


def test_total_mass_cross():
    # two unit-density segments of length 2 each
    assert kl.total_mass(kl.cross_measure()) == pytest.approx(4.0, abs=1e-14)


def test_total_mass_cantor():
    assert kl.total_mass(kl.cantor_measure()) == pytest.approx(1.0,
                                                               abs=1e-14)


def test_total_mass_pushforward_invariant():
    pushed = kl.pushforward_measure(kl.cross_measure())
    assert kl.total_mass(pushed) == pytest.approx(4.0, abs=1e-14)


# ---------------------------------------------------------------------------
# element integration
# ---------------------------------------------------------------------------

def _sum_elements(m, f, mesh):
    return sum(kl.integrate_on_element(m, f, mesh, t)
               for t in range(mesh.n_triangles))


def one(pts):
    return np.ones(len(np.atleast_2d(pts)))


def test_cross_element_sum_is_total_mass():
    mesh = kl.gen_rectangle(1, 1, 8)
    total = _sum_elements(kl.cross_measure(), one, mesh)
    assert total == pytest.approx(4.0, abs=1e-10)


def test_cross_integral_of_tent_product():
    # 1-d oracle: each axis contributes the quadrature of (1-|t|) dt = 1
    oracle = 2 * quad(lambda t: 1 - abs(t), -1, 1)[0]
    mesh = kl.gen_rectangle(1, 1, 8)

    def tent(pts):
        pts = np.atleast_2d(pts)
        return (1 - np.abs(pts[:, 0])) * (1 - np.abs(pts[:, 1]))

    total = _sum_elements(kl.cross_measure(), tent, mesh)
    assert total == pytest.approx(oracle, abs=1e-9)
    assert oracle == pytest.approx(2.0, abs=1e-12)


def test_area_integral_odd_function_vanishes():
    mesh = kl.gen_rectangle(1, 1, 6)

    def f(pts):
        return np.atleast_2d(pts)[:, 0]

    assert abs(_sum_elements(area_rect(), f, mesh)) < 1e-12


def test_additivity_invariant():
    mesh = kl.gen_rectangle(1, 1, 6)
    for m in (area_rect(), kl.cross_measure(), kl.cantor_measure(depth=10)):
        total = _sum_elements(m, one, mesh)
        assert total == pytest.approx(kl.total_mass(m), rel=1e-9)


def test_pushforward_element_change_of_variables():
    # integral of the lifted field against the image equals the chart
    # integral of the field against the base
    base_mesh = kl.gen_rectangle(1, 1, 6)
    hemi = kl.gen_hemisphere_chart(2.0, base_mesh)
    pushed = kl.pushforward_measure(kl.cross_measure())
    chart = kl.StereoChart(2.0)

    def tent_chart(pts):
        pts = np.atleast_2d(pts)
        return (1 - np.abs(pts[:, 0])) * (1 - np.abs(pts[:, 1]))

    def tent_lifted(pts3):
        return tent_chart(chart.forward(pts3))

    total = sum(kl.integrate_on_element(pushed, tent_lifted, hemi, t)
                for t in range(hemi.n_triangles))
    assert total == pytest.approx(2.0, abs=1e-9)


def test_integrate_rejects_nonfinite():
    mesh = kl.gen_rectangle(1, 1, 4)

    def bad(pts):
        pts = np.atleast_2d(pts)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / (pts[:, 0] - pts[:, 0])

    with pytest.raises(kl.QuadratureError):
        kl.integrate_on_element(area_rect(), bad, mesh, 0)


def test_mesh_quadrature_counts_edge_mass_once():
    mesh = kl.gen_rectangle(1, 1, 4)
    total = 0.0
    for _, _, wts in mesh_quadrature(kl.cross_measure(), mesh):
        total += wts.sum()
    assert total == pytest.approx(4.0, abs=1e-12)


# ---------------------------------------------------------------------------
# ball mass
# ---------------------------------------------------------------------------

def test_ball_mass_cross_interval():
    # 1-d length oracle: the ball meets the x axis in (0.4, 0.6)
    v = kl.ball_mass(kl.cross_measure(), (0.5, 0.0), 0.1)
    assert v == pytest.approx(0.2, abs=1e-6)


def test_ball_mass_area_disk_oracle():
    v = kl.ball_mass(area_rect(), (0.0, 0.0), 0.5)
    assert v == pytest.approx(np.pi * 0.25, abs=1e-4)


def test_ball_mass_area_against_counting_oracle():
    # independent oracle: pixel counting on a fine grid
    rng = np.random.default_rng(7)
    n = 1200
    g = (np.arange(n) + 0.5) / n * 2 - 1
    X, Y = np.meshgrid(g, g)
    cell = (2.0 / n) ** 2
    for _ in range(5):
        c = rng.uniform(-1.3, 1.3, 2)
        r = rng.uniform(0.1, 0.8)
        oracle = cell * ((X - c[0]) ** 2 + (Y - c[1]) ** 2 <= r * r).sum()
        v = kl.ball_mass(area_rect(), c, r)
        assert v == pytest.approx(oracle, abs=4 * r * (2.0 / n) * 4)


def test_ball_mass_vanishes_off_support():
    for m in (kl.cross_measure(), area_rect(), kl.cantor_measure()):
        assert kl.ball_mass(m, (5.0, 5.0), 1e-6) == 0.0


def test_ball_mass_monotone_in_delta():
    rng = np.random.default_rng(3)
    m = kl.cross_measure()
    for _ in range(10):
        c = rng.uniform(-1, 1, 2)
        deltas = np.sort(rng.uniform(0.01, 1.5, 6))
        vals = [kl.ball_mass(m, c, d) for d in deltas]
        assert all(b >= a - 1e-12 for a, b in zip(vals[:-1], vals[1:]))


def test_ball_mass_sphere_cap():
    nu = kl.AreaMeasure(kl.SphereDomain(1.0))
    # cap-area oracle 2*pi*(1-cos(delta))
    v = kl.ball_mass(nu, (0, 0, 1.0), 0.5)
    assert v == pytest.approx(2 * np.pi * (1 - np.cos(0.5)), abs=1e-12)


def test_ball_mass_pushforward_geodesic():
    # the image of the x-axis segment: geodesic ball around the lifted
    # point (0.5, 0) must see the same mass as the chart interval whose
    # image it is; oracle via dense sampling of the segment
    chart = kl.StereoChart(2.0)
    pushed = kl.pushforward_measure(kl.cross_measure())
    center = chart.inverse(np.array([0.5, 0.0]))
    delta = 0.11
    t = np.linspace(-1, 1, 40001)
    pts3 = chart.inverse(np.column_stack([t, np.zeros_like(t)]))
    inside = np.array([chart.geodesic_distance(p, center) <= delta
                       for p in pts3])
    oracle = inside.mean() * 2.0  # x-axis part
    v = kl.ball_mass(pushed, center, delta)
    # the y-axis part only contributes near the origin, outside this ball
    assert v == pytest.approx(oracle, abs=2e-4)


# ---------------------------------------------------------------------------
# dimension estimates
# ---------------------------------------------------------------------------

def test_dim_area():
    est = kl.estimate_dim_infinity(area_rect())
    assert 1.9 <= est.slope <= 2.1


def test_dim_cross():
    est = kl.estimate_dim_infinity(kl.cross_measure())
    assert 0.9 <= est.slope <= 1.1


def test_dim_cantor():
    est = kl.estimate_dim_infinity(kl.cantor_measure(depth=12))
    assert 0.60 <= est.slope <= 0.66
    assert abs(est.slope - np.log(2) / np.log(3)) <= 0.03


def test_dim_table_monotone():
    for m in (area_rect(), kl.cross_measure(), kl.cantor_measure()):
        est = kl.estimate_dim_infinity(m)
        sups = [s for _, s in est.table]
        assert all(b >= a - 1e-12 for a, b in zip(sups[:-1], sups[1:]))


def test_dim_requires_enough_deltas():
    with pytest.raises(ValueError):
        kl.estimate_dim_infinity(area_rect(), delta_grid=[0.1, 0.2, 0.3])


def test_dim_rejects_empty_centers():
    with pytest.raises(ValueError):
        kl.estimate_dim_infinity(area_rect(), candidate_centers=[])


def test_dim_positive_for_eigensolve_measures():
    # standing assumption: every measure used in an eigensolve has
    # positive lower dimension
    for m in (area_rect(), kl.cross_measure(), kl.cantor_measure()):
        assert kl.estimate_dim_infinity(m).slope > 0


# ---------------------------------------------------------------------------
# measure validation and config round trip
# ---------------------------------------------------------------------------

def test_ifs_validation():
    third = ((1 / 3, 0.0), (0.0, 1 / 3))
    with pytest.raises(ValueError):
        kl.IFSMeasure((kl.AffineMap(third, (0, 0)),), (0.7,), 4)
    with pytest.raises(ValueError):
        kl.IFSMeasure((kl.AffineMap(((1.2, 0), (0, 1.2)), (0, 0)),
                       kl.AffineMap(third, (0, 0))), (0.5, 0.5), 4)


def test_ifs_barycenter_fixed_point():
    m = kl.cantor_measure()
    b = ifs_barycenter(m)
    assert np.allclose(b, [0.5, 0.0], atol=1e-14)
    pts, wts = ifs_leaves(m, depth=6)
    assert wts.sum() == pytest.approx(1.0, abs=1e-14)
    assert wts @ pts[:, 0] == pytest.approx(0.5, abs=1e-12)
    assert np.abs(wts @ pts[:, 1]) < 1e-14


def test_scaled_measure():
    m = kl.scaled(kl.cross_measure(), 2.5)
    assert kl.total_mass(m) == pytest.approx(10.0, abs=1e-12)
    with pytest.raises(ValueError):
        kl.scaled(kl.cross_measure(), -1.0)


def test_config_roundtrip():
    for m in (area_rect(), kl.cross_measure(), kl.cantor_measure(),
              kl.pushforward_measure(kl.cross_measure())):
        cfg = kl.measure_config(m)
        m2 = kl.parse_measure_config(cfg)
        assert kl.total_mass(m2) == pytest.approx(kl.total_mass(m),
                                                  rel=1e-12)
        assert kl.measure_config(m2) == cfg


def test_config_parse_example():
    cfg = {"type": "sum", "parts": [
        {"type": "line", "p": [-1, 0], "q": [1, 0], "density": 1.0},
        {"type": "line", "p": [0, -1], "q": [0, 1], "density": 1.0}]}
    m = kl.parse_measure_config(cfg)
    assert kl.total_mass(m) == pytest.approx(4.0)


def test_default_centers_sample_support():
    centers = default_centers(kl.cross_measure())
    on_axis = (np.abs(centers[:, 0]) < 1e-12) | \
        (np.abs(centers[:, 1]) < 1e-12)
    assert on_axis.all()
    assert any(np.allclose(c, [0, 0]) for c in centers)
