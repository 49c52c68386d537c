import numpy as np
import pytest

import kreinlab as kl
from kreinlab._quadrature import gauss_on_interval, geometric_panels
from kreinlab.green import SphereConstant


def qone(pts):
    return np.ones(len(np.atleast_2d(pts)))


@pytest.fixture(scope="module")
def rect_kernel():
    return kl.RectangleDirichlet(1.0, 1.0, 200)


@pytest.fixture(scope="module")
def cross_pair_32():
    mesh = kl.gen_rectangle(1, 1, 32)
    pen = kl.build_pencil(mesh, kl.cross_measure(), "dirichlet")
    return mesh, kl.solve_eigenpairs(pen, 1)[0]


FP_SAMPLES = np.array([
    [0.0, 0.0], [0.3, 0.0], [0.0, -0.55], [0.45, 0.35], [-0.2, 0.6],
    [0.7, 0.0], [-0.5, -0.5], [0.05, 0.05], [0.9, 0.1], [0.0, 0.35],
    [-0.85, 0.0], [0.2, -0.2],
])


# ---------------------------------------------------------------------------
# kernel values and structure
# ---------------------------------------------------------------------------

def test_disk_kernel_radial_limit():
    # radial-limit oracle: G((x, 0), 0) = ln(R/|x|) / (2 pi)
    g = kl.kernel_eval(kl.DiskDirichlet(1.0), (0.5, 0.0), (0.0, 0.0))
    assert g == pytest.approx(np.log(2.0) / (2 * np.pi), abs=1e-14)
    g2 = kl.kernel_eval(kl.DiskDirichlet(2.0), (0.5, 0.0), (0.0, 0.0))
    assert g2 == pytest.approx(np.log(4.0) / (2 * np.pi), abs=1e-14)


def test_kernel_diag_and_domain_errors():
    k = kl.DiskDirichlet(1.0)
    with pytest.raises(ValueError):
        kl.kernel_eval(k, (0.3, 0.3), (0.3, 0.3))
    with pytest.raises(ValueError):
        kl.kernel_eval(k, (1.5, 0.0), (0.0, 0.0))


def test_kernel_symmetry_and_positivity(rect_kernel):
    rng = np.random.default_rng(1)
    n = 500
    disk = kl.DiskDirichlet(1.0)
    r = np.sqrt(rng.uniform(0, 0.95, (2, n)))
    t = rng.uniform(0, 2 * np.pi, (2, n))
    X = np.column_stack([r[0] * np.cos(t[0]), r[0] * np.sin(t[0])])
    Y = np.column_stack([r[1] * np.cos(t[1]), r[1] * np.sin(t[1])])
    for x, y in zip(X[:100], Y[:100]):
        gxy = kl.kernel_eval(disk, x, y)
        gyx = kl.kernel_eval(disk, y, x)
        assert abs(gxy - gyx) < 1e-10
        assert gxy > -1e-10
    P = rng.uniform(-0.98, 0.98, (n, 2))
    Q = rng.uniform(-0.98, 0.98, (n, 2))
    gpq = rect_kernel.eval_pairs(P, Q)
    gqp = rect_kernel.eval_pairs(Q, P)
    assert np.abs(gpq - gqp).max() < 1e-10
    assert gpq.min() > -1e-10
    sph = kl.SphereClosed(1.0)
    U = rng.standard_normal((100, 3))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    V = rng.standard_normal((100, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    for u, v in zip(U, V):
        assert abs(kl.kernel_eval(sph, u, v)
                   - kl.kernel_eval(sph, v, u)) < 1e-10


def test_dirichlet_boundary_vanishing(rect_kernel):
    disk = kl.DiskDirichlet(1.0)
    ang = np.linspace(0, 2 * np.pi, 17)[:-1]
    for a in ang:
        b = (np.cos(a), np.sin(a))
        assert abs(kl.kernel_eval(disk, b, (0.2, -0.1))) < 1e-6
    for b in [(1.0, 0.3), (-1.0, -0.4), (0.2, 1.0), (-0.7, -1.0)]:
        assert abs(kl.kernel_eval(rect_kernel, b, (0.1, 0.05))) < 1e-8


def test_sphere_zero_mean():
    # oracle: the angular integral of log(2/(1-t)) over t in [-1,1] is 2,
    # checked by graded quadrature, making the -1/(4 pi) shift zero-mean
    sph = kl.SphereClosed(1.0)
    panels = 1.0 - geometric_panels(1e-12, 2.0, 2.0)[::-1]
    acc = 0.0
    for t0, t1 in zip(panels[:-1], panels[1:]):
        t, w = gauss_on_interval(t0, t1, 10)
        acc += float((w * np.log(2.0 / (1.0 - t))).sum())
    assert acc == pytest.approx(2.0, abs=1e-9)
    mean = 0.0
    for t0, t1 in zip(panels[:-1], panels[1:]):
        t, w = gauss_on_interval(t0, t1, 10)
        mean += 0.5 * float((w * sph.eval_cos(t)).sum())
    assert abs(mean) < 1e-6


def test_sphere_kernel_log_singularity_order():
    # |G| <= C (1 + |log rho|) near the diagonal
    sph = kl.SphereClosed(1.0)
    for gamma in 10.0 ** -np.arange(1, 8):
        g = float(sph.eval_cos(np.cos(gamma)))
        assert abs(g) <= 1.0 * (1.0 + abs(np.log(gamma)))


# ---------------------------------------------------------------------------
# distributional identity
# ---------------------------------------------------------------------------

def test_identity_disk_bumps():
    disk = kl.DiskDirichlet(1.0)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(10):
        c = rng.uniform(-0.3, 0.3, 2)
        r = rng.uniform(0.2, 0.4)
        y = rng.uniform(-0.5, 0.5, 2)
        bump = kl.PlanarBump(tuple(c), r)
        worst = max(worst, kl.verify_distributional_identity(disk, y, bump))
    assert worst < 1e-4


def test_identity_rect_bumps(rect_kernel):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        c = rng.uniform(-0.3, 0.3, 2)
        r = rng.uniform(0.2, 0.4)
        y = rng.uniform(-0.5, 0.5, 2)
        bump = kl.PlanarBump(tuple(c), r)
        worst = max(worst,
                    kl.verify_distributional_identity(rect_kernel, y, bump))
    assert worst < 1e-4


def test_identity_rect_decreasing_in_series_terms():
    bump = kl.PlanarBump((0.25, -0.1), 0.3)
    y = np.array([0.05, 0.2])
    res = [kl.verify_distributional_identity(
        kl.RectangleDirichlet(1.0, 1.0, n), y, bump)
        for n in (24, 48, 96, 200)]
    assert res[0] > res[1] > res[2] > res[3]
    assert res[-1] < 1e-4


def test_identity_sphere_bumps():
    sph = kl.SphereClosed(1.0)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(10):
        c = rng.standard_normal(3)
        c /= np.linalg.norm(c)
        bump = kl.SphereBump(tuple(c), float(np.cos(rng.uniform(0.5, 1.0))))
        y = rng.standard_normal(3)
        y /= np.linalg.norm(y)
        worst = max(worst, kl.verify_distributional_identity(sph, y, bump))
    assert worst < 1e-4


def test_identity_sphere_constant_target_zero():
    sph = kl.SphereClosed(1.0)
    res = kl.verify_distributional_identity(sph, np.array([0, 0, 1.0]),
                                            SphereConstant(4.2))
    assert res < 1e-6


# ---------------------------------------------------------------------------
# the Green operator
# ---------------------------------------------------------------------------

def test_green_apply_zero_field(rect_kernel):
    v = kl.green_apply(rect_kernel, kl.cross_measure(),
                       lambda pts: np.zeros(len(np.atleast_2d(pts))),
                       np.array([0.2, 0.3]))
    assert v == 0.0


def test_c2_constant_stable_under_doubling(rect_kernel):
    cross = kl.cross_measure()

    def grid(k):
        g = np.linspace(-0.75, 0.75, k)
        X, Y = np.meshgrid(g, g)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        return np.vstack([pts, [[0.0, 0.0], [0.5, 0.0], [0.0, -0.5]]])

    c_coarse = kl.c2_constant(rect_kernel, cross, grid(5))
    c_fine = kl.c2_constant(rect_kernel, cross, grid(9))
    assert np.isfinite(c_fine) and c_fine > 0
    assert abs(c_fine - c_coarse) / c_fine <= 0.02


def test_c2_constant_point_cluster(rect_kernel):
    # two-point hand estimate: a tiny far cluster acts like a point mass
    tiny = ((0.01, 0.0), (0.0, 0.01))
    ifs = kl.IFSMeasure((kl.AffineMap(tiny, (0.594, 0.297)),
                         kl.AffineMap(tiny, (0.606, 0.303))),
                        (0.5, 0.5), depth=8)
    x0 = np.array([-0.5, -0.5])
    val = kl.c2_constant(rect_kernel, ifs, x0.reshape(1, 2))
    point = kl.kernel_eval(rect_kernel, x0, (0.6, 0.3))
    assert val == pytest.approx(point, rel=0.05)


def test_c2_constant_scales_linearly(rect_kernel):
    cross = kl.cross_measure()
    samples = np.array([[0.0, 0.0], [0.4, 0.2]])
    base = kl.c2_constant(rect_kernel, cross, samples)
    scaled = kl.c2_constant(rect_kernel, kl.scaled(cross, 3.0), samples)
    assert scaled == pytest.approx(3.0 * base, rel=1e-12)


def test_operator_norm_bounded_by_c2(rect_kernel, cross_pair_32):
    # |G_mu f| <= C2 * sup |f| pointwise, checked on random P1 data
    mesh, _ = cross_pair_32
    cross = kl.cross_measure()
    samples = FP_SAMPLES[:6]
    c2 = kl.c2_constant(rect_kernel, cross, samples)
    rng = np.random.default_rng(8)
    for _ in range(20):
        f = kl.P1Field(mesh, rng.standard_normal(mesh.n_vertices))
        fmax = np.abs(f.coeffs).max()
        worst = max(abs(kl.green_apply(rect_kernel, cross, f, s))
                    for s in samples)
        assert worst <= c2 * fmax * (1 + 1e-9)


def test_green_of_eigenfunction_bounded(rect_kernel, cross_pair_32):
    mesh, pair = cross_pair_32
    u = kl.P1Field(mesh, pair.coeffs)
    vals_coarse = [abs(kl.green_apply(rect_kernel, kl.cross_measure(), u, s))
                   for s in FP_SAMPLES[:6]]
    vals_fine = [abs(kl.green_apply(rect_kernel, kl.cross_measure(), u, s))
                 for s in FP_SAMPLES]
    assert np.isfinite(vals_fine).all()
    assert max(vals_fine) <= max(max(vals_coarse) * 1.5,
                                 max(vals_coarse) + 1.0)


def test_kernel_slices_uniformly_square_integrable(rect_kernel):
    # sup over y of the L2(mu) norm of G_y stays finite and stable under
    # sample refinement (the log singularity is square integrable against
    # the line measure)
    cross = kl.cross_measure()
    mesh = kl.gen_rectangle(1, 1, 16)

    def l2_norm(y):
        def gsq(pts):
            return rect_kernel.eval_one_many(np.asarray(y), pts) ** 2

        val = sum(kl.integrate_on_element(cross, gsq, mesh, t)
                  for t in range(mesh.n_triangles))
        return np.sqrt(val)

    sup_c = max(l2_norm(y) for y in FP_SAMPLES[:6])
    sup_f = max(l2_norm(y) for y in FP_SAMPLES)
    assert np.isfinite(sup_f)
    assert sup_c <= sup_f <= sup_c * 1.25 + 0.1


def test_fixed_point_cross_decreasing(cross_pair_32, rect_kernel):
    # the 64^2 mesh keeps the residual under 5% and beats the coarse mesh
    # by a clear margin (the comparison spans two doublings so the mesh
    # term stays above the series-truncation floor of the 200-term kernel)
    mesh32, pair32 = cross_pair_32
    mesh8 = kl.gen_rectangle(1, 1, 8)
    pen8 = kl.build_pencil(mesh8, kl.cross_measure(), "dirichlet")
    pair8 = kl.solve_eigenpairs(pen8, 1)[0]
    r8 = kl.fixed_point_residual(rect_kernel, kl.cross_measure(), mesh8,
                                 pair8, FP_SAMPLES)
    r32 = kl.fixed_point_residual(rect_kernel, kl.cross_measure(), mesh32,
                                  pair32, FP_SAMPLES)
    assert r32 < 0.05
    assert r32 < r8


def test_fixed_point_lebesgue_analytic(rect_kernel):
    # analytic eigenfunction oracle: the (1,1) sine product with
    # lambda = pi^2 / 2 under the area measure
    area = kl.AreaMeasure(kl.RectDomain(1, 1))
    lam = np.pi ** 2 / 2

    def u(pts):
        pts = np.atleast_2d(pts)
        return np.sin(np.pi * (pts[:, 0] + 1) / 2) \
            * np.sin(np.pi * (pts[:, 1] + 1) / 2)

    worst = 0.0
    for s in [(0.0, 0.0), (0.3, -0.2), (0.7, 0.5), (-0.5, 0.1)]:
        g = kl.green_apply(rect_kernel, area, u, np.array(s))
        worst = max(worst, abs(u(np.array(s))[0] - lam * g))
    assert worst < 1e-3


def test_fixed_point_sphere_mode():
    mesh = kl.gen_sphere(1.0, 3)
    nu = kl.AreaMeasure(kl.SphereDomain(1.0))
    pen = kl.build_pencil(mesh, nu, "closed")
    pairs = kl.solve_eigenpairs(pen, 2)
    kern = kl.SphereClosed(1.0)
    samples = mesh.embedded[::41][:16]
    res = kl.fixed_point_residual(kern, nu, mesh, pairs[1], samples)
    assert res < 0.02
    with pytest.raises(ValueError):
        kl.fixed_point_residual(kern, nu, mesh, pairs[0], samples)


def test_green_apply_rejects_pushforward(rect_kernel):
    pushed = kl.pushforward_measure(kl.cross_measure())
    with pytest.raises(ValueError):
        kl.green_apply(rect_kernel, pushed, qone, np.array([0.1, 0.1]))


def test_green_apply_ifs_leaf_collision(rect_kernel):
    m = kl.cantor_measure(depth=4)
    from kreinlab.measure import ifs_leaves
    pts, _ = ifs_leaves(m)
    with pytest.raises(kl.QuadratureError):
        kl.green_apply(rect_kernel, m, qone, pts[0])
