import io

import numpy as np
import pytest

import kreinlab as kl
from kreinlab.mesh import (barycentric, boundary_edges, edges,
                           euler_characteristic, max_edge_length, mesh_area,
                           min_angle_degrees, triangle_areas)


def test_rectangle_combinatorics():
    m = kl.gen_rectangle(1, 1, 2)
    assert m.n_vertices == 25
    assert m.n_triangles == 32
    assert int(m.boundary_mask.sum()) == 16


def test_rectangle_area_exact():
    for n in (2, 5, 16):
        m = kl.gen_rectangle(1, 1, n)
        assert mesh_area(m) == pytest.approx(4.0, abs=1e-14)
    m = kl.gen_rectangle(1.5, 0.5, 4)
    assert mesh_area(m) == pytest.approx(3.0, abs=1e-14)


def test_rectangle_contains_origin_on_axes():
    m = kl.gen_rectangle(1, 1, 64)
    d = np.linalg.norm(m.vertices, axis=1)
    i = int(d.argmin())
    assert m.vertices[i, 0] == 0.0 and m.vertices[i, 1] == 0.0
    assert not m.boundary_mask[i]


def test_rectangle_axes_are_edge_unions():
    m = kl.gen_rectangle(1, 1, 4)
    e = edges(m)
    ev = m.vertices[e]
    on_x_axis = (ev[:, 0, 1] == 0.0) & (ev[:, 1, 1] == 0.0)
    # the x axis is covered by 2n consecutive edges
    xs = np.sort(ev[on_x_axis][:, :, 0].ravel())
    assert on_x_axis.sum() == 8
    assert xs[0] == -1.0 and xs[-1] == 1.0


def test_rectangle_invalid_resolution():
    with pytest.raises(ValueError):
        kl.gen_rectangle(1, 1, 1)
    with pytest.raises(ValueError):
        kl.gen_rectangle(-1, 1, 4)


def test_disk_area_converges():
    # analytic oracle: area of the unit disk
    m = kl.gen_disk(1.0, 5)
    assert m.n_triangles >= 5000
    assert abs(mesh_area(m) - np.pi) / np.pi < 0.01


def test_disk_boundary_on_circle():
    m = kl.gen_disk(2.0, 2)
    b = m.vertices[m.boundary_mask]
    assert np.abs((b ** 2).sum(axis=1) - 4.0).max() < 1e-12


def test_disk_coarsest_has_interior_vertex():
    m = kl.gen_disk(1.0, 1)
    assert (~m.boundary_mask).sum() >= 1


def test_disk_preconditions():
    with pytest.raises(ValueError):
        kl.gen_disk(0.0, 1)
    with pytest.raises(ValueError):
        kl.gen_disk(1.0, 0)


def test_euler_characteristic_planar():
    assert euler_characteristic(kl.gen_rectangle(1, 1, 3)) == 1
    assert euler_characteristic(kl.gen_disk(1.0, 2)) == 1


def test_positive_areas_and_angles():
    for m in (kl.gen_rectangle(1, 1, 3), kl.gen_disk(1.0, 2)):
        assert triangle_areas(m).min() > 0
        assert min_angle_degrees(m) >= 5.0


def test_refinement_halves_edge_length():
    for maker, args in ((kl.gen_rectangle, (1, 1)), (kl.gen_disk, (1.0,))):
        h = [max_edge_length(maker(*args, n)) for n in (2, 3, 4)]
        for coarse, fine in zip(h[:-1], h[1:]):
            ratio = coarse / fine
            assert 2 / 1.5 < ratio < 2 * 1.5


def test_hemisphere_chart_embedding():
    base = kl.gen_rectangle(1, 1, 4)
    h = kl.gen_hemisphere_chart(2.0, base)
    # chart formula at the pole and on the equator
    i0 = int(np.linalg.norm(base.vertices, axis=1).argmin())
    assert np.allclose(h.embedded[i0], [0.0, 0.0, 2.0], atol=1e-14)
    assert np.abs((h.embedded ** 2).sum(axis=1) - 4.0).max() < 1e-12
    assert np.array_equal(h.triangles, base.triangles)
    assert np.array_equal(h.boundary_mask, base.boundary_mask)
    # equator point maps to itself
    disk = kl.gen_disk(2.0, 2)
    hd = kl.gen_hemisphere_chart(2.0, disk)
    j = int(np.flatnonzero(disk.boundary_mask)[0])
    v = disk.vertices[j]
    assert np.allclose(hd.embedded[j], [v[0], v[1], 0.0], atol=1e-9)


def test_hemisphere_chart_rejects_oversized_base():
    base = kl.gen_rectangle(1.9, 1.9, 2)  # corners beyond radius 2
    with pytest.raises(ValueError):
        kl.gen_hemisphere_chart(2.0, base)


def test_sphere_mesh_closed():
    s = kl.gen_sphere(1.0, 2)
    assert not s.boundary_mask.any()
    assert euler_characteristic(s) == 2
    assert np.abs(np.linalg.norm(s.embedded, axis=1) - 1.0).max() < 1e-12
    assert s.n_triangles == 20 * 4 ** 2
    # outward orientation: normal . centroid > 0
    p = s.embedded[s.triangles]
    nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    assert (np.einsum("ij,ij->i", nrm, p.mean(axis=1)) > 0).all()


def test_barycentric_roundtrip():
    m = kl.gen_rectangle(1, 1, 3)
    rng = np.random.default_rng(2)
    for _ in range(20):
        t = rng.integers(0, m.n_triangles)
        lam = rng.dirichlet([1, 1, 1])
        p = lam @ m.vertices[m.triangles[t]]
        lam2 = barycentric(m, t, p)
        assert np.allclose(np.sort(lam), np.sort(lam2), atol=1e-12)


def test_mesh_io_roundtrip():
    for m in (kl.gen_rectangle(1, 1, 3), kl.gen_disk(1.5, 2),
              kl.gen_sphere(1.0, 1),
              kl.gen_hemisphere_chart(2.0, kl.gen_rectangle(1, 1, 2))):
        buf = io.StringIO()
        kl.write_mesh(m, buf)
        buf.seek(0)
        m2 = kl.read_mesh(buf)
        assert np.array_equal(m.vertices, m2.vertices)
        assert np.array_equal(m.triangles, m2.triangles)
        assert np.array_equal(m.boundary_mask, m2.boundary_mask)
        assert m.chart.kind == m2.chart.kind
        if m.embedded is not None:
            assert np.array_equal(m.embedded, m2.embedded)


def test_mesh_io_header(tmp_path):
    m = kl.gen_rectangle(1, 1, 2)
    path = tmp_path / "m.klm"
    kl.write_mesh(m, str(path))
    first = path.read_text().splitlines()[0]
    assert first == "KLMESH 1 planar"


def test_boundary_edges_count():
    m = kl.gen_rectangle(1, 1, 2)
    assert len(boundary_edges(m)) == 16
