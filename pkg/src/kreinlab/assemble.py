"""Galerkin pencil assembly: P1 stiffness and measure mass matrices.

The stiffness matrix discretizes the Dirichlet energy.  On planar charts
it is the standard P1 matrix; on stereographic hemisphere charts it is
assembled in chart coordinates, which equals the surface energy exactly
because two-dimensional Dirichlet energy is conformally invariant (the
flat-triangle embedded assembly is available separately and agrees up to
discretization).  Closed sphere meshes assemble on the embedded flat
triangles.

The mass matrix carries the measure: M_ij = integral of phi_i phi_j
against mu, built from the measure's global quadrature decomposition so
line measures sitting on mesh edges are counted exactly once.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import measure as measuremod
from . import mesh as meshmod

SYM_TOL = 1e-12


def _p1_stiffness(coords, triangles):
    """P1 stiffness from vertex coordinates in 2 or 3 columns."""
    p = coords[triangles]
    # edge opposite local vertex i, consistently oriented
    e = np.stack([p[:, 2] - p[:, 1],
                  p[:, 0] - p[:, 2],
                  p[:, 1] - p[:, 0]], axis=1)
    if coords.shape[1] == 2:
        areas = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
    else:
        areas = 0.5 * np.linalg.norm(np.cross(e[:, 2], -e[:, 1]), axis=1)
    if np.any(areas <= 1e-300):
        raise ValueError("degenerate triangle encountered during assembly")
    n = coords.shape[0]
    dots = np.einsum("tik,tjk->tij", e, e)
    vals = dots / (4.0 * areas)[:, None, None]
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    K = sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return 0.5 * (K + K.T)


def assemble_stiffness(mesh):
    """Stiffness matrix of the Dirichlet energy on the full vertex set.

    Stereographic charts assemble in chart coordinates (conformal
    invariance makes this the exact surface energy of pulled-back chart
    fields); closed spheres assemble on the embedded triangles.
    """
    if mesh.chart.kind == "sphere":
        return _p1_stiffness(mesh.embedded, mesh.triangles)
    return _p1_stiffness(mesh.vertices, mesh.triangles)


def assemble_stiffness_embedded(mesh):
    """Stiffness assembled on the embedded flat 3-d triangles.

    For hemisphere charts this is the polyhedral-surface energy; it
    approaches the chart assembly under refinement and is used by the
    conformal-invariance checks.
    """
    if mesh.embedded is None:
        raise ValueError("mesh has no embedded coordinates")
    return _p1_stiffness(mesh.embedded, mesh.triangles)


def assemble_measure_mass(mesh, m):
    """Measure mass matrix M_ij = integral of phi_i phi_j d(mu).

    Rows and columns of vertices whose basis functions vanish on the
    support of the measure are identically zero.  Measures concentrated
    on the domain boundary are rejected: Dirichlet basis functions cannot
    see boundary mass.
    """
    if mesh.chart.kind == "stereographic":
        if not isinstance(m, measuremod.PushforwardMeasure):
            raise ValueError("hemisphere-chart pencils take pushforward "
                             "measures")
        # change of variables for image measures is exact: the sphere mass
        # matrix of pulled-back chart basis functions IS the chart mass
        return assemble_measure_mass(meshmod.planar_twin(mesh), m.base)
    _reject_boundary_supported(mesh, m)
    n = mesh.n_vertices
    rows, cols, vals = [], [], []
    for tri, pts, wts in measuremod.mesh_quadrature(m, mesh):
        lam = _bary_batch(mesh, tri, pts)
        vidx = mesh.triangles[tri]
        contrib = np.einsum("q,qi,qj->ij", wts, lam, lam)
        rows.append(np.repeat(vidx, 3))
        cols.append(np.tile(vidx, 3))
        vals.append(contrib.ravel())
    if not rows:
        raise ValueError("measure contributes no quadrature mass on this "
                         "mesh")
    M = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    M = 0.5 * (M + M.T)
    M.eliminate_zeros()
    return M


def _bary_batch(mesh, tri, pts):
    pts = np.atleast_2d(pts)
    if pts.shape[1] == 3:
        # sphere-mesh quadrature reports embedded points; reconstruct
        # barycentric coordinates in the flat triangle
        v = mesh.embedded[mesh.triangles[tri]]
        e1 = v[1] - v[0]
        e2 = v[2] - v[0]
        G = np.array([[e1 @ e1, e1 @ e2], [e1 @ e2, e2 @ e2]])
        rhs = np.column_stack([(pts - v[0]) @ e1, (pts - v[0]) @ e2])
        ab = np.linalg.solve(G, rhs.T).T
        return np.column_stack([1.0 - ab[:, 0] - ab[:, 1],
                                ab[:, 0], ab[:, 1]])
    v = mesh.vertices[mesh.triangles[tri]]
    T = np.array([[v[0, 0] - v[2, 0], v[1, 0] - v[2, 0]],
                  [v[0, 1] - v[2, 1], v[1, 1] - v[2, 1]]])
    rhs = (pts - v[2]).T
    l01 = np.linalg.solve(T, rhs).T
    return np.column_stack([l01[:, 0], l01[:, 1],
                            1.0 - l01[:, 0] - l01[:, 1]])


def _reject_boundary_supported(mesh, m):
    for part in _leaf_measures(m):
        if isinstance(part, measuremod.LineMeasure):
            quad_mesh = meshmod.planar_twin(mesh)
            bedges = meshmod.boundary_edges(quad_mesh)
            if len(bedges) == 0:
                continue
            bpts = quad_mesh.vertices[bedges]
            for seg in part.segments:
                samples = np.linspace(0, 1, 9)[:, None] * \
                    (np.subtract(seg.q, seg.p))[None, :] + np.asarray(seg.p)
                d = _dist_to_edges(samples, bpts)
                if np.all(d < 1e-12):
                    raise ValueError(
                        "measure segment "
                        f"{seg.p} -> {seg.q} lies on the domain boundary; "
                        "Dirichlet basis functions vanish there")


def _leaf_measures(m):
    if isinstance(m, measuremod.SumMeasure):
        for p in m.parts:
            yield from _leaf_measures(p)
    elif isinstance(m, measuremod.PushforwardMeasure):
        yield from _leaf_measures(m.base)
    else:
        yield m


def _dist_to_edges(pts, edge_pts):
    a = edge_pts[:, 0][None, :, :]
    b = edge_pts[:, 1][None, :, :]
    p = pts[:, None, :]
    ab = b - a
    t = np.clip(np.einsum("pek,pek->pe", p - a, ab)
                / np.maximum(np.einsum("pek,pek->pe", ab, ab), 1e-300),
                0.0, 1.0)
    proj = a + t[:, :, None] * ab
    return np.linalg.norm(p - proj, axis=2).min(axis=1)


# ---------------------------------------------------------------------------
# the pencil
# ---------------------------------------------------------------------------

@dataclass
class Pencil:
    """Stiffness/measure-mass pair reduced to the active degrees of freedom.

    ``K`` and ``M`` are the full vertex-set matrices; ``dof_map`` lists
    the active vertices (interior for Dirichlet, all for closed).  The
    object is immutable by convention; the factorization cache is the
    only mutable state.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: np.ndarray
    boundary_condition: str
    n_vertices: int
    mesh: object = None
    measure: object = None
    _lu: object = field(default=None, repr=False, compare=False)

    @property
    def K_red(self):
        return self.K[self.dof_map][:, self.dof_map]

    @property
    def M_red(self):
        return self.M[self.dof_map][:, self.dof_map]

    def embed(self, u_red):
        u = np.zeros(self.n_vertices)
        u[self.dof_map] = u_red
        return u

    def reduce(self, u_full):
        return np.asarray(u_full, dtype=float)[self.dof_map]


def build_pencil(mesh, m, boundary_condition):
    """Assemble and reduce the (K, M) pencil for the given problem."""
    if boundary_condition not in ("dirichlet", "closed"):
        raise ValueError("boundary_condition must be 'dirichlet' or "
                         "'closed'")
    has_boundary = bool(mesh.boundary_mask.any())
    if boundary_condition == "dirichlet" and not has_boundary:
        raise ValueError("Dirichlet condition on a closed mesh")
    if boundary_condition == "closed" and has_boundary:
        raise ValueError("closed condition on a mesh with boundary")
    K = assemble_stiffness(mesh)
    M = assemble_measure_mass(mesh, m)
    if boundary_condition == "dirichlet":
        dof = np.flatnonzero(~mesh.boundary_mask)
    else:
        dof = np.arange(mesh.n_vertices)
    _check_symmetry(K, "stiffness")
    _check_symmetry(M, "mass")
    return Pencil(K, M, dof, boundary_condition, mesh.n_vertices,
                  mesh=mesh, measure=m)


def _check_symmetry(A, what):
    d = sp.csr_matrix(A - A.T)
    scale = max(abs(A).max(), 1e-300)
    if d.nnz and abs(d).max() > SYM_TOL * scale:
        raise ValueError(f"{what} matrix is not symmetric")


def dump_matrix(A, path_or_file):
    """Write a sparse matrix as 0-based ``i j value`` triplets."""
    coo = sp.coo_matrix(A)
    order = np.lexsort((coo.col, coo.row))
    own = isinstance(path_or_file, (str, bytes))
    f = open(path_or_file, "w") if own else path_or_file
    try:
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            f.write(f"{i} {j} {v:.17g}\n")
    finally:
        if own:
            f.close()
