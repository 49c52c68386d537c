"""Triangulations of rectangles, disks, sphere charts and closed spheres.

All meshes are conforming P1 triangulations with positively oriented
triangles.  Rectangle meshes are structured crossed grids whose axis
lines {x=0} and {y=0} are unions of mesh edges, so line measures on the
axes align exactly with element boundaries.  Disk meshes use a
deterministic concentric-ring construction with boundary vertices placed
exactly on the circle.  Hemisphere charts re-tag a planar mesh with the
stereographic embedding; closed spheres are subdivided icosahedra.
"""

import weakref
from dataclasses import dataclass, field

import numpy as np

from .conformal import StereoChart

MIN_ANGLE_DEG = 5.0
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Chart:
    """Chart tag of a mesh: planar, stereographic (hemisphere) or sphere."""

    kind: str
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("planar", "stereographic", "sphere"):
            raise ValueError(f"unknown chart kind: {self.kind!r}")
        if self.kind != "planar" and (self.radius is None or self.radius <= 0):
            raise ValueError("sphere charts require a positive radius")


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangulation with boundary classification.

    Attributes
    ----------
    vertices : (n, 2) float array
        Chart coordinates.  For closed spheres these hold (longitude,
        colatitude) and are used only for reporting.
    triangles : (m, 3) int array
        Vertex triples, positively oriented in chart coordinates for
        planar charts and outward-oriented for sphere meshes.
    boundary_mask : (n,) bool array
        True exactly for vertices on the domain boundary.
    chart : Chart
    embedded : (n, 3) float array or None
        Sphere-surface coordinates for stereographic and sphere charts.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_mask: np.ndarray
    chart: Chart = field(default_factory=lambda: Chart("planar"))
    embedded: np.ndarray | None = None

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_mask", "embedded"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def coords(self):
        """Coordinates used for assembly: embedded for spheres, else chart."""
        if self.chart.kind == "sphere":
            return self.embedded
        return self.vertices


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def gen_rectangle(half_width, half_height, n):
    """Structured crossed-grid triangulation of (-a, a) x (-b, b).

    ``n`` counts cells per half-side, so the grid has 2n x 2n cells and
    the axes {x=0}, {y=0} are mesh lines.  Each cell is split along the
    same diagonal, making the construction bit-stable.

    Examples: n=2 gives 25 vertices, 32 triangles, 16 boundary vertices.
    """
    if n < 2:
        raise ValueError("rectangle resolution n must be at least 2")
    if half_width <= 0 or half_height <= 0:
        raise ValueError("half widths must be positive")
    a, b = float(half_width), float(half_height)
    k = 2 * n + 1
    xs = (np.arange(k) - n) * (a / n)
    ys = (np.arange(k) - n) * (b / n)
    xs[0], xs[-1] = -a, a
    ys[0], ys[-1] = -b, b
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * k + i

    tris = []
    for j in range(2 * n):
        for i in range(2 * n):
            v00 = vid(i, j)
            v10 = vid(i + 1, j)
            v01 = vid(i, j + 1)
            v11 = vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    triangles = np.asarray(tris, dtype=np.int64)

    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="xy")
    boundary = ((ii == 0) | (ii == k - 1) | (jj == 0) | (jj == k - 1)).ravel()

    mesh = TriMesh(vertices, triangles, boundary)
    _validate(mesh)
    return mesh


def gen_disk(radius, n):
    """Concentric-ring triangulation of the open disk of given radius.

    Refinement level ``n`` uses 3 * 2**(n-1) rings; each level roughly
    halves the maximum edge length.  Ring-m vertices lie exactly on the
    circle.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n < 1:
        raise ValueError("disk refinement level n must be at least 1")
    m = 3 * 2 ** (n - 1)
    verts = [(0.0, 0.0)]
    ring_start = [0, 1]
    for j in range(1, m + 1):
        cnt = 6 * j
        r = radius * j / m
        ang = 2.0 * np.pi * np.arange(cnt) / cnt
        verts.extend(zip(r * np.cos(ang), r * np.sin(ang)))
        ring_start.append(ring_start[-1] + cnt)
    vertices = np.asarray(verts)

    tris = []
    # central fan
    for t in range(6):
        tris.append((0, 1 + t, 1 + (t + 1) % 6))
    # annuli
    for j in range(2, m + 1):
        n_in, n_out = 6 * (j - 1), 6 * j
        s_in, s_out = ring_start[j - 1], ring_start[j]
        i = o = 0
        while i < n_in or o < n_out:
            adv_inner = (i + 1) * n_out <= (o + 1) * n_in
            if o == n_out or (i < n_in and adv_inner):
                tris.append((s_in + i % n_in, s_out + o % n_out,
                             s_in + (i + 1) % n_in))
                i += 1
            else:
                tris.append((s_in + i % n_in, s_out + o % n_out,
                             s_out + (o + 1) % n_out))
                o += 1
    triangles = np.asarray(tris, dtype=np.int64)

    boundary = np.zeros(len(vertices), dtype=bool)
    boundary[ring_start[m]:] = True

    mesh = TriMesh(vertices, triangles, boundary)
    _validate(mesh)
    return mesh


def gen_hemisphere_chart(sphere_radius, base_mesh):
    """Re-tag a planar mesh as the stereographic chart of a hemisphere.

    Connectivity and boundary flags are unchanged; the embedded
    coordinates are the stereographic lifts of the chart vertices.  The
    base mesh must fit inside the chart disk (radius = sphere radius).
    """
    if base_mesh.chart.kind != "planar":
        raise ValueError("base mesh must be planar")
    chart = StereoChart(sphere_radius)
    r = np.linalg.norm(base_mesh.vertices, axis=1)
    if np.any(r > sphere_radius * (1.0 + 1e-12)):
        raise ValueError("base mesh vertex lies outside the chart disk of "
                         f"radius {sphere_radius}")
    embedded = chart.inverse(base_mesh.vertices)
    return TriMesh(base_mesh.vertices, base_mesh.triangles,
                   base_mesh.boundary_mask,
                   Chart("stereographic", float(sphere_radius)), embedded)


def gen_sphere(radius, level):
    """Icosphere triangulation of the full sphere (closed, no boundary).

    ``level`` subdivision steps split every icosahedron face into 4 and
    project new vertices to the sphere; level L has 20 * 4**L triangles.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if level < 0:
        raise ValueError("subdivision level must be nonnegative")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    raw = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=float)
    verts = [tuple(v / np.linalg.norm(v)) for v in raw]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]

    for _ in range(level):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key in cache:
                return cache[key]
            p = np.asarray(verts[i]) + np.asarray(verts[j])
            p /= np.linalg.norm(p)
            verts.append(tuple(p))
            cache[key] = len(verts) - 1
            return cache[key]

        for (i, j, k) in faces:
            a = midpoint(i, j)
            b = midpoint(j, k)
            c = midpoint(k, i)
            new_faces.extend([(i, a, c), (j, b, a), (k, c, b), (a, b, c)])
        faces = new_faces

    embedded = np.asarray(verts) * radius
    triangles = np.asarray(faces, dtype=np.int64)
    # outward orientation
    p = embedded[triangles]
    nrm = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    cen = p.mean(axis=1)
    flip = np.einsum("ij,ij->i", nrm, cen) < 0
    triangles[flip] = triangles[flip][:, ::-1]

    lon = np.arctan2(embedded[:, 1], embedded[:, 0])
    colat = np.arccos(np.clip(embedded[:, 2] / radius, -1.0, 1.0))
    vertices = np.column_stack([lon, colat])
    boundary = np.zeros(len(vertices), dtype=bool)
    return TriMesh(vertices, triangles, boundary,
                   Chart("sphere", float(radius)), embedded)


def _validate(mesh):
    areas = triangle_areas(mesh)
    if np.any(areas <= 0):
        raise ValueError("mesh contains a degenerate or inverted triangle")
    if min_angle_degrees(mesh) < MIN_ANGLE_DEG:
        raise ValueError("mesh contains a sliver triangle (min angle < "
                         f"{MIN_ANGLE_DEG} degrees)")


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------

def triangle_areas(mesh, embedded=False):
    """Per-triangle areas in chart coordinates (or embedded 3-space)."""
    if embedded or mesh.chart.kind == "sphere":
        p = mesh.embedded[mesh.triangles]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return 0.5 * np.linalg.norm(n, axis=1)
    p = mesh.vertices[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def mesh_area(mesh, embedded=False):
    return float(triangle_areas(mesh, embedded=embedded).sum())


def edges(mesh):
    """Sorted unique vertex-pair edges as an (e, 2) array."""
    t = mesh.triangles
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def edge_triangle_adjacency(mesh):
    """Map from each edge to the 1 or 2 triangles containing it.

    Returns (edge_array, tri_a, tri_b) where tri_b is -1 for boundary
    edges.
    """
    t = mesh.triangles
    m = t.shape[0]
    e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e.sort(axis=1)
    owner = np.tile(np.arange(m), 3)
    order = np.lexsort((e[:, 1], e[:, 0]))
    e, owner = e[order], owner[order]
    uniq, start = np.unique(e, axis=0, return_index=True)
    tri_a = owner[start]
    tri_b = np.full(len(uniq), -1, dtype=np.int64)
    nxt = np.append(start[1:], len(e))
    dup = nxt - start == 2
    tri_b[dup] = owner[start[dup] + 1]
    return uniq, tri_a, tri_b


def max_edge_length(mesh, embedded=False):
    coords = mesh.embedded if (embedded or mesh.chart.kind == "sphere") \
        else mesh.vertices
    e = edges(mesh)
    return float(np.linalg.norm(coords[e[:, 0]] - coords[e[:, 1]],
                                axis=1).max())


def min_angle_degrees(mesh):
    coords = mesh.coords()
    p = coords[mesh.triangles]
    angles = []
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        v = p[:, (i + 2) % 3] - p[:, i]
        cu = np.linalg.norm(u, axis=1)
        cv = np.linalg.norm(v, axis=1)
        c = np.einsum("ij,ij->i", u, v) / (cu * cv)
        angles.append(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))
    return float(np.min(angles))


def euler_characteristic(mesh):
    return mesh.n_vertices - len(edges(mesh)) + mesh.n_triangles


def boundary_edges(mesh):
    """Edges belonging to exactly one triangle."""
    e, _, tri_b = edge_triangle_adjacency(mesh)
    return e[tri_b < 0]


# per-mesh caches for the derived structures used in hot loops
_locator_cache = weakref.WeakKeyDictionary()
_adjacency_cache = weakref.WeakKeyDictionary()
_planar_cache = weakref.WeakKeyDictionary()


def locator_for(mesh):
    loc = _locator_cache.get(mesh)
    if loc is None:
        loc = TriLocator(mesh)
        _locator_cache[mesh] = loc
    return loc


def adjacency_for(mesh):
    adj = _adjacency_cache.get(mesh)
    if adj is None:
        adj = edge_triangle_adjacency(mesh)
        _adjacency_cache[mesh] = adj
    return adj


def planar_twin(mesh):
    """The same triangulation re-tagged planar (for chart-side quadrature)."""
    if mesh.chart.kind == "planar":
        return mesh
    twin = _planar_cache.get(mesh)
    if twin is None:
        twin = TriMesh(mesh.vertices, mesh.triangles, mesh.boundary_mask,
                       Chart("planar"), None)
        _planar_cache[mesh] = twin
    return twin


# ---------------------------------------------------------------------------
# point location and P1 interpolation
# ---------------------------------------------------------------------------

class TriLocator:
    """Uniform-bin point locator for planar-chart meshes."""

    def __init__(self, mesh, bins=None):
        if mesh.chart.kind == "sphere":
            raise ValueError("TriLocator works on chart coordinates only")
        self.mesh = mesh
        pts = mesh.vertices[mesh.triangles]
        self.tri_min = pts.min(axis=1)
        self.tri_max = pts.max(axis=1)
        self.lo = mesh.vertices.min(axis=0)
        self.hi = mesh.vertices.max(axis=0)
        if bins is None:
            bins = max(4, int(np.sqrt(mesh.n_triangles / 2)))
        self.bins = bins
        self.cell = (self.hi - self.lo) / bins
        self.cell[self.cell == 0] = 1.0
        self.grid = [[[] for _ in range(bins)] for _ in range(bins)]
        ilo = self._cell_index(self.tri_min)
        ihi = self._cell_index(self.tri_max)
        for t in range(mesh.n_triangles):
            for ix in range(ilo[t, 0], ihi[t, 0] + 1):
                for iy in range(ilo[t, 1], ihi[t, 1] + 1):
                    self.grid[ix][iy].append(t)

    def _cell_index(self, pts):
        idx = np.floor((pts - self.lo) / self.cell).astype(int)
        return np.clip(idx, 0, self.bins - 1)

    def candidates(self, p):
        ix, iy = self._cell_index(np.asarray(p, dtype=float).reshape(1, 2))[0]
        return self.grid[ix][iy]

    def locate(self, p, tol=1e-12):
        """Containing triangle index and barycentric coordinates, or -1."""
        p = np.asarray(p, dtype=float)
        best = (-1, None, -np.inf)
        for t in self.candidates(p):
            lam = barycentric(self.mesh, t, p)
            worst = lam.min()
            if worst >= -tol:
                return t, lam
            if worst > best[2]:
                best = (t, lam, worst)
        # tolerate slight roundoff just outside an edge
        if best[0] >= 0 and best[2] > -1e-9:
            return best[0], best[1]
        return -1, None

    def containing_triangles(self, p, tol=1e-12):
        """All triangles whose closure contains p (1, 2 on edges, more at
        vertices)."""
        p = np.asarray(p, dtype=float)
        hits = []
        for t in self.candidates(p):
            lam = barycentric(self.mesh, t, p)
            if lam.min() >= -tol:
                hits.append(t)
        return hits


def barycentric(mesh, tri_index, p):
    """Barycentric coordinates of chart point p in a given triangle."""
    v = mesh.vertices[mesh.triangles[tri_index]]
    T = np.array([[v[0, 0] - v[2, 0], v[1, 0] - v[2, 0]],
                  [v[0, 1] - v[2, 1], v[1, 1] - v[2, 1]]])
    rhs = np.asarray(p, dtype=float) - v[2]
    l01 = np.linalg.solve(T, rhs)
    return np.array([l01[0], l01[1], 1.0 - l01[0] - l01[1]])


class P1Field:
    """Piecewise-linear interpolant of per-vertex coefficients.

    Callable on (k, 2) chart-point arrays for planar/stereographic
    meshes.  For sphere meshes only vertex and barycentric evaluation are
    available (quadrature there is triangle-local).
    """

    def __init__(self, mesh, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (mesh.n_vertices,):
            raise ValueError("coefficient vector does not match mesh size")
        self.mesh = mesh
        self.coeffs = coeffs
        self._locator = None

    def locator(self):
        if self._locator is None:
            self._locator = TriLocator(self.mesh)
        return self._locator

    def on_triangle(self, tri_index, bary):
        """Value(s) from barycentric coordinates inside one triangle."""
        vals = self.coeffs[self.mesh.triangles[tri_index]]
        return np.asarray(bary) @ vals

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        loc = self.locator()
        out = np.empty(points.shape[0])
        for i, p in enumerate(points):
            t, lam = loc.locate(p)
            if t < 0:
                raise ValueError(f"point {p} is outside the mesh")
            out[i] = self.on_triangle(t, lam)
        return out


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def write_mesh(mesh, path_or_file):
    """Write the KLMESH text format.

    Header ``KLMESH 1 <chart> [radius]``; then ``V n`` with one ``x y
    [X Y Z]`` line per vertex, ``T m`` with ``i j k`` triangle lines, and
    ``B b`` followed by the boundary vertex indices.
    """
    own = isinstance(path_or_file, (str, bytes))
    f = open(path_or_file, "w") if own else path_or_file
    try:
        head = f"KLMESH 1 {mesh.chart.kind}"
        if mesh.chart.radius is not None:
            head += f" {mesh.chart.radius:.12g}"
        f.write(head + "\n")
        f.write(f"V {mesh.n_vertices}\n")
        for i in range(mesh.n_vertices):
            line = f"{mesh.vertices[i, 0]:.17g} {mesh.vertices[i, 1]:.17g}"
            if mesh.embedded is not None:
                line += " " + " ".join(f"{c:.17g}" for c in mesh.embedded[i])
            f.write(line + "\n")
        f.write(f"T {mesh.n_triangles}\n")
        for t in mesh.triangles:
            f.write(f"{t[0]} {t[1]} {t[2]}\n")
        bidx = np.flatnonzero(mesh.boundary_mask)
        f.write(f"B {len(bidx)}\n")
        if len(bidx):
            f.write(" ".join(str(i) for i in bidx) + "\n")
    finally:
        if own:
            f.close()


def read_mesh(path_or_file):
    """Read a mesh written by :func:`write_mesh`."""
    own = isinstance(path_or_file, (str, bytes))
    f = open(path_or_file) if own else path_or_file
    try:
        tokens = f.read().split()
    finally:
        if own:
            f.close()
    it = iter(tokens)

    def take(n):
        return [next(it) for _ in range(n)]

    magic, version, kind = take(3)
    if magic != "KLMESH" or version != "1":
        raise ValueError("not a KLMESH version 1 stream")
    radius = None
    nxt = next(it)
    if nxt != "V":
        radius = float(nxt)
        nxt = next(it)
    if nxt != "V":
        raise ValueError("malformed KLMESH: expected vertex section")
    nv = int(next(it))
    per_vertex = 5 if kind in ("stereographic", "sphere") else 2
    data = np.array(take(nv * per_vertex), dtype=float).reshape(nv, per_vertex)
    vertices = data[:, :2].copy()
    embedded = data[:, 2:5].copy() if per_vertex == 5 else None
    if next(it) != "T":
        raise ValueError("malformed KLMESH: expected triangle section")
    nt = int(next(it))
    triangles = np.array(take(nt * 3), dtype=np.int64).reshape(nt, 3)
    if next(it) != "B":
        raise ValueError("malformed KLMESH: expected boundary section")
    nb = int(next(it))
    boundary = np.zeros(nv, dtype=bool)
    if nb:
        boundary[np.array(take(nb), dtype=np.int64)] = True
    return TriMesh(vertices, triangles, boundary, Chart(kind, radius),
                   embedded)
