"""Symbolic Borel measures with per-element quadrature.

Supported variants: area measures with bounded densities on rectangles,
disks and mesh surfaces; line measures on segment unions; self-similar
measures of affine iterated function systems; finite sums; and
pushforwards through the stereographic chart.  Every variant supports
total mass, element-wise integration against a mesh, metric ball mass,
and the lower-dimension regression built on top of ball masses.

Conventions: scalar fields are callables taking a (k, 2) (chart) or
(k, 3) (sphere surface) point array and returning (k,) values; segment
and IFS densities are constant scalars.
"""

import math
import weakref
from dataclasses import dataclass

import numpy as np

from . import mesh as meshmod
from ._backend import ball_masses as _ball_masses_kernel
from ._backend import ifs_leaves as _ifs_leaves_kernel
from ._quadrature import TRI7_BARY, TRI7_W, gauss_on_interval

GEOM_TOL = 1e-12


class QuadratureError(RuntimeError):
    """Raised when quadrature meets a non-finite value or cannot converge."""


# ---------------------------------------------------------------------------
# domains for area measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RectDomain:
    half_width: float
    half_height: float

    def area(self):
        return 4.0 * self.half_width * self.half_height


@dataclass(frozen=True)
class DiskDomain:
    radius: float

    def area(self):
        return math.pi * self.radius ** 2


@dataclass(frozen=True)
class SphereDomain:
    """Full sphere surface; integration runs over a bound mesh."""

    radius: float

    def area(self):
        return 4.0 * math.pi * self.radius ** 2


# ---------------------------------------------------------------------------
# measure variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AreaMeasure:
    """Lebesgue/surface measure with a bounded density.

    ``density`` is a constant or a scalar field; analytic ball masses are
    available for constant densities only.
    """

    domain: object
    density: object = 1.0


@dataclass(frozen=True)
class Segment:
    p: tuple
    q: tuple
    density: float = 1.0


@dataclass(frozen=True)
class LineMeasure:
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))


@dataclass(frozen=True)
class AffineMap:
    matrix: tuple  # 2x2 row tuples
    offset: tuple

    def as_arrays(self):
        return np.asarray(self.matrix, dtype=float), np.asarray(self.offset, dtype=float)


@dataclass(frozen=True)
class IFSMeasure:
    """Self-similar measure of a contractive affine IFS.

    Quadrature descends to ``depth`` and places each leaf's weight at the
    leaf barycenter (the image of the whole-measure barycenter under the
    leaf word).  ``mass`` scales the probability weights.
    """

    maps: tuple
    probs: tuple
    depth: int = 12
    mass: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.maps) != len(self.probs) or not self.maps:
            raise ValueError("need one probability per map")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("IFS probabilities must sum to 1")
        if any(p <= 0 or p >= 1 for p in self.probs):
            raise ValueError("IFS probabilities must lie in (0, 1)")
        for mp in self.maps:
            A, _ = mp.as_arrays()
            if np.linalg.norm(A, 2) >= 1.0 - 1e-12:
                raise ValueError("IFS maps must be contractions")
        if self.depth < 1:
            raise ValueError("IFS depth must be at least 1")
        if self.mass <= 0:
            raise ValueError("measure mass must be positive")


@dataclass(frozen=True)
class SumMeasure:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("sum measure needs at least one part")


@dataclass(frozen=True)
class PushforwardMeasure:
    """Image on the hemisphere of a planar base measure under the chart."""

    base: object
    chart: object  # StereoChart


# ---------------------------------------------------------------------------
# helpers on IFS measures
# ---------------------------------------------------------------------------

MAX_IFS_LEAVES = 4_000_000


def _ifs_arrays(m):
    mats = np.stack([mp.as_arrays()[0] for mp in m.maps])
    offs = np.stack([mp.as_arrays()[1] for mp in m.maps])
    probs = np.asarray(m.probs)
    return mats, offs, probs


def ifs_barycenter(m):
    """Measure barycenter b solving b = sum_i p_i (A_i b + t_i)."""
    mats, offs, probs = _ifs_arrays(m)
    A = (probs[:, None, None] * mats).sum(axis=0)
    t = (probs[:, None] * offs).sum(axis=0)
    return np.linalg.solve(np.eye(2) - A, t)


def ifs_leaves(m, depth=None):
    """Leaf points and weights at the given descent depth."""
    depth = m.depth if depth is None else depth
    nmaps = len(m.maps)
    if nmaps ** depth > MAX_IFS_LEAVES:
        raise ValueError("IFS descent too deep: too many leaves")
    mats, offs, probs = _ifs_arrays(m)
    pts, wts = _ifs_leaves_kernel(mats, offs, probs, depth,
                                  ifs_barycenter(m))
    return pts, wts * m.mass


# ---------------------------------------------------------------------------
# total mass
# ---------------------------------------------------------------------------

def total_mass(m):
    """Total mass of the measure (analytic where the variant allows)."""
    if isinstance(m, AreaMeasure):
        if callable(m.density):
            return _area_mass_quadrature(m)
        return m.domain.area() * float(m.density)
    if isinstance(m, LineMeasure):
        return float(sum(np.linalg.norm(np.subtract(s.q, s.p)) * s.density
                         for s in m.segments))
    if isinstance(m, IFSMeasure):
        return float(m.mass)
    if isinstance(m, SumMeasure):
        return float(sum(total_mass(p) for p in m.parts))
    if isinstance(m, PushforwardMeasure):
        return total_mass(m.base)
    raise TypeError(f"unknown measure variant: {type(m).__name__}")


def _area_mass_quadrature(m):
    dom = m.domain
    if isinstance(dom, RectDomain):
        x, wx = gauss_on_interval(-dom.half_width, dom.half_width, 48)
        y, wy = gauss_on_interval(-dom.half_height, dom.half_height, 48)
        X, Y = np.meshgrid(x, y)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        return float((np.outer(wy, wx).ravel() * m.density(pts)).sum())
    raise NotImplementedError("variable densities are supported on "
                              "rectangles only")


def scaled(m, c):
    """The measure scaled by a positive constant."""
    if c <= 0:
        raise ValueError("scale must be positive")
    if isinstance(m, AreaMeasure):
        if callable(m.density):
            raise ValueError("cannot scale a callable density")
        return AreaMeasure(m.domain, m.density * c)
    if isinstance(m, LineMeasure):
        return LineMeasure(tuple(Segment(s.p, s.q, s.density * c)
                                 for s in m.segments))
    if isinstance(m, IFSMeasure):
        return IFSMeasure(m.maps, m.probs, m.depth, m.mass * c)
    if isinstance(m, SumMeasure):
        return SumMeasure(tuple(scaled(p, c) for p in m.parts))
    if isinstance(m, PushforwardMeasure):
        return PushforwardMeasure(scaled(m.base, c), m.chart)
    raise TypeError(f"unknown measure variant: {type(m).__name__}")


# ---------------------------------------------------------------------------
# element quadrature
# ---------------------------------------------------------------------------

def _check_finite(vals, pts):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        p = np.atleast_2d(pts)[np.flatnonzero(bad)[0]]
        raise QuadratureError(f"non-finite integrand value at point {p}")


def _segment_tri_interval(mesh, tri, p, d):
    """Parameter interval of {p + s d, s in [0,1]} inside a closed triangle.

    Returns (s0, s1, on_edge) with on_edge the local edge index when the
    clipped piece is collinear with one triangle edge, else -1.
    """
    lam_p = meshmod.barycentric(mesh, tri, p)
    lam_q = meshmod.barycentric(mesh, tri, p + d)
    s0, s1 = 0.0, 1.0
    for i in range(3):
        a = lam_p[i]
        b = lam_q[i] - lam_p[i]
        # need a + s b >= 0
        if abs(b) < GEOM_TOL:
            if a < -GEOM_TOL:
                return None
            continue
        bound = -a / b
        if b > 0:
            s0 = max(s0, bound)
        else:
            s1 = min(s1, bound)
    if s1 - s0 <= GEOM_TOL:
        return None
    on_edge = -1
    for i in range(3):
        la = lam_p[i] + s0 * (lam_q[i] - lam_p[i])
        lb = lam_p[i] + s1 * (lam_q[i] - lam_p[i])
        if abs(la) < 1e-10 and abs(lb) < 1e-10:
            on_edge = i  # edge opposite local vertex i
            break
    return s0, s1, on_edge


def _segment_candidates(mesh, locator, p, q, samples=64):
    """Triangles plausibly met by the segment (via sampled bin lookup)."""
    ts = np.linspace(0.0, 1.0, samples)
    cand = set()
    for t in ts:
        cand.update(locator.candidates(p + t * (q - p)))
    return sorted(cand)


def _line_pieces(mesh, locator, seg):
    """Split one segment at all element crossings.

    Yields (tri_index, s0, s1) with each sub-segment reported once; the
    owning triangle is located at the midpoint (for edge-collinear pieces
    any incident triangle gives identical P1 values).
    """
    p = np.asarray(seg.p, dtype=float)
    q = np.asarray(seg.q, dtype=float)
    d = q - p
    cand = _segment_candidates(mesh, locator, p, q)
    cuts = [0.0, 1.0]
    for t in cand:
        iv = _segment_tri_interval(mesh, t, p, d)
        if iv is not None:
            cuts.extend(iv[:2])
    cuts = np.unique(np.asarray(cuts))
    merged = [cuts[0]]
    for c in cuts[1:]:
        if c - merged[-1] > 1e-12:
            merged.append(c)
    for s0, s1 in zip(merged[:-1], merged[1:]):
        smid = 0.5 * (s0 + s1)
        tri, _ = locator.locate(p + smid * d, tol=1e-10)
        if tri < 0:
            raise ValueError("line measure leaves the mesh domain: segment "
                             f"{seg.p} -> {seg.q}")
        yield tri, s0, s1


def _point_share(mesh, locator, p):
    """Triangles containing p and the once-only weight 1/#triangles."""
    tris = locator.containing_triangles(p, tol=1e-10)
    if not tris:
        raise ValueError(f"IFS leaf {p} lies outside the mesh domain")
    return tris


def mesh_quadrature(m, mesh, locator=None):
    """Global quadrature decomposition of the measure over a mesh.

    Yields (tri_index, points, weights) chunks whose union integrates any
    piecewise-smooth field against the measure exactly once (no shared-
    edge double counting).  Points are chart coordinates except for
    sphere meshes, where they are embedded coordinates.
    """
    if isinstance(m, SumMeasure):
        for part in m.parts:
            yield from mesh_quadrature(part, mesh, locator)
        return
    if isinstance(m, PushforwardMeasure):
        if mesh.chart.kind != "stereographic":
            raise ValueError("pushforward measures integrate on "
                             "stereographic chart meshes")
        for tri, pts, wts in mesh_quadrature(m.base,
                                             meshmod.planar_twin(mesh),
                                             locator):
            yield tri, m.chart.inverse(pts), wts
        return
    if isinstance(m, AreaMeasure):
        yield from _area_mesh_quadrature(m, mesh)
        return
    locator = locator or meshmod.locator_for(mesh)
    if isinstance(m, LineMeasure):
        for seg in m.segments:
            p = np.asarray(seg.p, dtype=float)
            d = np.asarray(seg.q, dtype=float) - p
            L = np.linalg.norm(d)
            for tri, s0, s1 in _line_pieces(mesh, locator, seg):
                s, w = gauss_on_interval(s0, s1, 3)
                yield tri, p + s[:, None] * d, w * L * seg.density
        return
    if isinstance(m, IFSMeasure):
        pts, wts = ifs_leaves(m)
        for b, w in zip(pts, wts):
            tris = _point_share(mesh, locator, b)
            yield tris[0], b.reshape(1, 2), np.array([w])
        return
    raise TypeError(f"unknown measure variant: {type(m).__name__}")


def _area_mesh_quadrature(m, mesh):
    use_embedded = mesh.chart.kind == "sphere"
    if isinstance(m.domain, SphereDomain) != use_embedded:
        raise ValueError("area-measure domain does not match the mesh chart")
    coords = mesh.embedded if use_embedded else mesh.vertices
    areas = meshmod.triangle_areas(mesh, embedded=use_embedded)
    tri_pts = coords[mesh.triangles]
    for t in range(mesh.n_triangles):
        pts = TRI7_BARY @ tri_pts[t]
        if callable(m.density):
            dens = np.asarray(m.density(pts), dtype=float)
            _check_finite(dens, pts)
        else:
            dens = float(m.density)
        yield t, pts, TRI7_W * areas[t] * dens


def integrate_on_element(m, f, mesh, tri_index):
    """Integral of f against the measure over one closed triangle.

    Mass sitting on a shared edge or vertex is split evenly between the
    incident triangles, so summing over all triangles reproduces the
    total integral exactly once.
    """
    if isinstance(m, SumMeasure):
        return sum(integrate_on_element(p, f, mesh, tri_index)
                   for p in m.parts)
    if isinstance(m, PushforwardMeasure):
        if mesh.chart.kind != "stereographic":
            raise ValueError("pushforward measures integrate on "
                             "stereographic chart meshes")
        chart = m.chart

        def f_chart(y):
            return f(chart.inverse(y))

        return integrate_on_element(m.base, f_chart,
                                    meshmod.planar_twin(mesh), tri_index)
    if isinstance(m, AreaMeasure):
        use_embedded = mesh.chart.kind == "sphere"
        coords = mesh.embedded if use_embedded else mesh.vertices
        area = meshmod.triangle_areas(mesh, embedded=use_embedded)[tri_index]
        pts = TRI7_BARY @ coords[mesh.triangles[tri_index]]
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(vals, pts)
        dens = m.density(pts) if callable(m.density) else m.density
        return float((TRI7_W * vals * dens).sum() * area)
    if isinstance(m, LineMeasure):
        acc = 0.0
        for seg in m.segments:
            p = np.asarray(seg.p, dtype=float)
            d = np.asarray(seg.q, dtype=float) - p
            L = np.linalg.norm(d)
            iv = _segment_tri_interval(mesh, tri_index, p, d)
            if iv is None:
                continue
            s0, s1, on_edge = iv
            share = 1.0
            if on_edge >= 0:
                vloc = mesh.triangles[tri_index]
                e = (vloc[(on_edge + 1) % 3], vloc[(on_edge + 2) % 3])
                share = 0.5 if _edge_is_shared(mesh, e) else 1.0
            s, w = gauss_on_interval(s0, s1, 3)
            pts = p + s[:, None] * d
            vals = np.asarray(f(pts), dtype=float)
            _check_finite(vals, pts)
            acc += share * float((w * vals).sum()) * L * seg.density
        return acc
    if isinstance(m, IFSMeasure):
        locator = meshmod.locator_for(mesh)
        pts, wts = ifs_leaves(m)
        acc = 0.0
        for b, w in zip(pts, wts):
            lam = meshmod.barycentric(mesh, tri_index, b)
            if lam.min() < -1e-10:
                continue
            tris = locator.containing_triangles(b, tol=1e-10)
            share = 1.0 / max(len(tris), 1)
            val = float(np.asarray(f(b.reshape(1, 2)), dtype=float)[0])
            if not np.isfinite(val):
                raise QuadratureError(f"non-finite integrand value at {b}")
            acc += share * w * val
        return acc
    raise TypeError(f"unknown measure variant: {type(m).__name__}")


_shared_edges_cache = weakref.WeakKeyDictionary()


def _edge_is_shared(mesh, e):
    shared = _shared_edges_cache.get(mesh)
    if shared is None:
        uniq, _, tri_b = meshmod.adjacency_for(mesh)
        shared = {(int(a), int(b)) for (a, b), t in zip(uniq, tri_b)
                  if t >= 0}
        _shared_edges_cache[mesh] = shared
    return (int(min(e)), int(max(e))) in shared


# ---------------------------------------------------------------------------
# ball mass
# ---------------------------------------------------------------------------

def ball_mass(m, center, delta):
    """Measure of the metric ball of radius delta around the center.

    Planar variants use Euclidean balls with closed-form intersection
    areas/lengths; sphere variants use geodesic balls (a cap for the
    surface measure, a pulled-back chart disk for pushforwards).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if isinstance(m, SumMeasure):
        return sum(ball_mass(p, center, delta) for p in m.parts)
    if isinstance(m, PushforwardMeasure):
        c = np.asarray(center, dtype=float)
        if c.shape != (3,):
            raise ValueError("centers for sphere-chart measures are 3-d "
                             "surface points")
        center2, radius2 = m.chart.geodesic_ball_in_chart(c, delta)
        return ball_mass(m.base, center2, radius2)
    if isinstance(m, AreaMeasure):
        return _area_ball_mass(m, center, delta)
    if isinstance(m, LineMeasure):
        c = np.asarray(center, dtype=float)
        acc = 0.0
        for seg in m.segments:
            acc += seg.density * _segment_ball_length(seg, c, delta)
        return acc
    if isinstance(m, IFSMeasure):
        pts, wts = ifs_leaves(m)
        c = np.asarray(center, dtype=float).reshape(1, 2)
        return float(_ball_masses_kernel(pts, wts, c, float(delta))[0])
    raise TypeError(f"unknown measure variant: {type(m).__name__}")


def _segment_ball_length(seg, c, delta):
    p = np.asarray(seg.p, dtype=float)
    d = np.asarray(seg.q, dtype=float) - p
    L2 = float(d @ d)
    if L2 == 0.0:
        return 0.0
    # |p + t d - c|^2 <= delta^2 on t in [0, 1]
    pc = p - c
    a = L2
    b = 2.0 * float(pc @ d)
    cc = float(pc @ pc) - delta * delta
    disc = b * b - 4 * a * cc
    if disc <= 0:
        return 0.0
    sq = math.sqrt(disc)
    t0 = max(0.0, (-b - sq) / (2 * a))
    t1 = min(1.0, (-b + sq) / (2 * a))
    return max(0.0, t1 - t0) * math.sqrt(L2)


def _area_ball_mass(m, center, delta):
    if callable(m.density):
        raise NotImplementedError("analytic ball mass requires a constant "
                                  "density")
    dom = m.domain
    if isinstance(dom, RectDomain):
        c = np.asarray(center, dtype=float)
        a = _circle_rect_area(c[0], c[1], delta,
                              -dom.half_width, dom.half_width,
                              -dom.half_height, dom.half_height)
        return a * m.density
    if isinstance(dom, DiskDomain):
        c = np.asarray(center, dtype=float)
        return _circle_circle_area(np.linalg.norm(c), delta,
                                   dom.radius) * m.density
    if isinstance(dom, SphereDomain):
        R = dom.radius
        gamma = min(delta / R, math.pi)
        return 2.0 * math.pi * R * R * (1.0 - math.cos(gamma)) * m.density
    raise TypeError(f"unknown area domain: {type(dom).__name__}")


def _chord_area(b):
    """Area of the unit disk below the line y = b."""
    b = min(1.0, max(-1.0, b))
    return math.pi / 2 + b * math.sqrt(max(0.0, 1 - b * b)) + math.asin(b)


def _H(x):
    x = min(1.0, max(-1.0, x))
    return 0.5 * (x * math.sqrt(max(0.0, 1 - x * x)) + math.asin(x))


def _corner_area(a, c):
    """Area of the unit disk in {x >= a, y >= c}."""
    if a >= 1.0 or c >= 1.0:
        return 0.0
    if c >= 0.0:
        s = math.sqrt(1.0 - c * c)
        t = max(a, -s)
        if t >= s:
            return 0.0
        return _H(s) - _H(t) - c * (s - t)
    return (math.pi - _chord_area(a)) - _corner_area(a, -c)


def _quadrant_area(a, b):
    """Area of the unit disk in {x <= a, y <= b}."""
    if a <= -1.0 or b <= -1.0:
        return 0.0
    return _chord_area(b) - _corner_area(a, -b)


def _circle_rect_area(cx, cy, r, x0, x1, y0, y1):
    """Exact area of circle((cx, cy), r) intersected with a rectangle."""
    if r <= 0:
        return 0.0
    a0, a1 = (x0 - cx) / r, (x1 - cx) / r
    b0, b1 = (y0 - cy) / r, (y1 - cy) / r
    area = (_quadrant_area(a1, b1) - _quadrant_area(a0, b1)
            - _quadrant_area(a1, b0) + _quadrant_area(a0, b0))
    return max(0.0, area) * r * r


def _circle_circle_area(d, r1, r2):
    """Area of the lens between circles of radii r1, r2 at distance d."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        rr = min(r1, r2)
        return math.pi * rr * rr
    alpha = math.acos((d * d + r1 * r1 - r2 * r2) / (2 * d * r1))
    beta = math.acos((d * d + r2 * r2 - r1 * r1) / (2 * d * r2))
    tri = 0.5 * math.sqrt(max(0.0, (-d + r1 + r2) * (d + r1 - r2)
                              * (d - r1 + r2) * (d + r1 + r2)))
    return r1 * r1 * alpha + r2 * r2 * beta - tri


# ---------------------------------------------------------------------------
# lower-dimension estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimEstimate:
    """Regression data for the small-ball mass scaling exponent."""

    slope: float
    intercept: float
    table: tuple  # ((delta, sup ball mass), ...) ascending in delta
    delta_range: tuple  # (min, max) of the deltas used in the fit


N_FIT = 5  # regression uses the smallest deltas only (the limit delta -> 0)


def default_centers(m, per_segment=33):
    """Per-variant default candidate centers sampling the support."""
    if isinstance(m, LineMeasure):
        out = []
        for seg in m.segments:
            p = np.asarray(seg.p, dtype=float)
            q = np.asarray(seg.q, dtype=float)
            t = np.linspace(0.0, 1.0, per_segment)
            out.append(p + t[:, None] * (q - p))
        return np.vstack(out)
    if isinstance(m, AreaMeasure):
        dom = m.domain
        if isinstance(dom, RectDomain):
            x = np.linspace(-dom.half_width, dom.half_width, 9)
            y = np.linspace(-dom.half_height, dom.half_height, 9)
            X, Y = np.meshgrid(x, y)
            return np.column_stack([X.ravel(), Y.ravel()])
        if isinstance(dom, DiskDomain):
            rs = np.linspace(0.0, dom.radius, 6)
            pts = [np.zeros((1, 2))]
            for r in rs[1:]:
                ang = np.linspace(0, 2 * np.pi, 13)[:-1]
                pts.append(np.column_stack([r * np.cos(ang),
                                            r * np.sin(ang)]))
            return np.vstack(pts)
        if isinstance(dom, SphereDomain):
            R = dom.radius
            lon = np.linspace(0, 2 * np.pi, 9)[:-1]
            colat = np.linspace(0.2, np.pi - 0.2, 7)
            L, C = np.meshgrid(lon, colat)
            return np.column_stack([
                R * np.sin(C.ravel()) * np.cos(L.ravel()),
                R * np.sin(C.ravel()) * np.sin(L.ravel()),
                R * np.cos(C.ravel()),
            ])
    if isinstance(m, IFSMeasure):
        depth = min(m.depth, 10)
        while len(m.maps) ** depth > 4096:
            depth -= 1
        pts, _ = ifs_leaves(m, depth=depth)
        return pts
    if isinstance(m, SumMeasure):
        return np.vstack([default_centers(p) for p in m.parts])
    if isinstance(m, PushforwardMeasure):
        base = default_centers(m.base)
        return m.chart.inverse(base)
    raise TypeError(f"unknown measure variant: {type(m).__name__}")


def default_delta_grid(m):
    """Dyadic deltas for planar variants; contraction powers for IFS."""
    if isinstance(m, IFSMeasure):
        r = max(np.linalg.norm(mp.as_arrays()[0], 2) for mp in m.maps)
        pts, _ = ifs_leaves(m, depth=min(m.depth, 8))
        diam = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        diam = max(diam, 1e-6)
        return tuple(diam * r ** k for k in range(2, 9))
    if isinstance(m, SumMeasure):
        return default_delta_grid(m.parts[0])
    if isinstance(m, PushforwardMeasure):
        return default_delta_grid(m.base)
    return tuple(2.0 ** -k for k in range(3, 10))


def estimate_dim_infinity(m, delta_grid=None, candidate_centers=None):
    """Least-squares scaling exponent of sup-ball mass against radius.

    Fits ln(sup_x mu(B_delta(x))) ~ slope * ln(delta) + intercept over the
    ``N_FIT`` smallest deltas; the sup runs over the finite candidate set
    (a lower bound of the true sup).
    """
    if delta_grid is None:
        delta_grid = default_delta_grid(m)
    deltas = np.sort(np.asarray(delta_grid, dtype=float))
    if len(deltas) < 4:
        raise ValueError("need at least 4 delta values")
    if np.any(deltas <= 0):
        raise ValueError("deltas must be positive")
    if candidate_centers is None:
        candidate_centers = default_centers(m)
    centers = np.asarray(candidate_centers, dtype=float)
    if centers.size == 0:
        raise ValueError("candidate center set is empty")

    sups = np.array([_sup_ball_mass(m, centers, d) for d in deltas])
    if np.any(sups <= 0):
        raise ValueError("sup ball mass vanished; centers miss the support")

    fit = slice(0, N_FIT)
    lx = np.log(deltas[fit])
    ly = np.log(sups[fit])
    slope, intercept = np.polyfit(lx, ly, 1)
    return DimEstimate(float(slope), float(intercept),
                       tuple(zip(deltas.tolist(), sups.tolist())),
                       (float(deltas[fit].min()), float(deltas[fit].max())))


def _sup_ball_mass(m, centers, delta):
    if isinstance(m, IFSMeasure):
        pts, wts = ifs_leaves(m)
        return float(_ball_masses_kernel(pts, wts, centers,
                                         float(delta)).max())
    return max(ball_mass(m, c, delta) for c in centers)


# ---------------------------------------------------------------------------
# config (de)serialization
# ---------------------------------------------------------------------------

def parse_measure_config(cfg, mesh=None):
    """Build a measure from its JSON-compatible description."""
    from .conformal import StereoChart

    kind = cfg.get("type")
    if kind == "area":
        dom_cfg = cfg.get("domain", {})
        dkind = dom_cfg.get("type")
        if dkind == "rect":
            dom = RectDomain(float(dom_cfg["half_width"]),
                             float(dom_cfg["half_height"]))
        elif dkind == "disk":
            dom = DiskDomain(float(dom_cfg["radius"]))
        elif dkind == "sphere":
            dom = SphereDomain(float(dom_cfg["radius"]))
        else:
            raise ValueError(f"unknown area domain type: {dkind!r}")
        return AreaMeasure(dom, float(cfg.get("density", 1.0)))
    if kind == "line":
        return LineMeasure((Segment(tuple(cfg["p"]), tuple(cfg["q"]),
                                    float(cfg.get("density", 1.0))),))
    if kind == "sum":
        return SumMeasure(tuple(parse_measure_config(p, mesh)
                                for p in cfg["parts"]))
    if kind == "ifs":
        maps = tuple(AffineMap(tuple(map(tuple, mp["matrix"])),
                               tuple(mp["offset"])) for mp in cfg["maps"])
        return IFSMeasure(maps, tuple(cfg["probs"]),
                          int(cfg.get("depth", 12)),
                          float(cfg.get("mass", 1.0)))
    if kind == "pushforward":
        if cfg.get("map", "stereo") != "stereo":
            raise ValueError("only the stereographic pushforward is "
                             "supported")
        chart = StereoChart(float(cfg.get("radius", 2.0)))
        return PushforwardMeasure(parse_measure_config(cfg["base"], mesh),
                                  chart)
    raise ValueError(f"unknown measure type: {kind!r}")


def measure_config(m):
    """JSON-compatible description of a measure (inverse of parsing)."""
    if isinstance(m, AreaMeasure):
        if callable(m.density):
            raise ValueError("callable densities are not serializable")
        dom = m.domain
        if isinstance(dom, RectDomain):
            d = {"type": "rect", "half_width": dom.half_width,
                 "half_height": dom.half_height}
        elif isinstance(dom, DiskDomain):
            d = {"type": "disk", "radius": dom.radius}
        else:
            d = {"type": "sphere", "radius": dom.radius}
        return {"type": "area", "domain": d, "density": m.density}
    if isinstance(m, LineMeasure):
        if len(m.segments) == 1:
            s = m.segments[0]
            return {"type": "line", "p": list(s.p), "q": list(s.q),
                    "density": s.density}
        return {"type": "sum", "parts": [
            {"type": "line", "p": list(s.p), "q": list(s.q),
             "density": s.density} for s in m.segments]}
    if isinstance(m, IFSMeasure):
        return {"type": "ifs",
                "maps": [{"matrix": [list(r) for r in mp.matrix],
                          "offset": list(mp.offset)} for mp in m.maps],
                "probs": list(m.probs), "depth": m.depth, "mass": m.mass}
    if isinstance(m, SumMeasure):
        return {"type": "sum", "parts": [measure_config(p) for p in m.parts]}
    if isinstance(m, PushforwardMeasure):
        return {"type": "pushforward", "map": "stereo",
                "radius": m.chart.sphere_radius,
                "base": measure_config(m.base)}
    raise TypeError(f"unknown measure variant: {type(m).__name__}")


def cross_measure(half=1.0, density=1.0):
    """The two unit-density axis segments on (-half, half)^2."""
    return SumMeasure((
        LineMeasure((Segment((-half, 0.0), (half, 0.0), density),)),
        LineMeasure((Segment((0.0, -half), (0.0, half), density),)),
    ))


def cantor_measure(depth=12):
    """Uniform measure on the middle-thirds set along the x axis."""
    third = ((1 / 3, 0.0), (0.0, 1 / 3))
    return IFSMeasure((AffineMap(third, (0.0, 0.0)),
                       AffineMap(third, (2 / 3, 0.0))),
                      (0.5, 0.5), depth=depth)
