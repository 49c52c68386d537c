"""Stereographic chart between an upper hemisphere and its equatorial disk.

The chart maps the open upper hemisphere of the radius-``a`` sphere onto
the open disk of radius ``a`` by projecting from the south pole:

    forward:  (x1, x2, x3) -> a/(a + x3) * (x1, x2)
    inverse:  (y1, y2)     -> (2*a^2*y1, 2*a^2*y2, a*(a^2 - |y|^2)) / (|y|^2 + a^2)

The map is conformal; Dirichlet energy of a function is invariant under
pullback, which is what transports eigenpairs between the two charts.
The module-level functions are pinned to the radius-2 normalization used
throughout the rest of the package.
"""

from dataclasses import dataclass

import numpy as np

ON_SPHERE_TOL = 1e-9


@dataclass(frozen=True)
class StereoChart:
    """Stereographic projection data for a sphere of given radius.

    The chart disk has the same radius as the sphere.  ``forward`` /
    ``inverse`` are exact inverses on the closed upper hemisphere /
    closed chart disk (equator included).
    """

    sphere_radius: float = 2.0

    def __post_init__(self):
        if not self.sphere_radius > 0:
            raise ValueError("sphere_radius must be positive")

    # -- point maps ---------------------------------------------------------

    def forward(self, p):
        """Project a point of the upper hemisphere into the chart disk."""
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        pts = np.atleast_2d(p)
        a = self.sphere_radius
        r = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(r - a) > ON_SPHERE_TOL * max(a, 1.0)):
            raise ValueError("point is not on the sphere surface")
        if np.any(pts[:, 2] < -ON_SPHERE_TOL * a):
            raise ValueError("point is below the equator (outside the chart)")
        out = self._forward_unchecked(pts)
        return out[0] if single else out

    def _forward_unchecked(self, pts):
        # valid for x3 > -a; used internally to push geodesic circles that
        # may dip below the equator
        a = self.sphere_radius
        scale = a / (a + pts[:, 2])
        return pts[:, :2] * scale[:, None]

    def inverse(self, y):
        """Lift a chart-disk point back onto the closed upper hemisphere."""
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        pts = np.atleast_2d(y)
        a = self.sphere_radius
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        if np.any(r2 > a * a * (1.0 + 1e-12) + 1e-12):
            raise ValueError("chart point lies outside the disk of radius "
                             f"{a}")
        denom = r2 + a * a
        out = np.empty((pts.shape[0], 3))
        out[:, 0] = 2.0 * a * a * pts[:, 0] / denom
        out[:, 1] = 2.0 * a * a * pts[:, 1] / denom
        out[:, 2] = a * (a * a - r2) / denom
        return out[0] if single else out

    def differential(self, p):
        """2x3 Jacobian of the forward map at a hemisphere point."""
        p = np.asarray(p, dtype=float)
        a = self.sphere_radius
        s = a + p[2]
        J = np.zeros((2, 3))
        J[0, 0] = a / s
        J[1, 1] = a / s
        J[0, 2] = -a * p[0] / (s * s)
        J[1, 2] = -a * p[1] / (s * s)
        return J

    # -- metric helpers -----------------------------------------------------

    def geodesic_distance(self, p, q):
        """Great-circle distance between two sphere points."""
        a = self.sphere_radius
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        c = np.dot(p, q) / (a * a)
        return a * np.arccos(np.clip(c, -1.0, 1.0))

    def geodesic_ball_in_chart(self, center, delta):
        """Chart image of the geodesic ball around a hemisphere point.

        Stereographic projection takes circles to circles, so the image
        of a geodesic circle is a Euclidean circle in the chart plane.
        Its diametral points are the images of the two points at geodesic
        distance ``delta`` along the meridian through ``center``.

        Returns (center2, radius2) of the image disk.  The image disk may
        extend past the chart disk when the ball crosses the equator; the
        caller restricts to the measure support anyway.
        """
        a = self.sphere_radius
        c = np.asarray(center, dtype=float)
        if delta <= 0:
            raise ValueError("delta must be positive")
        if delta >= np.pi * a:
            raise ValueError("geodesic ball must be smaller than the sphere")
        horiz = np.array([c[0], c[1], 0.0])
        h = np.linalg.norm(horiz)
        if h < 1e-15 * a:
            e_h = np.array([1.0, 0.0, 0.0])
        else:
            e_h = horiz / h
        e_z = np.array([0.0, 0.0, 1.0])
        beta = np.arctan2(h, c[2])  # colatitude of the center
        gamma = delta / a
        p_plus = a * (np.sin(beta + gamma) * e_h + np.cos(beta + gamma) * e_z)
        p_minus = a * (np.sin(beta - gamma) * e_h + np.cos(beta - gamma) * e_z)
        if p_plus[2] <= -a * (1 - 1e-12) or p_minus[2] <= -a * (1 - 1e-12):
            raise ValueError("geodesic ball reaches the projection pole")
        y = self._forward_unchecked(np.vstack([p_plus, p_minus]))
        center2 = 0.5 * (y[0] + y[1])
        radius2 = 0.5 * np.linalg.norm(y[0] - y[1])
        return center2, radius2


_DEFAULT_CHART = StereoChart(2.0)


def stereo_forward(p):
    """Radius-2 stereographic projection of a hemisphere point."""
    return _DEFAULT_CHART.forward(p)


def stereo_inverse(y):
    """Inverse radius-2 stereographic projection of a chart point."""
    return _DEFAULT_CHART.inverse(y)


def jacobian_inverse_det(x3):
    """Jacobian determinant of the inverse map, normalized to 1 at the pole.

    Evaluates (2 + x3)^2 / 16 on the radius-2 chart; monotone increasing
    from 1/4 on the equator to 1 at the pole.  The unnormalized area
    element of the inverse map is four times this value.
    """
    x3 = np.asarray(x3, dtype=float)
    if np.any(x3 < -1e-12) or np.any(x3 > 2.0 + 1e-12):
        raise ValueError("x3 must lie in [0, 2]")
    return (2.0 + x3) ** 2 / 16.0


def pullback_function(u_tilde, chart=_DEFAULT_CHART):
    """Compose a chart-plane scalar field with the forward projection.

    ``u_tilde`` takes a (k, 2) array of chart points; the returned field
    takes a single hemisphere point or a (k, 3) array and evaluates
    u_tilde at the projected chart coordinates.
    """

    def u(p):
        single = np.asarray(p).ndim == 1
        y = np.atleast_2d(chart.forward(p))
        vals = np.asarray(u_tilde(y), dtype=float)
        return float(vals[0]) if single else vals

    return u


def pushforward_measure(m, direction="disk_to_sphere", chart=_DEFAULT_CHART):
    """Transport a measure between the chart plane and the hemisphere.

    ``disk_to_sphere`` wraps a planar measure as its image on the sphere:
    integrals of f against the image equal integrals of the lift f o inv
    against the base, and total mass is preserved.  ``sphere_to_disk``
    unwraps a previously pushed-forward measure.
    """
    from . import measure as _measure

    if direction == "disk_to_sphere":
        if isinstance(m, _measure.PushforwardMeasure):
            raise ValueError("measure is already a sphere-chart measure")
        return _measure.PushforwardMeasure(base=m, chart=chart)
    if direction == "sphere_to_disk":
        if not isinstance(m, _measure.PushforwardMeasure):
            raise ValueError("only pushforward measures can be pulled back "
                             "to the chart")
        return m.base
    raise ValueError(f"unknown direction: {direction!r}")
