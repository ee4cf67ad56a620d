"""Transverse Mercator projection between geographic and metric coordinates.

Forward and inverse mappings use the classic series expansions (meridian
arc by Helmert's series in the third flattening, easting/northing as
polynomials in the longitude offset), good to well under a millimeter
within a UTM-width zone. The inverse recovers the footpoint latitude by
Newton iteration on the meridian-arc function instead of the closed-form
rectifying series, so its convergence is checked explicitly.

Defaults are the published constants of UTM zone 13N on the GRS80
ellipsoid, the metric frame the flowline datasets share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Point2D


class OutOfZone(ValueError):
    """Longitude too far from the central meridian for the series to hold."""


class NonConvergence(RuntimeError):
    """Footpoint-latitude iteration failed to converge."""


# Half-width of the longitude window the series is trusted in, degrees.
ZONE_HALF_WIDTH_DEG = 10.0

_FOOTPOINT_MAX_ITER = 20
_FOOTPOINT_TOL_RAD = 1e-13


@dataclass(frozen=True)
class GeoPoint:
    """Geographic coordinates in degrees, latitude first."""

    latitude: float
    longitude: float

    def __post_init__(self):
        if not (math.isfinite(self.latitude) and math.isfinite(self.longitude)):
            raise ValueError("non-finite geographic coordinates")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True)
class ProjectionParams:
    """Transverse Mercator constants; defaults are UTM 13N / GRS80."""

    central_meridian: float = -105.0
    scale_factor: float = 0.9996
    false_easting: float = 500000.0
    false_northing: float = 0.0
    semi_major_axis: float = 6378137.0
    flattening: float = 1.0 / 298.257222101

    def __post_init__(self):
        if self.semi_major_axis <= 0:
            raise ValueError("semi-major axis must be positive")
        if not 0 < self.scale_factor <= 1:
            raise ValueError("scale factor must be in (0, 1]")
        if not abs(self.flattening) < 1:
            raise ValueError("|flattening| must be < 1")

    @property
    def e2(self) -> float:
        """First eccentricity squared."""
        return self.flattening * (2.0 - self.flattening)

    @property
    def ep2(self) -> float:
        """Second eccentricity squared, e^2 / (1 - e^2)."""
        e2 = self.e2
        return e2 / (1.0 - e2)

    @property
    def n(self) -> float:
        """Third flattening, (a - b) / (a + b)."""
        f = self.flattening
        return f / (2.0 - f)


def meridian_arc(latitude_deg: float, params: ProjectionParams) -> float:
    """Ellipsoidal distance from the equator to the given latitude, meters.

    Helmert's series in the third flattening n, carried through n^5;
    truncation error is far below a micrometer for Earth-like flattening.
    """
    phi = math.radians(latitude_deg)
    a = params.semi_major_axis
    n = params.n
    n2, n3, n4, n5 = n * n, n ** 3, n ** 4, n ** 5

    # b = a(1 - f); (a + b)/2 = a(1 - n)/(1 + n) * (1 + n) ... kept explicit.
    b = a * (1.0 - params.flattening)
    alpha = ((a + b) / 2.0) * (1.0 + n2 / 4.0 + n4 / 64.0)
    beta = -3.0 * n / 2.0 + 9.0 * n3 / 16.0 - 3.0 * n5 / 32.0
    gamma = 15.0 * n2 / 16.0 - 15.0 * n4 / 32.0
    delta = -35.0 * n3 / 48.0 + 105.0 * n5 / 256.0
    epsilon = 315.0 * n4 / 512.0

    return alpha * (
        phi
        + beta * math.sin(2.0 * phi)
        + gamma * math.sin(4.0 * phi)
        + delta * math.sin(6.0 * phi)
        + epsilon * math.sin(8.0 * phi)
    )


def _meridian_radius(phi: float, params: ProjectionParams) -> float:
    """Meridian radius of curvature, the derivative of the arc w.r.t. phi."""
    e2 = params.e2
    s = math.sin(phi)
    return params.semi_major_axis * (1.0 - e2) / (1.0 - e2 * s * s) ** 1.5


def project(p: GeoPoint, params: ProjectionParams = ProjectionParams()) -> Point2D:
    """Forward mapping: geographic degrees to easting/northing meters.

    Series in the longitude offset l through l^8 (Snyder's formulation in
    the second eccentricity), then scaled and shifted by k0 and the false
    origin. Raises OutOfZone when |longitude - central_meridian| >= 10 deg.
    """
    dlon = p.longitude - params.central_meridian
    if abs(dlon) >= ZONE_HALF_WIDTH_DEG:
        raise OutOfZone(
            f"longitude {p.longitude} is {abs(dlon):.3f} deg from the "
            f"central meridian {params.central_meridian}"
        )

    phi = math.radians(p.latitude)
    l = math.radians(dlon)
    a = params.semi_major_axis
    ep2 = params.ep2

    cos_phi = math.cos(phi)
    t = math.tan(phi)
    t2 = t * t
    nu2 = ep2 * cos_phi * cos_phi
    # Radius of curvature in the prime vertical.
    N = a / math.sqrt(1.0 - params.e2 * math.sin(phi) ** 2)

    l3 = 1.0 - t2 + nu2
    l4 = 5.0 - t2 + 9.0 * nu2 + 4.0 * nu2 * nu2
    l5 = 5.0 - 18.0 * t2 + t2 * t2 + 14.0 * nu2 - 58.0 * t2 * nu2
    l6 = 61.0 - 58.0 * t2 + t2 * t2 + 270.0 * nu2 - 330.0 * t2 * nu2
    l7 = 61.0 - 479.0 * t2 + 179.0 * t2 * t2 - t2 * t2 * t2
    l8 = 1385.0 - 3111.0 * t2 + 543.0 * t2 * t2 - t2 * t2 * t2

    c = cos_phi
    x = (
        N * c * l
        + (N / 6.0) * c ** 3 * l3 * l ** 3
        + (N / 120.0) * c ** 5 * l5 * l ** 5
        + (N / 5040.0) * c ** 7 * l7 * l ** 7
    )
    y = (
        meridian_arc(p.latitude, params)
        + (t / 2.0) * N * c ** 2 * l ** 2
        + (t / 24.0) * N * c ** 4 * l4 * l ** 4
        + (t / 720.0) * N * c ** 6 * l6 * l ** 6
        + (t / 40320.0) * N * c ** 8 * l8 * l ** 8
    )

    k0 = params.scale_factor
    return Point2D(params.false_easting + k0 * x, params.false_northing + k0 * y)


def _footpoint_latitude(northing: float, params: ProjectionParams) -> float:
    """Latitude whose meridian arc equals the given unscaled northing.

    Newton iteration; the arc function is smooth and monotone, so this
    converges in a handful of steps anywhere on the ellipsoid.
    """
    a = params.semi_major_axis
    phi = northing / (a * (1.0 - params.flattening / 2.0))  # spherical start
    for _ in range(_FOOTPOINT_MAX_ITER):
        arc = meridian_arc(math.degrees(phi), params)
        step = (northing - arc) / _meridian_radius(phi, params)
        phi += step
        if abs(step) < _FOOTPOINT_TOL_RAD:
            return phi
    raise NonConvergence(
        f"footpoint latitude did not converge in {_FOOTPOINT_MAX_ITER} iterations"
    )


def unproject(q: Point2D, params: ProjectionParams = ProjectionParams()) -> GeoPoint:
    """Inverse mapping: easting/northing meters back to geographic degrees.

    Footpoint latitude by Newton iteration, then Snyder's inverse series in
    powers of the easting offset.
    """
    k0 = params.scale_factor
    x = (q.x - params.false_easting) / k0
    y = (q.y - params.false_northing) / k0

    phif = _footpoint_latitude(y, params)

    ep2 = params.ep2
    cf = math.cos(phif)
    tf = math.tan(phif)
    tf2 = tf * tf
    tf4 = tf2 * tf2
    nuf2 = ep2 * cf * cf
    Nf = params.semi_major_axis / math.sqrt(1.0 - params.e2 * math.sin(phif) ** 2)

    x1 = 1.0 / (Nf * cf)
    x2 = tf / (2.0 * Nf ** 2)
    x3 = 1.0 / (6.0 * Nf ** 3 * cf)
    x4 = tf / (24.0 * Nf ** 4)
    x5 = 1.0 / (120.0 * Nf ** 5 * cf)
    x6 = tf / (720.0 * Nf ** 6)
    x7 = 1.0 / (5040.0 * Nf ** 7 * cf)
    x8 = tf / (40320.0 * Nf ** 8)

    p2 = -1.0 - nuf2
    p3 = -1.0 - 2.0 * tf2 - nuf2
    p4 = (
        5.0 + 3.0 * tf2 + 6.0 * nuf2 - 6.0 * tf2 * nuf2
        - 3.0 * nuf2 * nuf2 - 9.0 * tf2 * nuf2 * nuf2
    )
    p5 = 5.0 + 28.0 * tf2 + 24.0 * tf4 + 6.0 * nuf2 + 8.0 * tf2 * nuf2
    p6 = -61.0 - 90.0 * tf2 - 45.0 * tf4 - 107.0 * nuf2 + 162.0 * tf2 * nuf2
    p7 = -61.0 - 662.0 * tf2 - 1320.0 * tf4 - 720.0 * tf4 * tf2
    p8 = 1385.0 + 3633.0 * tf2 + 4095.0 * tf4 + 1575.0 * tf4 * tf2

    lat = (
        phif
        + x2 * p2 * x ** 2
        + x4 * p4 * x ** 4
        + x6 * p6 * x ** 6
        + x8 * p8 * x ** 8
    )
    lon = (
        math.radians(params.central_meridian)
        + x1 * x
        + x3 * p3 * x ** 3
        + x5 * p5 * x ** 5
        + x7 * p7 * x ** 7
    )

    return GeoPoint(math.degrees(lat), math.degrees(lon))
