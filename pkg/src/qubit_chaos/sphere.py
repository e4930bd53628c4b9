"""Points and maps on the Riemann sphere for one conditional-measurement step.

A pure qubit state a|0> + b|1> (up to phase) is encoded by the single complex
ratio z = a/b, so z = 0 is the basis state |1> and the point at infinity is
|0>.  One measurement-selected step (amplitude squaring followed by a local
rotation) acts on z as the quadratic rational map

    z  ->  (z**2 + p) / (1 - conj(p) * z**2)

with a single complex parameter p = tan(x) * exp(i*phi) built from the
rotation angles.  This module provides the sphere arithmetic everything else
builds on: the point type with a tagged infinity, the map itself with all of
its algebraic limits, the overlap distance between states, and the local
expansion rate of the map in that metric.

All functions are pure; no global state, safe to call from worker threads.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import ClassVar

# Finite coordinates above this magnitude are indistinguishable from the
# point at infinity at double precision (the overlap distance to it rounds
# to zero), so they collapse to the tagged infinity element.  This keeps
# every stored value a normal float pair and makes the map total.
SNAP_MAGNITUDE = 1e150

# Default tolerance for treating two points as the same, measured in
# sqrt(overlap_distance) units (i.e. a chordal length on the unit sphere).
POINT_TOL = 1e-9


class SpherePoint:
    """A point of the extended complex plane: a pure qubit state up to phase.

    Either a finite complex coordinate or the distinguished point at
    infinity (``SpherePoint.INFINITY``, also exported as ``INF``).  The
    coordinate 0 is the basis state |1>, infinity is |0>.

    Finite values always have normal floating-point components: NaN input is
    rejected, and any magnitude above ``SNAP_MAGNITUDE`` (including genuine
    float infinities produced by overflow) collapses to the tagged infinity.
    Equality is tolerance-based through :func:`overlap_distance`, never
    bitwise, so instances are deliberately unhashable.
    """

    __slots__ = ("_value",)

    INFINITY: ClassVar["SpherePoint"]

    def __init__(self, value: complex | None):
        if value is None:
            self._value = None
            return
        value = complex(value)
        if math.isnan(value.real) or math.isnan(value.imag):
            raise ValueError("sphere point components cannot be NaN")
        if abs(value) > SNAP_MAGNITUDE:
            self._value = None
        else:
            self._value = value

    @property
    def is_infinity(self) -> bool:
        return self._value is None

    @property
    def value(self) -> complex:
        """The finite coordinate; raises on the point at infinity."""
        if self._value is None:
            raise ValueError("the point at infinity has no finite coordinate")
        return self._value

    def homogeneous(self) -> tuple[complex, complex]:
        """Projective pair (Z, W) with z = Z/W; infinity is (1, 0)."""
        if self._value is None:
            return 1 + 0j, 0j
        return self._value, 1 + 0j

    def conjugate(self) -> "SpherePoint":
        if self._value is None:
            return self
        return SpherePoint(self._value.conjugate())

    def isclose(self, other, tol: float = POINT_TOL) -> bool:
        """True when the chordal separation sqrt(overlap) is within tol."""
        return overlap_distance(self, other) <= tol * tol

    def __eq__(self, other) -> bool:
        try:
            other = as_point(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.isclose(other)

    # tolerance-based equality is incompatible with hashing
    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        if self._value is None:
            return "SpherePoint(inf)"
        return f"SpherePoint({self._value!r})"


SpherePoint.INFINITY = SpherePoint(None)
INF = SpherePoint.INFINITY


def as_point(z) -> SpherePoint:
    """Coerce a SpherePoint, complex number, or real number to a SpherePoint."""
    if isinstance(z, SpherePoint):
        return z
    if isinstance(z, (int, float, complex)):
        return SpherePoint(z)
    raise TypeError(f"cannot interpret {z!r} as a point on the sphere")


@dataclass(frozen=True)
class MapParam:
    """The complex parameter of the one-step map, p = tan(x) * exp(i*phi).

    Any finite complex p is a valid parameter; the angle form exists only
    when tan(x) is finite, which :meth:`from_angles` enforces.
    """

    p: complex

    # from_angles rejects |cos x| below this: floats never land exactly on
    # x = pi/2 mod pi, so a documented numerical band stands in for it.
    ANGLE_TOL: ClassVar[float] = 1e-12

    def __post_init__(self):
        p = complex(self.p)
        if not (math.isfinite(p.real) and math.isfinite(p.imag)):
            raise ValueError("map parameter must be a finite complex number")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_angles(cls, x: float, phi: float) -> "MapParam":
        """Build p = tan(x) * exp(i*phi); rejects x at pi/2 mod pi."""
        if abs(math.cos(x)) < cls.ANGLE_TOL:
            raise ValueError(
                f"rotation angle x={x!r} is within {cls.ANGLE_TOL} of pi/2 mod pi; "
                "tan(x) has no usable finite value there (use the density form)"
            )
        return cls(math.tan(x) * cmath.exp(1j * phi))

    def to_angles(self) -> tuple[float, float]:
        """Angles (x, phi) with x in [0, pi/2) and phi = arg p."""
        return math.atan(abs(self.p)), cmath.phase(self.p)

    def conjugate(self) -> "MapParam":
        return MapParam(self.p.conjugate())


def apply_map(param: MapParam, z) -> SpherePoint:
    """One step of the map: z -> (z**2 + p) / (1 - conj(p) * z**2).

    Total on the whole sphere.  The algebraic limits are exact: infinity
    maps to -1/conj(p) (or stays at infinity when p = 0), and a vanishing
    denominator maps to infinity.  Overflow past ``SNAP_MAGNITUDE`` also
    collapses to infinity, so the result never carries NaN/Inf components.
    """
    p = param.p
    z = as_point(z)
    if z.is_infinity:
        if p == 0:
            return INF
        return SpherePoint(-1.0 / p.conjugate())
    zv = z.value
    z2 = zv * zv
    if abs(p) <= 1.0:
        num = z2 + p
        den = 1.0 - p.conjugate() * z2
    else:
        # rescale by 1/|p| so huge parameters cannot overflow the numerator
        s = 1.0 / abs(p)
        q = p * s
        num = s * z2 + q
        den = s - q.conjugate() * z2
    if den == 0:
        return INF
    out = num / den
    if math.isnan(out.real) or math.isnan(out.imag):
        # cannot happen for finite num/den with den != 0; defensive only
        return INF
    return SpherePoint(out)


def overlap_distance(a, b) -> float:
    """Squared state separation: 1 - |<psi_a|psi_b>|**2, in [0, 1].

    For finite coordinates this is |z_a - z_b|**2 / ((1+|z_a|**2)(1+|z_b|**2));
    the point at infinity enters through the projective form, e.g.
    overlap_distance(z, INF) = 1/(1+|z|**2).  This squared form is the
    canonical metric of the package; tolerances quoted in "sqrt(overlap)
    units" compare against its square root (see :func:`chordal_distance`).
    """
    za, wa = as_point(a).homogeneous()
    zb, wb = as_point(b).homogeneous()
    cross = abs(za * wb - zb * wa)
    na = math.hypot(abs(za), abs(wa))
    nb = math.hypot(abs(zb), abs(wb))
    d = cross / (na * nb)
    return min(1.0, d * d)


def chordal_distance(a, b) -> float:
    """sqrt of :func:`overlap_distance`; the metric the point tolerances use."""
    return math.sqrt(overlap_distance(a, b))


def spherical_derivative(param: MapParam, z) -> float:
    """Local expansion rate of the map at z in the overlap metric.

    This is the spherical derivative |f'(z)| (1+|z|**2) / (1+|f(z)|**2),
    evaluated in whichever coordinate chart keeps the arithmetic small:
    inversion w = 1/z conjugates the parameter-p map to the parameter
    -conj(p) map, so points outside the unit disk (and infinity itself) are
    handled by the same affine routine in the mirrored chart.  Returns 0.0
    exactly at the two critical points z = 0 and z = infinity.
    """
    p = param.p
    z = as_point(z)
    if z.is_infinity:
        return _expansion_affine(-p.conjugate(), 0j)
    zv = z.value
    if abs(zv) > 1.0:
        return _expansion_affine(-p.conjugate(), 1.0 / zv)
    return _expansion_affine(p, zv)


def _expansion_affine(p: complex, z: complex) -> float:
    # |z| <= 1 here.  Numerator and denominator are jointly rescaled by
    # c = 1/sqrt(1+|p|**2) so arbitrarily large parameters stay in range:
    # the Wronskian of the map's numerator/denominator pair is
    # 2 z (1+|p|**2), giving rate = 2|z|(1+|z|**2) / (|c(z**2+p)|**2 +
    # |c(1 - conj(p) z**2)|**2).
    z2 = z * z
    c = 1.0 / math.hypot(1.0, abs(p))
    cp = c * p
    a = c * z2 + cp
    b = c - cp.conjugate() * z2
    den = abs(a) ** 2 + abs(b) ** 2
    az = abs(z)
    return 2.0 * az * (1.0 + az * az) / den


def _preferred_chart(point: SpherePoint) -> tuple[complex, bool]:
    """Coordinate of magnitude <= 1 and a flag for the inverted chart."""
    if point.is_infinity:
        return 0j, True
    zv = point.value
    if abs(zv) > 1.0:
        return 1.0 / zv, True
    return zv, False


def _step_derivative(p: complex, coord: complex, in_w: bool, out_w: bool) -> complex:
    """Derivative of one map application between coordinate charts.

    ``coord`` is the input-point coordinate in its chart (z, or w = 1/z when
    ``in_w``); the return value is d(out coordinate)/d(in coordinate).  The
    four chart combinations share the Wronskian factor 2*coord*(1+|p|**2)
    and differ only in which quadratic sits squared in the denominator.
    Chained factors telescope, so a product of these along an orbit is the
    chart-correct derivative of the composite map.
    """
    pc = p.conjugate()
    c2 = coord * coord
    g = 1.0 + (p.real * p.real + p.imag * p.imag)
    if not in_w and not out_w:
        den = 1.0 - pc * c2
        return 2.0 * coord * g / (den * den)
    if not in_w and out_w:
        den = c2 + p
        return -2.0 * coord * g / (den * den)
    if in_w and not out_w:
        den = c2 - pc
        return -2.0 * coord * g / (den * den)
    den = 1.0 + p * c2
    return 2.0 * coord * g / (den * den)
