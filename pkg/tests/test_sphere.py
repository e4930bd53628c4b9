import cmath
import math

import numpy as np
import pytest

from qubit_chaos.sphere import (
    INF,
    SNAP_MAGNITUDE,
    MapParam,
    SpherePoint,
    apply_map,
    as_point,
    chordal_distance,
    overlap_distance,
    spherical_derivative,
)


def state_vector(pt):
    # independent route: the normalized 2-component state for a sphere point
    if pt.is_infinity:
        return np.array([1.0, 0.0], dtype=complex)
    z = pt.value
    n = 1.0 / math.sqrt(1.0 + abs(z) ** 2)
    return np.array([n * z, n], dtype=complex)


def random_points(rng, n, spread=1.0):
    vals = spread * (rng.normal(size=n) + 1j * rng.normal(size=n))
    return [SpherePoint(v) for v in vals]


# ---------------------------------------------------------------------------
# the point type

def test_infinity_is_tagged():
    assert INF.is_infinity
    assert SpherePoint.INFINITY is INF
    with pytest.raises(ValueError):
        INF.value


def test_nan_rejected():
    with pytest.raises(ValueError):
        SpherePoint(complex(float("nan"), 0.0))


def test_huge_values_snap_to_infinity():
    assert SpherePoint(1e200 + 0j).is_infinity
    assert SpherePoint(complex(float("inf"), 1.0)).is_infinity
    assert not SpherePoint(SNAP_MAGNITUDE / 2).is_infinity


def test_equality_is_tolerance_based():
    assert SpherePoint(1.0 + 0j) == SpherePoint(1.0 + 1e-12j)
    assert SpherePoint(1.0 + 0j) != SpherePoint(1.0 + 1e-6j)
    assert SpherePoint(1.0) == 1.0
    assert INF == INF
    assert INF != SpherePoint(5.0)
    with pytest.raises(TypeError):
        hash(SpherePoint(0j))


# ---------------------------------------------------------------------------
# the map and its limits

def test_map_examples_p1():
    p = MapParam(1 + 0j)
    assert apply_map(p, 0).value == 1 + 0j
    assert apply_map(p, 1).is_infinity
    assert apply_map(p, INF).value == -1 + 0j


def test_map_examples_p0():
    p = MapParam(0j)
    assert apply_map(p, 2).value == 4 + 0j
    assert apply_map(p, INF).is_infinity


def test_infinity_limit_general():
    p = MapParam(0.4 - 1.3j)
    expected = -1.0 / p.p.conjugate()
    assert abs(apply_map(p, INF).value - expected) < 1e-15


def test_overflow_snaps_to_infinity():
    # squaring 1e100 overshoots the snap horizon at p=0
    assert apply_map(MapParam(0j), 1e100).is_infinity


def test_map_is_total():
    rng = np.random.default_rng(7)
    params = [MapParam(v) for v in
              (rng.normal(size=40) + 1j * rng.normal(size=40))
              * 10.0 ** rng.integers(-3, 4, 40)]
    for param in params:
        specials = [SpherePoint(0j), SpherePoint(1.0), SpherePoint(-1.0),
                    SpherePoint(1j), SpherePoint(-1j), INF]
        if param.p != 0:
            # near the denominator roots z = +/- 1/sqrt(conj p)
            r = cmath.sqrt(1.0 / param.p.conjugate())
            specials += [SpherePoint(r), SpherePoint(-r)]
        pts = specials + random_points(rng, 20, spread=float(10.0 ** rng.integers(-2, 3)))
        for pt in pts:
            out = apply_map(param, pt)
            if not out.is_infinity:
                v = out.value
                assert math.isfinite(v.real) and math.isfinite(v.imag)
                assert abs(v) <= SNAP_MAGNITUDE


def test_unit_circle_invariant_at_p0():
    # |z| = 1 stays exactly on the circle up to rounding when p = 0
    p = MapParam(0j)
    rng = np.random.default_rng(11)
    for theta in rng.uniform(0, 2 * math.pi, 200):
        out = apply_map(p, cmath.exp(1j * theta))
        assert abs(abs(out.value) - 1.0) < 1e-15


def test_conjugation_equivariance():
    rng = np.random.default_rng(13)
    for _ in range(200):
        param = MapParam(rng.normal() + 1j * rng.normal())
        pt = SpherePoint(rng.normal() + 1j * rng.normal())
        lhs = apply_map(param.conjugate(), pt.conjugate())
        rhs = apply_map(param, pt).conjugate()
        assert overlap_distance(lhs, rhs) <= 1e-12
    # and through infinity
    param = MapParam(0.3 + 0.8j)
    assert overlap_distance(apply_map(param.conjugate(), INF),
                            apply_map(param, INF).conjugate()) <= 1e-12


# ---------------------------------------------------------------------------
# overlap distance

def test_overlap_examples():
    assert overlap_distance(0j, INF) == 1.0
    assert overlap_distance(1.0, -1.0) == pytest.approx(1.0, abs=1e-12)
    assert overlap_distance(0.5 + 0.5j, 0.5 + 0.5j) == 0.0
    z = 3.0 + 1.0j
    assert overlap_distance(z, INF) == pytest.approx(1.0 / (1.0 + abs(z) ** 2), rel=1e-12)


def test_overlap_matches_state_overlap():
    # oracle: 1 - |<psi1|psi2>|^2 from explicit normalized state vectors
    rng = np.random.default_rng(17)
    pts = random_points(rng, 30, spread=2.0) + [INF, SpherePoint(0j)]
    for a in pts:
        for b in pts:
            va, vb = state_vector(a), state_vector(b)
            expected = 1.0 - abs(np.vdot(va, vb)) ** 2
            assert overlap_distance(a, b) == pytest.approx(expected, abs=1e-12)


def test_overlap_range_and_symmetry():
    rng = np.random.default_rng(19)
    pts = random_points(rng, 40, spread=5.0) + [INF]
    for a in pts:
        for b in pts:
            d = overlap_distance(a, b)
            assert 0.0 <= d <= 1.0
            assert d == overlap_distance(b, a)


def test_overlap_huge_coordinates_no_overflow():
    a = SpherePoint(1e150 + 0j)
    b = SpherePoint(-1e150 + 0j)
    d = overlap_distance(a, b)
    assert 0.0 <= d <= 1.0
    assert overlap_distance(a, INF) == pytest.approx(0.0, abs=1e-200)
    assert chordal_distance(a, b) == pytest.approx(math.sqrt(d))


# ---------------------------------------------------------------------------
# spherical derivative

def test_expansion_zero_at_critical_points():
    for p in (0j, 1 + 0j, 0.3 - 2.2j):
        param = MapParam(p)
        assert spherical_derivative(param, 0j) == 0.0
        assert spherical_derivative(param, INF) == 0.0


def test_expansion_on_unit_circle_at_p0():
    param = MapParam(0j)
    rng = np.random.default_rng(23)
    for theta in rng.uniform(0, 2 * math.pi, 50):
        assert spherical_derivative(param, cmath.exp(1j * theta)) == pytest.approx(2.0, rel=1e-14)


def test_expansion_matches_finite_differences():
    # oracle: ratio of overlap distances under a small displacement
    rng = np.random.default_rng(29)
    h = 1e-7
    checked = 0
    for _ in range(120):
        param = MapParam(rng.normal() + 1j * rng.normal())
        z = (rng.normal() + 1j * rng.normal()) * rng.choice([0.3, 1.0, 3.0])
        dz = cmath.exp(1j * rng.uniform(0, 2 * math.pi)) * h * max(1.0, abs(z))
        a, b = SpherePoint(z), SpherePoint(z + dz)
        fa, fb = apply_map(param, a), apply_map(param, b)
        base = chordal_distance(a, b)
        if base == 0.0:
            continue
        ratio = chordal_distance(fa, fb) / base
        rate = spherical_derivative(param, a)
        assert ratio == pytest.approx(rate, rel=2e-5, abs=2e-5)
        checked += 1
    assert checked > 100


def test_expansion_chart_consistency():
    # the same point evaluated as z and as its inverted mirror must agree
    rng = np.random.default_rng(31)
    for _ in range(50):
        param = MapParam(rng.normal() + 1j * rng.normal())
        z = rng.normal() + 1j * rng.normal()
        if abs(z) < 1e-3:
            continue
        inner = spherical_derivative(param, z)
        mirrored = spherical_derivative(MapParam(-param.p.conjugate()), 1.0 / z)
        assert inner == pytest.approx(mirrored, rel=1e-12)


def test_expansion_huge_parameter():
    rate = spherical_derivative(MapParam(1e200 * (0.6 + 0.8j)), 0.5 + 0.1j)
    assert math.isfinite(rate) and rate > 0


# ---------------------------------------------------------------------------
# parameters and angles

def test_from_angles_examples():
    assert MapParam.from_angles(math.pi / 4, 0.0).p == pytest.approx(1.0, rel=1e-12)
    assert MapParam.from_angles(0.0, 1.3).p == 0.0
    assert MapParam.from_angles(math.pi / 4, math.pi / 2).p == pytest.approx(1j, rel=1e-12)


def test_from_angles_rejects_half_pi():
    for x in (math.pi / 2, -math.pi / 2, 3 * math.pi / 2):
        with pytest.raises(ValueError):
            MapParam.from_angles(x, 0.0)


def test_angles_round_trip():
    rng = np.random.default_rng(37)
    for _ in range(50):
        x = rng.uniform(0.01, math.pi / 2 - 0.01)
        phi = rng.uniform(-math.pi, math.pi)
        param = MapParam.from_angles(x, phi)
        x2, phi2 = param.to_angles()
        assert x2 == pytest.approx(x, rel=1e-12)
        assert cmath.exp(1j * phi2) == pytest.approx(cmath.exp(1j * phi), rel=1e-12)


def test_param_rejects_nonfinite():
    with pytest.raises(ValueError):
        MapParam(complex(float("inf"), 0.0))


def test_as_point_coercion():
    assert as_point(2).value == 2 + 0j
    assert as_point(INF) is INF
    with pytest.raises(TypeError):
        as_point("not a point")
