import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dipole_entangle.geometry import (
    condition_residual,
    find_detector_rings,
    geometry_from_direction,
    geometry_from_spherical,
    minus_ring_separation,
    placement_config,
    residual_from_cos,
)
from dipole_entangle.sources import SourcePairConfig

angles = st.floats(-10.0, 10.0, allow_nan=False)


def scan_zeros(k0d, parity, step=1e-5):
    """Brute-force oracle: local minima of the residual on a fine cos(alpha) grid."""
    c = np.arange(-1.0, 1.0 + step / 2, step)
    r = residual_from_cos(c, k0d, parity)
    padded = np.concatenate([[np.inf], r, [np.inf]])
    is_min = (padded[1:-1] <= padded[:-2]) & (padded[1:-1] <= padded[2:])
    return c[is_min & (r < 1e-3)]


def test_alice_direction_polarization():
    g = geometry_from_spherical(0.0, 0.0)
    np.testing.assert_allclose(g.eps_plus, np.array([1, 1j, 0]) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(g.direction, [0, 0, 1], atol=1e-15)


def test_equatorial_polarization():
    g = geometry_from_spherical(math.pi / 2, 0.0)
    np.testing.assert_allclose(g.eps_plus, np.array([0, 1j, -1]) / math.sqrt(2), atol=1e-15)


@given(angles, angles)
def test_geometry_invariants(theta, phi):
    g = geometry_from_spherical(theta, phi)
    assert abs(np.linalg.norm(g.direction) - 1) < 1e-12
    assert abs(np.linalg.norm(g.eps_plus) - 1) < 1e-12
    assert abs(np.vdot(g.eps_plus, g.direction)) < 1e-12
    assert abs(np.vdot(g.eps_minus, g.eps_plus)) < 1e-12
    np.testing.assert_allclose(g.eps_minus, g.eps_plus.conj())
    np.testing.assert_allclose(g.direction, [
        math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)
    ], atol=1e-12)


@given(angles, angles)
def test_wrapping_preserves_polarization(theta, phi):
    g = geometry_from_spherical(theta, phi)
    k = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    e = np.exp(1j * phi) * np.array([
        math.cos(theta) * math.cos(phi) - 1j * math.sin(phi),
        math.cos(theta) * math.sin(phi) + 1j * math.cos(phi),
        -math.sin(theta),
    ]) / math.sqrt(2)
    np.testing.assert_allclose(g.direction, k, atol=1e-12)
    np.testing.assert_allclose(g.eps_plus, e, atol=1e-12)


def test_geometry_from_direction_roundtrip():
    g = geometry_from_direction([1.0, 2.0, -0.5])
    np.testing.assert_allclose(g.direction, np.array([1.0, 2.0, -0.5]) / math.sqrt(5.25), atol=1e-15)


def test_residual_examples():
    cfg = SourcePairConfig(k0d=2 * math.pi)
    z = geometry_from_spherical(0.0, 0.0)
    assert condition_residual(z, cfg, "plus") == 0.0
    assert abs(condition_residual(z, cfg, "minus") - 2.0) < 1e-15
    bob = geometry_from_spherical(math.pi / 6, 0.0)  # k.x = 1/2
    assert condition_residual(bob, cfg, "minus") < 1e-12
    assert 0.5 in np.round(scan_zeros(2 * math.pi, "minus"), 4)


@pytest.mark.parametrize(
    "parity, expected",
    [("plus", [-1.0, 0.0, 1.0]), ("minus", [-0.5, 0.5])],
)
def test_rings_at_two_pi_match_scan(parity, expected):
    cfg = SourcePairConfig(k0d=2 * math.pi)
    rings = find_detector_rings(cfg, parity, tol=1e-9)
    got = [r.cos_alpha for r in rings]
    np.testing.assert_allclose(got, expected, atol=1e-15)
    np.testing.assert_allclose(got, scan_zeros(2 * math.pi, parity), atol=2e-5)
    assert all(r.residual <= 1e-12 for r in rings)


def test_no_bob_ring_for_small_separation():
    assert find_detector_rings(SourcePairConfig(k0d=math.pi / 2), "minus") == []


@pytest.mark.parametrize("k0d", [math.pi, 3.3, 7.0, 25.0])
def test_rings_match_scan(k0d):
    cfg = SourcePairConfig(k0d=k0d)
    for parity in ("plus", "minus"):
        rings = find_detector_rings(cfg, parity)
        np.testing.assert_allclose([r.cos_alpha for r in rings], scan_zeros(k0d, parity), atol=2e-5)


def test_find_rings_rejects_bad_input():
    with pytest.raises(ValueError):
        find_detector_rings(SourcePairConfig(), "plus", tol=0.0)
    with pytest.raises(ValueError):
        find_detector_rings(SourcePairConfig(), "sideways")


def test_tolerance_width_grows_when_sources_closer():
    def width(k0d):
        # connected stretch of residual <= 0.1 around the shared solution cos(alpha) = 0
        c = np.linspace(-0.2, 0.2, 400001)
        ok = residual_from_cos(c, k0d, "plus") <= 0.1
        mid = len(c) // 2
        lo = mid
        while lo > 0 and ok[lo - 1]:
            lo -= 1
        hi = mid
        while hi < len(c) - 1 and ok[hi + 1]:
            hi += 1
        return c[hi] - c[lo]

    for k0d in (4 * math.pi, 10.0, 40.0):
        assert width(k0d / 2) >= width(k0d)


def test_placement_puts_bob_on_minus_ring(cfg):
    new, ga, gb = placement_config(cfg, 0.7, 0.4)
    assert condition_residual(ga, new, "plus") < 1e-12
    assert condition_residual(gb, new, "minus") < 1e-12
    new, _, gb = placement_config(cfg, 0.0, 0.0)
    assert gb.theta == pytest.approx(1e-6)
    with pytest.raises(ValueError):
        placement_config(cfg, 1.0, math.pi / 2)
    with pytest.raises(ValueError):
        minus_ring_separation(1.0, math.pi / 2)


def test_placement_keeps_satisfied_config():
    cfg = SourcePairConfig(k0d=2 * math.pi)
    same, _, _ = placement_config(cfg, math.pi / 6, 0.0)
    assert same is cfg
