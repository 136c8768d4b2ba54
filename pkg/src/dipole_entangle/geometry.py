"""Emission directions, circular polarization bases and detector placement."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sources import SourcePairConfig

X_AXIS = np.array([1.0, 0.0, 0.0])

# Bob detectors closer than this to the z axis are displaced to it when a
# minus-condition placement is requested (the exact axis cannot satisfy it).
AXIS_OFFSET = 1e-6


@dataclass(frozen=True, eq=False)
class EmissionGeometry:
    """A propagation direction with its two circular polarization vectors."""

    direction: np.ndarray
    eps_plus: np.ndarray
    eps_minus: np.ndarray
    theta: float
    phi: float

    @property
    def cos_alpha(self) -> float:
        """Cosine of the angle between the direction and the source axis."""
        return float(self.direction[0])

    def polarization(self, label: str) -> np.ndarray:
        if label == "+":
            return self.eps_plus
        if label == "-":
            return self.eps_minus
        raise ValueError(f"polarization label must be '+' or '-', got {label!r}")


@dataclass(frozen=True)
class DetectorRing:
    """A cone of directions around the source axis satisfying one placement condition."""

    parity: str
    cos_alpha: float
    residual: float
    order: int


def _wrap(theta: float, phi: float) -> tuple[float, float]:
    theta = math.fmod(theta, 2.0 * math.pi)
    if theta < 0:
        theta += 2.0 * math.pi
    if theta > math.pi:
        theta = 2.0 * math.pi - theta
        phi = phi + math.pi
    phi = math.fmod(phi, 2.0 * math.pi)
    if phi < 0:
        phi += 2.0 * math.pi
    return theta, phi


def polarization_plus(theta, phi):
    """
    Vectorized plus-helicity polarization vector for directions (theta, phi).

    Returns an array of shape ``np.shape(theta) + (3,)``.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    vec = np.stack([ct * cp - 1j * sp, ct * sp + 1j * cp, -st + 0j], axis=-1)
    return np.exp(1j * phi)[..., None] * vec / np.sqrt(2.0)


def direction_vector(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def geometry_from_spherical(theta: float, phi: float) -> EmissionGeometry:
    """Build the emission geometry for polar angle ``theta`` and azimuth ``phi``."""
    theta, phi = _wrap(float(theta), float(phi))
    k = direction_vector(theta, phi)
    eps = polarization_plus(theta, phi)
    for arr in (k, eps):
        arr.setflags(write=False)
    eps_m = eps.conj()
    eps_m.setflags(write=False)
    return EmissionGeometry(direction=k, eps_plus=eps, eps_minus=eps_m, theta=theta, phi=phi)


def geometry_from_direction(k) -> EmissionGeometry:
    k = np.asarray(k, dtype=float)
    k = k / np.linalg.norm(k)
    theta = math.acos(max(-1.0, min(1.0, k[2])))
    phi = math.atan2(k[1], k[0])
    return geometry_from_spherical(theta, phi)


def _sign(parity: str) -> float:
    if parity == "plus":
        return 1.0
    if parity == "minus":
        return -1.0
    raise ValueError(f"parity must be 'plus' or 'minus', got {parity!r}")


def residual_from_cos(cos_alpha, k0d: float, parity: str):
    """Placement-condition mismatch as a function of k.x (vectorized)."""
    s = _sign(parity)
    half = 0.5 * k0d * np.asarray(cos_alpha, dtype=float)
    return np.abs(np.exp(-1j * half) - s * np.exp(1j * half))


def condition_residual(geom: EmissionGeometry, cfg: SourcePairConfig, parity: str) -> float:
    """
    Mismatch of the detector placement condition at ``geom``.

    Zero when the positional phases of the two sources are equal (parity
    ``"plus"``, Alice) or opposite (parity ``"minus"``, Bob).
    """
    return float(residual_from_cos(geom.cos_alpha, cfg.k0d, parity))


def find_detector_rings(cfg: SourcePairConfig, parity: str, tol: float = 1e-9) -> list[DetectorRing]:
    """
    All cones around the source axis on which the placement condition holds.

    The plus condition holds where ``k0d cos(alpha)`` is an even multiple of
    pi, the minus condition where it is an odd multiple.  The list is sorted
    by ``cos_alpha`` and is empty when no cone exists (``k0d < pi`` for the
    minus parity).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sign = _sign(parity)
    k0d = cfg.k0d
    if k0d == 0.0:
        if sign > 0:
            raise ValueError("with k0d = 0 every direction satisfies the plus condition")
        return []
    offset = 0.0 if sign > 0 else 1.0
    n_max = int(math.floor((k0d / math.pi - offset) / 2.0 + 1e-12))
    rings = []
    for n in range(-n_max - int(offset), n_max + 1):
        phase = (2 * n + offset) * math.pi
        c = phase / k0d
        if abs(c) > 1.0:
            if abs(c) - 1.0 > 1e-12:
                continue
            c = math.copysign(1.0, c)
        res = float(residual_from_cos(c, k0d, parity))
        if res <= tol:
            rings.append(DetectorRing(parity=parity, cos_alpha=c, residual=res, order=n))
    rings.sort(key=lambda r: r.cos_alpha)
    return rings


def minus_ring_separation(theta: float, phi: float, order: int = 0) -> float:
    """Optical separation ``k0d`` placing direction (theta, phi) on the minus ring of ``order``."""
    c = abs(math.sin(theta) * math.cos(phi))
    if c < 1e-15:
        raise ValueError("direction is perpendicular to the source axis; no minus-condition placement")
    return (2 * order + 1) * math.pi / c


def placement_config(cfg: SourcePairConfig, theta_b: float, phi_b: float) -> tuple[SourcePairConfig, EmissionGeometry, EmissionGeometry]:
    """
    Alice on the z axis and Bob at (theta_b, phi_b), both on their conditions.

    If Bob's direction already satisfies the minus condition for ``cfg.k0d`` the
    configuration is returned unchanged; otherwise ``k0d`` is moved to the
    nearest value putting Bob on a minus ring.  A polar angle within
    ``AXIS_OFFSET`` of the axis is displaced to ``AXIS_OFFSET`` first, since the
    axis itself coincides with Alice's direction.

    Returns ``(cfg, geom_alice, geom_bob)``.
    """
    theta_b, phi_b = _wrap(theta_b, phi_b)
    if theta_b < AXIS_OFFSET:
        theta_b = AXIS_OFFSET
    elif theta_b > math.pi - AXIS_OFFSET:
        theta_b = math.pi - AXIS_OFFSET
    geom_a = geometry_from_spherical(0.0, 0.0)
    geom_b = geometry_from_spherical(theta_b, phi_b)
    if condition_residual(geom_b, cfg, "minus") <= 1e-12:
        return cfg, geom_a, geom_b
    c = abs(geom_b.cos_alpha)
    if c < 1e-15:
        raise ValueError("Bob's direction is perpendicular to the source axis; no minus-condition placement")
    order = max(0, int(round((cfg.k0d * c / math.pi - 1.0) / 2.0)))
    return cfg.replace(k0d=(2 * order + 1) * math.pi / c), geom_a, geom_b
