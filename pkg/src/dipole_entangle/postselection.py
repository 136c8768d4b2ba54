"""
Two-photon conditional states.

The joint state after two emissions is stored as a 4x9 coefficient matrix:
rows are photon-label pairs (Bob, Alice) in the order of ``PAIR_LABELS`` and
columns are source basis states.  Factorization into a photon pair times a
source state is tested through the singular values of that matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FactorizationError, ZeroAmplitudeError
from .geometry import EmissionGeometry, condition_residual
from .jumps import JumpContext, POLARIZATIONS, reset_operator, ucond_diagonal
from .sources import SourcePairConfig, dicke_basis_vector, fidelity, index

PLACEMENT_TOL = 1e-9
SCHMIDT_TOL = 1e-9

A01 = dicke_basis_vector("antisymmetric", 0, 1)


@dataclass(frozen=True, eq=False)
class TwoPhotonRecord:
    """
    Unnormalized source states after emissions (X, t1) then (Y, t2).

    ``amplitudes[(lam, lam2)]`` is the source state for polarization ``lam``
    of the first photon and ``lam2`` of the second one.
    """

    first: EmissionGeometry
    second: EmissionGeometry
    t1: float
    t2: float
    amplitudes: dict

    def density(self) -> float:
        """Joint probability density in (t1, t2, solid angle X, solid angle Y)."""
        return float(sum(np.vdot(v, v).real for v in self.amplitudes.values()))


def two_photon_amplitudes(geom_x: EmissionGeometry, geom_y: EmissionGeometry, t1: float, t2: float, cfg: SourcePairConfig) -> TwoPhotonRecord:
    """Apply R_Y U(t2 - t1) R_X U(t1) to the initial state for all polarization pairs."""
    if t1 < 0:
        raise ValueError("t1 must be non-negative")
    if t2 < t1:
        raise ValueError("emission times must satisfy t2 >= t1")
    evolved = ucond_diagonal(t1, cfg) * cfg.initial_state
    gap = ucond_diagonal(t2 - t1, cfg)
    amps = {}
    for lam in POLARIZATIONS:
        mid = gap * (reset_operator(JumpContext(geom_x, lam), cfg) @ evolved)
        for lam2 in POLARIZATIONS:
            amps[(lam, lam2)] = reset_operator(JumpContext(geom_y, lam2), cfg) @ mid
    return TwoPhotonRecord(first=geom_x, second=geom_y, t1=t1, t2=t2, amplitudes=amps)


def _pair_row(lam_b: str, lam_a: str) -> int:
    return 2 * POLARIZATIONS.index(lam_b) + POLARIZATIONS.index(lam_a)


def joint_matrix(record: TwoPhotonRecord, alice_first: bool = True) -> np.ndarray:
    """
    The 4x9 (Bob, Alice) x source coefficient matrix of a record.

    With ``alice_first`` the first photon is Alice's; otherwise the first
    photon is Bob's and the labels are swapped accordingly.
    """
    m = np.zeros((4, 9), dtype=complex)
    for (lam_first, lam_second), vec in record.amplitudes.items():
        if alice_first:
            m[_pair_row(lam_second, lam_first)] = vec
        else:
            m[_pair_row(lam_first, lam_second)] = vec
    return m


def schmidt_decomposition(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular values plus leading photon and source vectors of a normalized joint matrix."""
    u, s, vh = np.linalg.svd(m / np.linalg.norm(m))
    return s, u[:, 0], vh[0]


def _check_placement(geom_a, geom_b, cfg):
    res_a = condition_residual(geom_a, cfg, "plus")
    res_b = condition_residual(geom_b, cfg, "minus")
    if res_a > PLACEMENT_TOL or res_b > PLACEMENT_TOL:
        raise ValueError(
            f"detectors off their placement conditions (Alice residual {res_a:.3g}, Bob residual {res_b:.3g})"
        )


def conditional_pair_state(geom_a: EmissionGeometry, geom_b: EmissionGeometry, t1: float, t2: float, cfg: SourcePairConfig, check: bool = True):
    """
    Photon pair and source state after Alice detects at ``t1`` and Bob at ``t2``.

    Returns ``(pair, source, density)``: the unit photon pair state in the
    (Bob, Alice) basis, the unit source state and the joint probability
    density of the event.

    Raises
    ------
    ZeroAmplitudeError
        If the initial state has no |22> component.
    FactorizationError
        If the photons remain entangled with the sources (second singular
        value above ``SCHMIDT_TOL``).
    """
    if check:
        _check_placement(geom_a, geom_b, cfg)
    if abs(cfg.initial_state[index(2, 2)]) == 0:
        raise ZeroAmplitudeError("initial state has no |22> component")
    rec = two_photon_amplitudes(geom_a, geom_b, t1, t2, cfg)
    m = joint_matrix(rec, alice_first=True)
    density = float(np.vdot(m, m).real)
    if density == 0.0:
        raise ZeroAmplitudeError("two-photon amplitude vanishes")
    s, pair, source = schmidt_decomposition(m)
    if s[1] > SCHMIDT_TOL:
        raise FactorizationError(f"photon pair entangled with sources (second singular value {s[1]:.3g})")
    return pair, source, density


def schmidt_residual(geom_a: EmissionGeometry, geom_b: EmissionGeometry, t1: float, t2: float, cfg: SourcePairConfig) -> float:
    """Second singular value of the normalized joint state (0 for a product)."""
    m = joint_matrix(two_photon_amplitudes(geom_a, geom_b, t1, t2, cfg))
    return float(schmidt_decomposition(m)[0][1])


def analytic_pair_state(theta: float, phi: float) -> np.ndarray:
    """Closed-form pair state for Alice on the z axis and Bob at (theta, phi)."""
    c = math.cos(theta)
    pref = 1.0 / (2.0 * math.sqrt(1.0 + c * c))
    return pref * np.array(
        [
            (1.0 - c) * np.exp(2j * phi),
            1.0 + c,
            -(1.0 + c),
            -(1.0 - c) * np.exp(-2j * phi),
        ]
    )


def order_symmetry_check(geom_a: EmissionGeometry, geom_b: EmissionGeometry, t1: float, t2: float, cfg: SourcePairConfig) -> float:
    """Norm distance between the Alice-first and Bob-first joint states, both in (Bob, Alice) labels."""
    m_ab = joint_matrix(two_photon_amplitudes(geom_a, geom_b, t1, t2, cfg), alice_first=True)
    m_ba = joint_matrix(two_photon_amplitudes(geom_b, geom_a, t1, t2, cfg), alice_first=False)
    return float(np.linalg.norm(m_ab - m_ba))


def source_fidelity_a01(source: np.ndarray) -> float:
    return fidelity(A01, source)
