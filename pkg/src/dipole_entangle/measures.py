"""Entanglement of the photon pair and exchange-symmetry sectors of the sources."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sources import swap_operator

_SWAP = swap_operator()


@dataclass(frozen=True)
class EntanglementReport:
    concurrence: float
    p_mix: float
    ef: float


def binary_entropy(p: float) -> float:
    """-p log2 p - (1 - p) log2 (1 - p), with 0 log 0 = 0."""
    out = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            out -= q * math.log2(q)
    return out


def _check_unit(pair: np.ndarray) -> np.ndarray:
    pair = np.asarray(pair, dtype=complex).reshape(4)
    n = np.linalg.norm(pair)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"pair state must be normalized, norm is {n!r}")
    return pair


def pure_state_concurrence(pair: np.ndarray) -> float:
    """Concurrence 2|a++ a-- - a+- a-+| of a normalized two-qubit pure state."""
    a = _check_unit(pair)
    return float(min(1.0, 2.0 * abs(a[0] * a[3] - a[1] * a[2])))


def entanglement_of_formation(pair: np.ndarray) -> EntanglementReport:
    c = pure_state_concurrence(pair)
    a = _check_unit(pair)
    # sqrt(1 - C^2) is the Bloch vector length of either reduced photon state;
    # taking it from the amplitudes avoids the blow-up of dp/dC at C = 1
    z = abs(a[0]) ** 2 + abs(a[1]) ** 2 - abs(a[2]) ** 2 - abs(a[3]) ** 2
    xy = 2.0 * abs(a[0] * np.conj(a[2]) + a[1] * np.conj(a[3]))
    r = min(1.0, math.hypot(z, xy))
    # (1 - r) / 2 rewritten without cancellation at small C
    p = min(0.5, c * c / (2.0 * (1.0 + r)))
    return EntanglementReport(concurrence=c, p_mix=p, ef=binary_entropy(p))


def mixing_parameter(theta: float) -> float:
    """cos^2(theta) / (1 + cos^2(theta)) for Bob at polar angle ``theta``."""
    c2 = math.cos(theta) ** 2
    return c2 / (1.0 + c2)


def dicke_sector_overlap(state: np.ndarray) -> tuple[float, float]:
    """Squared norms of the exchange-symmetric and antisymmetric parts of ``state``."""
    state = np.asarray(state, dtype=complex)
    swapped = _SWAP @ state
    sym = 0.5 * (state + swapped)
    anti = 0.5 * (state - swapped)
    return float(np.vdot(sym, sym).real), float(np.vdot(anti, anti).real)
