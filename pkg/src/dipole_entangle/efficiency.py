"""Probability of collecting one photon at each detector."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError
from .geometry import EmissionGeometry, placement_config
from .jumps import reset_pair
from .sources import SourcePairConfig, excitation_numbers

_N_EXC = excitation_numbers()


@dataclass(frozen=True)
class CollectionWindow:
    """Detector solid angles (sr) and Bob's direction."""

    domega_a: float
    domega_b: float
    theta_b: float = 0.0
    phi_b: float = 0.0

    def __post_init__(self):
        for name in ("domega_a", "domega_b"):
            v = getattr(self, name)
            if not 0.0 < v <= 4.0 * math.pi:
                raise ValueError(f"{name} must lie in (0, 4 pi], got {v!r}")


@dataclass(frozen=True)
class QuadSpec:
    """Gauss-Legendre node counts and the time cutoff in units of 1/(gamma0 + gamma1)."""

    n_t1: int = 64
    n_tau: int = 64
    t_max: float = 30.0
    tol: float = 1e-10


def pair_probability_analytic(cfg: SourcePairConfig, win: CollectionWindow) -> float:
    g0, g1 = cfg.rates
    return (
        (3.0 / (8.0 * math.pi)) ** 2
        * 2.0 * g0 * g1 / (g0 + g1) ** 2
        * (1.0 + math.cos(win.theta_b) ** 2)
        * cfg.population22()
        * win.domega_a * win.domega_b
    )


def triangle_nodes(t_max: float, n_t1: int, n_tau: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gauss-Legendre rule on 0 <= t1 <= t2 <= t_max in the variables (t1, tau = t2 - t1).

    Returns flattened ``(t1, tau, weights)``.
    """
    x1, w1 = np.polynomial.legendre.leggauss(n_t1)
    x2, w2 = np.polynomial.legendre.leggauss(n_tau)
    t1 = 0.5 * t_max * (x1 + 1.0)
    span = t_max - t1
    tau = 0.5 * span[:, None] * (x2[None, :] + 1.0)
    w = (0.5 * t_max * w1)[:, None] * (0.5 * span[:, None] * w2[None, :])
    return np.repeat(t1, n_tau), tau.ravel(), w.ravel()


def ordering_density(geom_x: EmissionGeometry, geom_y: EmissionGeometry, t1: np.ndarray, tau: np.ndarray, cfg: SourcePairConfig) -> np.ndarray:
    """Joint density of (X at t1, Y at t1 + tau), summed over both polarizations, for arrays of times."""
    rx = np.stack(reset_pair(geom_x, cfg))
    ry = np.stack(reset_pair(geom_y, cfg))
    evolved = np.exp(-0.5 * cfg.gamma * np.outer(t1, _N_EXC)) * cfg.initial_state  # (n, 9)
    mid = np.einsum("lab,nb->lna", rx, evolved) * np.exp(-0.5 * cfg.gamma * np.outer(tau, _N_EXC))
    final = np.einsum("mab,lnb->lmna", ry, mid)
    return np.sum(np.abs(final) ** 2, axis=(0, 1, 3))


def pair_probability_numeric(cfg: SourcePairConfig, win: CollectionWindow, quad: QuadSpec = QuadSpec()) -> float:
    """
    Pair probability by explicit time integration of the two-photon densities.

    Alice sits on the z axis and Bob at ``(win.theta_b, win.phi_b)``; see
    :func:`placement_config` for how Bob is put on a minus-condition ring.
    Both detection orderings are summed and the result is multiplied by the
    two solid angles.
    """
    if quad.t_max < 20.0:
        raise ValueError("t_max must be at least 20 / (gamma0 + gamma1)")
    cfg, geom_a, geom_b = placement_config(cfg, win.theta_b, win.phi_b)
    t_max = quad.t_max / cfg.gamma
    t1, tau, w = triangle_nodes(t_max, quad.n_t1, quad.n_tau)
    dens = ordering_density(geom_a, geom_b, t1, tau, cfg) + ordering_density(geom_b, geom_a, t1, tau, cfg)
    total = float(w @ dens)
    # every contributing path decays at least like exp(-gamma t2); the mass beyond
    # t_max is then at most 2 exp(-gamma t_max) of the total
    truncation = 2.0 * math.exp(-quad.t_max) * total
    if truncation > quad.tol * max(total, 1e-300):
        raise QuadratureError(f"time cutoff too short: truncation estimate {truncation:.3g}")
    return total * win.domega_a * win.domega_b
