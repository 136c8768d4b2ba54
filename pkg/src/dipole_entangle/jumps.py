"""
Quantum-jump building blocks: reset operators, the conditional Hamiltonian
and the no-photon evolution, plus directional emission densities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .geometry import EmissionGeometry, polarization_plus
from .sources import DIM, SourcePairConfig, excitation_numbers, lowering_operator

POLARIZATIONS = ("+", "-")

_N_EXC = excitation_numbers()
_LOWERING = np.array(
    [[lowering_operator(source, j) for j in (0, 1)] for source in (1, 2)]
)  # shape (source, j, 9, 9)


@dataclass(frozen=True)
class JumpContext:
    """Emission direction together with the photon's polarization label."""

    geometry: EmissionGeometry
    polarization: str

    def __post_init__(self):
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be '+' or '-', got {self.polarization!r}")


def channel_coefficients(eps: np.ndarray, cos_alpha, cfg: SourcePairConfig) -> np.ndarray:
    """
    Coefficients of |j>_i<2| in the reset operator.

    ``eps`` has shape (..., 3) and ``cos_alpha`` shape (...); the result has
    shape (..., 2, 2) indexed by (source, ground level j).
    """
    eps = np.asarray(eps, dtype=complex)
    amp = np.sqrt(3.0 * np.array(cfg.rates) / (8.0 * np.pi))
    dip = np.stack([cfg.dipole20, cfg.dipole21])  # (j, 3)
    overlap = np.einsum("jm,...m->...j", dip.conj(), eps)  # (D_2j, eps)
    half = 0.5 * cfg.k0d * np.asarray(cos_alpha, dtype=float)
    phases = np.stack([np.exp(-1j * half), np.exp(1j * half)], axis=-1)  # (..., source)
    return phases[..., :, None] * (amp * overlap)[..., None, :]


def reset_operator(ctx: JumpContext, cfg: SourcePairConfig) -> np.ndarray:
    """Reset operator for a photon with the direction and polarization in ``ctx``."""
    eps = ctx.geometry.polarization(ctx.polarization)
    coef = channel_coefficients(eps, ctx.geometry.cos_alpha, cfg)
    return np.einsum("ij,ijab->ab", coef, _LOWERING)


def reset_pair(geom: EmissionGeometry, cfg: SourcePairConfig) -> tuple[np.ndarray, np.ndarray]:
    return (
        reset_operator(JumpContext(geom, "+"), cfg),
        reset_operator(JumpContext(geom, "-"), cfg),
    )


def conditional_hamiltonian(cfg: SourcePairConfig) -> np.ndarray:
    """Non-Hermitian no-photon generator, diagonal in the product basis."""
    return np.diag(-0.5j * cfg.gamma * _N_EXC)


def ucond_diagonal(t: float, cfg: SourcePairConfig) -> np.ndarray:
    if t < 0:
        raise ValueError("time must be non-negative")
    return np.exp(-0.5 * cfg.gamma * _N_EXC * t)


def ucond(t: float, cfg: SourcePairConfig) -> np.ndarray:
    """
    No-photon evolution operator exp(-i H_cond t).

    Evaluated in closed form: each basis state |i1 i2> is damped by
    exp(-(gamma0 + gamma1) n_exc t / 2).
    """
    return np.diag(ucond_diagonal(t, cfg)).astype(complex)


def survival_weights(state: np.ndarray) -> np.ndarray:
    """Populations with zero, one and two excited sources."""
    pop = np.abs(state) ** 2
    return np.array([pop[_N_EXC == n].sum() for n in (0, 1, 2)])


def mean_excitation(state: np.ndarray) -> float:
    pop = np.abs(state) ** 2
    return float(pop @ _N_EXC / pop.sum())


def emission_density(state: np.ndarray, geom: EmissionGeometry, cfg: SourcePairConfig) -> tuple[float, float]:
    """Probability densities (per unit time and solid angle) for + and - photons along ``geom``."""
    r_plus, r_minus = reset_pair(geom, cfg)
    return (
        float(np.linalg.norm(r_plus @ state) ** 2),
        float(np.linalg.norm(r_minus @ state) ** 2),
    )


def lowered_states(state: np.ndarray) -> np.ndarray:
    """|j>_i<2| applied to ``state`` for every (source, j); shape (2, 2, 9)."""
    return np.einsum("ijab,b->ija", _LOWERING, state)


def emission_densities(state: np.ndarray, theta, phi, cfg: SourcePairConfig) -> np.ndarray:
    """
    Vectorized emission densities.

    Returns an array of shape ``np.shape(theta) + (2,)`` with the + and -
    densities along each direction.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    cos_alpha = np.sin(theta) * np.cos(phi)
    eps_p = polarization_plus(theta, phi)
    vecs = lowered_states(state)
    out = np.empty(theta.shape + (2,))
    for k, eps in enumerate((eps_p, eps_p.conj())):
        coef = channel_coefficients(eps, cos_alpha, cfg)
        amp = np.einsum("...ij,ija->...a", coef, vecs)
        out[..., k] = np.sum(np.abs(amp) ** 2, axis=-1)
    return out


def default_sphere_nodes(k0d: float) -> tuple[int, int]:
    """Node counts resolving the positional phase oscillation exp(i k0d cos(alpha))."""
    return int(math.ceil(0.75 * k0d)) + 48, 16


def sphere_quadrature(n_cos: int, n_phi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Product quadrature on the unit sphere with its polar axis along the source axis.

    Gauss-Legendre in ``cos(alpha) = k.x`` times the uniform rule in the
    azimuth around x.  Returns ``(theta, phi, weights)`` where ``theta, phi``
    are the usual z-axis spherical angles of each node; the weights sum to
    4 pi.  The arrays are cached and read-only.
    """
    return _sphere_nodes(int(n_cos), int(n_phi))


@lru_cache(maxsize=16)
def _sphere_nodes(n_cos: int, n_phi: int):
    # scipy's asymptotic rule is O(n); numpy's leggauss solves a dense n x n eigenproblem
    u, wu = roots_legendre(n_cos)
    beta = 2.0 * np.pi * np.arange(n_phi) / n_phi
    uu, bb = np.meshgrid(u, beta, indexing="ij")
    s = np.sqrt(1.0 - uu**2)
    kx, ky, kz = uu, s * np.cos(bb), s * np.sin(bb)
    theta = np.arccos(np.clip(kz, -1.0, 1.0))
    phi = np.arctan2(ky, kx)
    weights = np.outer(wu, np.full(n_phi, 2.0 * np.pi / n_phi))
    out = (theta.ravel(), phi.ravel(), weights.ravel())
    for arr in out:
        arr.setflags(write=False)
    return out


def total_emission_rate(state: np.ndarray, cfg: SourcePairConfig, n_cos: int | None = None, n_phi: int | None = None) -> float:
    """Sum over polarizations of the emission density integrated over all directions."""
    dn_cos, dn_phi = default_sphere_nodes(cfg.k0d)
    theta, phi, w = sphere_quadrature(n_cos or dn_cos, n_phi or dn_phi)
    dens = emission_densities(np.asarray(state, dtype=complex), theta, phi, cfg)
    return float(w @ dens.sum(axis=-1))


def emission_rate_matrix(cfg: SourcePairConfig) -> np.ndarray:
    """
    Hermitian 9x9 matrix G with <phi|G|phi> the total emission rate from |phi>.

    Differs from ``(gamma0 + gamma1) * n_exc`` only by the collective
    two-source interference terms, which vanish for widely separated sources.
    """
    return _rate_matrix(cfg.key())


@lru_cache(maxsize=64)
def _rate_matrix(key: tuple) -> np.ndarray:
    gamma0, gamma1, k0d, d20, d21, _ = key
    cfg = SourcePairConfig(gamma0=gamma0, gamma1=gamma1, k0d=k0d, dipole20=np.array(d20), dipole21=np.array(d21))
    n_cos, n_phi = default_sphere_nodes(k0d)
    theta, phi, w = sphere_quadrature(n_cos, n_phi)
    cos_alpha = np.sin(theta) * np.cos(phi)
    eps_p = polarization_plus(theta, phi)
    g = np.zeros((DIM, DIM), dtype=complex)
    for eps in (eps_p, eps_p.conj()):
        coef = channel_coefficients(eps, cos_alpha, cfg)
        ops = np.einsum("nij,ijab->nab", coef, _LOWERING)
        g += np.einsum("n,nba,nbc->ac", w, ops.conj(), ops)
    g = 0.5 * (g + g.conj().T)
    g.setflags(write=False)
    return g
