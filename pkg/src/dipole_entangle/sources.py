"""
Two-source Hilbert space and physical configuration.

Each source is a Lambda-type three-level system with ground states |0>, |1>
and excited state |2>.  A joint source state is a complex vector of length 9
indexed by ``3*i1 + i2`` where ``i1`` is the level of source 1 and ``i2`` the
level of source 2.  Operators on that space are plain 9x9 complex arrays.

Photon pair states are complex vectors of length 4 over the ordered basis
(B+,A+), (B+,A-), (B-,A+), (B-,A-), Bob's label first.

Units: hbar = c = 1.  Positions enter only through the dimensionless optical
phase ``k0d = k0 |r1 - r2|`` with source 1 at +d/2 x and source 2 at -d/2 x.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

LEVELS = (0, 1, 2)
DIM = 9
PAIR_LABELS = ("B+A+", "B+A-", "B-A+", "B-A-")

NORM_TOL = 1e-12

DEFAULT_DIPOLE20 = np.array([1.0, 1.0j, 0.0]) / np.sqrt(2.0)
DEFAULT_DIPOLE21 = DEFAULT_DIPOLE20.conj()


def index(i1: int, i2: int) -> int:
    if i1 not in LEVELS or i2 not in LEVELS:
        raise ValueError(f"levels must be in {LEVELS}, got ({i1}, {i2})")
    return 3 * i1 + i2


def ket(i1: int, i2: int) -> np.ndarray:
    """Product basis state |i1 i2>."""
    v = np.zeros(DIM, dtype=complex)
    v[index(i1, i2)] = 1.0
    return v


def dicke_basis_vector(kind: str, i: int, j: int) -> np.ndarray:
    """
    Dicke state (|ij> + |ji>)/sqrt(2) or (|ij> - |ji>)/sqrt(2).

    Parameters
    ----------
    kind : {"symmetric", "antisymmetric"}
    i, j : int
        Distinct levels in {0, 1, 2}.
    """
    if i == j:
        raise ValueError("Dicke pair needs two distinct levels")
    if kind == "symmetric":
        sign = 1.0
    elif kind == "antisymmetric":
        sign = -1.0
    else:
        raise ValueError(f"unknown Dicke kind {kind!r}")
    return (ket(i, j) + sign * ket(j, i)) / np.sqrt(2.0)


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Hermitian inner product <a|b>, conjugate-linear in ``a``."""
    return complex(np.vdot(a, b))


def vec_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Complex 3-vector product (a, b) = sum_m conj(a_m) b_m."""
    return complex(np.vdot(a, b))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 / (<a|a><b|b>); insensitive to global phase."""
    na = np.vdot(a, a).real
    nb = np.vdot(b, b).real
    return float(abs(np.vdot(a, b)) ** 2 / (na * nb))


def norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def normalized(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def excitation_numbers() -> np.ndarray:
    """Number of excited sources for every basis index."""
    return np.array([(i1 == 2) + (i2 == 2) for i1 in LEVELS for i2 in LEVELS], dtype=float)


def swap_operator() -> np.ndarray:
    """Exchange of the two sources, |i1 i2> -> |i2 i1>."""
    s = np.zeros((DIM, DIM))
    for i1 in LEVELS:
        for i2 in LEVELS:
            s[index(i2, i1), index(i1, i2)] = 1.0
    return s


def lowering_operator(source: int, j: int) -> np.ndarray:
    """|j><2| acting on ``source`` (1 or 2), identity on the other one."""
    if j not in (0, 1):
        raise ValueError("lowering target must be a ground level")
    single = np.zeros((3, 3))
    single[j, 2] = 1.0
    if source == 1:
        return np.kron(single, np.eye(3)).astype(complex)
    if source == 2:
        return np.kron(np.eye(3), single).astype(complex)
    raise ValueError("source must be 1 or 2")


def _unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(3)
    if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
        raise ValueError(f"{name} must have unit norm, got {np.linalg.norm(v)!r}")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class SourcePairConfig:
    """
    Physical parameters of the two-source setup.

    ``gamma0`` and ``gamma1`` are the decay rates of the 2-0 and 2-1
    transitions, ``k0d`` the optical phase across the source separation.
    The initial state defaults to |22>.
    """

    gamma0: float = 1.0
    gamma1: float = 1.0
    k0d: float = 2.0 * np.pi
    dipole20: np.ndarray = field(default_factory=lambda: DEFAULT_DIPOLE20.copy())
    dipole21: np.ndarray = field(default_factory=lambda: DEFAULT_DIPOLE21.copy())
    initial_state: np.ndarray = field(default_factory=lambda: ket(2, 2))

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.gamma1 > 0):
            raise ValueError("decay rates must be positive")
        if not self.k0d >= 0:
            raise ValueError("k0d must be non-negative")
        object.__setattr__(self, "gamma0", float(self.gamma0))
        object.__setattr__(self, "gamma1", float(self.gamma1))
        object.__setattr__(self, "k0d", float(self.k0d))
        object.__setattr__(self, "dipole20", _unit(self.dipole20, "dipole20"))
        object.__setattr__(self, "dipole21", _unit(self.dipole21, "dipole21"))
        psi = np.asarray(self.initial_state, dtype=complex).reshape(DIM)
        if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
            raise ValueError("initial_state must be normalized")
        psi = psi.copy()
        psi.setflags(write=False)
        object.__setattr__(self, "initial_state", psi)

    @property
    def gamma(self) -> float:
        """Total decay rate of one excited source."""
        return self.gamma0 + self.gamma1

    @property
    def dipoles(self) -> tuple[np.ndarray, np.ndarray]:
        return self.dipole20, self.dipole21

    @property
    def rates(self) -> tuple[float, float]:
        return self.gamma0, self.gamma1

    def population22(self) -> float:
        return float(abs(self.initial_state[index(2, 2)]) ** 2)

    def replace(self, **changes) -> "SourcePairConfig":
        return replace(self, **changes)

    def key(self) -> tuple:
        """Hashable identity of the configuration (for caches and hashing)."""
        return (
            self.gamma0,
            self.gamma1,
            self.k0d,
            tuple(self.dipole20.tolist()),
            tuple(self.dipole21.tolist()),
            tuple(self.initial_state.tolist()),
        )
