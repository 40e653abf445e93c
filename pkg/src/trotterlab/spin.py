"""Collective spin operators, interpolating Hamiltonians and coherent states.

Everything lives in the maximal-spin (symmetric) subspace of N spin-1/2
particles: J = N/2, Hilbert dimension d = N + 1.  Basis states are indexed
m = 0 .. 2J and correspond to m_z = -J + m, i.e. m_z ascending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

__all__ = [
    "SpinSector",
    "ModelParams",
    "CollectiveOperators",
    "build_collective_operators",
    "matrix_power_hermitian",
    "jx_power",
    "spin_coherent_state",
    "target_hamiltonian",
    "parity_operator",
]


@dataclass(frozen=True)
class SpinSector:
    """Symmetric subspace of N spin-1/2 particles."""

    N: int

    def __post_init__(self):
        n = self.N
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise ValueError(f"N must be a positive integer, got {n!r}")
        object.__setattr__(self, "N", int(n))

    @property
    def J(self) -> float:
        return self.N / 2.0

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def mz(self) -> np.ndarray:
        """m_z eigenvalues -J, -J+1, ..., +J."""
        return np.arange(self.dim) - self.J


@dataclass(frozen=True)
class ModelParams:
    """Interaction order p, interpolation s in [0, 1] and Trotter step tau.

    The single interpolation parameter trades the external field against the
    p-body coupling; s = 0 is a pure field, s = 1 a pure coupling.
    """

    p: int
    s: float
    tau: float

    def __post_init__(self):
        if isinstance(self.p, bool) or int(self.p) != self.p or self.p < 2:
            raise ValueError(f"p must be an integer >= 2, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {self.s!r}")
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be a positive finite real, got {self.tau!r}")

    @property
    def alpha(self) -> float:
        """Rotation angle of one map step about z: alpha = -(1-s)*tau."""
        return -(1.0 - self.s) * self.tau

    @property
    def kick(self) -> float:
        """Kick strength of one map step: k = -s*tau."""
        return -self.s * self.tau


@dataclass(frozen=True)
class CollectiveOperators:
    """Dense d x d matrices of Jx, Jy, Jz for one sector."""

    sector: SpinSector
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_collective_operators(sector: SpinSector) -> CollectiveOperators:
    """Ladder-operator construction of Jx, Jy, Jz in the |m_z> basis."""
    J = sector.J
    mz = sector.mz
    # <m+1| J+ |m> = sqrt(J(J+1) - m(m+1))
    cplus = np.sqrt(J * (J + 1.0) - mz[:-1] * (mz[:-1] + 1.0))
    jx = np.zeros((sector.dim, sector.dim))
    jx[np.arange(sector.dim - 1) + 1, np.arange(sector.dim - 1)] = cplus / 2.0
    jx = jx + jx.T
    jy = np.zeros((sector.dim, sector.dim), dtype=complex)
    jy[np.arange(sector.dim - 1) + 1, np.arange(sector.dim - 1)] = cplus / 2.0j
    jy = jy + jy.conj().T
    jz = np.diag(mz).astype(float)
    return CollectiveOperators(sector, _freeze(jx), _freeze(jy), _freeze(jz))


def matrix_power_hermitian(a: np.ndarray, p: int) -> np.ndarray:
    """Integer power of a Hermitian matrix by repeated multiplication.

    The result is re-Hermitized, so structural symmetry is exact rather than
    accurate to rounding.
    """
    out = np.linalg.matrix_power(a, p)
    return (out + out.conj().T) / 2.0


@lru_cache(maxsize=32)
def _jx_power_cached(N: int, p: int) -> np.ndarray:
    ops = build_collective_operators(SpinSector(N))
    return _freeze(matrix_power_hermitian(ops.jx, p).real)


def jx_power(ops: CollectiveOperators, p: int) -> np.ndarray:
    """Jx^p as a dense real symmetric matrix (cached per sector)."""
    return _jx_power_cached(ops.sector.N, p)


def spin_coherent_state(sector: SpinSector, theta: float, phi: float) -> np.ndarray:
    """Coherent state |theta, phi>: rotate |J, m_z=+J> by theta about y, then phi about z.

    With this convention <J>/J is the spherical unit vector
    (sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)).  Amplitudes are
    evaluated through log-binomials so large N does not overflow.
    """
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta!r}")
    n = sector.N
    m = np.arange(n + 1)
    half = theta / 2.0
    c, s = np.cos(half), np.sin(half)
    logbin = 0.5 * (gammaln(n + 1.0) - gammaln(m + 1.0) - gammaln(n - m + 1.0))
    with np.errstate(divide="ignore"):
        logc = np.log(c) if c > 0.0 else -np.inf
        logs = np.log(s) if s > 0.0 else -np.inf
    # enforce 0^0 = 1 at the poles (mask the log before multiplying by 0)
    expo = m * np.where(m == 0, 0.0, logc) + (n - m) * np.where(m == n, 0.0, logs)
    amp = np.exp(logbin + expo)
    psi = amp * np.exp(-1j * sector.mz * phi)
    return psi / np.linalg.norm(psi)


def target_hamiltonian(params: ModelParams, ops: CollectiveOperators) -> np.ndarray:
    """H(s) = -(1-s) Jz - (s / (p J^(p-1))) Jx^p."""
    J = ops.sector.J
    return (
        -(1.0 - params.s) * ops.jz
        - (params.s / (params.p * J ** (params.p - 1))) * jx_power(ops, params.p)
    )


def parity_operator(sector: SpinSector) -> np.ndarray:
    """Pi = exp(i pi Jz), diagonal in the m_z basis."""
    return np.diag(np.exp(1j * np.pi * sector.mz))
