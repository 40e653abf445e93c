"""Target and one-step (Floquet) unitaries, spectra, and eigenbasis diagnostics.

Unitaries are plain complex ndarrays.  All exponentials go through Hermitian
eigendecomposition; every generator here is Hermitian and d stays small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trotterlab.spin import (
    CollectiveOperators,
    ModelParams,
    SpinSector,
    build_collective_operators,
    jx_power,
)

__all__ = [
    "exp_hermitian",
    "target_unitary",
    "floquet_operator",
    "FloquetFactory",
    "trotterized_unitary",
    "evolve",
    "SpectralDecomposition",
    "spectral_decompose",
    "average_ipr",
    "coe_average_ipr",
    "dissimilarity",
    "dissimilarity_from_ipr",
    "trotter_error_bound",
    "assert_unitary",
    "spectral_norm",
]

_HERM_TOL = 1e-10
_UNITARY_TOL = 1e-10


def _herm_residual(h: np.ndarray) -> float:
    return float(np.abs(h - h.conj().T).max())


def assert_unitary(u: np.ndarray, tol: float = _UNITARY_TOL) -> None:
    d = u.shape[0]
    res = np.abs(u.conj().T @ u - np.eye(d)).max()
    if res > tol:
        raise ValueError(f"matrix is not unitary: max |U^H U - I| = {res:.3e}")


def exp_hermitian(h: np.ndarray, scale: float) -> np.ndarray:
    """exp(i * scale * H) via eigendecomposition of the Hermitian H."""
    scale_h = max(1.0, float(np.abs(h).max()))
    if _herm_residual(h) > _HERM_TOL * scale_h:
        raise ValueError("generator is not Hermitian")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * scale * w)) @ v.conj().T


def target_unitary(params: ModelParams, ops: CollectiveOperators, t: float) -> np.ndarray:
    """exp(-i H(s) t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    from trotterlab.spin import target_hamiltonian

    return exp_hermitian(target_hamiltonian(params, ops), -t)


class FloquetFactory:
    """One-step unitaries for many (s, tau) at fixed (sector, p).

    Diagonalizes Jx^p once; each unitary then costs two dense multiplies.
    """

    def __init__(self, ops: CollectiveOperators, p: int):
        self.ops = ops
        self.p = p
        self.jz_diag = np.diag(ops.jz).copy()
        w, v = np.linalg.eigh(jx_power(ops, p))
        self._kick_w = w
        self._kick_v = v

    def unitary(self, s: float, tau: float) -> np.ndarray:
        """U(tau) = exp(i(1-s) tau Jz) exp(i s tau Jx^p / (p J^(p-1)))."""
        J = self.ops.sector.J
        angle = s * tau / (self.p * J ** (self.p - 1))
        if angle == 0.0:
            # keep the vanishing kick an exact identity, not V V^H rounding
            kick = np.eye(self.ops.sector.dim, dtype=complex)
        else:
            v = self._kick_v
            kick = (v * np.exp(1j * angle * self._kick_w)) @ v.conj().T
        return np.exp(1j * (1.0 - s) * tau * self.jz_diag)[:, None] * kick


def floquet_operator(params: ModelParams, ops: CollectiveOperators) -> np.ndarray:
    """One-step unitary: z-rotation times p-th power kick, in that order."""
    return FloquetFactory(ops, params.p).unitary(params.s, params.tau)


def trotterized_unitary(
    p: int, s: float, t: float, n: int, ops: CollectiveOperators
) -> np.ndarray:
    """(U_step(t/n))^n, the n-step product-formula approximation of exp(-iH(s)t)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    step = floquet_operator(ModelParams(p=p, s=s, tau=t / n), ops)
    return np.linalg.matrix_power(step, n)


def evolve(state: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """States after 1 .. n applications of u, stacked along axis 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = np.empty((n, state.shape[0]), dtype=complex)
    psi = np.asarray(state, dtype=complex)
    for i in range(n):
        psi = u @ psi
        out[i] = psi
    return out


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenphases in (-pi, pi] and orthonormal eigenvector columns."""

    eigenphases: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenphases.shape[0]


# Mixing angles tried in turn when splitting the unitary into commuting
# Hermitian parts; later entries only matter on (measure-zero) accidental
# collisions of the combination spectrum.
_SPLIT_ANGLES = (0.7371, 1.9213, 2.6177)


def spectral_decompose(u: np.ndarray, tol: float = 1e-8) -> SpectralDecomposition:
    """Eigenphase/eigenvector factorization of a unitary.

    Diagonalizes c1 (U+U^H)/2 + c2 (U-U^H)/(2i), which commutes with U and is
    Hermitian, so eigh guarantees an orthonormal basis; the phase of each
    Rayleigh quotient v^H U v recovers the eigenphase.  Branch is the
    principal value in (-pi, pi], with -pi mapped to +pi.
    """
    assert_unitary(u)
    d = u.shape[0]
    a = (u + u.conj().T) / 2.0
    b = (u - u.conj().T) / 2.0j
    for angle in _SPLIT_ANGLES:
        m = np.cos(angle) * a + np.sin(angle) * b
        m = (m + m.conj().T) / 2.0
        _, v = np.linalg.eigh(m)
        uv = u @ v
        lam = np.einsum("ij,ij->j", v.conj(), uv)
        phases = np.angle(lam)
        if np.abs(uv - v * np.exp(1j * phases)).max() < tol:
            order = np.argsort(phases, kind="stable")
            return SpectralDecomposition(
                eigenphases=phases[order], eigenvectors=np.ascontiguousarray(v[:, order])
            )
    raise np.linalg.LinAlgError("could not factor unitary to requested tolerance")


def average_ipr(basis_a: SpectralDecomposition, basis_b: SpectralDecomposition) -> float:
    """Mean inverse participation ratio of basis A expanded in basis B.

    (1/d) sum_{ij} |<a_i|b_j>|^4, in (0, 1]; 1 iff the bases coincide up to
    phases and within-degeneracy rotations are absent.
    """
    if basis_a.dim != basis_b.dim:
        raise ValueError("bases have different dimensions")
    o = basis_a.eigenvectors.conj().T @ basis_b.eigenvectors
    o2 = o.real**2 + o.imag**2
    return float((o2 * o2).sum() / basis_a.dim)


def coe_average_ipr(N: int) -> float:
    """Mean IPR between independent orthogonal-ensemble bases at d = N+1."""
    return 3.0 / (N + 3.0)


def dissimilarity_from_ipr(ipr: float, N: int) -> float:
    # snap rounding noise at ipr ~ 1 so identical bases report exactly 0
    out = (1.0 - ipr) / (1.0 - coe_average_ipr(N))
    return 0.0 if out < 1e-12 else out


def dissimilarity(u_tar: np.ndarray, u_delta: np.ndarray, N: int) -> float:
    """Normalized eigenbasis difference: (1 - mean IPR) / (1 - COE value).

    0 when the eigenbases coincide; ~1 when they are as unrelated as two
    orthogonal-ensemble draws.  Values above 1 are reported as computed.
    """
    d = N + 1
    if u_tar.shape != (d, d) or u_delta.shape != (d, d):
        raise ValueError("operator dimensions do not match N+1")
    ipr = average_ipr(spectral_decompose(u_tar), spectral_decompose(u_delta))
    return dissimilarity_from_ipr(ipr, N)


def spectral_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2))


def trotter_error_bound(
    params: ModelParams, ops: CollectiveOperators, t: float, n: int
) -> float:
    """First-order product-formula bound (t^2 / 2n) * ||[H1, H2]||_2.

    H1 = -(1-s) Jz and H2 = -(s / (p J^(p-1))) Jx^p; the bound dominates
    ||U_trot - U_tar||_2 for every (t, n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    J = ops.sector.J
    h1 = -(1.0 - params.s) * ops.jz
    h2 = -(params.s / (params.p * J ** (params.p - 1))) * jx_power(ops, params.p)
    comm = h1 @ h2 - h2 @ h1
    return float(t * t / (2.0 * n) * spectral_norm(comm))


def sector_operators(N: int) -> tuple[SpinSector, CollectiveOperators]:
    """Convenience: sector and operators in one call."""
    sector = SpinSector(N)
    return sector, build_collective_operators(sector)
