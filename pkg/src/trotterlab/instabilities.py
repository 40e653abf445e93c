"""Structural-instability theory: resonance catalog, perturbative error, effective generators, saddle rates.

Resonances of the one-step unitary sit at tau* = 2 pi r / ((1-s) q) for
offsets q in {p, p-2, ..., 2 or 1}; near them the map's eigenbasis departs
sharply from the target's.  This module predicts their locations, widths,
the long-time magnetization error, the q-step effective Hamiltonian with its
emergent Z_q symmetry, and the hyperbolic-point rates that drive early
square-commutator growth.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from trotterlab.spin import (
    CollectiveOperators,
    ModelParams,
    SpinSector,
    build_collective_operators,
    jx_power,
    matrix_power_hermitian,
    spin_coherent_state,
)
from trotterlab.dynamics import exp_hermitian, floquet_operator, spectral_norm

__all__ = [
    "DegeneratePointError",
    "NoSaddleWarning",
    "MaskedRegionWarning",
    "InstabilityPoint",
    "SaddleData",
    "offset_ladder",
    "tau_star",
    "instability_points",
    "eigenvector_correction",
    "perturbative_error_coherent",
    "perturbative_error_general",
    "immediate_vicinity_mask",
    "in_any_mask",
    "width_factor_f",
    "width_factor_g",
    "instability_width",
    "effective_hamiltonian",
    "effective_unitary_check",
    "s_effective",
    "saddle_exponent_22",
    "saddle_point_44",
    "saddle_exponent_44",
    "saddle_point_42",
    "saddle_exponent_42",
    "saddle_rate_numeric",
]

_MASK_REFERENCE_N = 256


class DegeneratePointError(ValueError):
    """Nondegenerate perturbation theory is invalid at this step size."""


class NoSaddleWarning(UserWarning):
    """No real hyperbolic point exists at this offset from the resonance."""


class MaskedRegionWarning(UserWarning):
    """Step size falls in the immediate vicinity of a resonance."""


@dataclass(frozen=True)
class InstabilityPoint:
    """One resonance (q, r) of the one-step unitary at interpolation s."""

    p: int
    q: int
    r: int
    s: float
    tau_star: float


@dataclass(frozen=True)
class SaddleData:
    """Hyperbolic-point record of a q-step effective flow.

    `lam` is the per-step growth rate; `width` the offset bound within which
    the off-pole fixed-point family is reported.
    """

    z: float
    x: float
    y: float
    lam: float
    width: float
    exists: bool


def offset_ladder(p: int) -> list[int]:
    """Coupling offsets of Jx^p in the m_z basis: p, p-2, ..., down to 2 or 1."""
    return list(range(p, 0, -2))


def tau_star(q: int, r: int, s: float) -> float:
    return 2.0 * math.pi * r / ((1.0 - s) * q)


def instability_points(p: int, s: float, tau_max: float) -> list[InstabilityPoint]:
    """All resonances with tau* <= tau_max, sorted by tau* (coincident values adjacent)."""
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    points = []
    for q in offset_ladder(p):
        r = 1
        while True:
            ts = tau_star(q, r, s)
            if ts > tau_max:
                break
            points.append(InstabilityPoint(p=p, q=q, r=r, s=s, tau_star=ts))
            r += 1
    points.sort(key=lambda pt: (pt.tau_star, pt.q))
    return points


def eigenvector_correction(
    params: ModelParams, ops: CollectiveOperators, m: int
) -> np.ndarray:
    """First-order correction vector to the m-th unperturbed eigenstate.

    Entry m' is i tau (Jx^p)_{m',m} / (p J^(p-1) (e^{i(1-s)tau(m-m')} - 1));
    the eigenvector of the one-step unitary is |m> + s * correction + O(s^2).
    Raises DegeneratePointError when a coupled pair is (numerically) resonant.
    """
    d = ops.sector.dim
    if not 0 <= m < d:
        raise ValueError("basis index out of range")
    J = ops.sector.J
    p, s, tau = params.p, params.s, params.tau
    jxp_col = jx_power(ops, p)[:, m]
    mprime = np.arange(d)
    delta = m - mprime
    denom = np.exp(1j * (1.0 - s) * tau * delta) - 1.0
    coupled = (jxp_col != 0.0) & (delta != 0)
    if np.any(np.abs(denom[coupled]) < 1e-9):
        raise DegeneratePointError(
            "tau is in the immediate vicinity of a resonance for this level"
        )
    out = np.zeros(d, dtype=complex)
    out[coupled] = (
        1j * tau / (p * J ** (p - 1)) * jxp_col[coupled] / denom[coupled]
    )
    return out


def _coherent_moduli(sector: SpinSector, theta: float) -> np.ndarray:
    """|<m|theta, phi>| of a coherent state; independent of phi."""
    return np.abs(spin_coherent_state(sector, theta, 0.0))


def perturbative_error_coherent(
    params: ModelParams, sector: SpinSector, theta: float, phi: float
) -> float:
    """Closed-form first-order long-time magnetization error for a coherent state.

    Sum over offsets q of
      (s q / (p J^(p-1))) [cos(q phi)(2/(q(1-s)) - tau cot(q(1-s)tau/2))
                           + tau sin(q phi)] * sum_m |rho_{m+q,m}| (Jx^p)_{m,m+q},
    all inside one absolute value, divided by J so it is commensurate with the
    exact error (which normalizes the magnetization difference by J).  Emits
    MaskedRegionWarning inside the immediate vicinity of any resonance (where
    the cotangent diverges and the nondegenerate theory fails).
    """
    ops = build_collective_operators(sector)
    J = sector.J
    p, s, tau = params.p, params.s, params.tau
    if in_any_mask(params, tau_max=tau + 1.0, sector=sector):
        warnings.warn(
            "tau lies in the immediate vicinity of a resonance; "
            "the first-order prediction is unreliable here",
            MaskedRegionWarning,
            stacklevel=2,
        )
    amps = _coherent_moduli(sector, theta)
    jxp = jx_power(ops, p)
    total = 0.0
    for q in offset_ladder(p):
        half = 0.5 * q * (1.0 - s) * tau
        bracket = math.cos(q * phi) * (
            2.0 / (q * (1.0 - s)) - tau / math.tan(half)
        ) + tau * math.sin(q * phi)
        band = float(np.sum(amps[q:] * amps[:-q] * np.diag(jxp, q)))
        total += (s * q / (p * J ** (p - 1))) * bracket * band
    return abs(total) / J


def perturbative_error_general(
    params: ModelParams, sector: SpinSector, rho0: np.ndarray
) -> float:
    """First-order long-time magnetization error for an arbitrary initial state.

    (2s/(p J^(p-1))) | sum_q sum_m Re[ q rho_{m+q,m} (Jx^p)_{m,m+q}
        (1/(q(1-s)) - i tau / (e^{i q (1-s) tau} - 1)) ] | / J; the q = 0 term
    of the relabeled sum carries an explicit factor q and is dropped, and the
    1/J keeps the value commensurate with the exact normalized error.
    """
    ops = build_collective_operators(sector)
    J = sector.J
    p, s, tau = params.p, params.s, params.tau
    rho = np.asarray(rho0, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    jxp = jx_power(ops, p)
    total = 0.0
    for q in offset_ladder(p):
        factor = 1.0 / (q * (1.0 - s)) - 1j * tau / (
            np.exp(1j * q * (1.0 - s) * tau) - 1.0
        )
        band = np.sum(np.diag(rho, -q) * np.diag(jxp, q))
        total += q * (band * factor).real
    return abs(2.0 * s / (p * J ** (p - 1)) * total) / J


@lru_cache(maxsize=64)
def _diag_shift_scale(p: int, q: int, N: int) -> float:
    """max_m |(Jx^p)_{m+q,m+q} - (Jx^p)_{m,m}| / (p J^(p-1))."""
    sector = SpinSector(N)
    ops = build_collective_operators(sector)
    diag = np.diag(jx_power(ops, p))
    return float(np.abs(diag[q:] - diag[:-q]).max() / (p * sector.J ** (p - 1)))


_MASK_FLOOR = 1.5


def immediate_vicinity_mask(
    point: InstabilityPoint, s: float, sector: SpinSector | None = None
) -> tuple[float, float]:
    """Interval around tau* where first-order eigenphase shifts rival the gap.

    Half-width delta solves  s * tau* * D = (1/2) q (1-s) delta, with D the
    largest first-order eigenphase-shift difference between coupled levels
    (evaluated on a reference sector when none is given; it saturates in N).
    For odd p those first-order shifts vanish identically, so 2D is floored
    at 1.5, which covers the measured breakdown cores of the first-order
    error prediction with at least a factor-two margin at desk sizes.
    """
    n = (sector or SpinSector(_MASK_REFERENCE_N)).N
    dmax = _diag_shift_scale(point.p, point.q, n)
    delta = max(2.0 * dmax, _MASK_FLOOR) * s * point.tau_star / (point.q * (1.0 - s))
    return (point.tau_star - delta, point.tau_star + delta)


def in_any_mask(
    params: ModelParams, tau_max: float, sector: SpinSector | None = None
) -> bool:
    """True when params.tau falls inside some resonance's immediate vicinity."""
    for pt in instability_points(params.p, params.s, tau_max):
        lo, hi = immediate_vicinity_mask(pt, params.s, sector)
        if lo <= params.tau <= hi:
            return True
    return False


def width_factor_f(p: int) -> float:
    """F(p) = sqrt(((p-1)(p-2)^(p-2) - (p-2)^(p-1)) / (p-1)^(p-1)); F(2) = 1."""
    return math.sqrt(
        ((p - 1) * (p - 2) ** (p - 2) - (p - 2) ** (p - 1)) / (p - 1) ** (p - 1)
    )


def width_factor_g(p: int) -> float:
    """G(p) = F(p) / 2^p, the q = 4 analog of F."""
    return width_factor_f(p) / 2**p


def instability_width(p: int, q: int, s: float) -> float:
    """Half-width in tau of the (p, q) instability at r = 1.

    Delta-tau bound s tau* F/(1 - s - s F) for q = 2 (F -> G for q = 4);
    within it the q-step effective flow supports a real off-pole fixed point.
    Returns inf when the denominator is nonpositive (bound is vacuous, e.g.
    p = 2 at s >= 1/2).
    """
    if q == 2:
        factor = width_factor_f(p)
    elif q == 4:
        factor = width_factor_g(p)
    else:
        raise ValueError("width is only derived for q in {2, 4}")
    denom = 1.0 - s - s * factor
    if denom <= 0:
        return math.inf
    return s * tau_star(q, 1, s) * factor / denom


def effective_hamiltonian(
    p: int,
    q: int,
    s: float,
    delta_tau: float,
    ops: CollectiveOperators,
    r: int = 1,
) -> np.ndarray:
    """Generator of every q-th map step near tau*_{p,q}.

    -(1-s) (dtau/(tau*+dtau)) Jz - (s/(p q J^(p-1))) sum_m (Jx cos + Jy sin)^p
    with angles 2 pi (m-1)/q.  For even p the sum's second half repeats the
    first; both forms are computed and checked against each other.
    """
    ts = tau_star(q, r, s)
    J = ops.sector.J
    coupling = s / (p * q * J ** (p - 1))
    full = np.zeros((ops.sector.dim, ops.sector.dim), dtype=complex)
    for m in range(q):
        ang = 2.0 * math.pi * m / q
        axis = math.cos(ang) * ops.jx + math.sin(ang) * ops.jy
        full += matrix_power_hermitian(axis, p)
    if p % 2 == 0 and q % 2 == 0:
        half = np.zeros_like(full)
        for m in range(q // 2):
            ang = 2.0 * math.pi * m / q
            axis = math.cos(ang) * ops.jx + math.sin(ang) * ops.jy
            half += matrix_power_hermitian(axis, p)
        if np.abs(full - 2.0 * half).max() > 1e-12 * max(1.0, np.abs(full).max()):
            raise AssertionError("parity half-sum identity violated")
    h = -(1.0 - s) * (delta_tau / (ts + delta_tau)) * ops.jz - coupling * full
    return (h + h.conj().T) / 2.0


def effective_unitary_check(
    p: int,
    q: int,
    s: float,
    delta_tau: float,
    ops: CollectiveOperators,
    r: int = 1,
) -> float:
    """Spectral-norm residual of (U_step)^q against the effective generator.

    min over a global sign of || (U(tau*+dtau))^q -+ exp(-i q (tau*+dtau) H_eff) ||_2;
    the sign absorbs the half-integer-J phase of the full 2 pi r rotation.
    """
    ts = tau_star(q, r, s)
    tau = ts + delta_tau
    u = floquet_operator(ModelParams(p=p, s=s, tau=tau), ops)
    uq = np.linalg.matrix_power(u, q)
    heff = effective_hamiltonian(p, q, s, delta_tau, ops, r=r)
    v = exp_hermitian(heff, -q * tau)
    return min(spectral_norm(uq - v), spectral_norm(uq + v))


def s_effective(s: float, delta_tau: float, tau_star_value: float) -> float:
    """Interpolation parameter of the effective Hamiltonian: 1/(1 + ((1-s)/s) dtau/(tau*+dtau))."""
    if delta_tau <= 0:
        raise ValueError("delta_tau must be positive")
    return 1.0 / (1.0 + ((1.0 - s) / s) * delta_tau / (tau_star_value + delta_tau))


def saddle_exponent_22(s: float, delta_tau: float) -> float:
    """Growth rate (per step) at the destabilized pole of the (2,2) effective flow.

    (tau*+dtau) sqrt( s(1-s)|dtau|/(tau*+dtau) - ((1-s) dtau/(tau*+dtau))^2 );
    the sign of dtau only selects the hemisphere.  Returns 0 and warns when
    the radicand is negative (no hyperbolic point).
    """
    ts = tau_star(2, 1, s)
    tau = ts + delta_tau
    radicand = s * (1.0 - s) * abs(delta_tau) / tau - ((1.0 - s) * delta_tau / tau) ** 2
    if radicand < 0:
        warnings.warn("no real hyperbolic point at this delta_tau", NoSaddleWarning, stacklevel=2)
        return 0.0
    return tau * math.sqrt(radicand)


def _cubic_roots(a: float) -> np.ndarray:
    """Real roots of z^3 - z + a = 0, Newton-polished below 1e-12 residual."""
    roots = np.roots([1.0, 0.0, -1.0, a])
    out = []
    for z in roots:
        if abs(z.imag) < 1e-8:
            x = float(z.real)
            for _ in range(8):
                deriv = 3.0 * x * x - 1.0
                if abs(deriv) < 1e-8:
                    break
                step = (x**3 - x + a) / deriv
                x -= step
                if abs(step) < 1e-15:
                    break
            out.append(x)
    return np.array(sorted(out))


def saddle_point_44(s: float, delta_tau: float) -> SaddleData:
    """Hyperbolic point of the (4,4) effective flow and its per-step rate.

    Off-pole fixed points have X^2 = Y^2 = (1-Z^2)/2 with Z solving
    z^3 - z + 4A = 0, A = ((1-s)/s) dtau/(tau*+dtau).  (The fixed-point
    equations give 4A, not A; see the flow: (s/2) Y^2 Z = (1-s) taubar with
    2 X^2 + Z^2 = 1.)  The saddle root is the one whose linearization has a
    real positive eigenvalue; the rate is that eigenvalue scaled by the step
    size tau*+dtau, matching how the fitted square-commutator slope counts
    time in steps.
    """
    ts = tau_star(4, 1, s)
    tau = ts + delta_tau
    taubar = delta_tau / tau
    a = (1.0 - s) / s * taubar
    width = instability_width(4, 4, s)
    if delta_tau == 0.0:
        # degenerate limit: z = 0 root, rate from the pure quartic flow
        z = 0.0
        x = math.sqrt(0.5)
        m = _m44(s, taubar, x, x)
        lam = float(np.max(np.linalg.eigvals(m).real))
        return SaddleData(z=z, x=x, y=x, lam=tau * lam, width=width, exists=True)
    best = None  # (flow rate, SaddleData)
    for z in _cubic_roots(4.0 * a):
        if abs(z) >= 1.0 or z * delta_tau <= 0.0:
            continue
        x = math.sqrt((1.0 - z * z) / 2.0)
        m = _m44(s, taubar, x, x)
        lam = float(np.max(np.linalg.eigvals(m).real))
        if lam > 1e-12 and (best is None or lam > best[0]):
            best = (
                lam,
                SaddleData(z=float(z), x=x, y=x, lam=tau * lam, width=width, exists=True),
            )
    if best is None:
        return SaddleData(z=math.nan, x=math.nan, y=math.nan, lam=0.0, width=width, exists=False)
    return best[1]


def _m44(s: float, taubar: float, x: float, y: float) -> np.ndarray:
    """Linearized (4,4) effective flow at an off-pole fixed point."""
    a1 = 2.0 * (1.0 - s) * taubar
    return np.array(
        [
            [0.0, a1, 0.5 * s * y**3],
            [-a1, 0.0, -0.5 * s * x**3],
            [s * y**3, -s * x**3, 0.0],
        ]
    )


def saddle_exponent_44(s: float, delta_tau: float) -> float:
    """Per-step growth rate of the (4,4) hyperbolic point; 0 with a warning when absent."""
    data = saddle_point_44(s, delta_tau)
    if not data.exists:
        warnings.warn("no real hyperbolic point at this delta_tau", NoSaddleWarning, stacklevel=2)
    return data.lam


def saddle_point_42(s: float, delta_tau: float) -> SaddleData:
    """Hyperbolic point of the (4,2) effective flow and its per-step rate.

    Off-pole fixed points have Y = 0, X^2 = 1 - Z^2 with Z solving
    z^3 - z + A = 0; the saddle root satisfies 2 Z^2 > X^2.  Rate:
    s (tau*+dtau) sqrt( 2 ((1-s)/s)^2 taubar^2 - X^6 ).
    """
    ts = tau_star(2, 1, s)
    tau = ts + delta_tau
    taubar = delta_tau / tau
    a = (1.0 - s) / s * taubar
    width = instability_width(4, 2, s)
    if delta_tau == 0.0:
        return SaddleData(z=0.0, x=1.0, y=0.0, lam=0.0, width=width, exists=True)
    best = None
    for z in _cubic_roots(a):
        if abs(z) > 1.0 or z * delta_tau <= 0.0:
            continue
        x2 = 1.0 - z * z
        radicand = 2.0 * ((1.0 - s) / s) ** 2 * taubar**2 - x2**3
        if radicand <= 0.0:
            continue
        lam = s * tau * math.sqrt(radicand)
        if best is None or lam > best.lam:
            best = SaddleData(z=float(z), x=math.sqrt(x2), y=0.0, lam=lam, width=width, exists=True)
    if best is None:
        return SaddleData(z=math.nan, x=math.nan, y=math.nan, lam=0.0, width=width, exists=False)
    return best


def saddle_exponent_42(s: float, delta_tau: float) -> float:
    """Per-step growth rate of the (4,2) hyperbolic point; 0 with a warning when absent."""
    data = saddle_point_42(s, delta_tau)
    if not data.exists:
        warnings.warn("no real hyperbolic point at this delta_tau", NoSaddleWarning, stacklevel=2)
    return data.lam


def _effective_flow(p: int, q: int, s: float, taubar: float):
    """Classical flow of the q-step effective generator, dV/dt = grad(h) x V."""
    angles = [2.0 * math.pi * m / q for m in range(q)]

    def grad(v):
        x, y, z = v
        gx = gy = 0.0
        for ang in angles:
            c, si = math.cos(ang), math.sin(ang)
            w = (x * c + y * si) ** (p - 1)
            gx += w * c
            gy += w * si
        scale = -s / q
        return np.array([scale * gx, scale * gy, -(1.0 - s) * taubar])

    def flow(v):
        return np.cross(grad(v), v)

    return flow


def saddle_rate_numeric(
    p: int, q: int, s: float, delta_tau: float, r: int = 1, n_starts: int = 120, seed: int = 0
) -> float:
    """Largest per-step rate over hyperbolic points of the (p, q) effective flow.

    Multi-start root finding on the on-sphere stationarity conditions followed
    by a finite-difference Jacobian eigensolve; covers the offsets where no
    closed form is derived.  Returns 0 with a warning when every stationary
    point is elliptic.
    """
    from scipy.optimize import least_squares

    ts = tau_star(q, r, s)
    tau = ts + delta_tau
    flow = _effective_flow(p, q, s, delta_tau / tau)
    rng = np.random.default_rng(seed)
    best = 0.0
    h = 1e-7
    for _ in range(n_starts):
        v0 = rng.normal(size=3)
        v0 /= np.linalg.norm(v0)
        sol = least_squares(
            lambda v: np.append(flow(v), v @ v - 1.0),
            v0,
            xtol=3e-16,
            ftol=3e-16,
            gtol=3e-16,
        )
        v = sol.x
        if np.abs(flow(v)).max() > 1e-10 or abs(v @ v - 1.0) > 1e-8:
            continue
        jac = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            jac[:, j] = (flow(v + e) - flow(v - e)) / (2.0 * h)
        best = max(best, float(np.max(np.linalg.eigvals(jac).real)))
    if best <= 1e-10:
        warnings.warn("no hyperbolic point found for this offset", NoSaddleWarning, stacklevel=2)
        return 0.0
    return tau * best
