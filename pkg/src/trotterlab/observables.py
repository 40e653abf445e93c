"""Long-time averages, magnetization error, and square-commutator growth.

The square commutator c(l) = Tr|[Jz(l), Jz]|^2 / d is tracked per map step;
its early exponential section is fitted on a log scale against the step
count, which is also the time unit the analytic saddle rates use.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from trotterlab.spin import ModelParams, SpinSector, build_collective_operators, target_hamiltonian
from trotterlab.dynamics import SpectralDecomposition, floquet_operator, spectral_decompose

__all__ = [
    "DegenerateSpectrumWarning",
    "long_time_average",
    "diagonal_ensemble_average",
    "error_ez_infinity_exact",
    "OTOCSeries",
    "otoc_series",
    "fit_growth_rate",
]

_GAP_TOL = 1e-8


class DegenerateSpectrumWarning(UserWarning):
    """Diagonal-ensemble formula assumes nondegenerate eigenphases."""


def _warn_if_degenerate(levels: np.ndarray, circular: bool) -> None:
    x = np.sort(np.asarray(levels, dtype=float))
    if x.size < 2:
        return
    gaps = np.diff(x)
    if circular:
        gaps = np.append(gaps, x[0] + 2.0 * np.pi - x[-1])
    if gaps.min() < _GAP_TOL:
        warnings.warn(
            f"eigenlevel gap {gaps.min():.2e} below {_GAP_TOL:g}; "
            "diagonal-ensemble average may be gauge dependent",
            DegenerateSpectrumWarning,
            stacklevel=3,
        )


def diagonal_ensemble_average(
    eigenvectors: np.ndarray, state: np.ndarray, a: np.ndarray
) -> float:
    """sum_r |<phi_r|psi>|^2 <phi_r|A|phi_r> over the given eigenbasis."""
    v = eigenvectors
    probs = np.abs(v.conj().T @ state) ** 2
    adiag = np.einsum("ij,ij->j", v.conj(), a @ v).real
    return float(probs @ adiag)


def long_time_average(
    state: np.ndarray, spec: SpectralDecomposition, a: np.ndarray
) -> float:
    """Infinite-time average of <A> under the unitary with spectrum `spec`.

    Equals the diagonal-ensemble value; emits DegenerateSpectrumWarning when
    any eigenphase gap is below 1e-8.
    """
    _warn_if_degenerate(spec.eigenphases, circular=True)
    return diagonal_ensemble_average(spec.eigenvectors, state, a)


def error_ez_infinity_exact(
    params: ModelParams,
    sector: SpinSector,
    state: np.ndarray,
    ops=None,
    target_basis: np.ndarray | None = None,
    floquet: np.ndarray | None = None,
) -> float:
    """|<Jz>_inf(target) - <Jz>_inf(one-step map)| / J.

    The target average uses the eigenbasis of H(s) directly (continuous-time
    diagonal ensemble); the stroboscopic average uses the eigenbasis of the
    one-step unitary at the given tau.  `ops`/`target_basis`/`floquet` let
    sweeps reuse work; they must match (params, sector) when given.
    """
    ops = ops if ops is not None else build_collective_operators(sector)
    if target_basis is None:
        h = target_hamiltonian(params, ops)
        energies, target_basis = np.linalg.eigh(h)
        _warn_if_degenerate(energies, circular=False)
    avg_tar = diagonal_ensemble_average(target_basis, state, ops.jz)

    u = floquet if floquet is not None else floquet_operator(params, ops)
    spec = spectral_decompose(u)
    avg_trot = long_time_average(state, spec, ops.jz)
    return abs(avg_tar - avg_trot) / sector.J


@dataclass
class OTOCSeries:
    """Square-commutator trace per map step.

    `times` counts map steps (t in units of one Trotter step); `tau` converts
    to physical time t*tau.  `fit_window`/`growth_rate` are filled in by
    fit_growth_rate.
    """

    times: np.ndarray
    values: np.ndarray
    tau: float
    fit_window: tuple[int, int] | None = None
    growth_rate: float | None = None
    fit_r2: float | None = field(default=None)


def otoc_series(
    params: ModelParams, sector: SpinSector, n_steps: int, ops=None
) -> OTOCSeries:
    """c(l) = Tr|[Jz(l), Jz]|^2 / d for l = 0 .. n_steps under the one-step map."""
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    ops = ops if ops is not None else build_collective_operators(sector)
    u = floquet_operator(params, ops)
    ud = u.conj().T
    jz = ops.jz
    d = sector.dim
    values = np.zeros(n_steps + 1)
    a = jz.astype(complex)
    for l in range(1, n_steps + 1):
        a = ud @ a @ u
        comm = a @ jz - jz @ a
        values[l] = float((comm.real**2 + comm.imag**2).sum() / d)
    return OTOCSeries(times=np.arange(n_steps + 1, dtype=float), values=values, tau=params.tau)


def _first_local_max(values: np.ndarray) -> int:
    for i in range(1, values.size - 1):
        if values[i] > values[i + 1] and values[i] >= values[i - 1]:
            return i
    return values.size - 1


def fit_growth_rate(series: OTOCSeries, r2_threshold: float = 0.9995) -> float | None:
    """Slope of ln c over the longest early-time window with R^2 >= threshold.

    The window starts after the dead transient (c below 1e-10 of the series
    maximum) and ends before the first local maximum of c (saturation onset).
    Windows must hold at least 5 points; among qualifying windows the longest
    wins, earliest on ties.  Returns None (no-growth marker) when no window
    qualifies or fewer than 11 points are positive.

    The default threshold is strict on purpose: with looser values the
    longest qualifying window absorbs part of the saturation bend and biases
    the slope 10-20% low at moderate system sizes.
    """
    c = np.asarray(series.values, dtype=float)
    t = np.asarray(series.times, dtype=float)
    positive = c > 0
    if positive.sum() <= 10:
        series.fit_window = None
        series.growth_rate = None
        series.fit_r2 = None
        return None
    cmax = c.max()
    usable = positive & (c >= 1e-10 * cmax)
    stop = _first_local_max(c)
    idx = np.flatnonzero(usable[:stop])
    best = None  # (length, -start, slope, (i, j), r2)
    if idx.size >= 5:
        x = t[idx]
        y = np.log(c[idx])
        # prefix sums give O(1) least squares per window
        one = np.concatenate([[0.0], np.cumsum(np.ones_like(x))])
        sx = np.concatenate([[0.0], np.cumsum(x)])
        sxx = np.concatenate([[0.0], np.cumsum(x * x)])
        sy = np.concatenate([[0.0], np.cumsum(y)])
        syy = np.concatenate([[0.0], np.cumsum(y * y)])
        sxy = np.concatenate([[0.0], np.cumsum(x * y)])
        m = idx.size
        for i in range(m - 4):
            for j in range(i + 4, m):
                n = one[j + 1] - one[i]
                vx = (sxx[j + 1] - sxx[i]) - (sx[j + 1] - sx[i]) ** 2 / n
                vy = (syy[j + 1] - syy[i]) - (sy[j + 1] - sy[i]) ** 2 / n
                cxy = (sxy[j + 1] - sxy[i]) - (sx[j + 1] - sx[i]) * (sy[j + 1] - sy[i]) / n
                if vx <= 0 or vy <= 1e-30:
                    continue
                slope = cxy / vx
                r2 = cxy * cxy / (vx * vy)
                if r2 >= r2_threshold:
                    key = (j - i, -i)
                    if best is None or key > best[0]:
                        best = (key, slope, (int(idx[i]), int(idx[j])), r2)
    if best is None:
        series.fit_window = None
        series.growth_rate = None
        series.fit_r2 = None
        return None
    _, slope, window, r2 = best
    series.fit_window = window
    series.growth_rate = float(slope)
    series.fit_r2 = float(r2)
    return float(slope)
