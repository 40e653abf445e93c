"""Deterministic parameter sweeps behind the command-line interface.

Each mode maps a config to one CSV (plus a JSON companion for some modes).
Grid cells are independent tasks; they are statically chunked across a
process pool and gathered into a preallocated table, so output bytes never
depend on worker count.  Floats are written with 17 significant digits and
LF endings so files round-trip and diff cleanly.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from trotterlab.spin import (
    ModelParams,
    SpinSector,
    build_collective_operators,
    spin_coherent_state,
    target_hamiltonian,
)
from trotterlab.dynamics import (
    FloquetFactory,
    SpectralDecomposition,
    average_ipr,
    dissimilarity_from_ipr,
    spectral_decompose,
)
from trotterlab.observables import error_ez_infinity_exact, fit_growth_rate, otoc_series
from trotterlab.classical import lyapunov_averaged, phase_portrait, sample_sphere
from trotterlab.instabilities import (
    immediate_vicinity_mask,
    instability_points,
    instability_width,
    perturbative_error_coherent,
    s_effective,
    saddle_exponent_22,
    saddle_exponent_42,
    saddle_exponent_44,
    saddle_rate_numeric,
)

__all__ = ["SweepConfig", "ConfigError", "PartialFailureError", "MODES", "run", "load_config"]

MODES = ("heatmap", "error-curve", "phase-portrait", "otoc", "instabilities")

FAILURE_BUDGET = 0.01  # NaN cells allowed before the run counts as failed


class ConfigError(ValueError):
    """Invalid sweep configuration (CLI exit code 2)."""


class PartialFailureError(RuntimeError):
    """More than the allowed fraction of cells failed (CLI exit code 3)."""


@dataclass
class SweepConfig:
    """One sweep: what to compute, on which grid, and where to write it.

    Every field can come from the JSON config file and be overridden by a
    CLI flag of the same (kebab-case) name.
    """

    mode: str = "heatmap"
    p: int = 2
    n: int = 128
    s: float = 0.1
    s_min: float = 0.02
    s_max: float = 0.5
    s_steps: int = 48
    tau: float = 1.0
    tau_min: float = 0.5
    tau_max: float = 8.0
    tau_steps: int = 48
    theta: float = math.pi / 2
    phi: float = 0.0
    steps: int = 100
    stride: int = 1
    seed: int = 20240901
    workers: int | None = None
    out: str = "sweep.csv"
    # heatmap: settings for the Lyapunov column
    lyap_points: int = 16
    lyap_steps: int = 20000
    # otoc: resonance selection and offsets
    q: int | None = None
    r: int = 1
    delta_taus: list[float] = field(default_factory=list)
    r2_threshold: float = 0.9995
    # phase-portrait: seeded initial conditions (or explicit [[x,y,z], ...])
    n_init: int = 12
    inits: list[list[float]] | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.p < 2:
            raise ConfigError("p must be >= 2")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.steps < 1 or self.stride < 1:
            raise ConfigError("steps and stride must be >= 1")
        if self.s_steps < 1 or self.tau_steps < 1:
            raise ConfigError("grid steps must be >= 1")
        if self.mode == "heatmap":
            if self.s_steps > 1 and not self.s_min < self.s_max:
                raise ConfigError("need s_min < s_max for a swept s axis")
            if self.tau_steps > 1 and not self.tau_min < self.tau_max:
                raise ConfigError("need tau_min < tau_max for a swept tau axis")
        if self.mode == "error-curve" and self.tau_steps > 1 and not self.tau_min < self.tau_max:
            raise ConfigError("need tau_min < tau_max for a swept tau axis")
        if not 0.0 <= self.s <= 1.0:
            raise ConfigError("s must lie in [0, 1]")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")


def load_config(path: str | None, overrides: dict) -> SweepConfig:
    """Config = defaults <- JSON file <- CLI overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in dataclasses.fields(SweepConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    merged = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    try:
        cfg = SweepConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def resolve_workers(cfg: SweepConfig) -> int:
    if cfg.workers is not None:
        return cfg.workers
    env = os.environ.get("TROTTERLAB_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"TROTTERLAB_WORKERS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: str, header: str, rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


# ---------------------------------------------------------------------------
# heatmap

_WORKER_CACHE: dict = {}


def _heatmap_cell(args):
    """One (s, tau) cell: eigenbasis dissimilarity and mean Lyapunov exponent."""
    (p, n_spins, s, tau, lyap_points, lyap_steps, seed, idx) = args
    key = ("ops", n_spins, p)
    if key not in _WORKER_CACHE:
        sector = SpinSector(n_spins)
        ops = build_collective_operators(sector)
        _WORKER_CACHE[key] = (sector, ops, FloquetFactory(ops, p))
    sector, ops, factory = _WORKER_CACHE[key]
    tkey = ("target", n_spins, p, s)
    if tkey not in _WORKER_CACHE:
        h = target_hamiltonian(ModelParams(p=p, s=s, tau=1.0), ops) if s > 0 else -ops.jz
        _, vec = np.linalg.eigh(h)
        _WORKER_CACHE[tkey] = SpectralDecomposition(np.zeros(sector.dim), vec)
    target = _WORKER_CACHE[tkey]
    delta = spectral_decompose(factory.unitary(s, tau))
    dis = dissimilarity_from_ipr(average_ipr(target, delta), n_spins)
    lam = lyapunov_averaged(
        ModelParams(p=p, s=s, tau=tau),
        lyap_points,
        lyap_steps,
        np.random.SeedSequence([seed, idx]),
    )
    return dis, lam


def _run_cells(cfg: SweepConfig, tasks: list, worker) -> tuple[list, int]:
    """Evaluate cells across a pool; results come back in task order.

    Tasks are split into contiguous chunks, one per worker; each cell is
    fully determined by its own task tuple, so the gathered table is
    identical for any worker count.
    """
    n_workers = resolve_workers(cfg)
    if n_workers <= 1 or len(tasks) <= 1:
        gathered = [(0, [_safe(worker, t) for t in tasks])]
    else:
        size = (len(tasks) + n_workers - 1) // n_workers
        chunks = [(i, tasks[i : i + size]) for i in range(0, len(tasks), size)]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(_chunk_runner, [(worker, part) for _, part in chunks]))
        gathered = [(start, part) for (start, _), part in zip(chunks, parts)]
    results: list = [None] * len(tasks)
    failures = 0
    for start, part_results in gathered:
        for off, (ok, value, message) in enumerate(part_results):
            if not ok:
                failures += 1
                print(f"cell {start + off} failed: {message}", file=sys.stderr)
            results[start + off] = value
    return results, failures


def _safe(worker, task):
    try:
        return True, worker(task), ""
    except Exception as exc:  # pragma: no cover - diagnostic path
        return False, None, f"{type(exc).__name__}: {exc}"


def _chunk_runner(bundle):
    worker, part = bundle
    return [_safe(worker, t) for t in part]


def run_heatmap(cfg: SweepConfig) -> None:
    svals = _grid(cfg.s_min, cfg.s_max, cfg.s_steps)
    tvals = _grid(cfg.tau_min, cfg.tau_max, cfg.tau_steps)
    tasks = []
    idx = 0
    for s in svals:
        for tau in tvals:
            tasks.append(
                (cfg.p, cfg.n, float(s), float(tau), cfg.lyap_points, cfg.lyap_steps, cfg.seed, idx)
            )
            idx += 1
    results, failures = _run_cells(cfg, tasks, _heatmap_cell)
    rows = []
    for task, res in zip(tasks, results):
        _, _, s, tau, *_ = task
        dis, lam = res if res is not None else (math.nan, math.nan)
        rows.append(",".join([_fmt(tau), _fmt(s), _fmt(dis), _fmt(lam)]))
    _write_csv(cfg.out, "tau,s,dissimilarity,lyapunov", rows)
    _check_budget(failures, len(tasks))


def _check_budget(failures: int, total: int) -> None:
    if failures > FAILURE_BUDGET * total:
        raise PartialFailureError(f"{failures}/{total} cells failed")


# ---------------------------------------------------------------------------
# error curve

def _error_cell(args):
    (p, n_spins, s, tau, theta, phi, masked) = args
    key = ("ops", n_spins, p)
    if key not in _WORKER_CACHE:
        sector = SpinSector(n_spins)
        ops = build_collective_operators(sector)
        _WORKER_CACHE[key] = (sector, ops, FloquetFactory(ops, p))
    sector, ops, factory = _WORKER_CACHE[key]
    skey = ("state", n_spins, theta, phi)
    if skey not in _WORKER_CACHE:
        _WORKER_CACHE[skey] = spin_coherent_state(sector, theta, phi)
    state = _WORKER_CACHE[skey]
    tkey = ("tbasis", n_spins, p, s)
    if tkey not in _WORKER_CACHE:
        h = target_hamiltonian(ModelParams(p=p, s=s, tau=tau), ops)
        _, vec = np.linalg.eigh(h)
        _WORKER_CACHE[tkey] = vec
    params = ModelParams(p=p, s=s, tau=tau)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exact = error_ez_infinity_exact(
            params,
            sector,
            state,
            ops=ops,
            target_basis=_WORKER_CACHE[tkey],
            floquet=factory.unitary(s, tau),
        )
        pert = perturbative_error_coherent(params, sector, theta, phi)
    return exact, pert, masked


def run_error_curve(cfg: SweepConfig) -> None:
    tvals = _grid(cfg.tau_min, cfg.tau_max, cfg.tau_steps)
    sector = SpinSector(cfg.n)
    masks = [
        immediate_vicinity_mask(pt, cfg.s, sector)
        for pt in instability_points(cfg.p, cfg.s, cfg.tau_max + 1.0)
    ]
    tasks = []
    for tau in tvals:
        masked = int(any(lo <= tau <= hi for lo, hi in masks))
        tasks.append((cfg.p, cfg.n, cfg.s, float(tau), cfg.theta, cfg.phi, masked))
    results, failures = _run_cells(cfg, tasks, _error_cell)
    rows = []
    for task, res in zip(tasks, results):
        tau = task[3]
        exact, pert, masked = res if res is not None else (math.nan, math.nan, task[6])
        rows.append(",".join([_fmt(tau), _fmt(exact), _fmt(pert), str(int(masked))]))
    _write_csv(cfg.out, "tau,error_exact,error_perturbative,masked", rows)
    _check_budget(failures, len(tasks))


# ---------------------------------------------------------------------------
# phase portrait

def run_phase_portrait(cfg: SweepConfig) -> None:
    params = ModelParams(p=cfg.p, s=cfg.s, tau=cfg.tau)
    if cfg.inits is not None:
        inits = [np.asarray(v, dtype=float) for v in cfg.inits]
        for v in inits:
            if v.shape != (3,) or abs(v @ v - 1.0) > 1e-6:
                raise ConfigError("explicit inits must be unit 3-vectors")
    else:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed]))
        inits = list(sample_sphere(rng, cfg.n_init))
    table = phase_portrait(params, inits, cfg.steps, cfg.stride)
    rows = [
        ",".join(
            [str(int(r["trajectory_id"])), str(int(r["step"])), _fmt(r["x"]), _fmt(r["y"]), _fmt(r["z"])]
        )
        for r in table
    ]
    _write_csv(cfg.out, "trajectory_id,step,X,Y,Z", rows)


# ---------------------------------------------------------------------------
# otoc

def _analytic_rate(p: int, q: int, s: float, delta_tau: float) -> float | None:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if (p, q) == (2, 2):
            return saddle_exponent_22(s, delta_tau)
        if (p, q) == (4, 4):
            return saddle_exponent_44(s, delta_tau)
        if (p, q) == (4, 2):
            return saddle_exponent_42(s, delta_tau)
        return saddle_rate_numeric(p, q, s, delta_tau)


def default_delta_taus(p: int, q: int, s: float, count: int = 8) -> list[float]:
    """Offsets spanning the instability, avoiding the exact center."""
    try:
        width = instability_width(p, q, s)
    except ValueError:
        width = 0.1
    if not math.isfinite(width):
        width = 0.1 * 2.0 * math.pi / ((1.0 - s) * q)
    half = count // 2
    pos = np.linspace(width / half, width, half)
    return [float(x) for x in np.concatenate([-pos[::-1], pos])]


def run_otoc(cfg: SweepConfig) -> None:
    q = cfg.q if cfg.q is not None else cfg.p
    ts = 2.0 * math.pi * cfg.r / ((1.0 - cfg.s) * q)
    offsets = list(cfg.delta_taus) or default_delta_taus(cfg.p, q, cfg.s)
    sector = SpinSector(cfg.n)
    ops = build_collective_operators(sector)
    rows = []
    report = []
    for dt in offsets:
        params = ModelParams(p=cfg.p, s=cfg.s, tau=ts + dt)
        series = otoc_series(params, sector, cfg.steps, ops=ops)
        fitted = fit_growth_rate(series, cfg.r2_threshold)
        analytic = _analytic_rate(cfg.p, q, cfg.s, dt)
        for step, value in zip(series.times, series.values):
            rows.append(
                ",".join([_fmt(dt), str(int(step)), _fmt(step * params.tau), _fmt(value)])
            )
        report.append(
            {
                "delta_tau": dt,
                "tau": ts + dt,
                "fitted": fitted,
                "fit_r2": series.fit_r2,
                "fit_window": list(series.fit_window) if series.fit_window else None,
                "analytic": analytic,
            }
        )
    _write_csv(cfg.out, "delta_tau,step,t,c", rows)
    _write_json(_json_companion(cfg.out), report)


def _json_companion(out: str) -> str:
    root, ext = os.path.splitext(out)
    return root + ".json" if ext else out + ".json"


# ---------------------------------------------------------------------------
# instabilities report

def run_instabilities(cfg: SweepConfig) -> None:
    sector = SpinSector(cfg.n)
    entries = []
    for pt in instability_points(cfg.p, cfg.s, cfg.tau_max):
        lo, hi = immediate_vicinity_mask(pt, cfg.s, sector)
        width = None
        extrapolated = False
        if pt.q in (2, 4):
            # same bound with tau* scaled by r; r > 1 values are extrapolated
            w = instability_width(pt.p, pt.q, cfg.s)
            width = None if not math.isfinite(w) else w * pt.r
            extrapolated = pt.r > 1
        sample_dt = (width / 2.0) if width else 0.05 * pt.tau_star
        entries.append(
            {
                "p": pt.p,
                "q": pt.q,
                "r": pt.r,
                "s": pt.s,
                "tau_star": pt.tau_star,
                "width": width,
                "width_extrapolated": extrapolated,
                "mask": [lo, hi],
                "sample_delta_tau": sample_dt,
                "s_eff_at_sample": s_effective(cfg.s, sample_dt, pt.tau_star),
            }
        )
    _write_json(cfg.out, entries)


_RUNNERS = {
    "heatmap": run_heatmap,
    "error-curve": run_error_curve,
    "phase-portrait": run_phase_portrait,
    "otoc": run_otoc,
    "instabilities": run_instabilities,
}


def run(cfg: SweepConfig) -> None:
    cfg.validate()
    _RUNNERS[cfg.mode](cfg)
