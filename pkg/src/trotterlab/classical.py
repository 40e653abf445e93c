"""Mean-field limit: continuous flow, stroboscopic map, tangent map, Lyapunov exponents.

States are unit vectors (X, Y, Z).  One map step is a rotation about z by
alpha = -(1-s)*tau followed by a rotation about x by k*X'^(p-1) with
k = -s*tau, where X' is the already-updated first component.  Hot loops
(long trajectories, QR-reorthonormalized tangent products) are numba-compiled.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from trotterlab.spin import ModelParams

__all__ = [
    "flow_derivative",
    "flow_step_rk4",
    "kicked_map_step",
    "tangent_map",
    "trajectory",
    "phase_portrait",
    "lyapunov_exponent",
    "lyapunov_averaged",
    "lyapunov_summary",
    "sample_sphere",
]

_RENORM_EVERY = 1000  # project back to the sphere this often on long runs


def flow_derivative(state, params: ModelParams):
    """Right-hand side of the mean-field flow for H(s)."""
    x, y, z = state
    s, p = params.s, params.p
    xp1 = x ** (p - 1) if p > 2 or x != 0.0 else x
    return np.array(
        [
            (1.0 - s) * y,
            -(1.0 - s) * x + s * xp1 * z,
            -s * xp1 * y,
        ]
    )


def flow_step_rk4(state, params: ModelParams, dt: float):
    """One classical RK4 step of the continuous flow."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = np.asarray(state, dtype=float)
    k1 = flow_derivative(v, params)
    k2 = flow_derivative(v + 0.5 * dt * k1, params)
    k3 = flow_derivative(v + 0.5 * dt * k2, params)
    k4 = flow_derivative(v + dt * k3, params)
    return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@numba.njit(cache=True)
def _map_step(x, y, z, alpha, k, pm1):
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    xn = x * ca - y * sa
    u = x * sa + y * ca
    phi = k * xn**pm1
    cp = math.cos(phi)
    sp = math.sin(phi)
    return xn, u * cp - z * sp, u * sp + z * cp


def kicked_map_step(state, params: ModelParams):
    """One step of the stroboscopic map (exactly norm preserving)."""
    x, y, z = (float(c) for c in state)
    return np.array(_map_step(x, y, z, params.alpha, params.kick, params.p - 1))


def tangent_map(state, params: ModelParams) -> np.ndarray:
    """Jacobian of one map step at `state` (closed form)."""
    x, y, z = (float(c) for c in state)
    alpha, k, p = params.alpha, params.kick, params.p
    ca, sa = math.cos(alpha), math.sin(alpha)
    xn = x * ca - y * sa
    u = x * sa + y * ca
    phi = k * xn ** (p - 1)
    cp, sp = math.cos(phi), math.sin(phi)
    yn = u * cp - z * sp
    zn = u * sp + z * cp
    dphi = k * (p - 1) * xn ** (p - 2)  # xn**0 == 1 covers p = 2
    return np.array(
        [
            [ca, -sa, 0.0],
            [sa * cp - zn * dphi * ca, ca * cp + zn * dphi * sa, -sp],
            [sa * sp + yn * dphi * ca, ca * sp - yn * dphi * sa, cp],
        ]
    )


@numba.njit(cache=True)
def _trajectory(x, y, z, alpha, k, pm1, n_steps, stride, out):
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    row = 1
    for i in range(1, n_steps + 1):
        x, y, z = _map_step(x, y, z, alpha, k, pm1)
        if i % _RENORM_EVERY == 0:
            r = math.sqrt(x * x + y * y + z * z)
            x /= r
            y /= r
            z /= r
        if i % stride == 0:
            out[row, 0] = x
            out[row, 1] = y
            out[row, 2] = z
            row += 1
    return row


def trajectory(params: ModelParams, init, n_steps: int, stride: int = 1) -> np.ndarray:
    """Initial state plus every stride-th iterate, as an (n_rec, 3) array."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    n_rec = n_steps // stride + 1
    out = np.empty((n_rec, 3))
    x, y, z = (float(c) for c in init)
    _trajectory(x, y, z, params.alpha, params.kick, params.p - 1, n_steps, stride, out)
    return out


_PORTRAIT_DTYPE = np.dtype(
    [("trajectory_id", np.int64), ("step", np.int64), ("x", float), ("y", float), ("z", float)]
)


def phase_portrait(params: ModelParams, inits, n_steps: int, stride: int = 1) -> np.ndarray:
    """Stroboscopic portraits for several initial conditions.

    stride = q exposes the q-step effective dynamics; stride = 1 shows the
    lobe-to-lobe hopping directly.  Returns a structured table with columns
    trajectory_id, step, x, y, z.
    """
    rows = []
    for tid, init in enumerate(inits):
        tr = trajectory(params, init, n_steps, stride)
        steps = np.arange(tr.shape[0], dtype=np.int64) * stride
        rec = np.empty(tr.shape[0], dtype=_PORTRAIT_DTYPE)
        rec["trajectory_id"] = tid
        rec["step"] = steps
        rec["x"], rec["y"], rec["z"] = tr[:, 0], tr[:, 1], tr[:, 2]
        rows.append(rec)
    return np.concatenate(rows) if rows else np.empty(0, dtype=_PORTRAIT_DTYPE)


@numba.njit(cache=True)
def _lyapunov_qr(x, y, z, alpha, k, p, n_steps, transient):
    pm1 = p - 1
    pm2 = p - 2
    q = np.eye(3)
    b = np.empty((3, 3))
    acc = 0.0
    count = 0
    for i in range(n_steps):
        ca = math.cos(alpha)
        sa = math.sin(alpha)
        xn = x * ca - y * sa
        u = x * sa + y * ca
        phi = k * xn**pm1
        cp = math.cos(phi)
        sp = math.sin(phi)
        yn = u * cp - z * sp
        zn = u * sp + z * cp
        dphi = k * pm1 * xn**pm2
        m00, m01, m02 = ca, -sa, 0.0
        m10 = sa * cp - zn * dphi * ca
        m11 = ca * cp + zn * dphi * sa
        m12 = -sp
        m20 = sa * sp + yn * dphi * ca
        m21 = ca * sp - yn * dphi * sa
        m22 = cp
        for j in range(3):
            b[0, j] = m00 * q[0, j] + m01 * q[1, j] + m02 * q[2, j]
            b[1, j] = m10 * q[0, j] + m11 * q[1, j] + m12 * q[2, j]
            b[2, j] = m20 * q[0, j] + m21 * q[1, j] + m22 * q[2, j]
        # modified Gram-Schmidt; r00 is the leading stretch
        r00 = math.sqrt(b[0, 0] ** 2 + b[1, 0] ** 2 + b[2, 0] ** 2)
        for r in range(3):
            q[r, 0] = b[r, 0] / r00
        d1 = q[0, 0] * b[0, 1] + q[1, 0] * b[1, 1] + q[2, 0] * b[2, 1]
        for r in range(3):
            b[r, 1] -= d1 * q[r, 0]
        r11 = math.sqrt(b[0, 1] ** 2 + b[1, 1] ** 2 + b[2, 1] ** 2)
        for r in range(3):
            q[r, 1] = b[r, 1] / r11
        d2 = q[0, 1] * b[0, 2] + q[1, 1] * b[1, 2] + q[2, 1] * b[2, 2]
        d0 = q[0, 0] * b[0, 2] + q[1, 0] * b[1, 2] + q[2, 0] * b[2, 2]
        for r in range(3):
            b[r, 2] -= d0 * q[r, 0] + d2 * q[r, 1]
        r22 = math.sqrt(b[0, 2] ** 2 + b[1, 2] ** 2 + b[2, 2] ** 2)
        for r in range(3):
            q[r, 2] = b[r, 2] / r22
        if i >= transient:
            acc += math.log(r00)
            count += 1
        x, y, z = xn, yn, zn
        if (i + 1) % _RENORM_EVERY == 0:
            rr = math.sqrt(x * x + y * y + z * z)
            x /= rr
            y /= rr
            z /= rr
    return acc / count


def lyapunov_exponent(params: ModelParams, init, n_steps: int) -> float:
    """Largest Lyapunov exponent of the map, per step.

    QR-reorthonormalizes a 3-frame every step and averages the log of the
    leading stretch over the last 90% of the run (first 10% discarded as
    transient).
    """
    if n_steps < 1000:
        raise ValueError("n_steps must be >= 1000")
    x, y, z = (float(c) for c in init)
    transient = n_steps // 10
    return float(
        _lyapunov_qr(x, y, z, params.alpha, params.kick, params.p, n_steps, transient)
    )


def sample_sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    """n points drawn uniformly on the unit sphere."""
    z = rng.uniform(-1.0, 1.0, size=n)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def lyapunov_summary(
    params: ModelParams, n_points: int, n_steps: int, seed
) -> tuple[float, float, np.ndarray]:
    """(mean, max, all values) of the exponent over seeded uniform initial points."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    rng = np.random.default_rng(seed)
    inits = sample_sphere(rng, n_points)
    values = np.array([lyapunov_exponent(params, v, n_steps) for v in inits])
    return float(values.mean()), float(values.max()), values


def lyapunov_averaged(params: ModelParams, n_points: int, n_steps: int, seed) -> float:
    """Mean largest exponent over n_points seeded uniform initial states."""
    mean, _, _ = lyapunov_summary(params, n_points, n_steps, seed)
    return mean
