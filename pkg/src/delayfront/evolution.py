"""Method-of-lines integration of the delayed Fisher-KPP equation.

Moving frame (z = x + c t):

    v_t = v_zz - c v_z + v (1 - v(t - h, z - c h))

discretised with centred differences and classical RK4 in time.  The delay
history lives in a ring of N_t + 1 fields spaced dt = h / N_t apart, so the
lagged field is always a stored slot shifted by an integer number of cells.
Boundaries: node 0 is held at its initial value (Dirichlet), the last node has
zero flux.  Lagged indices falling left of the grid read node 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from ._backend import kernels
from .dispersion import Params
from .grid import Grid

CFL = 0.25

SegmentLike = Union[np.ndarray, Callable[[float], np.ndarray]]


class CFLError(ValueError):
    """Time step too large for the explicit diffusion update."""


class NumericalAbort(RuntimeError):
    """Non-finite values appeared during integration."""


def choose_dt(h: float, dz: float, cfl: float = CFL) -> float:
    """Largest dt = h / N_t with dt <= cfl * dz**2 (or cfl * dz**2 itself when h = 0)."""
    limit = cfl * dz * dz
    if h == 0:
        return limit
    return h / math.ceil(h / limit - 1e-12)


@dataclass
class EvolutionConfig:
    t_final: float
    dt: Optional[float] = None
    snapshot_every: int = 0
    probe_every: int = 1
    left_value: Optional[float] = None

    def resolved_dt(self, h: float, dz: float) -> float:
        return choose_dt(h, dz) if self.dt is None else self.dt

    def to_dict(self) -> dict:
        return {"t_final": self.t_final, "dt": self.dt, "snapshot_every": self.snapshot_every,
                "probe_every": self.probe_every, "left_value": self.left_value}


def check_step(dt: float, dz: float, h: float, speed: float) -> int:
    """Validate the step and return N_t (0 when h = 0)."""
    if dt <= 0:
        raise CFLError("dt must be positive")
    if dt > CFL * dz * dz * (1 + 1e-12):
        raise CFLError(f"dt={dt} exceeds {CFL}*dz^2={CFL * dz * dz}")
    if speed * dz >= 2:
        raise CFLError(f"c*dz={speed * dz} >= 2: centred advection loses monotonicity")
    if h == 0:
        return 0
    nt = int(round(h / dt))
    if abs(nt * dt - h) > 1e-9 * h:
        raise CFLError(f"dt={dt} does not divide h={h}")
    return nt


class HistoryBuffer:
    """Ring of the last N_t + 1 fields, oldest (t - h) at ``head``."""

    def __init__(self, slots: np.ndarray, dt: float, shift_cells: int, t: float = 0.0):
        self.ring = np.ascontiguousarray(slots, dtype=float)
        self.head = 0
        self.dt = dt
        self.shift_cells = shift_cells
        self.t = t

    @property
    def current(self) -> np.ndarray:
        return self.ring[(self.head - 1) % self.ring.shape[0]]

    @property
    def delayed(self) -> np.ndarray:
        return self.ring[self.head]

    def ordered(self) -> np.ndarray:
        """Slots from oldest to newest."""
        return np.roll(self.ring, -self.head, axis=0)


def sample_segment(v0: SegmentLike, grid: Grid, h: float, dt: float) -> np.ndarray:
    """Initial segment on s = -h, -h + dt, ..., 0 as an (N_t + 1, n) array."""
    nt = int(round(h / dt)) if h > 0 else 0
    times = -h + dt * np.arange(nt + 1) if h > 0 else np.zeros(1)
    if callable(v0):
        slots = np.array([np.asarray(v0(float(s)), dtype=float) for s in times])
    else:
        arr = np.asarray(v0, dtype=float)
        if arr.ndim == 1:
            slots = np.tile(arr, (nt + 1, 1))
        else:
            slots = arr
    if slots.shape != (nt + 1, grid.n):
        raise ValueError(f"initial segment has shape {slots.shape}, expected {(nt + 1, grid.n)}")
    if not np.all(np.isfinite(slots)):
        raise ValueError("initial segment contains non-finite values")
    return slots


@dataclass
class RunResult:
    grid: Grid
    params: Params
    dt: float
    frame: str
    snapshot_times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    probe_times: list = field(default_factory=list)
    probes: list = field(default_factory=list)
    final: Optional[np.ndarray] = None
    history: Optional[HistoryBuffer] = None


def _frame(p: Params, grid: Grid, frame: str) -> tuple:
    if frame == "moving":
        return p.c, grid.lag_cells(p.ch)
    if frame == "original":
        return 0.0, 0
    raise ValueError(f"unknown frame {frame!r}")


def step(hist: HistoryBuffer, p: Params, grid: Grid, speed: Optional[float] = None) -> np.ndarray:
    """Advance the ring by one step; returns the new current field."""
    c = p.c if speed is None else speed
    if hist.ring.shape[0] == 1:
        kernels.advance_local(hist.ring[0], 1, c, grid.dz, hist.dt)
    else:
        hist.head = kernels.advance_delay(hist.ring, hist.head, 1, c, grid.dz, hist.dt,
                                          hist.shift_cells)
    hist.t += hist.dt
    cur = hist.current
    if not np.all(np.isfinite(cur)):
        raise NumericalAbort(f"non-finite values at t={hist.t}")
    return cur


def run(
    v0: SegmentLike,
    p: Params,
    grid: Grid,
    cfg: EvolutionConfig,
    probe: Optional[Callable[[float, np.ndarray], object]] = None,
    frame: str = "moving",
) -> RunResult:
    """Integrate from the initial segment on [-h, 0] up to ``cfg.t_final``.

    ``probe(t, v)`` is called every ``cfg.probe_every`` steps (and at t = 0);
    full fields are stored every ``cfg.snapshot_every`` steps (0: final only).
    ``frame="original"`` integrates u_t = u_xx + u (1 - u(t - h, x)) instead.
    """
    speed, m = _frame(p, grid, frame)
    dt = cfg.resolved_dt(p.h, grid.dz)
    nt = check_step(dt, grid.dz, p.h, speed)
    slots = sample_segment(v0, grid, p.h, dt)
    if cfg.left_value is not None:
        slots[:, 0] = cfg.left_value
    hist = HistoryBuffer(slots, dt, m)
    nsteps = int(round(cfg.t_final / dt))
    res = RunResult(grid, p, dt, frame)

    def emit(k):
        t = k * dt
        cur = hist.current
        if probe is not None and (k % cfg.probe_every == 0 or k == nsteps):
            res.probe_times.append(t)
            res.probes.append(probe(t, cur))
        if cfg.snapshot_every and k % cfg.snapshot_every == 0:
            res.snapshot_times.append(t)
            res.snapshots.append(cur.copy())

    emit(0)
    strides = [s for s in (cfg.probe_every if probe else 0, cfg.snapshot_every) if s]
    stride = math.gcd(*strides) if strides else max(nsteps, 1)
    k = 0
    while k < nsteps:
        chunk = min(stride, nsteps - k)
        if nt == 0:
            kernels.advance_local(hist.ring[0], chunk, speed, grid.dz, dt)
        else:
            hist.head = kernels.advance_delay(hist.ring, hist.head, chunk, speed, grid.dz, dt, m)
        k += chunk
        hist.t = k * dt
        if not np.all(np.isfinite(hist.current)):
            raise NumericalAbort(f"non-finite values at t={hist.t}")
        emit(k)
    res.final = hist.current.copy()
    res.history = hist
    return res


def linearized_run(
    eta0: np.ndarray,
    background: Union[np.ndarray, Callable[[float], np.ndarray]],
    p: Params,
    grid: Grid,
    cfg: EvolutionConfig,
    probe: Optional[Callable[[float, np.ndarray], object]] = None,
) -> RunResult:
    """Evolve eta_t = eta_zz - c eta_z + (1 - v(t - h, z - c h)) eta.

    ``background`` is either a fixed field (a stationary front, say) or a
    callable returning v at a requested (delayed) time.
    """
    m = grid.lag_cells(p.ch)
    dt = cfg.resolved_dt(p.h, grid.dz)
    check_step(dt, grid.dz, p.h, p.c)
    eta = np.array(eta0, dtype=float)
    if eta.shape != (grid.n,):
        raise ValueError("eta0 does not match the grid")
    nsteps = int(round(cfg.t_final / dt))
    res = RunResult(grid, p, dt, "moving")
    frozen = None if callable(background) else np.ascontiguousarray(background, dtype=float)
    out = np.empty_like(eta)

    def emit(k):
        if probe is not None and (k % cfg.probe_every == 0 or k == nsteps):
            res.probe_times.append(k * dt)
            res.probes.append(probe(k * dt, eta))
        if cfg.snapshot_every and k % cfg.snapshot_every == 0:
            res.snapshot_times.append(k * dt)
            res.snapshots.append(eta.copy())

    emit(0)
    stride = cfg.probe_every if probe else (cfg.snapshot_every or nsteps or 1)
    if cfg.snapshot_every:
        stride = math.gcd(stride, cfg.snapshot_every)
    k = 0
    while k < nsteps:
        chunk = min(stride, nsteps - k)
        if frozen is not None:
            kernels.advance_frozen(eta, frozen, chunk, p.c, grid.dz, dt, m)
        else:
            for j in range(chunk):
                t = (k + j) * dt
                d0 = np.ascontiguousarray(background(t - p.h), dtype=float)
                d1 = np.ascontiguousarray(background(t + dt - p.h), dtype=float)
                kernels.rk4_step(eta, d0, d1, out, p.c, grid.dz, dt, m)
                eta[:] = out
        k += chunk
        if not np.all(np.isfinite(eta)):
            raise NumericalAbort(f"non-finite values at t={k * dt}")
        emit(k)
    res.final = eta.copy()
    return res


def semi_discrete_rhs(v: np.ndarray, delayed: np.ndarray, p: Params, grid: Grid) -> np.ndarray:
    """Right-hand side of the semi-discrete system for a given lagged field."""
    out = np.empty(grid.n)
    kernels.rhs(np.ascontiguousarray(v, dtype=float), np.ascontiguousarray(delayed, dtype=float),
                out, p.c, grid.dz, grid.lag_cells(p.ch))
    return out


def to_original_frame(values: np.ndarray, grid: Grid, c: float, t: float, x: np.ndarray) -> np.ndarray:
    """u(t, x) = v(t, x + c t) by cubic interpolation; NaN outside the z-grid."""
    from scipy.interpolate import CubicSpline

    z = x + c * t
    out = np.full(x.shape, np.nan)
    inside = (z >= grid.z_min) & (z <= grid.z_max)
    out[inside] = CubicSpline(grid.z, values)(z[inside])
    return out
