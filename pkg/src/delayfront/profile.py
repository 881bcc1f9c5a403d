"""Semi-wavefront profiles: shooting from the exponential tail, tail fits, alignment.

The profile solves

    phi'' - c phi' + phi (1 - phi(z - c h)) = 0,   phi(-inf) = 0,

and is computed by integrating forward in z from the pure tail mode
A exp(lambda1 z).  Forward integration is unstable: the fast root of the
linearisation (lambda2 in the tail, a real root near c on the plateau) amplifies
any error.  The driver therefore runs a bisection on the slope at a restart
point, keeps the part of the trajectory on which the two bracketing trials still
agree, and restarts from there.  Only the single fast direction is controlled
this way, which is all that forward shooting needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.sparse.linalg import spsolve

from ._backend import DONE, ESCAPE_DOWN, ESCAPE_UP, kernels
from .dispersion import Params, SubcriticalSpeedError, char_roots, hutchinson_bound
from .grid import Field, Grid

MIN_SPEED = 2.1
TAIL_DEPTH = 1e-8
MAX_TAIL_DEPTH = 1e-6
FIT_WINDOW = (1e-7, 1e-3)
FIT_SLOPE_TOL = 0.02
FIT_RESIDUAL_TOL = 0.05
BLOWUP_FACTOR = 10.0
DIP_TOL = 1e-6

# shooting controls
SEPARATION = 1e-8
ACCEPT_FRACTION = 0.75
MIN_ADVANCE = 4
BRACKET_START = 1e-6
BRACKET_MAX = 1e-1


class ProfileError(RuntimeError):
    """Profile computation failed (blow-up, negative dip, bad tail, stalled shooting)."""


class RelaxationError(ProfileError):
    """Pseudo-time relaxation did not reach the stationarity tolerance."""


@dataclass(frozen=True)
class TailFit:
    amplitude: float
    exponent: float
    power: int
    fit_window: tuple
    residual: float
    slope: float

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "exponent": self.exponent, "power": self.power,
                "fit_window": list(self.fit_window), "residual": self.residual,
                "slope": self.slope}


@dataclass(frozen=True)
class TailState:
    """Pure-mode state A exp(lambda1 z) at z0 and its history on [z0 - ch, z0]."""

    params: Params
    amplitude: float
    exponent: float
    z0: float

    @property
    def phi0(self) -> float:
        return self.amplitude * math.exp(self.exponent * self.z0)

    @property
    def dphi0(self) -> float:
        return self.exponent * self.phi0

    def history(self, dz: float) -> tuple:
        """(z, phi, dphi) sampled at z0 - ch, ..., z0 - dz (empty when h = 0)."""
        m = int(round(self.params.ch / dz))
        z = self.z0 - dz * np.arange(m, 0, -1)
        phi = self.amplitude * np.exp(self.exponent * z)
        return z, phi, self.exponent * phi


def _check_speed(p: Params) -> None:
    char_roots(p)
    if p.c < MIN_SPEED:
        raise ValueError(f"profile computation supports c >= {MIN_SPEED}, got c={p.c}")


def tail_init(p: Params, amplitude: float, z0: float) -> TailState:
    """Deep-tail starting state; requires amplitude * exp(lambda1 z0) <= 1e-6."""
    _check_speed(p)
    if not (math.isfinite(amplitude) and amplitude > 0):
        raise ValueError(f"amplitude must be positive, got {amplitude!r}")
    lam1 = char_roots(p).lambda1
    if amplitude * math.exp(lam1 * z0) > MAX_TAIL_DEPTH * (1 + 1e-12):
        raise ValueError(f"z0={z0} too far right: tail value {amplitude * math.exp(lam1 * z0)} "
                         f"exceeds {MAX_TAIL_DEPTH}")
    return TailState(p, amplitude, lam1, z0)


def tail_start(p: Params, amplitude: float = 1.0, depth: float = TAIL_DEPTH) -> float:
    """z0 at which A exp(lambda1 z0) equals ``depth``."""
    return math.log(depth / amplitude) / char_roots(p).lambda1


@dataclass
class Profile:
    params: Params
    grid: Grid
    values: np.ndarray
    slope: Optional[np.ndarray] = None
    tail: Optional[TailFit] = None
    ode_residual: float = float("nan")
    residual_scale: float = float("nan")
    method: str = "shooting"
    info: dict = field(default_factory=dict)

    @property
    def z(self) -> np.ndarray:
        return self.grid.z

    def interpolant(self):
        if self.slope is not None:
            return CubicHermiteSpline(self.grid.z, self.values, self.slope)
        return CubicSpline(self.grid.z, self.values)

    def sample(self, z: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary z; left of the grid the fitted tail mode is used."""
        z = np.asarray(z, dtype=float)
        if np.any(z > self.grid.z_max + 1e-9):
            raise ValueError(f"requested z beyond the profile domain (z_max={self.grid.z_max})")
        out = np.empty_like(z)
        left = z < self.grid.z_min
        if np.any(left):
            if self.tail is None:
                raise ValueError("no tail fit available to extend the profile leftwards")
            out[left] = self.tail.amplitude * np.exp(self.tail.exponent * z[left])
        out[~left] = self.interpolant()(np.minimum(z[~left], self.grid.z_max))
        return out

    def on_grid(self, grid: Grid) -> np.ndarray:
        return self.sample(grid.z)

    def check(self) -> None:
        """Raise ProfileError unless the semi-wavefront invariants hold."""
        v = self.values
        bound = hutchinson_bound(self.params)
        if v.min() < -1e-12:
            raise ProfileError(f"profile negative: min {v.min()}")
        if v.max() > bound * (1 + 1e-6):
            raise ProfileError(f"profile exceeds exp(ch)={bound}: max {v.max()}")
        tail = v[int(0.8 * len(v)):]
        if not tail.min() > 0:
            raise ProfileError("profile does not stay positive on the right")

    def metadata(self) -> dict:
        return {"params": {"c": self.params.c, "h": self.params.h},
                "grid": self.grid.to_dict(),
                "tail": None if self.tail is None else self.tail.to_dict(),
                "ode_residual": self.ode_residual,
                "residual_scale": self.residual_scale,
                "method": self.method,
                "info": self.info}


def ode_residual(values: np.ndarray, history: np.ndarray, p: Params, dz: float) -> tuple:
    """(max |phi'' - c phi' + phi (1 - phi(z - ch))|, max |phi''|) by centred differences.

    ``history`` holds the m samples left of the grid so the lagged term is
    available at every interior node.
    """
    full = np.concatenate([history, values])
    v = values
    d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / (dz * dz)
    d1 = (v[2:] - v[:-2]) / (2 * dz)
    lagged = full[1:len(v) - 1]  # node i lags to full index i (same for m = 0)
    res = d2 - p.c * d1 + v[1:-1] * (1 - lagged)
    return float(np.max(np.abs(res))), float(np.max(np.abs(d2)))


class _Shooter:
    """Bisection-with-restarts driver around kernels.integrate_profile."""

    def __init__(self, phi, dphi, first, last, m, p: Params, dz, lam1, lam2):
        self.phi, self.dphi = phi, dphi
        self.first, self.last, self.m = first, last, m
        self.c, self.dz = p.c, dz
        self.upper = hutchinson_bound(p)
        self.lam1 = lam1
        self.split = 0.5 * (lam2 - lam1)
        self.tail_level = FIT_WINDOW[1]
        n = len(phi)
        self.w_phi, self.w_dphi = np.empty(n), np.empty(n)
        self.lo = (np.empty(n), np.empty(n))
        self.hi = (np.empty(n), np.empty(n))
        self.restarts = 0
        self.trials = 0

    def _trial(self, r, s):
        lo = max(r - self.m, 0)
        self.w_phi[lo:r + 1] = self.phi[lo:r + 1]
        self.w_dphi[lo:r + 1] = self.dphi[lo:r + 1]
        self.w_dphi[r] = s
        self.trials += 1
        return kernels.integrate_profile(self.w_phi, self.w_dphi, r, self.last, self.m, self.c,
                                         self.dz, self.upper, self.tail_level, self.lam1,
                                         self.split)

    def _keep(self, which, r, idx):
        which[0][r:idx + 1] = self.w_phi[r:idx + 1]
        which[1][r:idx + 1] = self.w_dphi[r:idx + 1]

    def _accept_work(self, r):
        self.phi[r:self.last + 1] = self.w_phi[r:self.last + 1]
        self.dphi[r:self.last + 1] = self.w_dphi[r:self.last + 1]

    def run(self):
        r = self.first
        while r < self.last:
            self.restarts += 1
            base = self.dphi[r]
            status, idx = self._trial(r, base)
            if status == DONE:
                self._accept_work(r)
                return
            scale = max(abs(base), abs(self.phi[r]))
            if status == ESCAPE_UP:
                s_hi, hi_end = base, idx
                self._keep(self.hi, r, idx)
                s_lo, lo_end = self._bracket(r, base, scale, -1.0, ESCAPE_DOWN)
                if s_lo is None:
                    return
            else:
                s_lo, lo_end = base, idx
                self._keep(self.lo, r, idx)
                s_hi, hi_end = self._bracket(r, base, scale, 1.0, ESCAPE_UP)
                if s_hi is None:
                    return
            for _ in range(200):
                mid = 0.5 * (s_lo + s_hi)
                if not (s_lo < mid < s_hi):
                    break
                status, idx = self._trial(r, mid)
                if status == DONE:
                    self._accept_work(r)
                    return
                if status == ESCAPE_UP:
                    s_hi, hi_end = mid, idx
                    self._keep(self.hi, r, idx)
                else:
                    s_lo, lo_end = mid, idx
                    self._keep(self.lo, r, idx)
            r = self._advance(r, lo_end, hi_end)

    def _bracket(self, r, base, scale, sign, wanted):
        eps = BRACKET_START
        while eps <= BRACKET_MAX * (1 + 1e-12):
            s = base + sign * eps * scale
            status, idx = self._trial(r, s)
            if status == DONE:
                self._accept_work(r)
                return None, None
            if status == wanted:
                self._keep(self.lo if wanted == ESCAPE_DOWN else self.hi, r, idx)
                return s, idx
            eps *= 10.0
        raise ProfileError(f"could not bracket the slope at z-index {r}: both perturbations "
                           f"escape in the same direction")

    def _advance(self, r, lo_end, hi_end):
        end = min(lo_end, hi_end)
        a_phi, b_phi = self.lo[0][r:end + 1], self.hi[0][r:end + 1]
        scale = np.maximum(np.maximum(np.abs(a_phi), np.abs(b_phi)), 1e-300)
        apart = np.nonzero(np.abs(a_phi - b_phi) > SEPARATION * scale)[0]
        sep = r + (int(apart[0]) if apart.size else end - r)
        step = int(ACCEPT_FRACTION * (sep - r))
        if step < MIN_ADVANCE:
            raise ProfileError(f"shooting stalled at z-index {r}: bracketing trials separate "
                               f"after {sep - r} steps")
        new = r + step
        self.phi[r + 1:new + 1] = self.lo[0][r + 1:new + 1]
        self.dphi[r + 1:new + 1] = self.lo[1][r + 1:new + 1]
        return new


def integrate_steps(p: Params, grid: Grid, init: TailState, pad: float = 10.0) -> Profile:
    """Forward RK4 shooting from the tail state over ``grid`` (which starts at init.z0).

    The integration runs ``pad`` length units past grid.z_max so that the
    residual fast-mode error at z_max has been damped by exp(-mu * pad).
    """
    _check_speed(p)
    if abs(grid.z_min - init.z0) > 1e-9 * max(1.0, abs(init.z0)):
        raise ValueError("grid must start at the tail point z0")
    dz = grid.dz
    m = grid.lag_cells(p.ch)
    sd = char_roots(p)
    n_pad = int(math.ceil(pad / dz))
    total = m + grid.n + n_pad
    phi = np.zeros(total)
    dphi = np.zeros(total)
    _, hphi, hdphi = init.history(dz)
    phi[:m], dphi[:m] = hphi, hdphi
    phi[m], dphi[m] = init.phi0, init.dphi0
    shooter = _Shooter(phi, dphi, m, total - 1, m, p, dz, sd.lambda1, sd.lambda2)
    shooter.run()

    values = phi[m:m + grid.n].copy()
    slope = dphi[m:m + grid.n].copy()
    bound = hutchinson_bound(p)
    if not np.all(np.isfinite(values)) or np.max(np.abs(values)) > BLOWUP_FACTOR * bound:
        raise ProfileError("blow-up: unstable-manifold contamination exceeded "
                           f"{BLOWUP_FACTOR}*exp(ch)")
    if values.min() < -DIP_TOL:
        raise ProfileError(f"negative dip {values.min()} below -{DIP_TOL}")
    res, scale = ode_residual(values, phi[:m], p, dz)
    prof = Profile(p, grid, values, slope, None, res, scale, "shooting",
                   {"restarts": shooter.restarts, "trials": shooter.trials,
                    "seed_amplitude": init.amplitude, "pad": pad})
    prof.tail = tail_fit(prof)
    prof.check()
    return prof


def default_step(p: Params) -> float:
    return 0.01 if p.h == 0 else min(0.01, p.ch / 40)


def compute_profile(
    p: Params,
    amplitude: float = 1.0,
    depth: float = TAIL_DEPTH,
    dz: Optional[float] = None,
    length: Optional[float] = None,
    pad: float = 10.0,
) -> Profile:
    """tail_init + integrate_steps with the default truncation."""
    _check_speed(p)
    z0 = tail_start(p, amplitude, depth)
    init = tail_init(p, amplitude, z0)
    if length is None:
        length = max(60.0, 20.0 * p.ch)
    grid = Grid.snapped(z0, z0 + length, dz or default_step(p), p.ch)
    return integrate_steps(p, grid, init, pad)


def tail_fit(profile: Profile, window: tuple = FIT_WINDOW) -> TailFit:
    """Least-squares fit of log phi = log A + lambda z on the left tail window."""
    p = profile.params
    _check_speed(p)
    lam1 = char_roots(p).lambda1
    v, z = profile.values, profile.grid.z
    above = np.nonzero(v > window[1])[0]
    stop = int(above[0]) if above.size else len(v)
    sel = np.nonzero((v[:stop] >= window[0]) & (v[:stop] <= window[1]))[0]
    if sel.size < 3:
        raise ProfileError("insufficient tail depth: no samples with phi in "
                           f"[{window[0]}, {window[1]}] on the left tail")
    zw, lw = z[sel], np.log(v[sel])
    slope = float(np.polyfit(zw, lw, 1)[0])
    log_a = float(np.mean(lw - lam1 * zw))
    amplitude = math.exp(log_a)
    residual = float(np.max(np.abs(v[sel] / (amplitude * np.exp(lam1 * zw)) - 1)))
    if abs(slope - lam1) > FIT_SLOPE_TOL * lam1:
        raise ProfileError(f"tail slope {slope} differs from lambda1={lam1} by more than "
                           f"{FIT_SLOPE_TOL:.0%}")
    if residual > FIT_RESIDUAL_TOL:
        raise ProfileError(f"tail fit residual {residual} exceeds {FIT_RESIDUAL_TOL}")
    return TailFit(amplitude, lam1, 0, (float(zw[0]), float(zw[-1])), residual, slope)


def align_profiles(a: Profile, b: Profile) -> tuple:
    """Shift z0 matching the tail amplitudes, and sup |a(z) - b(z + z0)| on the overlap."""
    if a.params != b.params:
        raise ValueError("profiles have different parameters")
    if a.tail is None or b.tail is None:
        raise ValueError("both profiles need a tail fit")
    lam1 = char_roots(a.params).lambda1
    shift = (math.log(a.tail.amplitude) - math.log(b.tail.amplitude)) / lam1
    lo = max(a.grid.z_min, b.grid.z_min - shift)
    hi = min(a.grid.z_max, b.grid.z_max - shift)
    z = a.grid.z
    sel = (z >= lo - 1e-12) & (z <= hi + 1e-12)
    if not np.any(sel):
        raise ValueError("profiles do not overlap after the shift")
    zb = np.clip(z[sel] + shift, b.grid.z_min, b.grid.z_max)
    diff = np.abs(a.values[sel] - b.interpolant()(zb))
    return shift, float(diff.max())


def stationary_residual(v: np.ndarray, p: Params, grid: Grid) -> np.ndarray:
    """Semi-discrete right-hand side with the field as its own lagged history."""
    out = np.empty(grid.n)
    kernels.rhs(np.ascontiguousarray(v, dtype=float), np.ascontiguousarray(v, dtype=float),
                out, p.c, grid.dz, grid.lag_cells(p.ch))
    return out


def _stationary_jacobian(v: np.ndarray, p: Params, grid: Grid):
    n, dz, c = grid.n, grid.dz, p.c
    m = grid.lag_cells(p.ch)
    lag = np.maximum(np.arange(n) - m, 0)
    a = 1 / dz ** 2 + c / (2 * dz)  # sub-diagonal
    b = 1 / dz ** 2 - c / (2 * dz)  # super-diagonal
    rows, cols, vals = [0], [0], [1.0]
    i = np.arange(1, n - 1)
    rows += list(i) * 3
    cols += list(i - 1) + list(i) + list(i + 1)
    vals += [a] * len(i) + list(-2 / dz ** 2 + 1 - v[lag[i]]) + [b] * len(i)
    rows += [n - 1, n - 1]
    cols += [n - 2, n - 1]
    vals += [2 / dz ** 2, -2 / dz ** 2 + 1 - v[lag[n - 1]]]
    # derivative of -v_i * v_{lag(i)} with respect to the lagged entry
    k = np.arange(1, n)
    rows += list(k)
    cols += list(lag[k])
    vals += list(-v[k])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def polish_profile(p: Params, grid: Grid, guess: np.ndarray, tol: float = 1e-12,
                   max_iter: int = 30) -> np.ndarray:
    """Newton solve of the semi-discrete stationary equations, node 0 held fixed.

    Turns a sampled continuum profile into an exact (to ``tol``) fixed point of
    the method-of-lines system on ``grid``.
    """
    v = np.array(guess, dtype=float)
    scale = max(1.0, float(np.max(np.abs(v))))
    for _ in range(max_iter):
        F = stationary_residual(v, p, grid)
        F[0] = 0.0
        if np.max(np.abs(F)) <= tol * scale:
            return v
        dv = spsolve(_stationary_jacobian(v, p, grid), -F)
        v += dv
        if not np.all(np.isfinite(v)):
            break
    F = stationary_residual(v, p, grid)
    F[0] = 0.0
    if np.max(np.abs(F)) <= 1e3 * tol * scale:
        return v
    raise ProfileError(f"Newton polish did not converge (residual {np.max(np.abs(F))})")


def discrete_profile(prof: Profile, grid: Grid, polish: bool = True) -> np.ndarray:
    """Profile sampled on ``grid`` and, by default, made discretely stationary there."""
    v = prof.on_grid(grid)
    return polish_profile(prof.params, grid, v) if polish else v


def relax_profile(
    p: Params,
    grid: Grid,
    seed: Field,
    tol: float = 1e-7,
    max_time: float = 400.0,
) -> Profile:
    """Run the moving-frame flow from ``seed`` until ||v(T) - v(T-1)||_inf <= tol."""
    from .evolution import HistoryBuffer, check_step, choose_dt

    if seed.grid != grid:
        raise ValueError("seed is not on the requested grid")
    if np.any(seed.values < 0):
        raise ValueError("seed must be nonnegative")
    dt = choose_dt(p.h, grid.dz)
    check_step(dt, grid.dz, p.h, p.c)
    m = grid.lag_cells(p.ch)
    nt = int(round(p.h / dt)) if p.h > 0 else 0
    hist = HistoryBuffer(np.tile(seed.values, (nt + 1, 1)), dt, m)
    per_unit = int(round(1.0 / dt))
    prev = hist.current.copy()
    change = float("inf")
    t = 0
    while t < max_time:
        if nt == 0:
            kernels.advance_local(hist.ring[0], per_unit, p.c, grid.dz, dt)
        else:
            hist.head = kernels.advance_delay(hist.ring, hist.head, per_unit, p.c, grid.dz, dt, m)
        t += 1
        cur = hist.current
        if not np.all(np.isfinite(cur)):
            raise RelaxationError(f"non-finite values during relaxation at T={t}")
        change = float(np.max(np.abs(cur - prev)))
        prev = cur.copy()
        if change <= tol:
            break
    else:
        raise RelaxationError(f"no convergence by T={max_time}: last change {change}")
    values = prev
    history = np.full(m, values[0])
    res, scale = ode_residual(values, history, p, grid.dz)
    prof = Profile(p, grid, values, None, None, res, scale, "relaxation",
                   {"pseudo_time": t, "last_change": change})
    try:
        prof.tail = tail_fit(prof)
    except (ProfileError, SubcriticalSpeedError, ValueError):
        prof.tail = None
    return prof
