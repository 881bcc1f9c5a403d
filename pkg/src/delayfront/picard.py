"""Heat-kernel integral form of the delayed equation on one delay interval.

On [0, h] the lagged factor 1 - u(t - h, x) is known from the initial segment,
so the mild formulation

    u(t) = G(t) * u0(0) + int_0^t G(t - s) * ([1 - u0(s - h)] u(s)) ds

is a linear Volterra equation for u.  It is solved by Picard iteration with a
direct-sum convolution in x and the trapezoid rule in s.  Nothing here shares
code with the finite-difference integrator, which is the point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.ndimage import convolve1d

DEFAULT_WIDTH = 12.0
PICARD_TOL = 1e-10
MAX_ITER = 200


class NonContractionError(RuntimeError):
    """Picard differences grew on three consecutive iterations."""


def heat_kernel(t: float, x: np.ndarray) -> np.ndarray:
    return np.exp(-x * x / (4 * t)) / (2 * math.sqrt(math.pi * t))


@dataclass(frozen=True)
class KernelTable:
    """Trapezoid-weighted samples dx * G(t, k dx) for |k dx| <= width * sqrt(t)."""

    t: float
    dx: float
    width: float = DEFAULT_WIDTH

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"heat kernel needs t > 0, got {self.t}")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    @property
    def half(self) -> int:
        return int(math.ceil(self.width * math.sqrt(self.t) / self.dx))

    @property
    def x(self) -> np.ndarray:
        k = np.arange(-self.half, self.half + 1)
        return k * self.dx

    @property
    def weights(self) -> np.ndarray:
        k = np.arange(self.half + 1)
        right = self.dx * heat_kernel(self.t, k * self.dx)
        # mirror so the two halves are bitwise equal
        return np.concatenate([right[:0:-1], right])

    def mass(self) -> float:
        """Trapezoid integral over the truncated support."""
        w = self.weights
        return float(w.sum() - 0.5 * (w[0] + w[-1]))


def heat_convolve(t: float, f: np.ndarray, dx: float, width: float = DEFAULT_WIDTH) -> np.ndarray:
    """G(t) * f on a uniform grid; values beyond the ends are held constant."""
    if not t > 0:
        raise ValueError(f"heat_convolve needs t > 0, got {t}")
    w = KernelTable(t, dx, width).weights
    return convolve1d(np.asarray(f, dtype=float), w, axis=-1, mode="nearest")


@dataclass
class PicardResult:
    x: np.ndarray
    times: np.ndarray
    u: np.ndarray  # shape (len(times), len(x)), row 0 is u0(0)
    iterations: int
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "differences": self.history,
                "n_times": int(self.times.size), "n_x": int(self.x.size),
                "dx": float(self.x[1] - self.x[0]), "dt": float(self.times[1] - self.times[0])}


def picard_solve(
    u0: Callable[[float], np.ndarray],
    h: float,
    x: np.ndarray,
    n_steps: int,
    tol: float = PICARD_TOL,
    width: float = DEFAULT_WIDTH,
    max_iter: int = MAX_ITER,
) -> PicardResult:
    """Solve the integral equation on t_n = n h / n_steps, n = 0..n_steps.

    ``u0(s)`` returns the initial segment at time s in [-h, 0] on ``x`` (original
    frame).  Jacobi iteration over the whole time grid: every sweep recomputes
    all history integrals from the previous iterate.
    """
    if h <= 0:
        raise ValueError("the oracle needs h > 0")
    x = np.asarray(x, dtype=float)
    dx = float(x[1] - x[0])
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0):
        raise ValueError("x grid must be uniform")
    dt = h / n_steps
    times = dt * np.arange(n_steps + 1)
    # lagged coefficient a(s) = 1 - u0(s - h), known on [0, h]
    a = np.array([1.0 - np.asarray(u0(float(s - h)), dtype=float) for s in times])
    start = np.asarray(u0(0.0), dtype=float)
    free = np.empty((n_steps + 1, x.size))
    free[0] = start
    for n in range(1, n_steps + 1):
        free[n] = heat_convolve(times[n], start, dx, width)
    kernels = {k: KernelTable(k * dt, dx, width).weights for k in range(1, n_steps + 1)}

    u = free.copy()
    diffs = []
    grew = 0
    for it in range(1, max_iter + 1):
        g = a * u
        new = free.copy()
        # trapezoid weights in s: dt/2 at s = 0 and s = t, dt inside; G(0) is the identity
        for k in range(1, n_steps + 1):
            conv = convolve1d(g[: n_steps + 1 - k], kernels[k], axis=-1, mode="nearest")
            # conv[j] = G(k dt) * g(t_j) contributes to t_n with n = j + k
            w = np.full(n_steps + 1 - k, dt)
            w[0] = 0.5 * dt
            new[k:] += w[:, None] * conv
        new[1:] += 0.5 * dt * g[1:]
        diff = float(np.max(np.abs(new - u)))
        diffs.append(diff)
        u = new
        if diff <= tol:
            return PicardResult(x, times, u, it, diffs)
        if len(diffs) > 1 and diff > diffs[-2]:
            grew += 1
            if grew >= 3:
                raise NonContractionError(f"Picard differences grew 3 times in a row: {diffs[-4:]}")
        else:
            grew = 0
    raise NonContractionError(f"no convergence to {tol} in {max_iter} iterations (last {diffs[-1]})")


@dataclass
class LipschitzReport:
    times: np.ndarray
    gradient: np.ndarray
    bound: np.ndarray
    passed: bool

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "gradient": self.gradient.tolist(),
                "bound": self.bound.tolist(), "pass": self.passed}


def lipschitz_growth_check(res: PicardResult, u0: Callable[[float], np.ndarray], h: float,
                           slack: float = 0.10) -> LipschitzReport:
    """max |du/dx|(t) <= Lip(u0(0)) + 2 sqrt(t/pi) sup_{s<=t} |u (1 - u_lagged)| (1 + slack).

    The constant 2 sqrt(t/pi) is the time integral of the L1 norm of the
    kernel's x-derivative.
    """
    dx = float(res.x[1] - res.x[0])
    grad = np.max(np.abs(np.diff(res.u, axis=1)), axis=1) / dx
    lip0 = grad[0]
    lagged = np.array([np.asarray(u0(float(s - h)), dtype=float) for s in res.times])
    forcing = np.max(np.abs(res.u * (1 - lagged)), axis=1)
    running = np.maximum.accumulate(forcing)
    bound = (lip0 + 2 * np.sqrt(res.times / math.pi) * running) * (1 + slack)
    return LipschitzReport(res.times, grad, bound, bool(np.all(grad <= bound + 1e-14)))


@dataclass
class OracleComparison:
    sup_error: float
    times: list
    errors: list
    dz: float
    iterations: int

    def to_dict(self) -> dict:
        return {"sup_error": self.sup_error, "times": self.times, "errors": self.errors,
                "grid": {"dz": self.dz}, "iterations": self.iterations}


def compare_with_evolution(
    c: float,
    h: float,
    u0: Callable[[float], np.ndarray],
    x: np.ndarray,
    dz: float,
    oracle: Optional[PicardResult] = None,
    n_steps: Optional[int] = None,
    margin: float = 5.0,
) -> OracleComparison:
    """Run the moving-frame integrator at spacing ``dz`` and compare on [0, h].

    Comparison times are the oracle times where c t is a whole number of cells
    of both grids, so no spatial interpolation is involved.
    """
    from .dispersion import Params
    from .evolution import EvolutionConfig, run
    from .grid import Grid

    dx = float(x[1] - x[0])
    ratio = dx / dz
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError("oracle spacing must be a multiple of dz")
    stride = int(round(ratio))
    if oracle is None:
        oracle = picard_solve(u0, h, x, n_steps or int(round(h / 0.01)))
    p = Params(c, h)
    z_min = x[0] - margin
    grid = Grid.snapped(z_min, x[-1] + c * h + margin, dz, p.ch)

    u0_on = getattr(u0, "at", None)
    if u0_on is None:
        raise ValueError("u0 must expose .at(s, x) for evaluation off the oracle grid")

    def segment(s):
        # moving frame: v(s, z) = u0(s, z - c s)
        return np.asarray(u0_on(s, grid.z - c * s), dtype=float)

    cfg = EvolutionConfig(t_final=h, dt=None, probe_every=1)
    dt = cfg.resolved_dt(h, dz)
    stored = {}
    times, errors = [], []
    for n, t in enumerate(oracle.times):
        if n == 0:
            continue
        shift = c * t / dz
        if abs(shift - round(shift)) > 1e-9 or abs(c * t / dx - round(c * t / dx)) > 1e-9:
            continue
        k = int(round(t / dt))
        if abs(k * dt - t) > 1e-9:
            continue
        stored[k] = (n, int(round(shift)))
    if not stored:
        raise ValueError("no comparison times align with both grids")
    every = math.gcd(*stored.keys())
    cfg.probe_every = every
    snaps = {}

    def probe(t, v):
        k = int(round(t / dt))
        if k in stored:
            snaps[k] = v.copy()

    run(segment, p, grid, cfg, probe=probe)
    i0 = int(round((x[0] - grid.z_min) / dz))
    for k, (n, shift) in sorted(stored.items()):
        v = snaps[k]
        idx = i0 + shift + stride * np.arange(x.size)
        err = float(np.max(np.abs(v[idx] - oracle.u[n])))
        times.append(float(oracle.times[n]))
        errors.append(err)
    return OracleComparison(max(errors), times, errors, dz, oracle.iterations)


def gaussian(x: np.ndarray, amplitude: float, center: float, width: float) -> np.ndarray:
    return amplitude * np.exp(-((x - center) ** 2) / (2 * width ** 2))


class Bump:
    """Time-independent Gaussian datum a exp(-(x - x0)^2 / (2 w^2)) on [-h, 0]."""

    def __init__(self, x: np.ndarray, amplitude: float = 0.8, center: float = 0.0,
                 width: float = 1.0):
        self.x = np.asarray(x, dtype=float)
        self.amplitude, self.center, self.width = amplitude, center, width

    def at(self, s: float, x: np.ndarray) -> np.ndarray:
        return gaussian(x, self.amplitude, self.center, self.width)

    def __call__(self, s: float) -> np.ndarray:
        return self.at(s, self.x)
