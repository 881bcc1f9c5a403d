"""Exponentially weighted sup norms and the checks built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dispersion import InfeasibleCertificateError, Params, decay_rate
from .grid import Grid

WINDOW_INSET = 5.0
DEFAULT_SLACK = 0.05


def default_window(grid: Grid, inset: float = WINDOW_INSET) -> tuple:
    lo, hi = grid.z_min + inset, grid.z_max - inset
    if lo > hi:
        raise ValueError(f"grid too short for a window inset of {inset}")
    return lo, hi


def _window_mask(z: np.ndarray, window: tuple) -> np.ndarray:
    tol = 1e-9 * max(1.0, abs(window[0]), abs(window[1]))
    mask = (z >= window[0] - tol) & (z <= window[1] + tol)
    if not np.any(mask):
        raise ValueError(f"empty window {window}")
    return mask


def weighted_norm(values: np.ndarray, z: np.ndarray, lam: float, window: tuple) -> float:
    """max over window nodes of exp(-lam z) |f(z)|."""
    mask = _window_mask(z, window)
    return float(np.max(np.exp(-lam * z[mask]) * np.abs(values[mask])))


@dataclass
class WeightedSeries:
    lam: float
    times: np.ndarray
    values: np.ndarray
    window: tuple

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("series values must be finite and nonnegative")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def norm_probe(grid: Grid, background: np.ndarray, lam: float, window: tuple):
    """Probe for evolution.run returning (|v - background|_lam, sup |v - background|)."""
    z = grid.z
    mask = _window_mask(z, window)
    weight = np.exp(-lam * z[mask])
    bg = background[mask]

    def probe(t, v):
        d = np.abs(v[mask] - bg)
        return float(np.max(weight * d)), float(np.max(d))

    return probe


def disturbance_series(times: Sequence[float], fields: Sequence[np.ndarray], grid: Grid,
                       background: np.ndarray, lam: float,
                       window: Optional[tuple] = None) -> WeightedSeries:
    """|v(t) - phi|_lam for each stored field."""
    window = default_window(grid) if window is None else window
    background = np.asarray(background, dtype=float)
    if background.shape != (grid.n,):
        raise ValueError("profile does not match the run grid")
    vals = []
    for f in fields:
        if f.shape != (grid.n,):
            raise ValueError("snapshot does not match the grid")
        vals.append(weighted_norm(f - background, grid.z, lam, window))
    return WeightedSeries(lam, np.asarray(times), np.asarray(vals), window)


def fit_decay_rate(s: WeightedSeries, t_start: float = 0.0) -> tuple:
    """Least-squares slope of log(value) against t for t >= t_start; returns (rate, r^2)."""
    sel = s.times >= t_start
    t, v = s.times[sel], s.values[sel]
    if t.size < 10:
        raise ValueError(f"need at least 10 samples, got {t.size}")
    if np.any(v <= 0):
        raise ValueError("nonpositive values in the fit range")
    y = np.log(v)
    slope, icept = np.polyfit(t, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * t + icept)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def initial_K(segment: np.ndarray, grid: Grid, background: np.ndarray, lam: float,
              window: tuple) -> float:
    """max over the initial segment slots of |phi - v0(s)|_lam."""
    seg = np.atleast_2d(segment)
    return max(weighted_norm(row - background, grid.z, lam, window) for row in seg)


@dataclass
class BoundReport:
    K: float
    delta: float
    h: float
    slack: float
    lam: float
    window: tuple
    per_interval: list = field(default_factory=list)
    worst_ratio: float = 0.0
    passed: bool = True

    def to_dict(self) -> dict:
        return {"K": self.K, "delta": self.delta, "h": self.h, "slack": self.slack,
                "lambda": self.lam, "window": list(self.window),
                "per_interval": self.per_interval, "worst_ratio": self.worst_ratio,
                "pass": self.passed}


def verify_iterative_bound(s: WeightedSeries, K: float, delta: float, h: float,
                           slack: float = DEFAULT_SLACK) -> BoundReport:
    """Check value(t) <= K exp(delta t) (1 + slack) sample by sample.

    The report lists, per delay interval [(k-1)h, kh], C_k = K exp((k-1) delta h),
    the measured sup on the interval and the margin (1+slack) * bound / value.
    """
    if delta > 0:
        raise ValueError(f"delta must be <= 0, got {delta}")
    if K < 0:
        raise ValueError("K must be nonnegative")
    bound = K * np.exp(delta * s.times)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(s.values > 0, s.values / np.where(bound > 0, bound, np.inf), 0.0)
        ratio = np.where((s.values > 0) & (bound == 0), np.inf, ratio)
    report = BoundReport(K, delta, h, slack, s.lam, s.window)
    report.worst_ratio = float(ratio.max()) if ratio.size else 0.0
    report.passed = bool(np.all(s.values <= bound * (1 + slack)))
    if h > 0 and s.times.size:
        kmax = max(1, int(math.ceil(s.times[-1] / h - 1e-12)))
        for k in range(1, kmax + 1):
            sel = (s.times >= (k - 1) * h - 1e-12) & (s.times <= k * h + 1e-12)
            if not np.any(sel):
                continue
            sup = float(s.values[sel].max())
            c_k = K * math.exp((k - 1) * delta * h)
            margin = math.inf if sup == 0 else float(
                np.min((1 + slack) * bound[sel] / np.maximum(s.values[sel], 1e-300)))
            report.per_interval.append({"k": k, "C_k": c_k, "sup": sup, "margin": margin})
    return report


def m_function(t: np.ndarray, beta: float, delta: float, h: float, R: float) -> np.ndarray:
    """M(t) = exp(-(beta + delta) t + delta h) + R (1 - exp(-(beta + delta) t)) / (beta + delta)."""
    a = beta + delta
    t = np.asarray(t, dtype=float)
    first = np.exp(-a * t + delta * h)
    # (1 - exp(-a t)) / a, continuous through a = 0
    if abs(a) < 1e-300:
        frac = t
    else:
        frac = -np.expm1(-a * t) / a
    return first + R * frac


def m_function_check(p: Params, lam: float, delta: float, R: float,
                     step: float = 1e-3) -> tuple:
    """Sample M on [0, h]; pass iff nonincreasing (1e-12) and M(h) <= exp(delta h)(1 + 1e-10).

    Returns (passed, M values).  Requires a feasible certificate: R <= beta,
    -beta <= delta <= 0.
    """
    beta = decay_rate(p, lam)
    if not (beta > 0 and 0 <= R <= beta * (1 + 1e-12) and -beta <= delta <= 0):
        raise InfeasibleCertificateError(
            f"(lambda={lam}, delta={delta}, R={R}) is not a feasible certificate")
    h = p.h
    n = max(1, int(round(h / step)))
    t = np.linspace(0.0, h, n + 1)
    M = m_function(t, beta, delta, h, R)
    mono = bool(np.all(np.diff(M) <= 1e-12))
    end = bool(M[-1] <= math.exp(delta * h) * (1 + 1e-10))
    return mono and end, M
