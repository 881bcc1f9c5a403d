"""Spectral quantities of the linearised front equation and the stability certificate.

All functions here are closed-form or one-dimensional root finds; they are pure
and safe to call from worker processes.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

from scipy.optimize import brentq

STABLE_TAG = "stable_at_half_c"
UNIQUE_TAG = "unique"
NONE_TAG = "none"

DELTA_TOL = 1e-10


class SubcriticalSpeedError(ValueError):
    """Raised when c < 2, where the characteristic roots are complex."""


class InfeasibleCertificateError(ValueError):
    """Raised when a certificate is required to be feasible but is not."""


@dataclass(frozen=True)
class Params:
    """Wave speed ``c`` and delay ``h`` of the delayed Fisher-KPP problem."""

    c: float
    h: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"wave speed must be positive, got c={self.c!r}")
        if not (math.isfinite(self.h) and self.h >= 0):
            raise ValueError(f"delay must be nonnegative, got h={self.h!r}")

    @property
    def ch(self) -> float:
        """Spatial lag c*h of the retarded term in the moving frame."""
        return self.c * self.h


@dataclass(frozen=True)
class SpectralData:
    lambda1: float
    lambda2: float
    discriminant: float


@dataclass(frozen=True)
class Certificate:
    lam: float
    beta: float
    sup_bound: float
    R: float
    delta: Optional[float]
    feasible: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def char_roots(p: Params) -> SpectralData:
    """Roots of lam**2 - c*lam + 1, ordered."""
    disc = p.c * p.c - 4.0
    if disc < 0:
        raise SubcriticalSpeedError(f"subcritical speed: c={p.c} < 2 gives complex roots")
    lam2 = 0.5 * (p.c + math.sqrt(disc))
    # product of the roots is exactly 1; avoids cancellation in (c - sqrt)/2
    lam1 = 1.0 / lam2
    return SpectralData(lam1, lam2, disc)


def growth_exponent(p: Params, lam: float) -> float:
    """Raw quadratic lam**2 - c*lam + 1 (growth rate of the weighted linear flow)."""
    return lam * lam - p.c * lam + 1.0


def decay_rate(p: Params, lam: float) -> float:
    """beta_lam = c*lam - lam**2 - 1, positive exactly between the two roots."""
    return p.c * lam - lam * lam - 1.0


def _check_closed_interval(p: Params, lam: float) -> SpectralData:
    sd = char_roots(p)
    slack = 1e-12 * max(1.0, sd.lambda2)
    if not (sd.lambda1 - slack <= lam <= sd.lambda2 + slack):
        raise ValueError(f"lambda={lam} outside [{sd.lambda1}, {sd.lambda2}]")
    return sd


def q_eval(p: Params, lam: float) -> float:
    """Q(lam) = exp(lam*c*h) * beta_lam on [lambda1, lambda2]."""
    _check_closed_interval(p, lam)
    return math.exp(lam * p.ch) * decay_rate(p, lam)


def kappa_crit(p: Params) -> float:
    """Closed-form critical point of Q (requires h > 0)."""
    if p.h <= 0:
        raise ValueError("kappa_crit is singular at h = 0")
    char_roots(p)
    c, h = p.c, p.h
    return c / 2 - 1 / (c * h) + 0.5 * math.sqrt(c * c + 4 / (c * c * h * h) - 4)


def q_maximizer(p: Params) -> float:
    """Numerical argmax of Q over [lambda1, lambda2].

    Q > 0 inside the interval and log Q is strictly concave there, so the
    maximiser is the unique root of d/dlam log Q = ch + (c - 2 lam) / beta,
    i.e. of ch * beta + c - 2 lam, located by Brent's method.
    """
    sd = char_roots(p)
    if sd.lambda2 - sd.lambda1 < 1e-14:
        return sd.lambda1

    def slope(lam):
        return p.ch * decay_rate(p, lam) + p.c - 2 * lam

    return float(brentq(slope, sd.lambda1, sd.lambda2, xtol=1e-15, rtol=1e-15))


def kappa_is_argmax(p: Params, tol: float = 1e-6) -> bool:
    """True when the closed-form kappa coincides with the numerical maximiser of Q."""
    if p.h <= 0:
        return True
    return abs(kappa_crit(p) - q_maximizer(p)) <= tol * max(1.0, p.c)


def uniqueness_threshold(p: Params) -> float:
    """Max of Q over [lambda1, lambda2]; at h = 0 this is c**2/4 - 1 (attained at c/2)."""
    if p.h == 0:
        char_roots(p)
        return p.c * p.c / 4 - 1
    return q_eval(p, kappa_crit(p))


def hutchinson_bound(p: Params) -> float:
    """A priori bound exp(c*h) on the sup of any semi-wavefront."""
    return math.exp(p.ch)


def certify_stability(p: Params, lam: float, sup_bound: float) -> Certificate:
    """Decide the weighted stability condition and find the certified exponent delta.

    delta is the smallest value in [-beta, 0] with exp(delta*h)*(delta + beta) >= R,
    located by bisection to DELTA_TOL.
    """
    sd = char_roots(p)
    if not (sd.lambda1 < lam < sd.lambda2):
        raise ValueError(f"lambda={lam} must lie strictly inside ({sd.lambda1}, {sd.lambda2})")
    if not (math.isfinite(sup_bound) and sup_bound > 0):
        raise ValueError(f"sup_bound must be positive and finite, got {sup_bound!r}")
    beta = decay_rate(p, lam)
    R = math.exp(-lam * p.ch) * sup_bound
    if R > beta:
        return Certificate(lam, beta, sup_bound, R, None, False)

    def g(delta):
        return math.exp(delta * p.h) * (delta + beta)

    lo, hi = -beta, 0.0
    # g is strictly increasing on [-beta, 0]; keep g(hi) >= R throughout
    while hi - lo > DELTA_TOL:
        mid = 0.5 * (lo + hi)
        if g(mid) >= R:
            hi = mid
        else:
            lo = mid
    return Certificate(lam, beta, sup_bound, R, hi, True)


def region_classify(p: Params, sup_bound: float) -> frozenset:
    """Tag set for one (h, c) cell: stable_at_half_c and/or unique, else none."""
    tags = set()
    sd = char_roots(p)
    half = p.c / 2
    if sd.lambda1 < half < sd.lambda2 and certify_stability(p, half, sup_bound).feasible:
        tags.add(STABLE_TAG)
    if sup_bound < uniqueness_threshold(p):
        tags.add(UNIQUE_TAG)
    return frozenset(tags) if tags else frozenset({NONE_TAG})


@dataclass(frozen=True)
class RegionCell:
    h: float
    c: float
    lam: float
    beta: float
    R: float
    delta: Optional[float]
    stable: bool
    unique: bool
    kappa_argmax: bool

    def csv_row(self) -> list:
        delta = "" if self.delta is None else repr(self.delta)
        return [repr(self.h), repr(self.c), repr(self.lam), repr(self.beta), repr(self.R),
                delta, str(self.stable).lower(), str(self.unique).lower()]


REGION_HEADER = ["h", "c", "lambda", "beta", "R", "delta", "stable", "unique"]


def lattice(start: float, stop: float, step: float) -> list:
    """Points start, start+step, ... <= stop, rounded to suppress accumulation drift."""
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(n)]


def _region_cell(args) -> RegionCell:
    h, c, sup_bound = args
    p = Params(c, h)
    bound = hutchinson_bound(p) if sup_bound is None else sup_bound
    sd = char_roots(p)
    half = c / 2
    if sd.lambda1 < half < sd.lambda2:
        cert = certify_stability(p, half, bound)
        beta, R, delta, stable = cert.beta, cert.R, cert.delta, cert.feasible
    else:
        beta, R, delta, stable = decay_rate(p, half), math.exp(-half * p.ch) * bound, None, False
    unique = bound < uniqueness_threshold(p)
    return RegionCell(h, c, half, beta, R, delta, stable, unique, kappa_is_argmax(p))


def region_map(
    h_values: Sequence[float],
    c_values: Sequence[float],
    sup_bound: Optional[float] = None,
    workers: Optional[int] = 1,
) -> list:
    """Evaluate the certificate and uniqueness threshold on an (h, c) lattice.

    ``sup_bound=None`` means the Hutchinson bound exp(c*h) per cell.  Cells with
    c <= 2 are dropped.  Output order is h-major, independent of ``workers``.
    """
    jobs = [(float(h), float(c), sup_bound) for h in h_values for c in c_values if c > 2]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(jobs) < 64:
        return [_region_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_region_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def default_region_axes() -> tuple:
    return lattice(0.0, 3.0, 0.05), lattice(2.0, 5.0, 0.05)


def crossover_delay(c: float) -> Optional[float]:
    """Delay below which certify_stability(c/2, exp(c*h)) fails, for 2 < c < 2*sqrt(2).

    With lam = c/2 the condition reads exp(c*h*(1 - c/2)) <= c**2/4 - 1, so the
    crossover solves c*h*(c/2 - 1) = -log(c**2/4 - 1).  Returns None when the
    certificate holds for every h >= 0.
    """
    if c <= 2:
        raise SubcriticalSpeedError(f"subcritical speed: c={c} < 2")
    beta = c * c / 4 - 1
    if beta >= 1:
        return None
    return -math.log(beta) / (c * (c / 2 - 1))


def iter_flagged(cells: Iterable[RegionCell]) -> list:
    """Lattice points where the closed-form kappa is not the maximiser of Q."""
    return [(cell.h, cell.c) for cell in cells if cell.h > 0 and not cell.kappa_argmax]

