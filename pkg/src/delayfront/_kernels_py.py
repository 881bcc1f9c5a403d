"""Pure-Python/numpy versions of the inner loops.

Signatures and semantics match ``_kernels.pyx`` exactly; this module is used
when the compiled extension is unavailable or DELAYFRONT_PURE_PYTHON is set.
"""
import math

import numpy as np

DONE = 0
ESCAPE_UP = 1
ESCAPE_DOWN = -1


def integrate_profile(phi, dphi, start, stop, m, c, dz, upper, tail_level, lam1, split):
    """RK4 for phi'' = c phi' - phi (1 - phi(z - lag)) from index ``start`` to ``stop``.

    ``phi``/``dphi`` hold the solution and its slope; indices below ``start`` are
    read-only history, the lag is ``m`` cells (m = 0 means no delay).  Returns
    ``(status, index)`` where status is DONE or the escape direction and index is
    the last index written.
    """
    half = 0.5 * dz
    for k in range(start, stop):
        y, p = phi[k], dphi[k]
        if m > 0:
            d0 = phi[k - m]
            d1 = phi[k - m + 1]
            dm = 0.5 * (d0 + d1) + 0.125 * dz * (dphi[k - m] - dphi[k - m + 1])
            k1y = p
            k1p = c * p - y * (1.0 - d0)
            y2 = y + half * k1y
            p2 = p + half * k1p
            k2y = p2
            k2p = c * p2 - y2 * (1.0 - dm)
            y3 = y + half * k2y
            p3 = p + half * k2p
            k3y = p3
            k3p = c * p3 - y3 * (1.0 - dm)
            y4 = y + dz * k3y
            p4 = p + dz * k3p
            k4y = p4
            k4p = c * p4 - y4 * (1.0 - d1)
        else:
            k1y = p
            k1p = c * p - y * (1.0 - y)
            y2 = y + half * k1y
            p2 = p + half * k1p
            k2y = p2
            k2p = c * p2 - y2 * (1.0 - y2)
            y3 = y + half * k2y
            p3 = p + half * k2p
            k3y = p3
            k3p = c * p3 - y3 * (1.0 - y3)
            y4 = y + dz * k3y
            p4 = p + dz * k3p
            k4y = p4
            k4p = c * p4 - y4 * (1.0 - y4)
        yn = y + dz / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        pn = p + dz / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        phi[k + 1] = yn
        dphi[k + 1] = pn
        if not (math.isfinite(yn) and math.isfinite(pn)) or yn > upper:
            return ESCAPE_UP, k + 1
        if yn < 0.0:
            return ESCAPE_DOWN, k + 1
        if split > 0.0 and yn < tail_level:
            r = pn / yn - lam1
            if r > split:
                return ESCAPE_UP, k + 1
            if r < -split:
                return ESCAPE_DOWN, k + 1
    return DONE, stop


# overflow is reported by the callers' finiteness checks, as in the compiled core
_quiet = np.errstate(over="ignore", invalid="ignore")


def _shifted(d, m):
    if m == 0:
        return d
    H = np.empty_like(d)
    H[m:] = d[: d.shape[0] - m]
    H[:m] = d[0]
    return H


def _rhs(v, H, c, dz):
    inv_dz2 = 1.0 / (dz * dz)
    inv_2dz = 0.5 / dz
    out = np.empty_like(v)
    out[0] = 0.0
    out[1:-1] = ((v[2:] - 2.0 * v[1:-1] + v[:-2]) * inv_dz2
                 - c * (v[2:] - v[:-2]) * inv_2dz
                 + v[1:-1] * (1.0 - H[1:-1]))
    out[-1] = 2.0 * (v[-2] - v[-1]) * inv_dz2 + v[-1] * (1.0 - H[-1])
    return out


def rhs(v, d, out, c, dz, m):
    """Semi-discrete right-hand side with delayed field ``d`` lagged by ``m`` cells."""
    out[:] = _rhs(v, _shifted(d, m), c, dz)


@_quiet
def rk4_step(v, d0, d1, out, c, dz, dt, m):
    """One RK4 step; the delayed field is d0 at t, d1 at t+dt, their mean at t+dt/2."""
    H0 = _shifted(d0, m)
    H1 = _shifted(d1, m)
    Hm = 0.5 * (H0 + H1)
    k1 = _rhs(v, H0, c, dz)
    k2 = _rhs(v + 0.5 * dt * k1, Hm, c, dz)
    k3 = _rhs(v + 0.5 * dt * k2, Hm, c, dz)
    k4 = _rhs(v + dt * k3, H1, c, dz)
    out[:] = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@_quiet
def advance_delay(ring, head, nsteps, c, dz, dt, m):
    """Advance ``nsteps`` steps using ring slots as the delay history.

    ``ring[head]`` is the field at t - h, ``ring[head - 1]`` the current field.
    Each new field overwrites the oldest slot.  Returns the new head.
    """
    L = ring.shape[0]
    for _ in range(nsteps):
        cur = ring[(head - 1) % L]
        d0 = ring[head]
        d1 = ring[(head + 1) % L]
        new = np.empty_like(cur)
        rk4_step(cur, d0, d1, new, c, dz, dt, m)
        ring[head] = new
        head = (head + 1) % L
    return head


def _rhs_local(v, c, dz):
    return _rhs(v, v, c, dz)


@_quiet
def advance_local(v, nsteps, c, dz, dt):
    """Undelayed equation (h = 0), in place."""
    for _ in range(nsteps):
        k1 = _rhs_local(v, c, dz)
        k2 = _rhs_local(v + 0.5 * dt * k1, c, dz)
        k3 = _rhs_local(v + 0.5 * dt * k2, c, dz)
        k4 = _rhs_local(v + dt * k3, c, dz)
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@_quiet
def advance_frozen(v, d, nsteps, c, dz, dt, m):
    """Linear equation with a time-independent delayed coefficient field, in place."""
    H = _shifted(d, m)
    for _ in range(nsteps):
        k1 = _rhs(v, H, c, dz)
        k2 = _rhs(v + 0.5 * dt * k1, H, c, dz)
        k3 = _rhs(v + 0.5 * dt * k2, H, c, dz)
        k4 = _rhs(v + dt * k3, H, c, dz)
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
