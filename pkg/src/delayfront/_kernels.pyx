# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: profile shooting integrator and method-of-lines RK4.

Mirrors ``_kernels_py`` function for function.
"""
import numpy as np
from libc.math cimport isfinite

cdef enum:
    DONE = 0
    ESCAPE_UP = 1
    ESCAPE_DOWN = -1


def integrate_profile(double[::1] phi, double[::1] dphi, Py_ssize_t start, Py_ssize_t stop,
                      Py_ssize_t m, double c, double dz, double upper, double tail_level,
                      double lam1, double split):
    cdef Py_ssize_t k
    cdef double y, p, d0, d1, dm, half = 0.5 * dz, sixth = dz / 6.0
    cdef double k1y, k1p, k2y, k2p, k3y, k3p, k4y, k4p, y2, p2, y3, p3, y4, p4, yn, pn, r
    for k in range(start, stop):
        y = phi[k]
        p = dphi[k]
        if m > 0:
            d0 = phi[k - m]
            d1 = phi[k - m + 1]
            dm = 0.5 * (d0 + d1) + 0.125 * dz * (dphi[k - m] - dphi[k - m + 1])
        k1y = p
        if m > 0:
            k1p = c * p - y * (1.0 - d0)
        else:
            k1p = c * p - y * (1.0 - y)
        y2 = y + half * k1y
        p2 = p + half * k1p
        k2y = p2
        if m > 0:
            k2p = c * p2 - y2 * (1.0 - dm)
        else:
            k2p = c * p2 - y2 * (1.0 - y2)
        y3 = y + half * k2y
        p3 = p + half * k2p
        k3y = p3
        if m > 0:
            k3p = c * p3 - y3 * (1.0 - dm)
        else:
            k3p = c * p3 - y3 * (1.0 - y3)
        y4 = y + dz * k3y
        p4 = p + dz * k3p
        k4y = p4
        if m > 0:
            k4p = c * p4 - y4 * (1.0 - d1)
        else:
            k4p = c * p4 - y4 * (1.0 - y4)
        yn = y + sixth * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        pn = p + sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        phi[k + 1] = yn
        dphi[k + 1] = pn
        if not (isfinite(yn) and isfinite(pn)) or yn > upper:
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


cdef inline void _rhs(const double[::1] v, const double[::1] d0, const double[::1] d1,
                      double w0, double w1, Py_ssize_t m, int local,
                      double c, double inv_dz2, double inv_2dz, double[::1] out) noexcept nogil:
    # delayed value = w0*d0 + w1*d1 at lagged index (clamped to node 0); local uses v itself
    cdef Py_ssize_t i, n = v.shape[0], j
    cdef double H
    out[0] = 0.0
    for i in range(1, n - 1):
        if local:
            H = v[i]
        else:
            j = i - m if i >= m else 0
            H = w0 * d0[j] + w1 * d1[j]
        out[i] = ((v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_dz2
                  - c * (v[i + 1] - v[i - 1]) * inv_2dz
                  + v[i] * (1.0 - H))
    i = n - 1
    if local:
        H = v[i]
    else:
        j = i - m if i >= m else 0
        H = w0 * d0[j] + w1 * d1[j]
    out[i] = 2.0 * (v[i - 1] - v[i]) * inv_dz2 + v[i] * (1.0 - H)


cdef void _step(const double[::1] v, const double[::1] d0, const double[::1] d1, Py_ssize_t m,
                int local, double c, double dz, double dt, double[::1] out,
                double[::1] k1, double[::1] k2, double[::1] k3, double[::1] k4,
                double[::1] tmp) noexcept nogil:
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double inv_dz2 = 1.0 / (dz * dz), inv_2dz = 0.5 / dz, hdt = 0.5 * dt, sdt = dt / 6.0
    _rhs(v, d0, d1, 1.0, 0.0, m, local, c, inv_dz2, inv_2dz, k1)
    for i in range(n):
        tmp[i] = v[i] + hdt * k1[i]
    _rhs(tmp, d0, d1, 0.5, 0.5, m, local, c, inv_dz2, inv_2dz, k2)
    for i in range(n):
        tmp[i] = v[i] + hdt * k2[i]
    _rhs(tmp, d0, d1, 0.5, 0.5, m, local, c, inv_dz2, inv_2dz, k3)
    for i in range(n):
        tmp[i] = v[i] + dt * k3[i]
    _rhs(tmp, d0, d1, 0.0, 1.0, m, local, c, inv_dz2, inv_2dz, k4)
    for i in range(n):
        out[i] = v[i] + sdt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def rhs(double[::1] v, double[::1] d, double[::1] out, double c, double dz, Py_ssize_t m):
    _rhs(v, d, d, 1.0, 0.0, m, 0, c, 1.0 / (dz * dz), 0.5 / dz, out)


def rk4_step(double[::1] v, double[::1] d0, double[::1] d1, double[::1] out,
             double c, double dz, double dt, Py_ssize_t m):
    cdef Py_ssize_t n = v.shape[0]
    cdef double[::1] k1 = np.empty(n), k2 = np.empty(n), k3 = np.empty(n), k4 = np.empty(n)
    cdef double[::1] tmp = np.empty(n), res = np.empty(n)
    _step(v, d0, d1, m, 0, c, dz, dt, res, k1, k2, k3, k4, tmp)
    out[:] = res


def advance_delay(double[:, ::1] ring, Py_ssize_t head, Py_ssize_t nsteps,
                  double c, double dz, double dt, Py_ssize_t m):
    cdef Py_ssize_t L = ring.shape[0], n = ring.shape[1], s, i
    cdef double[::1] k1 = np.empty(n), k2 = np.empty(n), k3 = np.empty(n), k4 = np.empty(n)
    cdef double[::1] tmp = np.empty(n), new = np.empty(n)
    with nogil:
        for s in range(nsteps):
            _step(ring[(head + L - 1) % L], ring[head], ring[(head + 1) % L], m, 0,
                  c, dz, dt, new, k1, k2, k3, k4, tmp)
            for i in range(n):
                ring[head, i] = new[i]
            head = (head + 1) % L
    return head


def advance_local(double[::1] v, Py_ssize_t nsteps, double c, double dz, double dt):
    cdef Py_ssize_t n = v.shape[0], s, i
    cdef double[::1] k1 = np.empty(n), k2 = np.empty(n), k3 = np.empty(n), k4 = np.empty(n)
    cdef double[::1] tmp = np.empty(n), new = np.empty(n)
    with nogil:
        for s in range(nsteps):
            _step(v, v, v, 0, 1, c, dz, dt, new, k1, k2, k3, k4, tmp)
            for i in range(n):
                v[i] = new[i]


def advance_frozen(double[::1] v, double[::1] d, Py_ssize_t nsteps,
                   double c, double dz, double dt, Py_ssize_t m):
    cdef Py_ssize_t n = v.shape[0], s, i
    cdef double[::1] k1 = np.empty(n), k2 = np.empty(n), k3 = np.empty(n), k4 = np.empty(n)
    cdef double[::1] tmp = np.empty(n), new = np.empty(n)
    with nogil:
        for s in range(nsteps):
            _step(v, d, d, m, 0, c, dz, dt, new, k1, k2, k3, k4, tmp)
            for i in range(n):
                v[i] = new[i]
