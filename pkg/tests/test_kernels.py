"""Compiled and pure-Python kernels must agree."""
import numpy as np
import pytest

from delayfront import _kernels_py as pyk
from delayfront._backend import BACKEND

ck = pytest.importorskip("delayfront._kernels")


def _ring(rng, L, n):
    return np.ascontiguousarray(rng.uniform(0, 1.5, (L, n)))


def test_backend_selected():
    assert BACKEND in {"cython", "python"}


@pytest.mark.parametrize("m", [0, 3, 20])
def test_rhs_agrees(m):
    rng = np.random.default_rng(1)
    v, d = rng.uniform(0, 2, 64), rng.uniform(0, 2, 64)
    a, b = np.empty(64), np.empty(64)
    pyk.rhs(v, d, a, 3.0, 0.1, m)
    ck.rhs(v, d, b, 3.0, 0.1, m)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-12)


def test_rk4_step_agrees():
    rng = np.random.default_rng(2)
    v, d0, d1 = (rng.uniform(0, 2, 50) for _ in range(3))
    a, b = np.empty(50), np.empty(50)
    pyk.rk4_step(v, d0, d1, a, 2.5, 0.1, 0.002, 7)
    ck.rk4_step(v, d0, d1, b, 2.5, 0.1, 0.002, 7)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-14)


def test_advance_delay_agrees():
    rng = np.random.default_rng(3)
    ring = _ring(rng, 11, 80)
    r1, r2 = ring.copy(), ring.copy()
    h1 = pyk.advance_delay(r1, 0, 37, 3.0, 0.1, 0.0025, 10)
    h2 = ck.advance_delay(r2, 0, 37, 3.0, 0.1, 0.0025, 10)
    assert h1 == h2
    np.testing.assert_allclose(r1, r2, rtol=1e-12, atol=1e-13)


def test_advance_local_and_frozen_agree():
    rng = np.random.default_rng(4)
    v = rng.uniform(0, 1, 60)
    a, b = v.copy(), v.copy()
    pyk.advance_local(a, 50, 2.2, 0.1, 0.0025)
    ck.advance_local(b, 50, 2.2, 0.1, 0.0025)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)
    d = rng.uniform(0, 1.2, 60)
    a, b = v.copy(), v.copy()
    pyk.advance_frozen(a, d, 50, 3.0, 0.1, 0.0025, 5)
    ck.advance_frozen(b, d, 50, 3.0, 0.1, 0.0025, 5)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("m", [0, 25])
def test_integrate_profile_agrees(m):
    n = 400
    lam1 = (3 - 5 ** 0.5) / 2
    lam2 = 1 / lam1
    z = -48.0 + 0.01 * np.arange(n)
    base = np.exp(lam1 * z)
    outs = []
    for mod in (pyk, ck):
        phi, dphi = base.copy(), lam1 * base
        status, idx = mod.integrate_profile(phi, dphi, max(m, 1), n - 1, m, 3.0, 0.01,
                                            20.0, 1e-3, lam1, 0.5 * (lam2 - lam1))
        outs.append((status, idx, phi[: idx + 1], dphi[: idx + 1]))
    assert outs[0][:2] == outs[1][:2]
    np.testing.assert_allclose(outs[0][2], outs[1][2], rtol=1e-13)
    np.testing.assert_allclose(outs[0][3], outs[1][3], rtol=1e-13)


def test_integrate_profile_escape_directions():
    lam1 = (3 - 5 ** 0.5) / 2
    lam2 = 1 / lam1
    for mod in (pyk, ck):
        for sign, expected in ((1.0, pyk.ESCAPE_UP), (-1.0, pyk.ESCAPE_DOWN)):
            phi, dphi = np.zeros(2000), np.zeros(2000)
            phi[0] = 1e-8
            dphi[0] = (lam1 + sign * 0.1) * 1e-8
            status, _ = mod.integrate_profile(phi, dphi, 0, 1999, 0, 3.0, 0.01, 20.0, 1e-3,
                                              lam1, 0.5 * (lam2 - lam1))
            assert status == expected
