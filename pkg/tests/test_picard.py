import math

import numpy as np
import pytest

from delayfront.dispersion import Params
from delayfront.picard import (
    Bump,
    KernelTable,
    NonContractionError,
    compare_with_evolution,
    heat_convolve,
    lipschitz_growth_check,
    picard_solve,
)
from delayfront.profile import compute_profile

DX = 0.05


@pytest.mark.parametrize("t", [0.01, 0.1, 0.5, 1.0, 2.0])
def test_kernel_mass_symmetry_positivity(t):
    k = KernelTable(t, DX)
    w = k.weights
    assert 1 - 1e-6 <= k.mass() <= 1 + 1e-14
    np.testing.assert_array_equal(w, w[::-1])
    assert np.all(w > 0)


def test_kernel_truncation_at_eight_widths_loses_erfc4():
    # |x| <= 8 sqrt(t) drops erfc(4) ~ 1.5e-8 of the mass, not 1e-14
    k = KernelTable(1.0, 0.01, width=8.0)
    assert 1 - k.mass() == pytest.approx(math.erfc(4.0), rel=1e-3)


def test_kernel_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        KernelTable(0.0, DX)
    with pytest.raises(ValueError):
        heat_convolve(-1.0, np.ones(10), DX)


def test_constants_preserved():
    out = heat_convolve(0.7, np.ones(400), DX)
    np.testing.assert_allclose(out, 1.0, atol=1e-6)


def test_exponential_eigenfunction():
    x = -30 + DX * np.arange(1201)
    lam, t = 0.8, 0.5
    out = heat_convolve(t, np.exp(lam * x), DX)
    inner = np.abs(x) <= 15
    np.testing.assert_allclose(out[inner], np.exp(lam * x[inner] + lam ** 2 * t), rtol=1e-4)


def test_spike_spreads_to_gaussian():
    x = -10 + DX * np.arange(401)
    f = np.zeros_like(x)
    f[200] = 1.0
    out = heat_convolve(0.5, f, DX)
    assert out.sum() * DX == pytest.approx(DX, rel=1e-10)
    assert np.argmax(out) == 200
    np.testing.assert_allclose(out, out[::-1], rtol=0, atol=1e-18)


@pytest.mark.parametrize("t1,t2", [(0.1, 0.1), (0.1, 0.5), (0.5, 0.5)])
def test_semigroup(t1, t2):
    x = -20 + DX * np.arange(801)
    f = np.exp(-x ** 2) + 0.3 * np.tanh(x)
    a = heat_convolve(t1, heat_convolve(t2, f, DX), DX)
    b = heat_convolve(t1 + t2, f, DX)
    assert np.max(np.abs(a - b)) <= 1e-5


@pytest.mark.parametrize("level", [0.0, 1.0])
def test_picard_equilibria(level):
    x = -5 + 0.1 * np.arange(101)
    res = picard_solve(lambda s: np.full(x.size, level), 1.0, x, 20)
    np.testing.assert_allclose(res.u, level, atol=1e-12)


def test_picard_reproduces_travelling_front():
    p = Params(3.0, 1.0)
    prof = compute_profile(p, length=90.0)
    x = -30 + 0.1 * np.arange(351)

    def segment(s):
        return prof.sample(x + p.c * s)

    res = picard_solve(segment, p.h, x, 100)
    inner = (x >= -20) & (x <= 0)
    err = np.abs(res.u[-1] - prof.sample(x + p.ch))[inner]
    assert err.max() <= 1e-3
    assert res.iterations <= 60


def test_non_contraction_detected():
    x = -5 + 0.1 * np.arange(101)
    with pytest.raises(NonContractionError):
        picard_solve(lambda s: np.full(x.size, -400.0), 1.0, x, 20)


def test_lipschitz_check_constant_and_step():
    x = -15 + DX * np.arange(601)
    ones = lambda s: np.ones(x.size)  # noqa: E731
    res = picard_solve(ones, 1.0, x, 20)
    rep = lipschitz_growth_check(res, ones, 1.0)
    assert rep.passed and np.all(rep.gradient <= 1e-12)
    step = Bump(x, 0.8, 0.0, 1.0)
    res = picard_solve(step, 1.0, x, 50)
    assert lipschitz_growth_check(res, step, 1.0).passed


def test_heat_flow_does_not_steepen_ramp():
    x = -10 + DX * np.arange(401)
    f = np.clip(2 * x, 0, 1)  # Lipschitz constant 2 between the plateaus 0 and 1
    grads = [np.max(np.abs(np.diff(heat_convolve(t, f, DX)))) / DX for t in (0.05, 0.2, 0.5, 1.0)]
    assert grads[0] <= 2 + 1e-12
    assert all(b <= a + 1e-12 for a, b in zip(grads, grads[1:]))


def test_compare_with_evolution_small():
    x = -10 + 0.1 * np.arange(201)
    cmp = compare_with_evolution(3.0, 1.0, Bump(x), x, 0.1, n_steps=50)
    assert cmp.sup_error <= 5e-3
    assert cmp.times[-1] == pytest.approx(1.0)
