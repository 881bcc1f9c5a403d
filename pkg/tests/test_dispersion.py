import math

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from delayfront.dispersion import (
    NONE_TAG,
    STABLE_TAG,
    UNIQUE_TAG,
    Params,
    SubcriticalSpeedError,
    certify_stability,
    char_roots,
    crossover_delay,
    decay_rate,
    default_region_axes,
    growth_exponent,
    kappa_crit,
    kappa_is_argmax,
    lattice,
    q_eval,
    q_maximizer,
    region_classify,
    region_map,
    uniqueness_threshold,
)


def test_params_validation():
    with pytest.raises(ValueError):
        Params(0.0, 1.0)
    with pytest.raises(ValueError):
        Params(3.0, -0.1)
    with pytest.raises(ValueError):
        Params(float("nan"), 1.0)
    assert Params(3.0, 1.0).ch == 3.0


def test_char_roots_c3():
    sd = char_roots(Params(3.0, 1.0))
    assert sd.lambda1 == pytest.approx((3 - math.sqrt(5)) / 2, abs=1e-15)
    assert sd.lambda2 == pytest.approx((3 + math.sqrt(5)) / 2, abs=1e-15)


def test_char_roots_critical_speed_double_root():
    sd = char_roots(Params(2.0, 0.0))
    assert sd.lambda1 == sd.lambda2 == 1.0


def test_subcritical_speed():
    with pytest.raises(SubcriticalSpeedError, match="subcritical speed"):
        char_roots(Params(1.5, 1.0))


def test_decay_and_growth_are_opposite():
    p = Params(3.0, 1.0)
    for lam in (0.5, 1.0, 1.5, 2.0):
        assert decay_rate(p, lam) == -growth_exponent(p, lam)
    assert decay_rate(p, 1.5) == 1.25


def test_q_value_at_kappa():
    p = Params(3.0, 1.0)
    assert kappa_crit(p) == pytest.approx(7 / 3, abs=1e-12)
    # Q(7/3) = e^7 * 5/9
    assert q_eval(p, 7 / 3) == pytest.approx(math.exp(7) * 5 / 9, rel=1e-13)
    assert q_eval(p, 7 / 3) == pytest.approx(609.2406, abs=1e-3)


def test_q_rejects_outside_interval():
    with pytest.raises(ValueError):
        q_eval(Params(3.0, 1.0), 3.0)


def test_kappa_singular_at_zero_delay():
    with pytest.raises(ValueError):
        kappa_crit(Params(3.0, 0.0))


def test_kappa_approaches_lambda2_for_long_delay():
    lam2 = char_roots(Params(3.0, 1.0)).lambda2
    # lambda2 - kappa decays like 1/(ch * sqrt(c^2 - 4)); 3.3e-3 at h = 100
    assert lam2 - kappa_crit(Params(3.0, 100.0)) == pytest.approx(3.3284e-3, abs=1e-6)
    assert lam2 - kappa_crit(Params(3.0, 1000.0)) < 1e-3


@pytest.mark.parametrize("c,h", [(3.0, 1.0), (2.1, 0.1), (5.0, 3.0), (10.0, 0.05), (4.0, 2.0)])
def test_kappa_matches_golden_section_argmax(c, h):
    p = Params(c, h)
    sd = char_roots(p)
    # independent oracle: bounded minimisation of -log Q
    res = minimize_scalar(lambda lam: -(lam * p.ch + math.log(decay_rate(p, lam))),
                          bounds=(sd.lambda1 + 1e-12, sd.lambda2 - 1e-12), method="bounded",
                          options={"xatol": 1e-12})
    assert kappa_crit(p) == pytest.approx(res.x, abs=1e-6)
    assert q_maximizer(p) == pytest.approx(kappa_crit(p), abs=1e-12)
    assert kappa_is_argmax(p)


def test_uniqueness_threshold_zero_delay():
    assert uniqueness_threshold(Params(3.0, 0.0)) == pytest.approx(1.25)


def test_certificate_reference_delta():
    cert = certify_stability(Params(3.0, 1.0), 1.5, math.exp(3.0))
    assert cert.feasible
    assert cert.R == pytest.approx(math.exp(-1.5), rel=1e-14)
    # oracle: Brent root of exp(d h)(d + beta) = R, frozen
    assert cert.delta == pytest.approx(-0.7687115336024136, abs=2e-10)


def test_certificate_delta_against_brentq():
    for c, h, lam in [(3.5, 0.5, 1.75), (5.0, 2.0, 2.5), (4.0, 1.0, 1.0)]:
        p = Params(c, h)
        cert = certify_stability(p, lam, math.exp(p.ch))
        beta = decay_rate(p, lam)
        oracle = brentq(lambda d: math.exp(d * h) * (d + beta) - cert.R, -beta, 0.0, xtol=1e-14)
        assert cert.delta == pytest.approx(oracle, abs=2e-10)


def test_certificate_linear_case():
    cert = certify_stability(Params(3.0, 0.0), 1.5, 1.0)
    assert cert.delta == pytest.approx(-0.25, abs=1e-9)


def test_certificate_infeasible():
    cert = certify_stability(Params(2.5, 0.0), 1.25, 1.0)
    assert not cert.feasible and cert.delta is None


def test_certificate_rejects_endpoint_lambda():
    sd = char_roots(Params(3.0, 1.0))
    with pytest.raises(ValueError):
        certify_stability(Params(3.0, 1.0), sd.lambda2, 1.0)


def test_certificate_bad_bound():
    with pytest.raises(ValueError):
        certify_stability(Params(3.0, 1.0), 1.5, 0.0)


def test_crossover_c25():
    # exp(ch(1 - c/2)) = c^2/4 - 1 at h* = -log(0.5625) / (2.5 * 0.25)
    hstar = crossover_delay(2.5)
    assert hstar == pytest.approx(0.9205826318456989, rel=1e-12)
    p_lo, p_hi = Params(2.5, hstar - 0.01), Params(2.5, hstar + 0.01)
    assert not certify_stability(p_lo, 1.25, math.exp(p_lo.ch)).feasible
    assert certify_stability(p_hi, 1.25, math.exp(p_hi.ch)).feasible
    assert crossover_delay(3.0) is None


def test_region_classify_tags():
    assert region_classify(Params(3.0, 1.0), math.exp(3.0)) == {STABLE_TAG, UNIQUE_TAG}
    assert region_classify(Params(2.5, 0.0), 1.0) == {NONE_TAG}
    # R = exp(-2.5) < beta = 0.5625 and Q(kappa) ~ 2.5e7 > exp(10)
    assert region_classify(Params(2.5, 4.0), math.exp(10.0)) == {STABLE_TAG, UNIQUE_TAG}


def test_region_map_drops_critical_speed_and_orders():
    cells = region_map([0.0, 1.0], [2.0, 3.0, 4.0])
    assert [(c.h, c.c) for c in cells] == [(0.0, 3.0), (0.0, 4.0), (1.0, 3.0), (1.0, 4.0)]


def test_region_map_parallel_matches_serial():
    hs, cs = lattice(0.0, 1.0, 0.1), lattice(2.5, 3.5, 0.1)
    assert region_map(hs, cs, workers=1) == region_map(hs, cs, workers=2)


def test_default_lattice_stable_above_2sqrt2():
    hs, cs = default_region_axes()
    assert len(hs) == 61 and len(cs) == 61
    cells = region_map(hs, cs)
    assert all(c.c > 2 for c in cells)
    assert all(c.stable for c in cells if c.c > 2 * math.sqrt(2))
    spot = next(c for c in cells if c.h == 1.0 and c.c == 3.0)
    assert spot.unique


def test_lattice_exact_points():
    pts = lattice(2.0, 5.0, 0.05)
    assert pts[0] == 2.0 and pts[-1] == 5.0 and 2.85 in pts


def test_vieta_over_speed_range():
    for c in np.linspace(2.0, 10.0, 801):
        sd = char_roots(Params(float(c), 1.0))
        assert abs(sd.lambda1 + sd.lambda2 - c) <= 1e-12
        assert abs(sd.lambda1 * sd.lambda2 - 1) <= 1e-12
