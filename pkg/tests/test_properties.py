"""Property-based checks of the invariants."""
import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from delayfront.dispersion import (
    Params,
    certify_stability,
    char_roots,
    decay_rate,
    kappa_crit,
    q_eval,
    q_maximizer,
)
from delayfront.evolution import EvolutionConfig, run
from delayfront.grid import Grid
from delayfront.norms import m_function_check, weighted_norm
from delayfront.picard import KernelTable

speeds = st.floats(2.0, 10.0)
delays = st.floats(0.0, 5.0)
Z = np.linspace(-10, 10, 81)
fields = arrays(np.float64, 81, elements=st.floats(-1e3, 1e3))


@given(speeds)
def test_vieta(c):
    sd = char_roots(Params(c, 1.0))
    assert abs(sd.lambda1 + sd.lambda2 - c) <= 1e-12
    assert abs(sd.lambda1 * sd.lambda2 - 1) <= 1e-12


@given(speeds, delays)
def test_q_vanishes_at_roots(c, h):
    p = Params(c, h)
    sd = char_roots(p)
    for lam in (sd.lambda1, sd.lambda2):
        # relative to the exponential prefactor; see the decisions log
        assert abs(q_eval(p, lam)) <= 1e-9 * math.exp(lam * p.ch) * (1 + lam * lam)


@given(st.floats(2.05, 10.0), st.floats(0.01, 5.0))
def test_kappa_is_interior_maximiser(c, h):
    p = Params(c, h)
    sd = char_roots(p)
    k = kappa_crit(p)
    assert sd.lambda1 < k < sd.lambda2
    assert abs(k - q_maximizer(p)) <= 1e-8 * max(1.0, c)


@given(st.floats(2.01, 10.0), delays, st.floats(0.05, 0.95), st.floats(0.0, 3.0))
def test_certificate_delta_properties(c, h, frac, log_bound):
    p = Params(c, h)
    sd = char_roots(p)
    lam = sd.lambda1 + frac * (sd.lambda2 - sd.lambda1)
    assume(decay_rate(p, lam) > 1e-6)
    cert = certify_stability(p, lam, math.exp(log_bound))
    if cert.feasible:
        assert -cert.beta <= cert.delta <= 0
        assert math.exp(cert.delta * h) * (cert.delta + cert.beta) >= cert.R
        assert m_function_check(p, lam, cert.delta, cert.R)[0]
    else:
        assert cert.R > cert.beta


@given(fields, st.floats(-100, 100), st.floats(0.0, 2.0))
def test_weighted_norm_homogeneous(f, a, lam):
    n1 = weighted_norm(a * f, Z, lam, (-5, 5))
    n2 = abs(a) * weighted_norm(f, Z, lam, (-5, 5))
    assert math.isclose(n1, n2, rel_tol=1e-12, abs_tol=1e-300)


@given(fields, fields, st.floats(0.0, 2.0))
def test_weighted_norm_triangle(f, g, lam):
    lhs = weighted_norm(f + g, Z, lam, (-5, 5))
    rhs = weighted_norm(f, Z, lam, (-5, 5)) + weighted_norm(g, Z, lam, (-5, 5))
    assert lhs <= rhs * (1 + 1e-12)


@given(fields, st.floats(0.0, 2.0), st.floats(0.0, 4.0), st.floats(0.0, 4.0))
def test_weighted_norm_window_monotone(f, lam, a, b):
    assert weighted_norm(f, Z, lam, (-5 - a, 5 + b)) >= weighted_norm(f, Z, lam, (-5, 5))


@given(st.floats(0.01, 4.0), st.sampled_from([0.02, 0.05, 0.1]))
def test_kernel_mass_and_symmetry(t, dx):
    k = KernelTable(t, dx)
    w = k.weights
    assert 1 - 1e-6 <= k.mass() <= 1 + 1e-14
    assert np.array_equal(w, w[::-1])


@settings(max_examples=15, deadline=None)
@given(arrays(np.float64, 101, elements=st.floats(0.0, 3.0)),
       st.sampled_from([2.5, 3.0, 4.0]), st.sampled_from([0.0, 0.5, 1.0]))
def test_positivity_preserved(data, c, h):
    p = Params(c, h)
    g = Grid.snapped(-5.0, 5.0, 0.1, p.ch)
    v0 = np.interp(g.z, np.linspace(-5, 5, 101), data)
    res = run(v0, p, g, EvolutionConfig(t_final=1.0, probe_every=1),
              probe=lambda t, v: float(v.min()))
    assert min(res.probes) >= -1e-10
