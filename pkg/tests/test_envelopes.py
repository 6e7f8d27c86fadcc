import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isslab.envelopes import (
    BURGERS_THEOREMS,
    EnvelopeParams,
    degiorgi_factor,
    envelope_T6i,
    envelope_T6ii,
    envelope_T7,
    envelope_T8,
    envelope_T9,
    envelope_T11i,
    envelope_T11ii,
    envelopes_T12_to_T16,
    make_verdict,
    params_from_scenario,
    verify,
)
from isslab.errors import ParameterError
from isslab.grid import NormTriple
from isslab.scenario import Scenario
from isslab.signals import BoundarySignal, FieldSignal, Profile, RunningStats
from isslab.solvers import simulate

ZERO = RunningStats()
UNIT_H1 = NormTriple(l2=0.0, h1=1.0, linf=0.0)


def stats(sup_d=0.0, sup_f=0.0, int_f=0.0):
    return RunningStats(sup_d=sup_d, sup_f=sup_f, int_f_l2sq=int_f)


def test_factor_values():
    assert degiorgi_factor(4) == 8.0
    assert degiorgi_factor(np.inf) == pytest.approx(2 ** 2.5)
    assert degiorgi_factor(1e9) == pytest.approx(2 ** 2.5, rel=1e-8)
    with pytest.raises(ParameterError):
        degiorgi_factor(2.0)


def test_T6i_at_origin():
    p = EnvelopeParams(u0_norms=UNIT_H1)
    assert envelope_T6i(p, ZERO, 0.0) == pytest.approx(math.sqrt(2))
    assert p.transport_rate == 2.0
    assert envelope_T6i(p, ZERO, 1.0) == pytest.approx(math.sqrt(2) * math.exp(-2.0))


def test_T6ii_terms():
    p = EnvelopeParams(epsilon=1.0, u0_norms=NormTriple(0, 0, 0))
    assert p.eps_upper_T6ii == 4.0
    assert envelope_T6ii(p, stats(int_f=1.0), 1.0) == pytest.approx(math.sqrt(3))
    assert envelope_T6ii(p, stats(), 1.0) == 0.0
    with pytest.raises(ParameterError):
        EnvelopeParams(epsilon=4.0, u0_norms=UNIT_H1).eps_T6ii()
    assert EnvelopeParams().eps_T6ii() == 2.0


def test_T7_shapes():
    nt = NormTriple(l2=0.5, h1=math.sqrt(0.25 + 4.0), linf=1.0)
    l2, h1x = envelope_T7(EnvelopeParams(u0_norms=nt), 0.0)
    assert l2 == pytest.approx(0.5)
    assert h1x ** 2 == pytest.approx(4 * 4.0)
    p = EnvelopeParams(m=2.0, u0_norms=nt)
    ratio = envelope_T7(p, 1.0)[0] ** 2 / envelope_T7(p, 0.0)[0] ** 2
    assert ratio == pytest.approx(math.exp(-6.0))


def test_T8_formula():
    p = EnvelopeParams(m=1.0, mu=0.5, n=0.2, u0_norms=UNIT_H1)
    expected = math.exp(2.0) * math.sqrt(2 + 1 / 0.5) * math.exp(-(1 / 2.0 + 0.2 + 1.0) * 0.3)
    assert envelope_T8(p, 0.3) == pytest.approx(expected)


def test_T9_examples():
    p = EnvelopeParams()
    assert envelope_T9(p, ZERO) == 0.0
    assert envelope_T9(p, stats(0.1, 0.05)) == pytest.approx(0.5)


def test_T11_examples():
    p = EnvelopeParams(mu=1.0, nu=2.0, u0_norms=NormTriple(1.0, 1.0, 1.0))
    assert envelope_T11i(p, ZERO, 0.0) == pytest.approx(2.0)
    z = EnvelopeParams(u0_norms=NormTriple(0, 0, 0))
    assert envelope_T11i(z, ZERO, 3.0) == 0.0 and envelope_T11ii(z, ZERO, 3.0) == 0.0
    assert envelope_T11ii(z, stats(sup_d=0.1), 5.0) == pytest.approx(0.04)
    # last coefficient 4 * factor / mu^2 = 32 at p = 4, mu = 1
    assert envelope_T11ii(z, stats(sup_f=1.0), 0.0) == pytest.approx(32.0)


def test_T12_to_T16_examples():
    nt = NormTriple(1.0, 1.0, 1.0)
    e = envelopes_T12_to_T16(EnvelopeParams(u0_norms=nt), stats(sup_d=0.3), 0.0)
    assert e["T12"] == pytest.approx(0.3)
    e = envelopes_T12_to_T16(EnvelopeParams(u0_norms=nt), ZERO, math.log(2))
    assert e["T16"] == pytest.approx(0.5)
    e = envelopes_T12_to_T16(EnvelopeParams(epsilon=0.5, u0_norms=nt), ZERO, 0.0)
    assert e["T13"] == pytest.approx(1.0)


nonneg = st.floats(0, 5, allow_nan=False)


@settings(max_examples=80, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 3), st.floats(0.2, 3), nonneg, nonneg, nonneg, st.floats(0, 4),
       st.sampled_from([2.5, 3.0, 4.0, 10.0]))
def test_T6i_is_T8_plus_T9(m, n, mu, sd, sf, h1, t, p):
    params = EnvelopeParams(mu=mu, m=m, n=n, p=p, u0_norms=NormTriple(0.0, h1, 0.0))
    s = stats(sd, sf)
    lhs = envelope_T6i(params, s, t)
    rhs = envelope_T8(params, t) + math.exp(abs(m) / mu) * (sd + degiorgi_factor(p) / mu * sf)
    assert lhs == pytest.approx(rhs, rel=1e-14, abs=1e-300)


@settings(max_examples=80, deadline=None)
@given(nonneg, nonneg, nonneg, st.floats(1e-3, 1), st.floats(0, 5))
def test_envelopes_monotone_in_disturbances(sd, sf, si, bump, t):
    params = EnvelopeParams(m=0.5, n=0.3, u0_norms=NormTriple(0.4, 1.2, 0.8))
    base = stats(sd, sf, si)
    for field in ("sup_d", "sup_f", "int_f_l2sq"):
        more = RunningStats(**{**base.__dict__, field: getattr(base, field) + bump})
        for fn in (envelope_T6i, envelope_T6ii, envelope_T11i, envelope_T11ii):
            assert fn(params, more, t) >= fn(params, base, t)
        for key, val in envelopes_T12_to_T16(params, more, t).items():
            assert val >= envelopes_T12_to_T16(params, base, t)[key]


def test_decay_to_zero_without_disturbances():
    params = EnvelopeParams(m=1.0, n=0.1, u0_norms=NormTriple(1.0, 2.0, 1.0))
    t = 200.0
    for fn in (envelope_T6i, envelope_T6ii, envelope_T11i, envelope_T11ii):
        assert fn(params, ZERO, t) < 1e-20
    assert envelope_T8(params, t) < 1e-20
    assert all(v < 1e-20 for k, v in envelopes_T12_to_T16(params, ZERO, t).items() if k in ("T13", "T16"))


def test_make_verdict_tolerance():
    v = make_verdict("T6i", [0, 1], [1.0, 1.0], [1.01, 0.5])
    assert v.passed and v.status == "pass"
    v = make_verdict("T6i", [0, 1], [1.0, 1.0], [1.05, 0.5])
    assert not v.passed and v.status == "fail" and not v.ok
    v = make_verdict("T11i", [0], [1.0], [3.0], hypothesis_met=False)
    assert v.status == "hypothesis-not-met" and v.ok


def test_verify_zero_scenario_passes():
    sc = Scenario(t_final=0.2)
    tr = simulate(sc)
    v = verify(tr, "T6i", params_from_scenario(sc))
    assert v.passed and v.max_violation <= 1e-6


def test_verify_heat_mode_margin():
    sc = Scenario(u0=Profile.sine_mode(1.0), t_final=1.0)
    tr = simulate(sc)
    v = verify(tr, "T6i", params_from_scenario(sc))
    assert v.passed and v.max_ratio < 1.0
    # the modal decay pi^2 beats the envelope rate 2, so the ratio shrinks with time
    ratio = v.observed_values / v.envelope_values
    assert ratio[-1] < 0.01 * ratio[0]


def test_verify_burgers_near_threshold():
    sc = Scenario(plant="burgers", mu=1.0, nu=2.0, u0=Profile.sine_mode(0.5), d=BoundarySignal.sinusoid(0.45, 2.0),
                  t_final=2.0)
    tr = simulate(sc)
    v = verify(tr, "T11i", params_from_scenario(sc))
    assert v.hypothesis_met and v.passed


def test_verify_flags_unmet_hypothesis():
    sc = Scenario(plant="burgers", mu=1.0, nu=2.0, d=BoundarySignal.sinusoid(0.6, 2.0), t_final=1.0)
    v = verify(simulate(sc), "T11i", params_from_scenario(sc))
    assert v.status == "hypothesis-not-met" and v.ok


def test_verify_rejects_wrong_plant():
    sc = Scenario(t_final=0.1)
    with pytest.raises(ParameterError):
        verify(simulate(sc), "T11i", params_from_scenario(sc))
    assert "T11i" in BURGERS_THEOREMS


def test_transport_unstable_margin_not_claimed():
    sc = Scenario(n=-0.5, u0=Profile.sine_mode(0.2), f=FieldSignal.separable(Profile.constant(0.1)), t_final=0.5)
    v = verify(simulate(sc), "T6i", params_from_scenario(sc))
    assert v.status == "hypothesis-not-met"
