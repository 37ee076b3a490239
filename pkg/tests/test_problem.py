import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from radnodal.errors import SpecError
from radnodal.problem import (
    Nonlinearity, PowerTerm, ProblemSpec, check_assumptions, critical_exponent, eval_F,
    eval_f, eval_f_branch,
)

CUBIC = ProblemSpec.power(2.0, 3, 4.0)
TWO_TERM = ProblemSpec(2.0, 3, Nonlinearity((PowerTerm(1.0, 3.0), PowerTerm(0.5, 5.0))))
WEIGHTED = ProblemSpec(2.0, 1, Nonlinearity((PowerTerm(2.0, 4.0, lambda r: 1.0 + 0.5 * np.exp(-r)),)))
SPECS = [CUBIC, TWO_TERM, WEIGHTED, ProblemSpec.power(3.0, 2, 5.0)]


def test_eval_f_examples():
    assert eval_f(CUBIC, 0.0, 2.0) == pytest.approx(8.0)
    assert eval_f(CUBIC, 1.0, -2.0) == pytest.approx(-8.0)
    for spec in SPECS:
        assert eval_f(spec, 0.7, 0.0) == 0.0


def test_eval_F_examples():
    assert eval_F(CUBIC, 0.0, 2.0) == pytest.approx(4.0)
    assert eval_F(CUBIC, 3.0, 0.0) == 0.0


@pytest.mark.parametrize("spec", SPECS)
def test_F_matches_quadrature_of_f(spec):
    for r in (0.0, 1.3):
        val, _ = integrate.quad(lambda s: float(eval_f(spec, r, s)), 0.0, 1.5,
                                epsabs=1e-14, epsrel=1e-13)
        assert float(eval_F(spec, r, 1.5)) == pytest.approx(val, abs=1e-10)


@given(r=st.floats(0, 40), u=st.floats(-20, 20))
def test_parity(r, u):
    for spec in SPECS:
        assert float(eval_f(spec, r, -u)) == -float(eval_f(spec, r, u))
        assert float(eval_F(spec, r, -u)) == float(eval_F(spec, r, u))
        assert float(eval_F(spec, r, u)) >= 0.0


@given(r=st.floats(0, 10), a=st.floats(0.1, 10), neg=st.booleans())
def test_antiderivative_by_central_difference(r, a, neg):
    u = -a if neg else a
    h = 1e-6
    for spec in SPECS:
        fd = (float(eval_F(spec, r, u + h)) - float(eval_F(spec, r, u - h))) / (2 * h)
        exact = float(eval_f(spec, r, u))
        assert abs(fd - exact) <= 1e-6 * abs(exact)


def test_branches():
    assert float(eval_f_branch(CUBIC, "plus", 0.0, -1.0)) == pytest.approx(-1.0)
    assert float(eval_f_branch(CUBIC, "minus", 0.0, 1.0)) == pytest.approx(1.0)
    u = np.linspace(-3, 3, 13)
    np.testing.assert_array_equal(eval_f_branch(TWO_TERM, "plus", 0.2, u), eval_f(TWO_TERM, 0.2, u))
    np.testing.assert_array_equal(eval_f_branch(TWO_TERM, "minus", 0.2, u), eval_f(TWO_TERM, 0.2, u))
    with pytest.raises(ValueError):
        eval_f_branch(CUBIC, "sideways", 0.0, 1.0)


def test_critical_exponent():
    assert critical_exponent(2, 3) == 6
    assert critical_exponent(3, 2) == math.inf
    assert critical_exponent(2, 2) == math.inf


@pytest.mark.parametrize("kw", [
    dict(p=1.0, dim=3, nonlinearity=Nonlinearity.power(4.0)),
    dict(p=2.0, dim=0, nonlinearity=Nonlinearity.power(4.0)),
    dict(p=2.0, dim=3, nonlinearity=Nonlinearity.power(4.0), r_max=-1.0),
    dict(p=2.0, dim=3, nonlinearity=Nonlinearity.power(7.0)),
    dict(p=2.0, dim=3, nonlinearity=Nonlinearity.power(6.0)),
    dict(p=2.0, dim=1, nonlinearity=Nonlinearity.power(2.0)),
])
def test_spec_rejects_invalid(kw):
    with pytest.raises(SpecError):
        ProblemSpec(**kw)


def test_nonlinearity_rejects_bad_terms():
    with pytest.raises(SpecError):
        Nonlinearity(())
    with pytest.raises(SpecError):
        Nonlinearity((PowerTerm(-1.0, 4.0),))
    with pytest.raises(SpecError):
        ProblemSpec(2.0, 1, Nonlinearity((PowerTerm(1.0, 4.0, lambda r: 1.0 - r / 20),)), 40.0)


def test_json_round_trip():
    spec = ProblemSpec.from_json('{"p": 2.0, "dim": 3, "r_max": 40.0, "terms": [{"lambda": 1.0, "q": 4.0}]}')
    assert spec == ProblemSpec.power(2.0, 3, 4.0, r_max=40.0)
    assert ProblemSpec.from_json(TWO_TERM.to_json()) == TWO_TERM
    assert json.loads(spec.to_json())["terms"] == [{"lambda": 1.0, "q": 4.0}]


@pytest.mark.parametrize("spec", SPECS)
def test_power_families_pass_every_assumption(spec):
    rep = check_assumptions(spec)
    assert rep.all_pass, rep.format_table()
    assert rep.verdicts["SQ"]
    assert rep.ar_mu == pytest.approx(min(spec.nonlinearity.exponents))
    # (f4) ratio nondecreasing on sampled t >= 1
    sel = rep.t >= 1
    assert np.all(np.diff(rep.ratio_f[sel]) >= 0)


def test_assumption_scan_is_deterministic():
    a, b = check_assumptions(TWO_TERM), check_assumptions(TWO_TERM)
    assert a.verdicts == b.verdicts
    np.testing.assert_array_equal(a.ratio_F, b.ratio_F)


def test_p3_in_two_dimensions_has_no_upper_window():
    spec = ProblemSpec.power(3.0, 2, 5.0)
    assert spec.p_star == math.inf
    assert check_assumptions(spec).all_pass
    ProblemSpec.power(3.0, 2, 50.0)


def test_scan_grid_must_span_enough():
    with pytest.raises(ValueError):
        check_assumptions(CUBIC, t_min=1e-2)
    with pytest.raises(ValueError):
        check_assumptions(CUBIC, t_max=1e3)
