import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fraclap import rates
from fraclap.linear import InadmissibleError
from fraclap.quadrature import NonIntegrableError
from fraclap.special import DomainError, FracParams, c_const

D = rates.default_deltas()


def test_synthetic_power():
    fit = rates.fit_boundary_rate(D, D**0.25)
    assert fit.exponent == pytest.approx(0.25, abs=1e-6) and not fit.log_factor
    assert fit.prefactor == pytest.approx(1.0, rel=1e-8) and fit.r_squared == pytest.approx(1.0)


def test_synthetic_log():
    fit = rates.fit_boundary_rate(D, D**0.5 * np.log(1 / D))
    assert fit.exponent == pytest.approx(0.5, abs=0.02) and fit.log_factor


@given(st.floats(-0.9, 0.9), st.floats(0.01, 100.0))
def test_round_trip(a, C):
    fit = rates.fit_boundary_rate(D, C * D**a)
    assert fit.exponent == pytest.approx(a, abs=1e-6)
    assert not fit.log_factor


def test_fit_rejects_bad_values():
    with pytest.raises(DomainError):
        rates.fit_boundary_rate(D, -D)
    with pytest.raises(DomainError):
        rates.fit_boundary_rate(D[:2], D[:2])
    fit = rates.fit_boundary_rate(D, -(D**0.3), allow_negative=True)
    assert fit.exponent == pytest.approx(0.3, abs=1e-9)


def test_low_confidence_flag():
    rng = np.random.default_rng(0)
    noisy = D**0.3 * np.exp(rng.normal(0, 0.3, D.size))
    assert rates.fit_boundary_rate(D, noisy).low_confidence


def test_expected_law():
    assert rates.expected_rhs_rate(0.5, 0.25) == (0.5, False)
    assert rates.expected_rhs_rate(0.5, 0.5) == (0.5, True)
    assert rates.expected_rhs_rate(0.5, 0.75) == (0.25, False)
    with pytest.raises(NonIntegrableError):
        rates.expected_rhs_rate(0.5, 1.5)


@pytest.mark.parametrize("beta,exp,log", [(0.25, 0.5, False), (0.5, 0.5, True), (0.75, 0.25, False)])
def test_rhs_examples(beta, exp, log):
    fit = rates.rhs_rate_experiment(FracParams(1, 0.5), beta)
    assert fit.exponent == pytest.approx(exp, abs=0.05) and fit.log_factor == log


def test_rhs_rejects_nonadmissible():
    with pytest.raises(NonIntegrableError):
        rates.rhs_rate_experiment(FracParams(1, 0.5), 1.5)


def test_classification_table():
    # beta = 0.4 and 0.6 sit next to the critical beta = s, where the two powers
    # are nearly degenerate on the window; there the fit must say so
    p = FracParams(1, 0.5)
    for beta in np.round(np.arange(0.1, 1.45, 0.1), 2):
        fit = rates.rhs_rate_experiment(p, float(beta))
        exp, log = rates.expected_rhs_rate(p.s, float(beta))
        if abs(abs(beta - p.s) - 0.1) < 1e-9:
            assert fit.low_confidence, beta
            continue
        assert fit.exponent == pytest.approx(exp, abs=0.05), beta
        assert fit.log_factor == log, beta


def test_window_stability_of_reference_experiments():
    p = FracParams(1, 0.5)
    for beta in (0.25, 0.5, 0.75, 1.2):
        d, v = rates.rhs_rate_samples(p, beta)
        assert rates.window_stability(d, v) < 0.02
    for sig in (0.1, 0.25, 0.4):
        d, v = rates.datum_rate_samples(p, sig)
        assert rates.window_stability(d, v) < 0.02


def test_datum_examples():
    p = FracParams(1, 0.5)
    fs, ft = rates.datum_rate_experiment(p, 0.0, 0.25)
    assert fs.exponent == pytest.approx(-0.25, abs=0.05)
    assert ft.exponent == pytest.approx(0.0, abs=0.05)
    with pytest.raises(InadmissibleError):
        rates.datum_rate_experiment(p, 0.0, 0.5)
    with pytest.raises(DomainError):
        rates.datum_rate_experiment(p, 0.3, 0.2)


@pytest.mark.parametrize("n,s,sig", [(1, 0.5, 0.25), (2, 0.25, 0.4)])
def test_usigma_prefactor(n, s, sig):
    p = FracParams(n, s)
    d, v = rates.datum_rate_samples(p, sig, kind="usigma")
    fit = rates.fit_boundary_rate(d, v)
    assert fit.exponent == pytest.approx(-sig, abs=0.05)
    assert rates.usigma_prefactor_ratio(p, sig, fit) == pytest.approx(c_const(n, s) / c_const(n, s + sig), rel=0.1)


def test_rate_fit_serializes():
    d = rates.fit_boundary_rate(D, D**0.5).to_dict()
    assert d["window"] == [pytest.approx(1e-4), pytest.approx(1e-2)]
    assert set(d) >= {"exponent", "log_factor", "prefactor", "r_squared", "low_confidence"}
