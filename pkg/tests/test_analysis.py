import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionsim import analysis as A

RNG = np.random.default_rng


def within(report, name, truth, k=3.0):
    return abs(report[name] - truth) <= k * report.error(name)


# -- weights -------------------------------------------------------------------------

def test_binomial_sigma_never_zero():
    s = A.binomial_sigma(np.array([0.0, 0.5, 1.0]), 100)
    assert np.all(s > 0)
    assert s[1] == pytest.approx(math.sqrt((0.25 + 1 / 400) / 100))


# -- line centre ---------------------------------------------------------------------

def test_line_fit_exact_on_noiseless_data():
    x = np.arange(-6e3, 6e3 + 1, 150.0)
    y = A.rabi_lineshape(x, 1234.0, 500.0, 0.97, 1000.0)
    rep = A.fit_line_center(x, y, None, 1000.0)
    assert rep["center"] == pytest.approx(1234.0, abs=1e-3)
    assert rep["rabi"] == pytest.approx(500.0, rel=1e-6)
    assert rep["amplitude"] == pytest.approx(0.97, rel=1e-6)


def test_line_width_of_pi_pulse():
    # FWHM of a 1 ms pi pulse is about 0.8 kHz
    assert A.lineshape_fwhm(500.0, 1000.0) == pytest.approx(799.0, rel=0.01)


def test_line_fit_recovers_within_errors():
    x = np.arange(-6e3, 6e3 + 1, 150.0)
    hits = 0
    for seed in range(20):
        rng = RNG(seed)
        center = rng.uniform(-3e3, 3e3)
        y = rng.binomial(100, A.rabi_lineshape(x, center, 500.0, 1.0, 1000.0)) / 100
        hits += within(A.fit_line_center(x, y, 100, 1000.0), "center", center)
    assert hits >= 18


def test_broadened_line_recovers_center_and_spread():
    x = np.arange(-8e3, 8e3 + 1, 250.0)
    y = A.broadened_lineshape(x, 2100.0, 500.0, 1.0, 700.0, 1000.0)
    rep = A.fit_line_center(x, y, None, 1000.0, broadened=True)
    assert rep["center"] == pytest.approx(2100.0, abs=1.0)
    assert rep["sigma"] == pytest.approx(700.0, rel=1e-3)
    assert rep.derived["width"].value > A.lineshape_fwhm(500.0, 1000.0)


def test_broadened_with_zero_spread_is_plain():
    x = np.linspace(-3e3, 3e3, 31)
    assert np.allclose(A.broadened_lineshape(x, 10.0, 500.0, 1.0, 0.0, 1000.0),
                       A.rabi_lineshape(x, 10.0, 500.0, 1.0, 1000.0), atol=1e-15)


# -- fringes -------------------------------------------------------------------------

def test_fringe_exact_on_noiseless_data():
    x = np.linspace(-2e4, 2e4, 161)
    y = A.fringe_model(x, 0.5, 0.4, 8900.0, 0.3)
    rep = A.fit_fringe(x, y)
    assert rep["period"] == pytest.approx(8900.0, rel=1e-8)
    assert rep["contrast"] == pytest.approx(0.8, rel=1e-8)


def test_fringe_coverage():
    x = np.linspace(-2000, 2000, 41)
    hits = 0
    for seed in range(30):
        rng = RNG(100 + seed)
        amp = rng.uniform(0.1, 0.45)
        y = rng.binomial(100, A.fringe_model(x, 0.5, amp, 2000.0, rng.uniform(-1, 1))) / 100
        rep = A.fit_fringe(x, y, 100)
        hits += within(rep, "contrast", amp / 0.5)
    assert hits >= 27


def test_flat_fringe_is_degenerate():
    rep = A.fit_fringe(np.arange(10.0), np.full(10, 0.3))
    assert "degenerate" in rep.flags
    assert rep["contrast"] == 0.0


def test_fringe_needs_points():
    with pytest.raises(ValueError):
        A.fit_fringe(np.arange(3.0), np.zeros(3))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_fit_invariant_under_point_order(seed):
    rng = RNG(seed)
    x = np.linspace(-2000, 2000, 25)
    y = rng.binomial(100, A.fringe_model(x, 0.5, 0.35, 1700.0, 0.2)) / 100
    perm = rng.permutation(x.size)
    a = A.fit_fringe(x, y, 100)
    b = A.fit_fringe(x[perm], y[perm], 100)
    for name in a.params:
        assert b[name] == pytest.approx(a[name], rel=1e-6, abs=1e-9)


# -- contrast decay ------------------------------------------------------------------

def test_contrast_decay_exact():
    t = np.linspace(0.1, 1.0, 10)
    g = A.fit_contrast_decay(t, A.gaussian_decay(t, 0.94))
    assert g.preferred == "gaussian"
    assert g.gaussian["tau"] == pytest.approx(0.94, rel=1e-8)
    assert g.gaussian["nu"] == pytest.approx(1 / (2 * math.pi * 0.94e-3), rel=1e-8)
    e = A.fit_contrast_decay(t, A.exponential_decay(t, 1.4))
    assert e.preferred == "exponential"
    assert e.exponential["tau"] == pytest.approx(1.4, rel=1e-8)


def test_contrast_decay_model_preference_rate():
    correct = trials = 0
    for seed in range(40):
        rng = RNG(seed)
        tau = rng.uniform(0.5, 2.0)
        t = np.linspace(0.1, 1.0, 10) * tau * 1.5
        for truth, model in (("gaussian", A.gaussian_decay), ("exponential", A.exponential_decay)):
            c = model(t, tau) + rng.normal(0, math.sqrt(0.5 / 100), t.size)
            rep = A.fit_contrast_decay(t, c, np.full(t.size, math.sqrt(0.5 / 100)))
            correct += rep.preferred == truth
            trials += 1
    assert correct / trials >= 0.95


def test_flat_contrast_flags_non_identifiable():
    t = np.linspace(0.1, 1.0, 10)
    rep = A.fit_contrast_decay(t, np.ones(10))
    assert "non_identifiable" in rep.gaussian.flags


# -- survival ------------------------------------------------------------------------

def test_exponential_survival_coverage():
    t = np.arange(0.0, 4001, 100.0)
    hits = 0
    for seed in range(30):
        y = RNG(seed).binomial(3658, np.exp(-t / 1011.0)) / 3658
        hits += within(A.fit_exponential_decay(t, y, 3658), "tau", 1011.0)
    assert hits >= 27


def test_survival_without_decay_is_lower_bound():
    rep = A.fit_exponential_decay(np.arange(5.0), np.ones(5), 100)
    assert "lower_bound_only" in rep.flags


# -- sine and linear -----------------------------------------------------------------

def test_sine_drift_exact():
    t = np.arange(0.0, 20.0, 1.0)
    y = 0.3 + 3.8 * np.sin(2 * np.pi * 0.05 * t + 0.7)
    rep = A.fit_sine_drift(t, y, susceptibility=2.80)
    assert rep["amplitude"] == pytest.approx(3.8, rel=1e-8)
    assert rep["phase"] % (2 * np.pi) == pytest.approx(0.7, abs=1e-7)
    assert rep["field_amplitude"] == pytest.approx(3.8 / 2.80, rel=1e-8)


def test_linear_fit():
    x = np.arange(0.0, 201, 20)
    y = 0.0053 * x + 0.1 + RNG(0).normal(0, 0.01, x.size)
    rep = A.fit_linear(x, y)
    assert within(rep, "slope", 0.0053)
    with pytest.raises(ValueError):
        A.fit_linear([1.0, 2.0], [1.0, 2.0])


def test_thermal_blue_flop():
    t = np.arange(0.0, 151, 5.0)
    omega0, eta = 1.6, 0.068
    p = A.blue_flop_model(t, 0.8, omega0, eta)
    rep = A.fit_thermal_blue_flop(t, p, 10 ** 6, omega0, eta)
    assert rep["nbar"] == pytest.approx(0.8, abs=1e-3)


# -- report --------------------------------------------------------------------------

def test_report_serialisation():
    t = np.linspace(0.1, 1.0, 10)
    rep = A.fit_contrast_decay(t, A.gaussian_decay(t, 0.94)).gaussian
    data = json.loads(rep.to_json())
    assert data["params"]["tau"]["value"] == pytest.approx(0.94)
    assert "tau" in rep.to_text()
    with pytest.raises(KeyError):
        rep["missing"]


def test_bounded_parameter_flagged():
    x = np.linspace(-1, 1, 20)
    rep, _ = A.simplex_fit(lambda x, a: a * x, x, 3 * x, None, ["a"], [(0.5,)], [(0.0, 1.0)], [1.0], "m")
    assert "at_bound:a" in rep.flags
