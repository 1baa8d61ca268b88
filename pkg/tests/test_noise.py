import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from ionsim.noise import (BFieldNoise, LaserNoise, OpenSystemRates, ShotNoise, ShotStreams,
                          StateBatch, Stream, _solve_jump_time, birth_death_propagate,
                          evolve_open_batch, field_deviation, field_deviation_integral,
                          sample_bfield, sample_shot_noise, sample_shot_noise_batch,
                          white_noise_dephase_batch)
from ionsim.physics import D, S

LEVELS = (S(-Fraction(1, 2)), D(-Fraction(1, 2)))


def basis_batch(shots, level, n, nn=41, spectator_modes=()):
    psi = np.zeros((shots, 2, nn), dtype=complex)
    psi[:, level, n] = 1.0
    return StateBatch(psi, LEVELS, None, spectator_modes)


def ladder_propagator(rate, t, size=400):
    g = np.zeros((size, size))
    for n in range(size):
        if n + 1 < size:
            g[n + 1, n] += rate * (n + 1)
            g[n, n] -= rate * (n + 1)
        if n > 0:
            g[n - 1, n] += rate * n
            g[n, n] -= rate * n
    return expm(g * t)


# -- random streams ----------------------------------------------------------------

def test_streams_are_deterministic_per_shot():
    a = ShotStreams(7, [0, 1, 2, 3]).uniform(Stream.JUMP, 5)
    b = ShotStreams(7, [2, 3]).uniform(Stream.JUMP, 5)
    assert np.array_equal(a[2:], b)


def test_streams_differ_by_seed_stream_and_counter():
    base = ShotStreams(1, np.arange(100))
    u = base.uniform(Stream.JUMP, 0)
    assert not np.array_equal(u, ShotStreams(2, np.arange(100)).uniform(Stream.JUMP, 0))
    assert not np.array_equal(u, base.uniform(Stream.MEASURE, 0))
    assert not np.array_equal(u, base.uniform(Stream.JUMP, 1))


def test_row_subset_matches_full_draw():
    streams = ShotStreams(3, np.arange(50))
    rows = np.array([4, 9, 31])
    assert np.array_equal(streams.uniform(Stream.SPECTATOR, 11, rows=rows),
                          streams.uniform(Stream.SPECTATOR, 11)[rows])


def test_uniforms_open_interval_and_moments():
    u = ShotStreams(0, np.arange(200000)).uniform(Stream.MEASURE)
    assert u.min() > 0 and u.max() < 1
    assert u.mean() == pytest.approx(0.5, abs=3e-3)
    assert u.var() == pytest.approx(1 / 12, abs=1e-3)


def test_normals_moments():
    z = ShotStreams(0, np.arange(200000)).normal(Stream.LASER_OFFSET)
    assert z.mean() == pytest.approx(0.0, abs=0.01)
    assert z.std() == pytest.approx(1.0, abs=0.01)


# -- configuration types -------------------------------------------------------------

def test_noise_type_validation():
    with pytest.raises(ValueError):
        BFieldNoise(compensation_factor=0.5)
    with pytest.raises(ValueError):
        BFieldNoise(line_phase_mode="sometimes")
    with pytest.raises(ValueError):
        LaserNoise(sigma_shot=-1)
    with pytest.raises(ValueError):
        OpenSystemRates(d_lifetime=0)
    with pytest.raises(NotImplementedError):
        OpenSystemRates(motional_dephasing_rate=0.1)


def test_effective_lifetime():
    assert OpenSystemRates().effective_lifetime == pytest.approx(1011.0)


# -- field ---------------------------------------------------------------------------

def test_noiseless_field_is_constant():
    shot = ShotNoise(0.0, 1.0, 0.3, 0.0)
    cfg = BFieldNoise(amp_50hz=0.0)
    assert np.all(sample_bfield(np.linspace(0, 40, 9), shot, cfg) == 2.4)


def test_field_is_50hz_periodic():
    shot = ShotNoise(0.0, 1.0, 0.0, 0.1)
    cfg = BFieldNoise(amp_50hz=1.2)
    t = np.linspace(0, 20, 41)
    assert np.allclose(field_deviation(t, shot, cfg), field_deviation(t + 20, shot, cfg), atol=1e-15)
    assert field_deviation(5.0, shot, cfg) == pytest.approx(1e-3 * (1.2 + 0.1))


def test_compensation_divides_amplitude():
    shot = ShotNoise(0.0, 1.0, 0.0, 0.0)
    full = field_deviation(5.0, shot, BFieldNoise(amp_50hz=2.0))
    comp = field_deviation(5.0, shot, BFieldNoise(amp_50hz=2.0, compensation_factor=20))
    assert comp == pytest.approx(full / 20)


def test_field_integral_matches_quadrature():
    shot = ShotNoise(0.0, 1.0, 0.7, 0.2)
    cfg = BFieldNoise(amp_50hz=1.3)
    val, _ = quad(lambda t: field_deviation(t, shot, cfg, 3.0), 1.5, 13.25)
    assert field_deviation_integral(1.5, 13.25, shot, cfg, 3.0) == pytest.approx(val, rel=1e-10)


def test_triggered_and_random_phase():
    streams = ShotStreams(0, np.arange(2000))
    trig = sample_shot_noise_batch(LaserNoise(), BFieldNoise(line_phase=0.4), streams)
    assert np.all(trig.b_phase == 0.4)
    rand = sample_shot_noise_batch(LaserNoise(), BFieldNoise(line_phase_mode="random"), streams)
    assert rand.b_phase.min() >= 0 and rand.b_phase.max() < 2 * np.pi
    assert np.std(rand.b_phase) == pytest.approx(2 * np.pi / math.sqrt(12), rel=0.05)


def test_single_shot_noise_matches_batch():
    batch = sample_shot_noise_batch(LaserNoise(), BFieldNoise(drift_sigma=0.3),
                                    ShotStreams(5, np.arange(10)))
    single = sample_shot_noise(LaserNoise(), BFieldNoise(drift_sigma=0.3), 5, 6)
    assert single.laser_offset == batch.laser_offset[6]
    assert single.drift_offset == batch.drift_offset[6]


def test_laser_offset_spread():
    noise = sample_shot_noise_batch(LaserNoise(sigma_shot=240.0), BFieldNoise(),
                                    ShotStreams(0, np.arange(100000)))
    assert np.std(noise.laser_offset) == pytest.approx(240.0, rel=0.01)


# -- jump processes --------------------------------------------------------------------

@pytest.mark.parametrize("n0,t", [(0, 50.0), (3, 150.0), (10, 400.0)])
def test_birth_death_matches_master_equation(n0, t):
    rate = 1 / 70
    exact = ladder_propagator(rate, t)[:, n0]
    shots = 400000
    streams = ShotStreams(11, np.arange(shots))
    draws = birth_death_propagate(np.full(shots, n0), rate, t, streams.uniform(Stream.SPECTATOR, 0),
                                  streams.uniform(Stream.SPECTATOR, 1))
    hist = np.bincount(draws, minlength=exact.size)[:exact.size] / shots
    assert np.max(np.abs(hist - exact)) < 3e-3
    assert draws.mean() == pytest.approx(n0 + rate * t, abs=0.05)


def test_birth_death_zero_rate_is_identity():
    n0 = np.arange(5)
    assert np.array_equal(birth_death_propagate(n0, 0.0, 10.0, np.full(5, 0.3), np.full(5, 0.7)), n0)


@settings(max_examples=50, deadline=None)
@given(rate=st.floats(1e-3, 10.0), u=st.floats(0.01, 0.99))
def test_jump_time_solver(rate, u):
    p = np.array([[[0.3, 0.7]]])
    gam = np.array([[rate, 3 * rate]])
    upper = np.array([1e6])
    s = _solve_jump_time(p, gam, np.array([u]), upper)[0]
    assert np.sum(p * np.exp(-gam * s)) == pytest.approx(u, rel=1e-9)


def test_d_decay_survival_fraction():
    rates = OpenSystemRates(heating_rate_per_mode={})
    shots = 100000
    batch = basis_batch(shots, 1, 0)
    evolve_open_batch(batch, 500.0, rates, ShotStreams(2, np.arange(shots)))
    assert batch.p_d().mean() == pytest.approx(math.exp(-500 / 1011), abs=5e-3)


def test_quantum_heating_rate():
    # a motional superposition takes the quantum-jump branch
    rates = OpenSystemRates(d_lifetime=math.inf, leak_854_rate=0.0, heating_rate_per_mode={"axial": 1 / 70})
    shots = 20000
    psi = np.zeros((shots, 2, 41), dtype=complex)
    psi[:, 0, 0] = psi[:, 0, 1] = 1 / math.sqrt(2)
    batch = StateBatch(psi, LEVELS)
    evolve_open_batch(batch, 140.0, rates, ShotStreams(4, np.arange(shots)))
    assert np.allclose(batch.norms(), 1.0)
    assert batch.mean_n().mean() == pytest.approx(0.5 + 2.0, abs=0.06)


def test_classical_heating_distribution():
    rates = OpenSystemRates(d_lifetime=math.inf, leak_854_rate=0.0, heating_rate_per_mode={"axial": 1 / 70})
    shots = 100000
    batch = basis_batch(shots, 0, 0)
    evolve_open_batch(batch, 140.0, rates, ShotStreams(4, np.arange(shots)))
    n = batch.mean_n()
    exact = ladder_propagator(1 / 70, 140.0)[:, 0]
    hist = np.bincount(n.astype(int), minlength=41)[:41] / shots
    assert np.max(np.abs(hist - exact[:41])) < 5e-3


def test_spectators_heat():
    rates = OpenSystemRates(d_lifetime=math.inf, leak_854_rate=0.0,
                            heating_rate_per_mode={"axial": 0.0, "radial": 1 / 70})
    batch = basis_batch(50000, 0, 0, spectator_modes=("radial",))
    evolve_open_batch(batch, 700.0, rates, ShotStreams(8, np.arange(50000)))
    assert batch.spectators[:, 0].mean() == pytest.approx(10.0, rel=0.02)


def test_open_evolution_is_batch_independent():
    rates = OpenSystemRates()
    psi = np.zeros((6, 2, 41), dtype=complex)
    psi[:, 0, 0] = psi[:, 1, 1] = 1 / math.sqrt(2)
    full = StateBatch(psi.copy(), LEVELS)
    evolve_open_batch(full, 300.0, rates, ShotStreams(9, np.arange(6)), tag=3)
    part = StateBatch(psi[2:4].copy(), LEVELS)
    evolve_open_batch(part, 300.0, rates, ShotStreams(9, [2, 3]), tag=3)
    assert np.array_equal(full.psi[2:4], part.psi)


def test_white_noise_dephasing_coherence():
    shots = 200000
    psi = np.zeros((shots, 2, 2), dtype=complex)
    psi[:, 0, 0] = psi[:, 1, 0] = 1 / math.sqrt(2)
    batch = StateBatch(psi, LEVELS)
    white_noise_dephase_batch(batch, 1.0, 100.0, ShotStreams(1, np.arange(shots)))
    coherence = np.abs(np.mean(batch.psi[:, 0, 0].conj() * batch.psi[:, 1, 0])) * 2
    assert coherence == pytest.approx(math.exp(-2 * math.pi * 100.0 * 1e-3), abs=5e-3)
