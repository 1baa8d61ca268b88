import math

import numpy as np
import pytest

from ionsim.config import SimConfig
from ionsim.engine import simulate
from ionsim.experiments import (EXPERIMENT_KINDS, ExperimentSpec, echo_sequence, heating_only,
                                run_experiment)
from ionsim.figures import FIGURES, run_figure


def test_spec_rejects_unknown_kind():
    with pytest.raises(ValueError, match="rabi_flop"):
        ExperimentSpec("rabi")


def test_spec_rejects_bad_parameters():
    with pytest.raises(ValueError):
        ExperimentSpec("lifetime", {"waits_ms": []})
    with pytest.raises(ValueError):
        ExperimentSpec("heating", {"delays_ms": [-1.0, 2.0]})
    with pytest.raises(ValueError):
        ExperimentSpec("rabi_flop", shots_per_point=0)


def test_every_kind_has_a_figure_or_runner():
    assert len(EXPERIMENT_KINDS) == 9
    assert set(FIGURES) >= {"fig2", "fig3", "fig4", "fig5", "fig7a", "fig7b", "fig8", "fig9", "fig10"}


def test_heating_only_keeps_rates():
    cfg = heating_only(SimConfig())
    assert cfg.laser.sigma_shot == 0.0 and cfg.bfield.amp_50hz == 0.0
    assert math.isinf(cfg.rates.d_lifetime)
    assert cfg.rates.heating("axial") == SimConfig().rates.heating("axial")


def test_echo_sequence_timing():
    seq = echo_sequence(SimConfig(), 0.85)
    assert seq.duration_us() == pytest.approx(850.0 + 2 * 20 + 2 * 30 + 2 * 10)


def test_echo_contrast_full_at_zero_wait_without_noise():
    cfg = SimConfig().noiseless()
    p0 = simulate(echo_sequence(cfg, 0.0, 0.0), cfg, 0, [0]).p_d()[0]
    ppi = simulate(echo_sequence(cfg, 0.0, math.pi), cfg, 0, [0]).p_d()[0]
    assert abs(p0 - ppi) == pytest.approx(1.0, abs=1e-12)


def test_small_rabi_flop():
    spec = ExperimentSpec("rabi_flop", {"durations_us": np.arange(60.0, 80.0, 0.5)}, 50)
    res = run_experiment(spec, SimConfig(), 1)
    assert res.table["p_d"].size == 40
    assert 0.5 < res.summary["contrast"] <= 1.0


def test_small_lifetime():
    spec = ExperimentSpec("lifetime", {"waits_ms": np.arange(0.0, 2001, 500.0), "total_shots": 5000})
    res = run_experiment(spec, SimConfig(), 2)
    assert abs(res.summary["tau_ms"] - 1011.0) < 5 * res.summary["tau_err_ms"]


def test_unknown_figure():
    with pytest.raises(KeyError):
        run_figure("fig1")
