"""Pre-built experiments: each builds the pulse sequence for one measurement
protocol, runs the scans and returns the raw data together with its fits."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import analysis
from .config import SimConfig
from .engine import (Measure, Preparation, Pulse, ScanDirective, ScanResult, Sequence, Wait,
                     calibrated_pulse, run_scan, simulate, timed_pulse)
from .noise import OpenSystemRates
from .physics import D, S, zeeman_shift

EXPERIMENT_KINDS = ("rabi_flop", "ramsey_fringe", "ramsey_contrast", "line_trigger",
                    "raman_spectrum", "raman_vs_delay", "lifetime", "heating", "motional_echo")

S_LO = S(Fraction(-1, 2))
S_HI = S(Fraction(1, 2))
D_LO = D(Fraction(-1, 2))
D_MIN = D(Fraction(-5, 2))

# each scan inside an experiment draws its shots from a disjoint index block
SCAN_BLOCK = 1 << 32


def susceptibility(lower, upper, constants=None) -> float:
    """Line shift in kHz per mGauss for ``lower -> upper``."""
    kwargs = {} if constants is None else {"constants": constants}
    return zeeman_shift(lower, upper, 1e-3, **kwargs)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    params: dict = field(default_factory=dict)
    shots_per_point: int = 100

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of "
                             f"{', '.join(EXPERIMENT_KINDS)}")
        if self.shots_per_point <= 0:
            raise ValueError("shots_per_point must be > 0")
        for key, value in self.params.items():
            if isinstance(value, (list, tuple, np.ndarray)):
                if len(value) == 0:
                    raise ValueError(f"parameter {key!r} must not be empty")
                if key.endswith(("_us", "_ms")) and np.min(value) < 0:
                    raise ValueError(f"parameter {key!r} must be >= 0")
            elif key.endswith(("_us", "_ms")) and isinstance(value, (int, float)) and value < 0:
                raise ValueError(f"parameter {key!r} must be >= 0")


@dataclass
class ExperimentResult:
    """Raw scans, a summary table (column name -> values) and fits."""

    kind: str
    scans: dict = field(default_factory=dict)
    table: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    flags: tuple = ()


def _scan(seq, axis, values, shots, cfg, seed, block, workers):
    return run_scan(seq, ScanDirective(axis, values), shots, cfg, seed, workers,
                    shot_offset=block * SCAN_BLOCK)


# -- Rabi flopping ---------------------------------------------------------------

def fig3_config(cfg: SimConfig | None = None) -> SimConfig:
    cfg = cfg or SimConfig()
    return cfg.replace(lamb_dicke={"axial": 0.068, "radial": 0.016},
                       laser=dataclasses.replace(cfg.laser, intensity_sigma_rel=0.03))


def rabi_flop(cfg: SimConfig, seed: int, durations_us=None, shots: int = 100,
              nbar_radial: float = 7.0, nbar_axial: float = 0.0, lower=S_LO, upper=D_LO,
              workers=None) -> ScanResult:
    """P_D vs carrier pulse length at the calibrated Rabi frequency."""
    if durations_us is None:
        durations_us = np.arange(0.0, 100.25, 0.5)
    pulse = calibrated_pulse(cfg, "carrier", 1.0, lower, upper)
    prep = Preparation(lower, (("axial", nbar_axial), ("radial", nbar_radial)))
    seq = Sequence(prep, (pulse, Measure()))
    return _scan(seq, "duration", durations_us, shots, cfg, seed, 0, workers)


def rabi_contrast(scan: ScanResult, pi_time_us: float, flop: int = 10) -> analysis.FitReport:
    """Contrast of the oscillation around the ``flop`` pi rotation: a sine is
    fitted to the points with pulse area within one pi of it."""
    area = scan.values / pi_time_us
    sel = np.abs(area - flop) <= 1.0 + 1e-9
    if np.count_nonzero(sel) < 5:
        raise ValueError(f"too few points around the {flop} pi rotation")
    return analysis.fit_fringe(scan.values[sel], scan.p_d[sel], scan.shots[sel])


# -- Ramsey ----------------------------------------------------------------------

def ramsey_sequence(cfg: SimConfig, wait_us: float, pulse_us: float | None = None,
                    area: float = 0.5, phase: float = 0.0) -> Sequence:
    if pulse_us is None:
        p1 = calibrated_pulse(cfg, "carrier", area)
    else:
        p1 = timed_pulse(cfg, "carrier", pulse_us, area)
    p2 = dataclasses.replace(p1, phase=phase)
    return Sequence(Preparation(S_LO), (p1, Wait(wait_us * 1e-3), p2, Measure()))


def ramsey_fringe(cfg: SimConfig, seed: int, wait_us: float = 100.0, detunings_hz=None,
                  pulse_us: float = 9.5, area: float = 0.515, shots: int = 100,
                  workers=None, block: int = 0) -> ScanResult:
    """P_D vs laser detuning for two identical pulses separated by ``wait_us``."""
    if detunings_hz is None:
        detunings_hz = np.arange(-20e3, 20e3 + 1, 250.0)
    seq = ramsey_sequence(cfg, wait_us, pulse_us, area)
    return _scan(seq, "detuning", detunings_hz, shots, cfg, seed, block, workers)


def ramsey_contrast(cfg: SimConfig, seed: int, waits_ms=None, points: int = 41,
                    periods: float = 2.0, shots: int = 100, workers=None) -> ExperimentResult:
    """Fringe contrast vs wait, with Gaussian and exponential decay fits.

    For each wait the detuning is scanned over ``periods`` fringe periods
    centred on resonance, using calibrated pi/2 pulses.
    """
    if waits_ms is None:
        waits_ms = np.round(np.arange(0.1, 1.001, 0.1), 10)
    waits_ms = np.asarray(waits_ms, dtype=float)
    t_half = cfg.calibration.pi_time_us["carrier"] / 2
    res = ExperimentResult("ramsey_contrast")
    contrast, err = [], []
    for i, t in enumerate(waits_ms):
        period = 1e6 / (t * 1e3 + 4 * t_half / math.pi)  # Hz
        det = np.linspace(-periods / 2 * period, periods / 2 * period, points)
        scan = ramsey_fringe(cfg, seed, t * 1e3, det, None, 0.5, shots, workers, block=i)
        fit = analysis.fit_fringe(scan)
        res.scans[f"wait={t:g}ms"] = scan
        res.fits[f"fringe wait={t:g}ms"] = fit
        contrast.append(fit["contrast"])
        err.append(max(fit.error("contrast"), 1e-6))
    res.table = {"wait_ms": waits_ms, "contrast": np.array(contrast), "contrast_err": np.array(err)}
    decay = analysis.fit_contrast_decay(waits_ms, contrast, err)
    res.fits["gaussian"] = decay.gaussian
    res.fits["exponential"] = decay.exponential
    res.summary = {"tau_gauss_ms": decay.gaussian["tau"], "nu_hz": decay.gaussian["nu"],
                   "tau_exp_ms": decay.exponential["tau"],
                   "gauss_ss": decay.gaussian.residual_ss,
                   "exp_ss": decay.exponential.residual_ss, "preferred": decay.preferred}
    return res


# -- line trigger ----------------------------------------------------------------

def line_trigger(cfg: SimConfig, seed: int, delays_ms=None, detunings_hz=None,
                 pulse_us: float = 1000.0, lower=S_LO, upper=D_MIN, shots: int = 100,
                 workers=None) -> ExperimentResult:
    """Line centre of a long spectroscopy pulse vs delay from the line trigger."""
    if delays_ms is None:
        delays_ms = np.arange(0.0, 20.0, 1.0)
    if detunings_hz is None:
        detunings_hz = np.arange(-6e3, 6e3 + 1, 150.0)
    pulse = timed_pulse(cfg, "carrier", pulse_us, 1.0, lower=lower, upper=upper)
    seq0 = Sequence(Preparation(lower), (pulse, Measure()))
    res = ExperimentResult("line_trigger")
    centers, cerr, widths = [], [], []
    for i, delay in enumerate(delays_ms):
        scan = _scan(seq0.replace(trigger_delay=float(delay)), "detuning", detunings_hz, shots,
                     cfg, seed, i, workers)
        fit = analysis.fit_line_center(scan, duration_us=pulse_us)
        res.scans[f"delay={delay:g}ms"] = scan
        res.fits[f"line delay={delay:g}ms"] = fit
        centers.append(fit["center"] / 1e3)
        cerr.append(fit.error("center") / 1e3)
        widths.append(fit["width"] / 1e3)
    chi = abs(susceptibility(lower, upper, cfg.constants))
    res.table = {"delay_ms": np.asarray(delays_ms, dtype=float), "center_khz": np.array(centers),
                 "center_err_khz": np.array(cerr), "width_khz": np.array(widths)}
    drift = analysis.fit_sine_drift(delays_ms, centers, None, susceptibility=chi)
    res.fits["sine"] = drift
    res.summary = {"amplitude_khz": drift["amplitude"], "field_amplitude_mG": drift["field_amplitude"],
                   "peak_to_peak_khz": float(np.ptp(centers)), "susceptibility_khz_per_mG": chi}
    return res


# -- Raman -----------------------------------------------------------------------

def raman_sequence(cfg: SimConfig, pulse_us: float = 1000.0, delay_ms: float = 0.0) -> Sequence:
    raman = timed_pulse(cfg, "raman", pulse_us, 1.0)
    shelve = calibrated_pulse(cfg, "carrier", 1.0, S_LO, D_MIN, calibration="shelving")
    return Sequence(Preparation(S_LO), (raman, Measure(shelving=shelve)), trigger_delay=delay_ms)


def shelving_fidelity(cfg: SimConfig) -> float:
    """Noiseless transfer S(-1/2) -> D(-5/2) of the shelving pulse."""
    shelve = calibrated_pulse(cfg, "carrier", 1.0, S_LO, D_MIN, calibration="shelving")
    batch = simulate(Sequence(Preparation(S_LO), (Measure(shelving=shelve),)), cfg.noiseless(), 0, [0])
    return float(batch.p_d()[0])


def raman_spectrum(cfg: SimConfig, seed: int, delay_ms: float = 0.0, detunings_hz=None,
                   pulse_us: float = 1000.0, shots: int = 100, workers=None,
                   block: int = 0) -> ScanResult:
    """Raman excitation probability vs two-photon detuning.

    Readout shelves S(-1/2) to D(-5/2), so a successful Raman transfer is
    detected as S; the returned scan is already inverted.
    """
    if detunings_hz is None:
        detunings_hz = np.arange(-8e3, 8e3 + 1, 250.0)
    seq = raman_sequence(cfg, pulse_us, delay_ms)
    return _scan(seq, "detuning", detunings_hz, shots, cfg, seed, block, workers).inverted()


def raman_config(cfg: SimConfig | None = None, compensation_factor: float = 1.0,
                 amp_mG: float = 3.8 / 2.80, drift_mG: float = 0.25) -> SimConfig:
    cfg = cfg or SimConfig()
    return cfg.replace(bfield=dataclasses.replace(cfg.bfield, amp_50hz=amp_mG, drift_sigma=drift_mG,
                                                  compensation_factor=compensation_factor))


def raman_vs_delay(cfg: SimConfig, seed: int, delays_ms=None, detunings_hz=None,
                   pulse_us: float = 1000.0, shots: int = 100, workers=None) -> ExperimentResult:
    """Raman line centre vs delay from the line trigger, with a 50 Hz sine fit.

    Shot-to-shot field drift smears the narrow line, so each spectrum is
    fitted with the Gaussian-broadened lineshape.
    """
    if delays_ms is None:
        delays_ms = np.arange(0.0, 20.0, 1.0)
    res = ExperimentResult("raman_vs_delay")
    fidelity = shelving_fidelity(cfg)
    if fidelity < 1 - 1e-9:
        res.flags += ("shelving_miscalibrated",)
    centers, cerr, widths = [], [], []
    for i, delay in enumerate(delays_ms):
        scan = raman_spectrum(cfg, seed, float(delay), detunings_hz, pulse_us, shots, workers, block=i)
        fit = analysis.fit_line_center(scan, duration_us=pulse_us, broadened=True)
        res.scans[f"delay={delay:g}ms"] = scan
        res.fits[f"line delay={delay:g}ms"] = fit
        centers.append(fit["center"] / 1e3)
        cerr.append(fit.error("center") / 1e3)
        widths.append(fit["width"] / 1e3)
    chi = abs(susceptibility(S_LO, S_HI, cfg.constants))
    res.table = {"delay_ms": np.asarray(delays_ms, dtype=float), "center_khz": np.array(centers),
                 "center_err_khz": np.array(cerr), "width_khz": np.array(widths)}
    drift = analysis.fit_sine_drift(delays_ms, centers, None, susceptibility=chi)
    res.fits["sine"] = drift
    res.summary = {"amplitude_khz": drift["amplitude"], "field_amplitude_mG": drift["field_amplitude"],
                   "center_std_khz": float(np.std(centers, ddof=1)),
                   "mean_width_khz": float(np.mean(widths)), "shelving_fidelity": fidelity}
    return res


# -- lifetime --------------------------------------------------------------------

def lifetime(cfg: SimConfig, seed: int, waits_ms=None, total_shots: int = 150_000,
             workers=None) -> ExperimentResult:
    """D(-1/2) survival vs wait with a binomially weighted exponential fit."""
    if waits_ms is None:
        waits_ms = np.arange(0.0, 4000.0 + 1, 100.0)
    waits_ms = np.asarray(waits_ms, dtype=float)
    shots = max(1, total_shots // waits_ms.size)
    seq = Sequence(Preparation(D_LO), (Wait(0.0), Measure()))
    scan = _scan(seq, "wait", waits_ms, shots, cfg, seed, 0, workers)
    fit = analysis.fit_exponential_decay(scan.values, scan.p_d, scan.shots)
    res = ExperimentResult("lifetime", {"survival": scan}, fits={"exponential": fit})
    res.table = {"wait_ms": scan.values, "survival": scan.p_d, "std_err": scan.std_err,
                 "shots": scan.shots}
    res.summary = {"tau_ms": fit["tau"], "tau_err_ms": fit.error("tau"),
                   "configured_tau_ms": cfg.rates.effective_lifetime}
    return res


# -- heating ---------------------------------------------------------------------

def heating(cfg: SimConfig, seed: int, mode: str = "axial", delays_ms=None,
            trajectories: int = 1000, readout: str = "direct", flop_durations_us=None,
            workers=None) -> ExperimentResult:
    """Mean phonon number of ``mode`` vs delay after ground-state preparation.

    ``readout="direct"`` averages the simulated phonon number;
    ``readout="blue_flop"`` fits a thermal blue-sideband flop at every delay.
    """
    if readout not in ("direct", "blue_flop"):
        raise ValueError("readout must be 'direct' or 'blue_flop'")
    if delays_ms is None:
        delays_ms = np.arange(0.0, 200.0 + 1, 20.0)
    delays_ms = np.asarray(delays_ms, dtype=float)
    mcfg = cfg.replace(active_mode=mode)
    res = ExperimentResult("heating")
    nbar, nerr = [], []
    for i, t in enumerate(delays_ms):
        if readout == "direct":
            seq = Sequence(Preparation(S_LO), (Wait(float(t)),))
            idx = np.arange(i * SCAN_BLOCK, i * SCAN_BLOCK + trajectories, dtype=np.uint64)
            n = simulate(seq, mcfg, seed, idx).mean_n()
            nbar.append(float(np.mean(n)))
            nerr.append(float(np.std(n, ddof=1) / math.sqrt(n.size)) if n.size > 1 else 0.0)
        else:
            durs = np.arange(0.0, 150.0 + 1, 5.0) if flop_durations_us is None else flop_durations_us
            blue = calibrated_pulse(mcfg, "blue", 1.0)
            seq = Sequence(Preparation(S_LO), (Wait(float(t)), blue, Measure()))
            scan = _scan(seq, "duration", durs, trajectories, mcfg, seed, i, workers)
            spect = math.prod(math.exp(-mcfg.lamb_dicke[m] ** 2 / 2) for m in mcfg.spectator_modes)
            fit = analysis.fit_thermal_blue_flop(scan.values, scan.p_d, scan.shots,
                                                 blue.omega0 * spect, mcfg.lamb_dicke[mode])
            res.scans[f"delay={t:g}ms"] = scan
            res.fits[f"flop delay={t:g}ms"] = fit
            nbar.append(fit["nbar"])
            nerr.append(fit.error("nbar"))
    res.table = {"delay_ms": delays_ms, "nbar": np.array(nbar), "nbar_err": np.array(nerr)}
    line = analysis.fit_linear(delays_ms, nbar)
    res.fits["linear"] = line
    res.summary = {"slope_per_ms": line["slope"], "slope_err": line.error("slope"),
                   "configured_rate_per_ms": cfg.rates.heating(mode), "mode": mode}
    return res


# -- motional echo ---------------------------------------------------------------

ECHO_CARRIER_US = 20.0
ECHO_BLUE_US = 30.0
ECHO_GAP_US = 10.0


def echo_sequence(cfg: SimConfig, wait_ms: float, final_phase: float = 0.0) -> Sequence:
    """Carrier pi/2, blue pi, wait, blue pi, carrier pi/2 with the given phase."""
    c1 = timed_pulse(cfg, "carrier", ECHO_CARRIER_US, 0.5)
    b = timed_pulse(cfg, "blue", ECHO_BLUE_US, 1.0)
    c2 = dataclasses.replace(c1, phase=final_phase)
    gap = Wait(ECHO_GAP_US * 1e-3)
    return Sequence(Preparation(S_LO), (c1, gap, b, Wait(wait_ms), b, gap, c2, Measure()))


def _echo_point(cfg, seed, wait_ms, shots, block, workers):
    out = []
    for j, phase in enumerate((0.0, math.pi)):
        scan = _scan(echo_sequence(cfg, wait_ms, phase), "repeat", [0.0], shots, cfg, seed,
                     2 * block + j, workers)
        out.append(scan.points[0])
    contrast = abs(out[1].p_d - out[0].p_d)
    err = math.hypot(out[0].std_err, out[1].std_err)
    return contrast, err, out


def motional_echo(cfg: SimConfig, seed: int, wait_ms: float = 0.85, cut_times_us=None,
                  shots: int = 100, contrast_shots: int = 1000, workers=None) -> ExperimentResult:
    """Truncated-sequence P_D traces for both final phases and the echo
    contrast |P_D(pi) - P_D(0)| of the full sequence."""
    total = 2 * (ECHO_CARRIER_US + ECHO_GAP_US + ECHO_BLUE_US) + wait_ms * 1e3
    if cut_times_us is None:
        cut_times_us = np.linspace(0.0, total, 195)
    res = ExperimentResult("motional_echo")
    for j, phase in enumerate((0.0, math.pi)):
        seq = echo_sequence(cfg, wait_ms, phase)
        res.scans[f"phase={phase:.4f}"] = _scan(seq, "cutoff", cut_times_us, shots, cfg, seed,
                                                 j, workers)
    contrast, err, _ = _echo_point(cfg, seed, wait_ms, contrast_shots, 1, workers)
    res.table = {"time_us": np.asarray(cut_times_us, dtype=float),
                 "p_d_phase0": res.scans["phase=0.0000"].p_d,
                 "p_d_phasepi": res.scans[f"phase={math.pi:.4f}"].p_d}
    res.summary = {"contrast": contrast, "contrast_err": err, "wait_ms": wait_ms}
    return res


def heating_only(cfg: SimConfig) -> SimConfig:
    """Noise-free configuration that keeps only the motional heating rates."""
    quiet = cfg.noiseless()
    return quiet.replace(rates=OpenSystemRates(d_lifetime=math.inf, leak_854_rate=0.0,
                                               heating_rate_per_mode=dict(cfg.rates.heating_rate_per_mode)))


def echo_decay(cfg: SimConfig, seed: int, waits_ms=None, shots: int = 1000,
               workers=None) -> ExperimentResult:
    """Echo contrast vs wait with an exponential fit; tau is the 1/e time."""
    if waits_ms is None:
        waits_ms = np.arange(0.0, 200.0 + 1, 20.0)
    waits_ms = np.asarray(waits_ms, dtype=float)
    res = ExperimentResult("motional_echo")
    contrast, err = [], []
    for i, t in enumerate(waits_ms):
        c, e, _ = _echo_point(cfg, seed, float(t), shots, 16 + i, workers)
        contrast.append(c)
        err.append(max(e, 1.0 / shots))
    res.table = {"wait_ms": waits_ms, "contrast": np.array(contrast), "contrast_err": np.array(err)}
    decay = analysis.fit_contrast_decay(waits_ms, contrast, err)
    res.fits["exponential"] = decay.exponential
    res.fits["gaussian"] = decay.gaussian
    res.summary = {"tau_1e_ms": decay.exponential["tau"],
                   "tau_1e_err_ms": decay.exponential.error("tau")}
    return res


# -- dispatch --------------------------------------------------------------------

def _scan_as_result(kind, scan, fits=None, summary=None) -> ExperimentResult:
    res = ExperimentResult(kind, {"scan": scan}, fits=fits or {}, summary=summary or {})
    res.table = {scan.axis: scan.values, "p_d": scan.p_d, "std_err": scan.std_err,
                 "shots": scan.shots}
    return res


def run_experiment(spec: ExperimentSpec, cfg: SimConfig, seed: int, workers=None) -> ExperimentResult:
    """Run an experiment by name.  ``spec.params`` are passed as keyword
    arguments to the function of the same name."""
    p = dict(spec.params)
    n = spec.shots_per_point
    if spec.kind == "rabi_flop":
        flop = p.pop("flop", 10)
        scan = rabi_flop(cfg, seed, shots=n, workers=workers, **p)
        fit = rabi_contrast(scan, cfg.calibration.pi_time_us["carrier"], flop)
        return _scan_as_result("rabi_flop", scan, {f"contrast {flop}pi": fit},
                               {"contrast": fit["contrast"], "contrast_err": fit.error("contrast")})
    if spec.kind == "ramsey_fringe":
        scan = ramsey_fringe(cfg, seed, shots=n, workers=workers, **p)
        fit = analysis.fit_fringe(scan)
        return _scan_as_result("ramsey_fringe", scan, {"fringe": fit},
                               {"contrast": fit["contrast"], "period_hz": fit["period"]})
    if spec.kind == "ramsey_contrast":
        return ramsey_contrast(cfg, seed, shots=n, workers=workers, **p)
    if spec.kind == "line_trigger":
        return line_trigger(cfg, seed, shots=n, workers=workers, **p)
    if spec.kind == "raman_spectrum":
        pulse_us = p.get("pulse_us", 1000.0)
        scan = raman_spectrum(cfg, seed, shots=n, workers=workers, **p)
        fit = analysis.fit_line_center(scan, duration_us=pulse_us)
        return _scan_as_result("raman_spectrum", scan, {"line": fit},
                               {"center_hz": fit["center"], "width_hz": fit["width"]})
    if spec.kind == "raman_vs_delay":
        return raman_vs_delay(cfg, seed, shots=n, workers=workers, **p)
    if spec.kind == "lifetime":
        return lifetime(cfg, seed, workers=workers, **p)
    if spec.kind == "heating":
        return heating(cfg, seed, workers=workers, **p)
    if "waits_ms" in p:
        return echo_decay(cfg, seed, shots=n, workers=workers, **p)
    return motional_echo(cfg, seed, shots=n, workers=workers, **p)
