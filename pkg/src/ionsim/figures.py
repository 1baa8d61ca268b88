"""Named presets that rerun each published measurement with its protocol
defaults and summarise the outcome against the reference value."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from . import experiments as ex
from .config import SimConfig


@dataclass
class FigureResult:
    """``tables`` maps a table name to columns; the first table is the main
    data set.  ``fits`` maps a label to a FitReport."""

    name: str
    tables: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    comparison: str = ""
    flags: tuple = ()


def _fmt(value, error=None, digits=3):
    if error is None or not math.isfinite(error):
        return f"{value:.{digits}g}"
    return f"{value:.{digits}g} +/- {error:.2g}"


def _scan_table(scan):
    return {scan.axis: scan.values, "p_d": scan.p_d, "std_err": scan.std_err, "shots": scan.shots}


def line_trigger_config(cfg: SimConfig | None = None, amp_mG: float = 1.2) -> SimConfig:
    cfg = cfg or SimConfig()
    return cfg.replace(bfield=dataclasses.replace(cfg.bfield, amp_50hz=amp_mG,
                                                  line_phase_mode="triggered"))


def fig2(cfg, seed, shots=None, workers=None):
    res = ex.line_trigger(line_trigger_config(cfg), seed, shots=shots or 100, workers=workers)
    s = res.summary
    fit = res.fits["sine"]
    comparison = (f"fig2: line centre swing {_fmt(s['peak_to_peak_khz'])} kHz peak-to-peak, "
                  f"field amplitude {_fmt(fit['field_amplitude'], fit.derived['field_amplitude'].error)}"
                  f" mG (configured 1.2 mG, excursion within +/-5 kHz)")
    return FigureResult("fig2", {"centers": res.table}, dict(res.fits), s, comparison, res.flags)


def fig3(cfg, seed, shots=None, workers=None):
    fcfg = ex.fig3_config(cfg)
    scan = ex.rabi_flop(fcfg, seed, shots=shots or 100, workers=workers)
    fit = ex.rabi_contrast(scan, fcfg.calibration.pi_time_us["carrier"], 10)
    c, dc = fit["contrast"], fit.error("contrast")
    comparison = f"fig3: contrast at 10 pi = {_fmt(c, dc)} (reference better than 0.94)"
    return FigureResult("fig3", {"flop": _scan_table(scan)}, {"contrast 10pi": fit},
                        {"contrast": c, "contrast_err": dc}, comparison)


def fig4(cfg, seed, shots=None, workers=None):
    scan = ex.ramsey_fringe(cfg, seed, shots=shots or 100, workers=workers)
    fit = analysis.fit_fringe(scan)
    expected = 1e6 / (100.0 + 4 * 9.5 / math.pi)
    comparison = (f"fig4: fringe period {_fmt(fit['period'] / 1e3, fit.error('period') / 1e3)} kHz "
                  f"(free precession estimate {expected / 1e3:.3g} kHz), contrast "
                  f"{_fmt(fit['contrast'], fit.error('contrast'))}")
    return FigureResult("fig4", {"fringe": _scan_table(scan)}, {"fringe": fit},
                        {"period_hz": fit["period"], "contrast": fit["contrast"]}, comparison)


def fig5(cfg, seed, shots=None, workers=None):
    res = ex.ramsey_contrast(cfg, seed, shots=shots or 100, workers=workers)
    g, e = res.fits["gaussian"], res.fits["exponential"]
    comparison = (f"fig5: Gaussian tau = {_fmt(g['tau'], g.error('tau'))} ms (reference 0.94(5) ms), "
                  f"nu = {_fmt(g['nu'], g.derived['nu'].error)} Hz (reference 170(10) Hz), "
                  f"exponential tau = {_fmt(e['tau'], e.error('tau'))} ms, "
                  f"preferred {res.summary['preferred']}")
    return FigureResult("fig5", {"contrast": res.table}, dict(res.fits), res.summary, comparison)


def _raman(cfg, seed, factor, shots, workers, name, reference):
    res = ex.raman_vs_delay(ex.raman_config(cfg, factor), seed, shots=shots or 100, workers=workers)
    fit = res.fits["sine"]
    s = res.summary
    comparison = (f"{name}: sine amplitude {_fmt(fit['amplitude'], fit.error('amplitude'))} kHz, "
                  f"centre scatter {_fmt(s['center_std_khz'])} kHz ({reference})")
    return FigureResult(name, {"centers": res.table}, dict(res.fits), s, comparison, res.flags)


def fig7a(cfg, seed, shots=None, workers=None):
    return _raman(cfg, seed, 1.0, shots, workers, "fig7a", "reference 3.8 kHz")


def fig7b(cfg, seed, shots=None, workers=None):
    return _raman(cfg, seed, 20.0, shots, workers, "fig7b",
                  "reference: compensated amplitude below 0.5 kHz, scatter about 0.3 kHz")


def fig8(cfg, seed, shots=None, workers=None):
    waits = np.arange(0.0, 4000.0 + 1, 100.0)
    total = 150_000 if shots is None else shots * waits.size
    res = ex.lifetime(cfg, seed, waits, total, workers=workers)
    s = res.summary
    comparison = (f"fig8: tau = {_fmt(s['tau_ms'], s['tau_err_ms'], 4)} ms "
                  f"(configured {s['configured_tau_ms']:.4g} ms)")
    return FigureResult("fig8", {"survival": res.table}, dict(res.fits), s, comparison,
                        res.fits["exponential"].flags)


def fig9(cfg, seed, shots=None, workers=None):
    table, fits, summary, parts = {}, {}, {}, []
    for mode in ("axial", "radial"):
        res = ex.heating(cfg, seed, mode, trajectories=shots or 10_000, workers=workers)
        table.setdefault("delay_ms", res.table["delay_ms"])
        table[f"nbar_{mode}"] = res.table["nbar"]
        table[f"nbar_{mode}_err"] = res.table["nbar_err"]
        fits[f"linear {mode}"] = res.fits["linear"]
        slope, err = res.summary["slope_per_ms"], res.summary["slope_err"]
        rate = res.summary["configured_rate_per_ms"]
        summary[f"slope_{mode}_per_ms"] = slope
        summary[f"slope_{mode}_err"] = err
        parts.append(f"{mode} {_fmt(slope, err)}/ms (1/{1 / rate:.0f} ms)")
    comparison = "fig9: heating slopes " + ", ".join(parts)
    return FigureResult("fig9", {"heating": table}, fits, summary, comparison)


def fig10(cfg, seed, shots=None, workers=None):
    echo = ex.motional_echo(cfg, seed, shots=shots or 100, workers=workers)
    decay = ex.echo_decay(ex.heating_only(cfg), seed, workers=workers)
    trace = {}
    for key, scan in echo.scans.items():
        trace.setdefault("cutoff_us", scan.values)
        trace[f"p_d_{key.replace('=', '_')}"] = scan.p_d
    s = {**echo.summary, **decay.summary}
    comparison = (f"fig10: echo contrast at 0.85 ms = {_fmt(s['contrast'], s['contrast_err'])} "
                  f"(reference 0.80); heating-only 1/e time = "
                  f"{_fmt(s['tau_1e_ms'], s['tau_1e_err_ms'])} ms (reference about 100 ms)")
    return FigureResult("fig10", {"echo_trace": trace, "echo_decay": decay.table},
                        {**echo.fits, **decay.fits}, s, comparison)


FIGURES = {"fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig7a": fig7a,
           "fig7b": fig7b, "fig8": fig8, "fig9": fig9, "fig10": fig10}


def run_figure(name: str, cfg: SimConfig | None = None, seed: int = 1, shots: int | None = None,
               workers: int | None = None) -> FigureResult:
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}; available: {', '.join(FIGURES)}")
    if shots is not None and shots <= 0:
        raise ValueError("shots must be > 0")
    return FIGURES[name](cfg or SimConfig(), seed, shots, workers)
