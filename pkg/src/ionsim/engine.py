"""Pulse-sequence engine: exact 2x2 block propagation of the joint state with
per-shot noise, single shots, shot ensembles and one-axis scans."""

from __future__ import annotations

import dataclasses
import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import SimConfig
from .noise import (ShotNoise, ShotStreams, StateBatch, Stream, evolve_open_batch,
                    field_deviation, field_deviation_integral, sample_shot_noise_batch,
                    white_noise_dephase_batch)
from .physics import (D, JointState, S, ThermalDistribution, ZeemanState, delta_m_allowed,
                      level_gm, motional_matrix_element)

TWO_PI = 2 * math.pi


class TransitionError(ValueError):
    """A pulse addresses a forbidden or inconsistent Zeeman pair."""


class SimulationError(RuntimeError):
    """Internal invariant breach during a shot (e.g. loss of normalisation)."""


class Outcome(enum.Enum):
    S = "S"
    D = "D"


PULSE_KINDS = ("carrier", "blue", "red", "raman")


@dataclass(frozen=True)
class Pulse:
    """Rectangular laser pulse.

    duration in us, omega0 the bare Rabi frequency in rad/us, phase in rad,
    detuning in Hz from the noise-free resonance of the addressed line (for
    sidebands, from the sideband resonance).
    """

    kind: str
    duration: float
    omega0: float
    phase: float = 0.0
    detuning: float = 0.0
    lower: ZeemanState = S(Fraction(-1, 2))
    upper: ZeemanState = D(Fraction(-1, 2))

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if not self.duration >= 0:
            raise ValueError("pulse duration must be >= 0")
        if not self.omega0 >= 0:
            raise ValueError("omega0 must be >= 0")
        if self.kind == "raman":
            if self.lower.is_d or self.upper.is_d or self.lower == self.upper:
                raise TransitionError("a Raman pulse couples two distinct S1/2 Zeeman states")
        else:
            if self.lower.is_d or not self.upper.is_d:
                raise TransitionError(f"optical pulse must drive S -> D, got {self.lower} -> {self.upper}")
            if not delta_m_allowed(self.lower, self.upper):
                raise TransitionError(
                    f"|dm| = {abs(self.upper.m - self.lower.m)} > 2 for {self.lower} -> {self.upper}")

    @classmethod
    def raman(cls, duration, omega0, phase=0.0, detuning=0.0):
        return cls("raman", duration, omega0, phase, detuning, S(Fraction(-1, 2)), S(Fraction(1, 2)))

    @property
    def optical(self) -> bool:
        return self.kind != "raman"


def calibrated_pulse(cfg: SimConfig, kind: str, area: float, lower: ZeemanState = S(Fraction(-1, 2)),
                     upper: ZeemanState = D(Fraction(-1, 2)), phase: float = 0.0,
                     detuning: float = 0.0, calibration: str | None = None) -> Pulse:
    """Pulse of ``area`` (in units of pi) on the motional ground state, using
    the calibrated pi time of ``calibration`` (defaults to ``kind``)."""
    if not area >= 0:
        raise ValueError("pulse area must be >= 0")
    key = calibration or kind
    t_pi = cfg.calibration.pi_time_us[key]
    omega0 = math.pi / (t_pi * cfg.ground_coupling(kind))
    if kind == "raman":
        lower, upper = S(Fraction(-1, 2)), S(Fraction(1, 2))
    return Pulse(kind, area * t_pi, omega0, phase, detuning, lower, upper)


def timed_pulse(cfg: SimConfig, kind: str, duration: float, area: float, **kwargs) -> Pulse:
    """Pulse of given ``duration`` (us) whose ground-state area is ``area`` pi."""
    if not duration > 0:
        raise ValueError("duration must be > 0 for a timed pulse")
    omega0 = math.pi * area / (duration * cfg.ground_coupling(kind))
    if kind == "raman":
        kwargs.setdefault("lower", S(Fraction(-1, 2)))
        kwargs.setdefault("upper", S(Fraction(1, 2)))
    return Pulse(kind, duration, omega0, **kwargs)


@dataclass(frozen=True)
class Wait:
    duration: float  # ms

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError("wait duration must be >= 0")


@dataclass(frozen=True)
class Measure:
    shelving: Pulse | None = None


@dataclass(frozen=True)
class Preparation:
    level: ZeemanState = S(Fraction(-1, 2))
    thermal: tuple = ()  # ((mode, n_bar), ...)

    def __post_init__(self):
        for mode, nbar in self.thermal:
            if not nbar >= 0:
                raise ValueError(f"n_bar for {mode} must be >= 0")

    def nbar(self, mode: str) -> float:
        return dict(self.thermal).get(mode, 0.0)


@dataclass(frozen=True)
class Sequence:
    prep: Preparation = Preparation()
    elements: tuple = ()
    trigger_delay: float = 0.0  # ms after the line trigger

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not 0 <= self.trigger_delay < 20:
            raise ValueError("trigger_delay must lie in [0, 20) ms")
        measures = [i for i, el in enumerate(self.elements) if isinstance(el, Measure)]
        if len(measures) > 1 or (measures and measures[0] != len(self.elements) - 1):
            raise ValueError("at most one Measure, and it must be the final element")
        for el in self.elements:
            if not isinstance(el, (Pulse, Wait, Measure)):
                raise TypeError(f"unsupported sequence element {el!r}")

    @property
    def pulses(self) -> list:
        return [el for el in self.elements if isinstance(el, Pulse)]

    @property
    def levels(self) -> tuple:
        found = {self.prep.level}
        for el in self.elements:
            pulse = el.shelving if isinstance(el, Measure) else el
            if isinstance(pulse, Pulse):
                found.update((pulse.lower, pulse.upper))
        if not any(lv.is_d for lv in found):
            found.add(D(Fraction(-1, 2)) if self.prep.level.m < 0 else D(Fraction(1, 2)))
        if all(lv.is_d for lv in found):
            found.add(S(Fraction(-1, 2)) if self.prep.level.m < 0 else S(Fraction(1, 2)))
        return tuple(sorted(found, key=ZeemanState.sort_key))

    def duration_us(self) -> float:
        total = 0.0
        for el in self.elements:
            if isinstance(el, Pulse):
                total += el.duration
            elif isinstance(el, Wait):
                total += el.duration * 1e3
        return total

    def replace(self, **changes) -> "Sequence":
        return dataclasses.replace(self, **changes)


# -- propagation ------------------------------------------------------------------

def _block_slices(kind: str, nn: int):
    """(a-slice, b-slice, n of the a component, uncoupled b index or None)."""
    if kind in ("carrier", "raman"):
        return slice(None), slice(None), np.arange(nn), None
    if kind == "blue":
        return slice(0, nn - 1), slice(1, nn), np.arange(nn - 1), 0
    return slice(1, nn), slice(0, nn - 1), np.arange(1, nn), nn - 1


def _rabi_factors(batch: StateBatch, pulse: Pulse, cfg: SimConfig, n_a: np.ndarray):
    """Coupling per shot and block, divided by omega0 and intensity."""
    if not pulse.optical:
        return np.ones((batch.size, n_a.size))
    eta = cfg.lamb_dicke[cfg.active_mode]
    dn = {"carrier": 0, "blue": 1, "red": -1}[pulse.kind]
    motional = motional_matrix_element(eta, n_a, dn)
    spect = np.ones(batch.size)
    for j, mode in enumerate(batch.spectator_modes):
        spect = spect * motional_matrix_element(cfg.lamb_dicke[mode], batch.spectators[:, j], 0)
    return spect[:, None] * motional[None, :]


def apply_pulse(batch: StateBatch, pulse: Pulse, noise: ShotNoise, cfg: SimConfig,
                t_start: float = 0.0, trigger_delay: float = 0.0) -> StateBatch:
    """Propagate ``batch`` in place through ``pulse`` starting at ``t_start`` us.

    The state lives in the interaction picture of the noise-free Hamiltonian.
    For the pulse it is moved into the frame of the laser, evolved with the
    exact two-level propagator of every coupled pair and moved back.  The
    field is evaluated at the pulse midpoint.
    """
    tau = pulse.duration
    if tau == 0:
        return batch
    levels = batch.levels
    try:
        a = levels.index(pulse.lower)
        b = levels.index(pulse.upper)
    except ValueError:
        raise TransitionError(f"{pulse.lower} -> {pulse.upper} not in basis") from None
    psi = batch.psi
    nn = psi.shape[2]

    dB = np.broadcast_to(field_deviation((t_start + tau / 2) * 1e-3, noise, cfg.bfield,
                                         trigger_delay), (batch.size,))
    gm = np.array([level_gm(lv) for lv in levels])
    shifts = TWO_PI * cfg.constants.mu_B_over_h * gm[None, :] * dB[:, None]  # rad/us
    offset = noise.laser_offset if pulse.optical else 0.0
    dl = np.broadcast_to(TWO_PI * (pulse.detuning + np.asarray(offset)) * 1e-6, (batch.size,))
    delta = dl - (shifts[:, b] - shifts[:, a])

    factor = np.asarray(noise.intensity_factor, dtype=float)
    amp = np.sqrt(factor) if cfg.laser.intensity_mode == "power" else factor
    sa, sb, n_a, unc_b = _block_slices(pulse.kind, nn)
    omega = pulse.omega0 * np.broadcast_to(amp, (batch.size,))[:, None] * _rabi_factors(
        batch, pulse, cfg, n_a)

    psi[:, b, :] *= np.exp(1j * dl * t_start)[:, None]
    for lv in range(len(levels)):
        if lv not in (a, b):
            psi[:, lv, :] *= np.exp(-1j * shifts[:, lv] * tau)[:, None]
    common = np.exp(-1j * shifts[:, a] * tau)[:, None]
    psi[:, a, :] *= common
    psi[:, b, :] *= common

    d = delta[:, None]
    w = np.sqrt(omega ** 2 + d ** 2)
    cos = np.cos(w * tau / 2)
    s_over_w = (tau / 2) * np.sinc(w * tau / TWO_PI)
    ph = np.exp(0.5j * d * tau)
    u00 = ph * (cos - 1j * d * s_over_w)
    u11 = ph * (cos + 1j * d * s_over_w)
    u01 = ph * (-1j * omega * s_over_w) * np.exp(-1j * pulse.phase)
    u10 = ph * (-1j * omega * s_over_w) * np.exp(1j * pulse.phase)
    ca = psi[:, a, sa].copy()
    cb = psi[:, b, sb].copy()
    if unc_b is not None:
        psi[:, b, unc_b] *= np.exp(1j * delta * tau)
    psi[:, a, sa] = u00 * ca + u01 * cb
    psi[:, b, sb] = u10 * ca + u11 * cb

    psi[:, b, :] *= np.exp(-1j * dl * (t_start + tau))[:, None]
    return batch


def apply_wait(batch: StateBatch, wait: Wait, noise: ShotNoise, cfg: SimConfig,
               streams: ShotStreams, t_start: float = 0.0, trigger_delay: float = 0.0,
               tag: int = 0) -> StateBatch:
    """Free evolution: Zeeman phases from the field integral, white laser
    phase noise, then decay and heating jumps."""
    if wait.duration == 0:
        return batch
    t1 = t_start * 1e-3
    integral = np.broadcast_to(field_deviation_integral(t1, t1 + wait.duration, noise, cfg.bfield,
                                                        trigger_delay), (batch.size,))
    gm = np.array([level_gm(lv) for lv in batch.levels])
    phases = TWO_PI * cfg.constants.mu_B_over_h * 1e3 * gm[None, :] * integral[:, None]
    batch.psi *= np.exp(-1j * phases)[:, :, None]
    white_noise_dephase_batch(batch, wait.duration, cfg.laser.lorentzian_linewidth, streams, tag)
    evolve_open_batch(batch, wait.duration, cfg.rates, streams, tag, cfg.active_mode)
    return batch


def _check_norm(batch: StateBatch, where: str):
    err = np.max(np.abs(batch.norms() - 1.0))
    if err > JointState.NORM_TOL:
        raise SimulationError(f"state norm drifted by {err:.3e} after {where}")


def prepare(seq: Sequence, cfg: SimConfig, streams: ShotStreams) -> StateBatch:
    levels = seq.levels
    dist = ThermalDistribution(seq.prep.nbar(cfg.active_mode), cfg.n_max)
    nn = max(cfg.n_max, dist.cutoff) + 1
    n0 = dist.sample(streams.uniform(Stream.THERMAL, 0))
    psi = np.zeros((streams.size, len(levels), nn), dtype=complex)
    psi[np.arange(streams.size), levels.index(seq.prep.level), n0] = 1.0
    modes = cfg.spectator_modes
    spect = np.zeros((streams.size, len(modes)), dtype=np.int64)
    for j, mode in enumerate(modes):
        spect[:, j] = ThermalDistribution(seq.prep.nbar(mode)).sample(
            streams.uniform(Stream.THERMAL, j + 1))
    return StateBatch(psi, levels, spect, modes)


def simulate(seq: Sequence, cfg: SimConfig, master_seed: int, shot_indices) -> StateBatch:
    """Run every element of ``seq`` (including any shelving pulse) for a
    batch of shots and return the final states before projection."""
    streams = ShotStreams(master_seed, shot_indices)
    noise = sample_shot_noise_batch(cfg.laser, cfg.bfield, streams)
    batch = prepare(seq, cfg, streams)
    t = 0.0
    for k, el in enumerate(seq.elements):
        if isinstance(el, Pulse):
            apply_pulse(batch, el, noise, cfg, t, seq.trigger_delay)
            t += el.duration
        elif isinstance(el, Wait):
            apply_wait(batch, el, noise, cfg, streams, t, seq.trigger_delay, tag=k + 1)
            t += el.duration * 1e3
        elif el.shelving is not None:
            apply_pulse(batch, el.shelving, noise, cfg, t, seq.trigger_delay)
            t += el.shelving.duration
        _check_norm(batch, f"element {k} ({type(el).__name__})")
    return batch


def measure(batch: StateBatch, cfg: SimConfig, streams: ShotStreams) -> np.ndarray:
    """Projective S/D readout; True means the ion was found in D."""
    outcome = streams.uniform(Stream.MEASURE) < batch.p_d()
    if cfg.detection_error > 0:
        outcome ^= streams.uniform(Stream.DETECT) < cfg.detection_error
    return outcome


def run_shots(seq: Sequence, cfg: SimConfig, master_seed: int, first_index: int,
              count: int) -> np.ndarray:
    indices = np.arange(first_index, first_index + count, dtype=np.uint64)
    batch = simulate(seq, cfg, master_seed, indices)
    return measure(batch, cfg, ShotStreams(master_seed, indices))


def run_shot(seq: Sequence, cfg: SimConfig, master_seed: int, shot_index: int) -> Outcome:
    return Outcome.D if run_shots(seq, cfg, master_seed, shot_index, 1)[0] else Outcome.S


def propagate_pulse(state: JointState, pulse: Pulse, shot: ShotNoise, cfg: SimConfig,
                    t_start: float = 0.0, trigger_delay: float = 0.0,
                    spectators=None) -> JointState:
    if not state.is_normalized():
        raise ValueError("state must be normalised")
    modes = cfg.spectator_modes
    sp = np.zeros((1, len(modes)), dtype=np.int64) if spectators is None else spectators
    batch = StateBatch.from_state(state, sp, modes)
    apply_pulse(batch, pulse, shot, cfg, t_start, trigger_delay)
    return batch.state(0)


# -- scans ------------------------------------------------------------------------

SCAN_AXES = ("detuning", "duration", "wait", "delay", "phase", "repeat", "cutoff")


@dataclass(frozen=True)
class ScanDirective:
    """One scanned quantity.  Units: detuning Hz, duration us, wait ms,
    delay ms, phase rad, cutoff us (sequence truncation time)."""

    axis: str
    values: tuple

    def __post_init__(self):
        if self.axis not in SCAN_AXES:
            raise ValueError(f"unknown scan axis {self.axis!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def apply(self, seq: Sequence, value: float) -> Sequence:
        return apply_scan_value(seq, self.axis, value)


def _map_pulses(seq: Sequence, fn) -> Sequence:
    return seq.replace(elements=tuple(fn(el) if isinstance(el, Pulse) else el
                                      for el in seq.elements))


def apply_scan_value(seq: Sequence, axis: str, value: float) -> Sequence:
    if axis == "detuning":
        return _map_pulses(seq, lambda p: dataclasses.replace(p, detuning=p.detuning + value))
    if axis == "duration":
        return _map_pulses(seq, lambda p: dataclasses.replace(p, duration=value))
    if axis == "wait":
        return seq.replace(elements=tuple(Wait(value) if isinstance(el, Wait) else el
                                          for el in seq.elements))
    if axis == "delay":
        return seq.replace(trigger_delay=value)
    if axis == "phase":
        idx = max(i for i, el in enumerate(seq.elements) if isinstance(el, Pulse))
        els = list(seq.elements)
        els[idx] = dataclasses.replace(els[idx], phase=value)
        return seq.replace(elements=tuple(els))
    if axis == "cutoff":
        return truncate(seq, value)
    return seq


def truncate(seq: Sequence, t_us: float) -> Sequence:
    """Cut the sequence off at ``t_us``; a pulse or wait straddling the cut
    is shortened.  A final Measure is kept."""
    out = []
    t = 0.0
    for el in seq.elements:
        if isinstance(el, Measure):
            out.append(el)
            continue
        length = el.duration if isinstance(el, Pulse) else el.duration * 1e3
        if t >= t_us:
            continue
        if t + length > t_us:
            keep = t_us - t
            el = (dataclasses.replace(el, duration=keep) if isinstance(el, Pulse)
                  else Wait(keep * 1e-3))
        out.append(el)
        t += length
    return seq.replace(elements=tuple(out))


@dataclass(frozen=True)
class ScanPoint:
    value: float
    p_d: float
    std_err: float
    shots: int


@dataclass(frozen=True)
class ScanResult:
    axis: str
    points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def p_d(self) -> np.ndarray:
        return np.array([p.p_d for p in self.points])

    @property
    def std_err(self) -> np.ndarray:
        return np.array([p.std_err for p in self.points])

    @property
    def shots(self) -> np.ndarray:
        return np.array([p.shots for p in self.points])

    def __len__(self):
        return len(self.points)

    @classmethod
    def from_counts(cls, axis: str, values, counts, shots) -> "ScanResult":
        shots = np.broadcast_to(np.asarray(shots), np.shape(values))
        pts = []
        for v, k, n in zip(values, counts, shots):
            p = float(k) / int(n)
            pts.append(ScanPoint(float(v), p, math.sqrt(p * (1 - p) / int(n)), int(n)))
        return cls(axis, pts)

    def inverted(self) -> "ScanResult":
        return ScanResult(self.axis, [dataclasses.replace(p, p_d=1 - p.p_d) for p in self.points])


def _point_task(args):
    seq, cfg, seed, first, shots = args
    return int(np.count_nonzero(run_shots(seq, cfg, seed, first, shots)))


def default_workers() -> int:
    env = os.environ.get("IONSIM_WORKERS")
    return max(1, int(env)) if env else 1


def run_scan(seq: Sequence, scan: ScanDirective, shots_per_point: int, cfg: SimConfig,
             master_seed: int, workers: int | None = None, shot_offset: int = 0) -> ScanResult:
    """Run ``shots_per_point`` shots at every scan value.

    Shot indices are sequential across the scan starting at ``shot_offset``.
    Each point is an indivisible unit of work, so the result is bit-identical
    for any number of workers.
    """
    if not scan.values:
        return ScanResult(scan.axis, ())
    if shots_per_point <= 0:
        raise ValueError("shots_per_point must be > 0")
    tasks = [(scan.apply(seq, v), cfg, master_seed, shot_offset + i * shots_per_point,
              shots_per_point) for i, v in enumerate(scan.values)]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_point_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        counts = [_point_task(t) for t in tasks]
    return ScanResult.from_counts(scan.axis, scan.values, counts, shots_per_point)
