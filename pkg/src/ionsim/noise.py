"""Noise realisations: mains-frequency field noise, per-shot laser offsets and
intensity factors, white laser phase noise, and the decay / heating jump
processes applied during free evolution.

Every random number is a pure function of ``(master_seed, shot_index,
stream, counter)`` through a counter-based hash, so a shot produces the same
trajectory no matter how shots are batched or distributed over workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import binom, nbinom

LINE_FREQUENCY_KHZ = 0.05  # 50 Hz in cycles per ms

_MASK = (1 << 64) - 1


class Stream(enum.IntEnum):
    LASER_OFFSET = 1
    INTENSITY = 2
    B_PHASE = 3
    DRIFT = 4
    THERMAL = 5
    JUMP = 6
    SPECTATOR = 7
    DEPHASE = 8
    MEASURE = 9
    DETECT = 10


def _splitmix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


class ShotStreams:
    """Deterministic random numbers for a batch of shots.

    ``uniform(stream, counter)`` returns one value per shot; the value for a
    given shot depends only on the master seed, that shot's index, the stream
    and the counter.
    """

    def __init__(self, master_seed: int, shot_indices):
        self.master_seed = int(master_seed) & _MASK
        self.shot_indices = np.atleast_1d(np.asarray(shot_indices, dtype=np.uint64))
        self._base = _splitmix(_splitmix(np.full(self.size, self.master_seed, dtype=np.uint64))
                               ^ self.shot_indices)

    @property
    def size(self) -> int:
        return self.shot_indices.size

    def bits(self, stream: int, counter: int, rows=None) -> np.ndarray:
        base = self._base if rows is None else self._base[rows]
        key = np.uint64(((int(stream) & 0xFFFF) << 48) ^ (int(counter) & ((1 << 48) - 1)))
        return _splitmix(_splitmix(base ^ key) ^ np.uint64(int(counter) >> 48))

    def uniform(self, stream: int, counter: int = 0, rows=None) -> np.ndarray:
        """Uniforms in the open interval (0, 1), for all shots or the subset
        ``rows``."""
        h = self.bits(stream, counter, rows) >> np.uint64(11)
        return (h.astype(np.float64) + 0.5) * (2.0 ** -53)

    def normal(self, stream: int, counter: int = 0) -> np.ndarray:
        return ndtri(self.uniform(stream, counter))


@dataclass(frozen=True)
class BFieldNoise:
    """Field noise in mGauss.

    ``amp_50hz`` is the amplitude of the 50 Hz sine (not its rms).  In
    ``triggered`` mode every shot starts at line phase ``line_phase``; in
    ``random`` mode the phase is uniform per shot.  ``drift_sigma`` draws an
    independent Gaussian offset per shot.  The 50 Hz amplitude is divided by
    ``compensation_factor``.
    """

    amp_50hz: float = 1.0
    line_phase_mode: str = "triggered"
    line_phase: float = 0.0
    drift_sigma: float = 0.0
    compensation_factor: float = 1.0

    def __post_init__(self):
        if self.amp_50hz < 0 or self.drift_sigma < 0:
            raise ValueError("field noise amplitudes must be >= 0")
        if self.compensation_factor < 1:
            raise ValueError("compensation_factor must be >= 1")
        if self.line_phase_mode not in ("triggered", "random"):
            raise ValueError(f"unknown line_phase_mode {self.line_phase_mode!r}")

    @property
    def effective_amplitude(self) -> float:
        return self.amp_50hz / self.compensation_factor


@dataclass(frozen=True)
class LaserNoise:
    """Laser noise: per-shot Gaussian frequency offset (Hz std), white
    frequency noise FWHM (Hz) and relative per-shot intensity std.

    ``intensity_mode`` = "power" scales the Rabi frequency with the square
    root of the intensity factor, "rabi" applies the factor directly.
    """

    sigma_shot: float = 240.0
    lorentzian_linewidth: float = 0.0
    intensity_sigma_rel: float = 0.03
    intensity_mode: str = "power"

    def __post_init__(self):
        if min(self.sigma_shot, self.lorentzian_linewidth, self.intensity_sigma_rel) < 0:
            raise ValueError("laser noise parameters must be >= 0")
        if self.intensity_mode not in ("power", "rabi"):
            raise ValueError(f"unknown intensity_mode {self.intensity_mode!r}")


DEFAULT_NATURAL_LIFETIME_MS = 1168.0
OBSERVED_LIFETIME_MS = 1011.0


def _default_heating():
    return {"axial": 1 / 190, "radial": 1 / 70}


@dataclass(frozen=True)
class OpenSystemRates:
    """Rates in 1/ms.  ``heating_rate_per_mode`` is d<n>/dt per mode."""

    d_lifetime: float = DEFAULT_NATURAL_LIFETIME_MS
    leak_854_rate: float = 1 / OBSERVED_LIFETIME_MS - 1 / DEFAULT_NATURAL_LIFETIME_MS
    heating_rate_per_mode: dict = field(default_factory=_default_heating)
    motional_dephasing_rate: float = 0.0

    def __post_init__(self):
        if self.d_lifetime <= 0:
            raise ValueError("d_lifetime must be > 0")
        if self.leak_854_rate < 0:
            raise ValueError("leak_854_rate must be >= 0")
        for mode, r in self.heating_rate_per_mode.items():
            if r < 0:
                raise ValueError(f"heating rate for {mode} must be >= 0")
        if self.motional_dephasing_rate != 0:
            raise NotImplementedError("separate motional dephasing is not modelled")

    @property
    def decay_rate(self) -> float:
        return 1 / self.d_lifetime + self.leak_854_rate

    @property
    def effective_lifetime(self) -> float:
        return 1 / self.decay_rate

    def heating(self, mode: str) -> float:
        return self.heating_rate_per_mode.get(mode, 0.0)


@dataclass(frozen=True)
class ShotNoise:
    """Per-shot noise realisation.  Fields are floats for a single shot or
    arrays for a batch."""

    laser_offset: object  # Hz
    intensity_factor: object
    b_phase: object  # rad
    drift_offset: object  # mGauss

    def __getitem__(self, i):
        return ShotNoise(*(np.asarray(v)[i] for v in
                           (self.laser_offset, self.intensity_factor, self.b_phase, self.drift_offset)))


def sample_shot_noise_batch(laser: LaserNoise, bfield: BFieldNoise,
                            streams: ShotStreams) -> ShotNoise:
    offset = laser.sigma_shot * streams.normal(Stream.LASER_OFFSET)
    intensity = np.maximum(1.0 + laser.intensity_sigma_rel * streams.normal(Stream.INTENSITY), 0.5)
    if bfield.line_phase_mode == "random":
        phase = 2 * np.pi * streams.uniform(Stream.B_PHASE)
    else:
        phase = np.full(streams.size, float(bfield.line_phase))
    drift = bfield.drift_sigma * streams.normal(Stream.DRIFT)
    return ShotNoise(offset, intensity, phase, drift)


def sample_shot_noise(laser: LaserNoise, bfield: BFieldNoise, master_seed: int,
                      shot_index: int) -> ShotNoise:
    batch = sample_shot_noise_batch(laser, bfield, ShotStreams(master_seed, [shot_index]))
    return ShotNoise(*(float(np.asarray(v)[0]) for v in
                       (batch.laser_offset, batch.intensity_factor, batch.b_phase, batch.drift_offset)))


def field_deviation(t, shot: ShotNoise, cfg: BFieldNoise, delay: float = 0.0):
    """B - B0 in Gauss at ``t`` ms after the start of step III, with the
    shot started ``delay`` ms after the line trigger."""
    arg = 2 * np.pi * LINE_FREQUENCY_KHZ * (np.asarray(t) + delay) + shot.b_phase
    return 1e-3 * (cfg.effective_amplitude * np.sin(arg) + shot.drift_offset)


def field_deviation_integral(t1, t2, shot: ShotNoise, cfg: BFieldNoise, delay: float = 0.0):
    """Integral of ``field_deviation`` over [t1, t2] in G ms."""
    w = 2 * np.pi * LINE_FREQUENCY_KHZ
    a1 = w * (t1 + delay) + shot.b_phase
    a2 = w * (t2 + delay) + shot.b_phase
    return 1e-3 * (cfg.effective_amplitude * (np.cos(a1) - np.cos(a2)) / w
                   + shot.drift_offset * (t2 - t1))


def sample_bfield(t, shot: ShotNoise, cfg: BFieldNoise, B0: float = 2.4, delay: float = 0.0):
    """Total field in Gauss at ``t`` ms after shot start."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be >= 0")
    return B0 + field_deviation(t, shot, cfg, delay)


# -- free-evolution processes -------------------------------------------------

class StateBatch:
    """A batch of joint states, shape (shots, levels, n_max + 1), plus the
    classical phonon numbers of the spectator modes, shape (shots, modes)."""

    def __init__(self, psi: np.ndarray, levels, spectators: np.ndarray | None = None,
                 spectator_modes: tuple = ()):
        self.psi = psi
        self.levels = tuple(levels)
        if spectators is None:
            spectators = np.zeros((psi.shape[0], len(spectator_modes)), dtype=np.int64)
        self.spectators = spectators
        self.spectator_modes = tuple(spectator_modes)

    @classmethod
    def from_state(cls, state, spectators=None, spectator_modes=()):
        sp = None if spectators is None else np.atleast_2d(np.asarray(spectators, dtype=np.int64))
        return cls(state.amplitudes[None].copy(), state.levels, sp, spectator_modes)

    def state(self, i: int = 0):
        from .physics import JointState
        return JointState(self.psi[i].copy(), self.levels)

    @property
    def size(self) -> int:
        return self.psi.shape[0]

    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.psi) ** 2, axis=(1, 2))

    def d_mask(self) -> np.ndarray:
        return np.array([lv.is_d for lv in self.levels])

    def p_d(self) -> np.ndarray:
        return np.sum(np.abs(self.psi[:, self.d_mask(), :]) ** 2, axis=(1, 2))

    def mean_n(self) -> np.ndarray:
        probs = np.sum(np.abs(self.psi) ** 2, axis=1)
        return probs @ np.arange(probs.shape[1])


def _decay_targets(levels) -> dict:
    """Map each D level index to the S level index it decays into."""
    s_idx = [i for i, lv in enumerate(levels) if not lv.is_d]
    out = {}
    for i, lv in enumerate(levels):
        if not lv.is_d:
            continue
        allowed = [j for j in s_idx if abs(levels[j].m - lv.m) <= 2]
        if not allowed:
            raise ValueError(f"{lv} has no S level in the basis to decay into")
        out[i] = min(allowed, key=lambda j: (abs(levels[j].m - lv.m), j))
    return out


def _solve_jump_time(p, gam, u, upper, iterations=60):
    """Solve sum(p * exp(-gam * s)) = u for s in [0, upper], per row.

    Newton's method on log f(s), which is convex and decreasing, so the
    iteration started at s = 0 approaches the root monotonically from the
    left.  It is exact in one step when a row has a single component.
    """
    s = np.zeros_like(upper)
    log_u = np.log(u)
    todo = np.ones(s.shape, dtype=bool)
    for _ in range(iterations):
        idx = np.flatnonzero(todo)
        if idx.size == 0:
            break
        w = p[idx] * np.exp(-gam * s[idx, None, None])
        f = np.sum(w, axis=(1, 2))
        slope = np.sum(w * gam, axis=(1, 2)) / f
        step = (np.log(f) - log_u[idx]) / np.maximum(slope, 1e-300)
        s[idx] = np.minimum(s[idx] + step, upper[idx])
        todo[idx] = np.abs(step) > 1e-13 * (1 + s[idx])
    return s


BASIS_TOL = 1e-12


def _classical_rows(batch, duration, r, gamma_d, targets, streams, tag):
    """Evolve rows that hold a single basis state |level, n>.

    For such rows every jump maps a basis state to a basis state, so the
    unravelling reduces to a classical Markov chain: an exponential decay
    time for D levels and the exact up/down propagator for the phonon
    number, capped at the truncation.  Returns the mask of rows handled.
    """
    psi = batch.psi
    nb, nl, nn = psi.shape
    flat = np.abs(psi.reshape(nb, -1)) ** 2
    top = np.argmax(flat, axis=1)
    rows = np.flatnonzero(flat[np.arange(nb), top] >= 1 - BASIS_TOL)
    done = np.zeros(nb, dtype=bool)
    if rows.size == 0:
        return done
    level, n0 = np.divmod(top[rows], nn)
    base = (tag << 20) | (1 << 19)
    if r > 0:
        n1 = birth_death_propagate(n0, r, duration,
                                   streams.uniform(Stream.JUMP, base, rows=rows),
                                   streams.uniform(Stream.JUMP, base + 1, rows=rows))
        n1 = np.minimum(n1, nn - 1)
    else:
        n1 = n0
    if gamma_d > 0:
        decayed = streams.uniform(Stream.JUMP, base + 2, rows=rows) > np.exp(-gamma_d * duration)
        for d_idx, s_idx in targets.items():
            level = np.where((level == d_idx) & decayed, s_idx, level)
    psi[rows] = 0
    psi[rows, level, n1] = 1.0
    done[rows] = True
    return done


def evolve_open_batch(batch: StateBatch, duration: float, rates: OpenSystemRates,
                      streams: ShotStreams, tag: int = 0, active_mode: str = "axial") -> StateBatch:
    """Quantum-jump unravelling of decay and heating over a wait of
    ``duration`` ms.

    Jump operators: sqrt(G) |S><D| for spontaneous decay (plus 854 nm
    leakage), and sqrt(r) a^dag, sqrt(r) a for the active motional mode in
    the high-temperature bath limit, so that d<n>/dt = r exactly.  Spectator
    modes follow the same up/down birth-death process on their classical
    phonon numbers.  Modifies ``batch`` in place and returns it.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        return batch
    psi = batch.psi
    nb, nl, nn = psi.shape
    targets = _decay_targets(batch.levels)
    r = rates.heating(active_mode)
    gamma_d = rates.decay_rate
    n = np.arange(nn)
    up_weight = np.where(n < nn - 1, n + 1, 0).astype(float)
    down_weight = n.astype(float)
    level_rate = np.array([gamma_d if lv.is_d else 0.0 for lv in batch.levels])
    gam = level_rate[:, None] + r * (up_weight + down_weight)[None, :]

    remaining = np.full(nb, float(duration))
    active = ~_classical_rows(batch, duration, r, gamma_d, targets, streams, tag)
    k = 0
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        sub = psi[idx]
        p = np.abs(sub) ** 2
        u = streams.uniform(Stream.JUMP, (tag << 20) + 2 * k, rows=idx)
        rem = remaining[idx]
        end_norm = np.sum(p * np.exp(-gam * rem[:, None, None]), axis=(1, 2))
        jump = end_norm <= u
        s = rem.copy()
        if jump.any():
            s[jump] = _solve_jump_time(p[jump], gam, u[jump], rem[jump])
        sub = sub * np.exp(-0.5 * gam[None] * s[:, None, None])
        if jump.any():
            sub[jump] = _apply_jump(sub[jump], gam, targets, gamma_d, r, up_weight, down_weight,
                                    streams.uniform(Stream.JUMP, (tag << 20) + 2 * k + 1, rows=idx[jump]))
        sub /= np.sqrt(np.sum(np.abs(sub) ** 2, axis=(1, 2)))[:, None, None]
        psi[idx] = sub
        remaining[idx] = rem - s
        active[idx[~jump]] = False
        k += 1

    if batch.spectator_modes:
        for j, mode in enumerate(batch.spectator_modes):
            rate = rates.heating(mode)
            if rate > 0:
                batch.spectators[:, j] = _birth_death(batch.spectators[:, j], rate, duration,
                                                      streams, (tag << 8) + j)
    return batch


def _apply_jump(sub, gam, targets, gamma_d, r, up_weight, down_weight, u):
    p = np.abs(sub) ** 2
    channels = []
    weights = []
    for d_idx, s_idx in targets.items():
        channels.append(("decay", d_idx, s_idx))
        weights.append(gamma_d * np.sum(p[:, d_idx, :], axis=1))
    if r > 0:
        channels.append(("up",))
        weights.append(r * np.sum(p * up_weight, axis=(1, 2)))
        channels.append(("down",))
        weights.append(r * np.sum(p * down_weight, axis=(1, 2)))
    w = np.stack(weights, axis=1)
    cum = np.cumsum(w, axis=1)
    pick = np.sum(cum < (u * cum[:, -1])[:, None], axis=1)
    pick = np.minimum(pick, len(channels) - 1)
    out = np.zeros_like(sub)
    for c, chan in enumerate(channels):
        rows = pick == c
        if not rows.any():
            continue
        if chan[0] == "decay":
            out[rows, chan[2], :] = sub[rows, chan[1], :]
        elif chan[0] == "up":
            out[rows, :, 1:] = sub[rows, :, :-1] * np.sqrt(up_weight[:-1])
        else:
            out[rows, :, :-1] = sub[rows, :, 1:] * np.sqrt(down_weight[1:])
    return out


def birth_death_propagate(n0, rate, duration, u_survive, u_add):
    """Exact draw of a classical phonon number after ``duration`` under
    up/down jumps at rates r(n+1) and r n, starting from ``n0``.

    With s = r t each initial phonon survives with probability 1/(1+s) and
    the K survivors are joined by a negative-binomial number of new phonons
    (K+1 geometric terms of mean s).  Both draws are inverse CDFs of the
    supplied uniforms.
    """
    s = rate * duration
    n0 = np.asarray(n0)
    if s == 0:
        return n0.copy()
    p = 1.0 / (1.0 + s)
    k = binom.ppf(u_survive, n0, p)
    k = np.where(n0 == 0, 0, k)
    new = nbinom.ppf(u_add, k + 1, p)
    return (k + new).astype(np.int64)


def _birth_death(n, rate, duration, streams, tag):
    u1 = streams.uniform(Stream.SPECTATOR, 2 * tag)
    u2 = streams.uniform(Stream.SPECTATOR, 2 * tag + 1)
    return birth_death_propagate(n, rate, duration, u1, u2)


def white_noise_dephase_batch(batch: StateBatch, duration: float, linewidth: float,
                              streams: ShotStreams, tag: int = 0) -> StateBatch:
    """Random-walk laser phase over ``duration`` ms for a white frequency
    noise spectrum of FWHM ``linewidth`` Hz.  The phase variance is
    4 pi linewidth duration, so ensemble coherence decays as
    exp(-2 pi linewidth t).  The phase is carried by the D levels."""
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if linewidth == 0 or duration == 0:
        return batch
    sigma = math.sqrt(4 * math.pi * linewidth * duration * 1e-3)
    phi = sigma * streams.normal(Stream.DEPHASE, tag)
    batch.psi[:, batch.d_mask(), :] *= np.exp(-1j * phi)[:, None, None]
    return batch


def evolve_open(state, duration: float, rates: OpenSystemRates, rng: ShotStreams,
                tag: int = 0, active_mode: str = "axial"):
    """Single-state wrapper around ``evolve_open_batch``; ``rng`` must
    describe exactly one shot."""
    batch = StateBatch.from_state(state)
    evolve_open_batch(batch, duration, rates, rng, tag, active_mode)
    return batch.state(0)


def white_noise_dephase(state, duration: float, linewidth: float, rng: ShotStreams, tag: int = 0):
    batch = StateBatch.from_state(state)
    white_noise_dephase_batch(batch, duration, linewidth, rng, tag)
    return batch.state(0)
