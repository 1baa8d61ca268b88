"""Simulation and run configuration, with a strict TOML loader."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .noise import BFieldNoise, LaserNoise, OpenSystemRates
from .physics import PhysicalConstants


class ConfigError(ValueError):
    pass


def _default_eta():
    return {"axial": 0.068, "radial": 0.016}


def _default_pi_times():
    # us; carrier from the 7 us pi time, sidebands from the 30 us echo pulse,
    # Raman chosen as a pi pulse in 1 ms
    return {"carrier": 7.0, "blue": 30.0, "red": 30.0, "raman": 1000.0, "shelving": 7.0}


@dataclass(frozen=True)
class Calibration:
    """Ground-state pi times in us for each pulse kind."""

    pi_time_us: dict = field(default_factory=_default_pi_times)

    def __post_init__(self):
        for kind, t in self.pi_time_us.items():
            if not t > 0:
                raise ValueError(f"pi time for {kind} must be > 0")


@dataclass(frozen=True)
class SimConfig:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    bfield: BFieldNoise = field(default_factory=BFieldNoise)
    laser: LaserNoise = field(default_factory=LaserNoise)
    rates: OpenSystemRates = field(default_factory=OpenSystemRates)
    lamb_dicke: dict = field(default_factory=_default_eta)
    active_mode: str = "axial"
    n_max: int = 40
    detection_error: float = 0.0
    calibration: Calibration = field(default_factory=Calibration)

    def __post_init__(self):
        if self.active_mode not in self.lamb_dicke:
            raise ValueError(f"active mode {self.active_mode!r} has no Lamb-Dicke factor")
        for mode, eta in self.lamb_dicke.items():
            if not 0 <= eta < 1:
                raise ValueError(f"Lamb-Dicke factor for {mode} must be in [0, 1)")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not 0 <= self.detection_error <= 0.5:
            raise ValueError("detection_error must be in [0, 0.5]")

    @property
    def spectator_modes(self) -> tuple:
        return tuple(m for m in self.lamb_dicke if m != self.active_mode)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def noiseless(self) -> "SimConfig":
        """Same physics with every noise source and open-system rate off."""
        return self.replace(
            bfield=dataclasses.replace(self.bfield, amp_50hz=0.0, drift_sigma=0.0),
            laser=dataclasses.replace(self.laser, sigma_shot=0.0, lorentzian_linewidth=0.0,
                                      intensity_sigma_rel=0.0),
            rates=OpenSystemRates(d_lifetime=math.inf, leak_854_rate=0.0,
                                  heating_rate_per_mode={m: 0.0 for m in self.lamb_dicke}),
        )

    def ground_coupling(self, kind: str) -> float:
        """Ratio of the effective ground-state Rabi frequency to the bare one."""
        if kind == "raman":
            return 1.0
        dw = math.prod(math.exp(-eta ** 2 / 2) for eta in self.lamb_dicke.values())
        if kind in ("blue", "red"):
            dw *= self.lamb_dicke[self.active_mode]
        return dw

    def bare_rabi(self, kind: str, pi_time_us: float | None = None) -> float:
        """Bare Rabi frequency (rad/us) that gives the calibrated pi time on
        the motional ground state."""
        t = self.calibration.pi_time_us[kind] if pi_time_us is None else pi_time_us
        return math.pi / (t * self.ground_coupling(kind))


# -- TOML schema ---------------------------------------------------------------

_SECTIONS = {
    "constants": (PhysicalConstants, {"mu_B_over_h", "B0", "omega_ax", "omega_rad"}),
    "bfield": (BFieldNoise, {"amp_50hz", "line_phase_mode", "line_phase", "drift_sigma",
                             "compensation_factor"}),
    "laser": (LaserNoise, {"sigma_shot", "lorentzian_linewidth", "intensity_sigma_rel",
                           "intensity_mode"}),
    "rates": (OpenSystemRates, {"d_lifetime", "leak_854_rate", "heating_rate_per_mode",
                                "motional_dephasing_rate"}),
}
_SIM_KEYS = {"lamb_dicke", "active_mode", "n_max", "detection_error", "pi_time_us"}
_RUN_KEYS = {"master_seed", "shots", "workers", "output"}
_REQUIRED_RUN = {"master_seed"}


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    master_seed: int = 0
    shots: int | None = None
    workers: int = 1
    output: str | None = None
    source: dict = field(default_factory=dict, compare=False)

    def hash(self) -> str:
        return config_hash(self.source)


def config_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _check_keys(section: str, table, allowed: set):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key '{section}.{unknown[0]}'")


def config_from_dict(doc: dict) -> RunConfig:
    allowed_top = set(_SECTIONS) | {"simulation", "run"}
    unknown = sorted(set(doc) - allowed_top)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'")
    if "run" not in doc:
        raise ConfigError("missing required key 'run.master_seed'")
    run = doc["run"]
    _check_keys("run", run, _RUN_KEYS)
    for key in sorted(_REQUIRED_RUN):
        if key not in run:
            raise ConfigError(f"missing required key 'run.{key}'")

    parts = {}
    for name, (cls, keys) in _SECTIONS.items():
        table = doc.get(name, {})
        _check_keys(name, table, keys)
        try:
            parts[name] = cls(**table)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}]: {exc}") from None

    sim_table = doc.get("simulation", {})
    _check_keys("simulation", sim_table, _SIM_KEYS)
    sim_kwargs = {k: v for k, v in sim_table.items() if k != "pi_time_us"}
    if "pi_time_us" in sim_table:
        pi_times = dict(_default_pi_times())
        extra = sorted(set(sim_table["pi_time_us"]) - set(pi_times))
        if extra:
            raise ConfigError(f"unknown key 'simulation.pi_time_us.{extra[0]}'")
        pi_times.update(sim_table["pi_time_us"])
        sim_kwargs["calibration"] = Calibration(pi_times)
    try:
        sim = SimConfig(**parts, **sim_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[simulation]: {exc}") from None

    seed = run["master_seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("run.master_seed must be an unsigned 64-bit integer")
    shots = run.get("shots")
    if shots is not None and (not isinstance(shots, int) or shots <= 0):
        raise ConfigError("run.shots must be a positive integer")
    return RunConfig(sim=sim, master_seed=seed, shots=shots, workers=int(run.get("workers", 1)),
                     output=run.get("output"), source=doc)


def load_config(path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc)
