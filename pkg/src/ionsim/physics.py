"""Physical constants, Zeeman algebra, sideband couplings and the joint
electronic x motional state of a single 40Ca+ ion."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import eval_genlaguerre, gammaln


class Level(enum.Enum):
    S12 = "S"
    D52 = "D"


G_FACTORS = {Level.S12: Fraction(2), Level.D52: Fraction(6, 5)}
MAX_M = {Level.S12: Fraction(1, 2), Level.D52: Fraction(5, 2)}


@dataclass(frozen=True)
class PhysicalConstants:
    """Setup constants.

    mu_B_over_h is in MHz/G, B0 in Gauss and the trap frequencies are
    omega/2pi in MHz.  The g-factors are exact rationals and are not
    configurable.
    """

    mu_B_over_h: float = 1.399624
    B0: float = 2.4
    omega_ax: float = 1.7
    omega_rad: float = 5.0

    def __post_init__(self):
        for name in ("mu_B_over_h", "B0", "omega_ax", "omega_rad"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def g_S(self) -> Fraction:
        return G_FACTORS[Level.S12]

    @property
    def g_D(self) -> Fraction:
        return G_FACTORS[Level.D52]


DEFAULT_CONSTANTS = PhysicalConstants()

_STATE_RE = re.compile(r"^\s*([SD])\s*\(?\s*([+-]?)\s*(\d+)\s*/\s*2\s*\)?\s*$")


@dataclass(frozen=True)
class ZeemanState:
    level: Level
    m: Fraction = Fraction(-1, 2)

    def __post_init__(self):
        m = Fraction(self.m)
        object.__setattr__(self, "m", m)
        if m.denominator != 2:
            raise ValueError(f"m must be half-integer, got {m}")
        if abs(m) > MAX_M[self.level]:
            raise ValueError(f"|m| = {abs(m)} exceeds {MAX_M[self.level]} for {self.level.name}")

    def sort_key(self):
        return (self.is_d, self.m)

    @property
    def g(self) -> Fraction:
        return G_FACTORS[self.level]

    @property
    def is_d(self) -> bool:
        return self.level is Level.D52

    @classmethod
    def parse(cls, text: str) -> "ZeemanState":
        """Parse ``S-1/2``, ``D(+3/2)`` and similar spellings."""
        match = _STATE_RE.match(text)
        if not match:
            raise ValueError(f"cannot parse Zeeman state {text!r}")
        letter, sign, num = match.groups()
        m = Fraction(int(num), 2) * (-1 if sign == "-" else 1)
        return cls(Level.S12 if letter == "S" else Level.D52, m)

    def __str__(self):
        sign = "-" if self.m < 0 else "+"
        return f"{self.level.value}{sign}{abs(self.m.numerator)}/2"


def S(m) -> ZeemanState:
    return ZeemanState(Level.S12, Fraction(m))


def D(m) -> ZeemanState:
    return ZeemanState(Level.D52, Fraction(m))


def zeeman_shift(frm: ZeemanState, to: ZeemanState, B: float,
                 constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Linear Zeeman shift of the ``frm -> to`` transition in kHz for a field
    ``B`` in Gauss."""
    dgm = to.g * to.m - frm.g * frm.m
    return constants.mu_B_over_h * 1e3 * float(dgm) * B


def level_gm(state: ZeemanState) -> float:
    return float(state.g * state.m)


def delta_m_allowed(frm: ZeemanState, to: ZeemanState) -> bool:
    """Quadrupole selection rule for the optical transition: |dm| <= 2."""
    return abs(to.m - frm.m) <= 2


class Sideband(enum.Enum):
    CARRIER = "carrier"
    BLUE = "blue"
    RED = "red"

    @property
    def dn(self) -> int:
        return {"carrier": 0, "blue": 1, "red": -1}[self.value]


def motional_matrix_element(eta, n, dn: int):
    """Signed <n+dn| exp(i eta (a + a^dag)) |n> up to a phase.

    Vectorised over ``eta`` and ``n``.  Returns 0 where ``n + dn < 0``.
    """
    eta = np.asarray(eta, dtype=float)
    n = np.asarray(n)
    k = abs(int(dn))
    n_lo = np.minimum(n, n + dn)
    valid = n_lo >= 0
    n_lo_safe = np.where(valid, n_lo, 0)
    x = eta * eta
    ratio = np.exp(0.5 * (gammaln(n_lo_safe + 1) - gammaln(n_lo_safe + k + 1)))
    value = np.exp(-x / 2) * eta ** k * ratio * eval_genlaguerre(n_lo_safe, k, x)
    return np.where(valid, value, 0.0)


def coupling_strength(omega0: float, transition: Sideband | str, eta: Sequence[float],
                      n: Sequence[int], active: int = 0) -> float:
    """Effective Rabi frequency ``omega0 * prod_i D(eta_i, n_i, dn_i)``.

    Mode ``active`` carries the sideband; every other mode is a spectator
    and contributes its Debye-Waller factor.  A red sideband on n = 0 is dark
    and returns 0.
    """
    transition = Sideband(transition)
    if omega0 < 0:
        raise ValueError("omega0 must be >= 0")
    eta = list(eta)
    n = list(n)
    if len(eta) != len(n):
        raise ValueError("eta and n must have one entry per mode")
    out = omega0
    for i, (e, ni) in enumerate(zip(eta, n)):
        if not 0 <= e < 1:
            raise ValueError(f"Lamb-Dicke factor must lie in [0, 1), got {e}")
        if ni < 0:
            raise ValueError("phonon numbers must be >= 0")
        dn = transition.dn if i == active else 0
        out *= float(motional_matrix_element(e, ni, dn))
    return out


@dataclass(frozen=True)
class ThermalDistribution:
    """Geometric phonon distribution with mean ``n_bar``.

    ``cutoff`` is raised automatically until the truncated tail holds less
    than ``TAIL`` of the probability.
    """

    n_bar: float
    cutoff: int = 40

    TAIL = 1e-6

    def __post_init__(self):
        if not (self.n_bar >= 0 and math.isfinite(self.n_bar)):
            raise ValueError("n_bar must be finite and >= 0")
        if self.n_bar > 0:
            q = self.n_bar / (1 + self.n_bar)
            # P(n > cutoff) = q**(cutoff + 1)
            needed = math.ceil(math.log(self.TAIL) / math.log(q)) - 1
            if needed > self.cutoff:
                object.__setattr__(self, "cutoff", needed)

    def probability(self, n):
        return thermal_probability(self, n)

    def probabilities(self) -> np.ndarray:
        return thermal_probability(self, np.arange(self.cutoff + 1))

    def tail_mass(self) -> float:
        if self.n_bar == 0:
            return 0.0
        return (self.n_bar / (1 + self.n_bar)) ** (self.cutoff + 1)

    def sample(self, u) -> np.ndarray:
        """Inverse-CDF draw from the truncated, renormalised distribution
        for uniforms ``u`` in (0, 1)."""
        u = np.asarray(u, dtype=float)
        if self.n_bar == 0:
            return np.zeros(u.shape, dtype=np.int64)
        cdf = np.cumsum(self.probabilities())
        cdf /= cdf[-1]
        return np.minimum(np.searchsorted(cdf, u, side="right"), self.cutoff).astype(np.int64)


def thermal_probability(dist: ThermalDistribution, n):
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("n must be >= 0")
    nb = dist.n_bar
    if nb == 0:
        out = (n == 0).astype(float)
    else:
        out = np.exp(n * math.log(nb) - (n + 1) * math.log1p(nb))
    return float(out) if out.ndim == 0 else out


class JointState:
    """Amplitudes over (electronic level, Fock number) for one ion.

    ``levels`` is the electronic basis; the common case is the two levels of
    one S <-> D Zeeman pair, giving dimension 2 (n_max + 1).
    """

    NORM_TOL = 1e-9

    def __init__(self, amplitudes, levels: Sequence[ZeemanState]):
        amps = np.asarray(amplitudes, dtype=complex)
        levels = tuple(levels)
        if amps.ndim != 2 or amps.shape[0] != len(levels):
            raise ValueError("amplitudes must have shape (len(levels), n_max + 1)")
        self.amplitudes = amps
        self.levels = levels

    @classmethod
    def basis(cls, levels: Sequence[ZeemanState], level: ZeemanState, n: int = 0,
              n_max: int = 40) -> "JointState":
        levels = tuple(levels)
        amps = np.zeros((len(levels), n_max + 1), dtype=complex)
        amps[levels.index(level), n] = 1.0
        return cls(amps, levels)

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def is_normalized(self) -> bool:
        return abs(self.norm() - 1) <= self.NORM_TOL

    def p_d(self) -> float:
        mask = np.array([lv.is_d for lv in self.levels])
        return float(np.sum(np.abs(self.amplitudes[mask]) ** 2))

    def population(self, level: ZeemanState, n: int | None = None) -> float:
        row = self.amplitudes[self.levels.index(level)]
        return float(np.sum(np.abs(row if n is None else row[n]) ** 2))

    def mean_n(self) -> float:
        probs = np.sum(np.abs(self.amplitudes) ** 2, axis=0)
        return float(np.dot(np.arange(probs.size), probs))

    def copy(self) -> "JointState":
        return JointState(self.amplitudes.copy(), self.levels)

    def __repr__(self):
        return f"JointState(levels={[str(lv) for lv in self.levels]}, n_max={self.n_max})"
