"""Least-squares fits for spectroscopy, fringe, decay and drift data.

All nonlinear fits use bounded Nelder-Mead simplex descent started from
the best few points of a coarse grid search.  Uncertainties come from a
finite-difference Hessian of the weighted residual sum at the optimum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .physics import ThermalDistribution, motional_matrix_element


@dataclass(frozen=True)
class Param:
    value: float
    error: float

    def __iter__(self):
        return iter((self.value, self.error))


@dataclass
class FitReport:
    model: str
    params: dict
    residual_ss: float
    dof: int
    converged: bool
    flags: tuple = ()
    derived: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self._lookup(name).value

    def error(self, name: str) -> float:
        return self._lookup(name).error

    def _lookup(self, name) -> Param:
        if name in self.params:
            return self.params[name]
        return self.derived[name]

    @property
    def reduced_ss(self) -> float:
        return self.residual_ss / self.dof if self.dof > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": {k: {"value": p.value, "error": p.error} for k, p in self.params.items()},
            "derived": {k: {"value": p.value, "error": p.error} for k, p in self.derived.items()},
            "residual_ss": self.residual_ss,
            "dof": self.dof,
            "converged": self.converged,
            "flags": list(self.flags),
        }

    def to_text(self) -> str:
        lines = [f"model: {self.model}", f"{'parameter':<22}{'value':>16}{'error':>16}"]
        for name, p in list(self.params.items()) + list(self.derived.items()):
            lines.append(f"{name:<22}{p.value:>16.6g}{p.error:>16.3g}")
        lines.append(f"residual_ss: {self.residual_ss:.6g}  dof: {self.dof}  "
                     f"converged: {str(self.converged).lower()}")
        if self.flags:
            lines.append("flags: " + ", ".join(self.flags))
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def binomial_sigma(p, shots):
    """Binomial standard error sqrt((p(1-p) + eps)/N) with eps = 1/(4N).

    The floor keeps points at p = 0 or 1 from getting an effectively infinite
    weight; it equals the variance of half a count.
    """
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    n = np.asarray(shots, dtype=float)
    return np.sqrt((p * (1 - p) + 1 / (4 * n)) / n)


IRLS_ROUNDS = 2


def _binomial_fit(model, x, y, shots, names, starts, bounds, scales, model_name):
    """Weighted fit of binomial data.

    The first pass weights by the observed fractions; it is then repeated
    with weights from the fitted curve, which removes the bias of
    data-derived weights near p = 0 and 1.  Reweighting only moves the
    optimum within its basin, so later rounds start from the previous fit.
    """
    if shots is None:
        return simplex_fit(model, x, y, None, names, starts, bounds, scales, model_name)
    shots = np.broadcast_to(np.asarray(shots, dtype=float), np.shape(y))
    report, cov = simplex_fit(model, x, y, binomial_sigma(y, shots), names, starts, bounds,
                              scales, model_name, polish=False)
    for i in range(IRLS_ROUNDS):
        best = tuple(report[n] for n in names)
        sigma = binomial_sigma(model(np.asarray(x, dtype=float), *best), shots)
        report, cov = simplex_fit(model, x, y, sigma, names, [best], bounds,
                                  scales, model_name, polish=i == IRLS_ROUNDS - 1)
    return report, cov


def _hessian(f, z, h):
    k = z.size
    H = np.zeros((k, k))
    f0 = f(z)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        H[i, i] = (f(z + ei) - 2 * f0 + f(z - ei)) / h[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (f(z + ei + ej) - f(z + ei - ej) - f(z - ei + ej)
                                 + f(z - ei - ej)) / (4 * h[i] * h[j])
    return H


def simplex_fit(model, x, y, sigma, names, starts, bounds, scales, model_name,
                max_iter=4000, polish=True) -> tuple[FitReport, np.ndarray]:
    """Bounded multi-start Nelder-Mead on the weighted residual sum.

    Each start is descended to a coarse tolerance and the best one is then
    polished to near machine precision; ``polish=False`` stops at the
    coarse optimum, which is enough for intermediate reweighting passes.

    ``starts`` is an ordered list of initial parameter vectors; ties between
    optima are broken by the lower residual, then lexicographically on the
    parameters.  With ``sigma=None`` the covariance is rescaled by the
    residual variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    weighted = sigma is not None
    w = 1 / np.asarray(sigma, dtype=float) if weighted else np.ones_like(y)
    scales = np.asarray(scales, dtype=float)
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)

    def ss(z):
        p = np.minimum(np.maximum(z * scales, lo), hi)
        r = (model(x, *p) - y) * w
        return float(r @ r)

    zb = list(zip(lo / scales, hi / scales))

    def descend(z0, xatol, rel):
        # fatol is absolute in scipy; make it relative to the residual scale
        return minimize(ss, z0, method="Nelder-Mead", bounds=zb,
                        options={"xatol": xatol, "fatol": rel * max(ss(z0), 1e-30),
                                 "maxiter": max_iter, "maxfev": 2 * max_iter})

    # every start is descended coarsely; only the best basin is polished
    candidates = []
    for start in starts:
        z0 = np.clip(np.asarray(start, dtype=float), lo, hi) / scales
        res = descend(z0, 1e-6, 1e-8) if len(starts) > 1 else None
        z = res.x if res is not None else z0
        fun = res.fun if res is not None else ss(z0)
        candidates.append((fun, tuple(z * scales), z))
    candidates.sort(key=lambda c: (c[0], c[1]))
    if polish:
        res = descend(candidates[0][2], 1e-10, 1e-12)
        res2 = descend(res.x, 1e-12, 1e-14)
        best_ss, best_z, converged = res2.fun, res2.x, res2.success or res.success
    else:
        res = descend(candidates[0][2], 1e-6, 1e-8) if len(starts) == 1 else None
        best_z = res.x if res is not None else candidates[0][2]
        best_ss = res.fun if res is not None else candidates[0][0]
        converged = True if res is None else res.success
    best_p = np.clip(best_z * scales, lo, hi)

    n, k = y.size, len(names)
    dof = n - k
    flags = []
    h = 1e-4 * np.maximum(np.abs(best_z), 1e-3)
    H = _hessian(ss, best_z, h)
    if not np.all(np.isfinite(H)):
        H = np.zeros_like(H)
    try:
        cov_z = 2 * np.linalg.inv(H)
        if np.any(np.diag(cov_z) < 0) or not np.all(np.isfinite(cov_z)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cov_z = 2 * np.linalg.pinv(H)
        cov_z[:, np.diag(H) <= 0] = np.inf
        cov_z[np.diag(H) <= 0, :] = np.inf
        flags.append("singular_hessian")
    cov = cov_z * np.outer(scales, scales)
    if not weighted and dof > 0:
        cov = cov * best_ss / dof
    errs = np.sqrt(np.abs(np.diag(cov)))
    for i, name in enumerate(names):
        span = hi[i] - lo[i]
        if np.isfinite(span) and (abs(best_p[i] - lo[i]) < 1e-6 * span
                                  or abs(best_p[i] - hi[i]) < 1e-6 * span):
            flags.append(f"at_bound:{name}")
    params = {nm: Param(float(v), float(e)) for nm, v, e in zip(names, best_p, errs)}
    report = FitReport(model_name, params, best_ss, dof, bool(converged), tuple(flags))
    return report, cov


def _grid_starts(model, x, y, w, grid, keep=3):
    """Rank grid points by weighted residual and return the best ``keep``."""
    scored = []
    for p in grid:
        r = (model(x, *p) - y) * w
        scored.append((float(r @ r), tuple(p)))
    scored.sort()
    return [p for _, p in scored[:keep]]


def _unpack(data, y=None, shots=None):
    if y is None:
        return data.values, data.p_d, data.shots
    return np.asarray(data, dtype=float), np.asarray(y, dtype=float), shots


# -- line centre -----------------------------------------------------------------

def rabi_lineshape(detuning, center, rabi, amplitude, duration_us):
    """A (Omega/W)^2 sin^2(W tau / 2); frequencies in Hz."""
    tau = duration_us * 1e-6
    om = 2 * np.pi * rabi
    d = 2 * np.pi * (np.asarray(detuning) - center)
    w2 = om ** 2 + d ** 2
    w = np.sqrt(w2)
    return amplitude * om ** 2 * (tau / 2) ** 2 * np.sinc(w * tau / (2 * np.pi)) ** 2


def lineshape_fwhm(rabi, duration_us):
    peak = rabi_lineshape(0.0, 0.0, rabi, 1.0, duration_us)
    if peak <= 0:
        return math.nan
    f = lambda d: rabi_lineshape(d, 0.0, rabi, 1.0, duration_us) - peak / 2
    # first half-maximum crossing lies inside the central lobe
    hi = max(rabi, 1e6 / duration_us)
    grid = np.linspace(0, 4 * hi, 4001)
    vals = f(grid)
    idx = np.flatnonzero(vals < 0)
    if idx.size == 0:
        return math.nan
    j = idx[0]
    return 2 * brentq(f, grid[j - 1], grid[j])


_HERMITE_X, _HERMITE_W = np.polynomial.hermite.hermgauss(24)


def broadened_lineshape(detuning, center, rabi, amplitude, sigma, duration_us):
    """Rabi lineshape averaged over a Gaussian spread (std ``sigma``, Hz) of
    the line centre."""
    d = np.asarray(detuning, dtype=float)[..., None] - np.sqrt(2) * sigma * _HERMITE_X
    return rabi_lineshape(d, center, rabi, amplitude, duration_us) @ _HERMITE_W / np.sqrt(np.pi)


def _curve_fwhm(f, center, scale):
    """Full width at half maximum of a single-peaked curve around ``center``."""
    peak = f(center)
    if not peak > 0:
        return math.nan
    half = []
    for sign in (1, -1):
        grid = center + sign * np.linspace(0, 20 * scale, 4001)
        idx = np.flatnonzero(f(grid) < peak / 2)
        if idx.size == 0:
            return math.nan
        j = idx[0]
        half.append(abs(brentq(lambda d: f(d) - peak / 2, grid[j - 1], grid[j]) - center))
    return half[0] + half[1]


def fit_line_center(data, y=None, shots=None, duration_us: float = 1000.0,
                    broadened: bool = False) -> FitReport:
    """Fit the Rabi lineshape of a fixed-length pulse.  Detunings in Hz.

    Params: center (Hz), rabi (Omega/2pi, Hz), amplitude, and with
    ``broadened`` a Gaussian spread ``sigma`` (Hz) of the line centre over
    shots.  Derived: width (FWHM, Hz).
    """
    x, y, shots = _unpack(data, y, shots)
    if x.size < 5:
        raise ValueError("need at least 5 points spanning the line")
    sigma = binomial_sigma(y, shots) if shots is not None else None
    w = 1 / sigma if sigma is not None else np.ones_like(y)
    fourier = 1e6 / (2 * duration_us)  # rabi of a pi pulse, Hz
    span = np.ptp(x)
    if broadened:
        model = lambda d, c, r, a, s: broadened_lineshape(d, c, r, a, s, duration_us)
        spreads = fourier * np.array([0.0, 1.0, 3.0])
    else:
        model = lambda d, c, r, a: rabi_lineshape(d, c, r, a, duration_us)
        spreads = [None]
    centers = np.linspace(x.min(), x.max(), 41)
    grid = []
    for c in centers:
        for r in fourier * np.array([0.5, 0.75, 1.0, 1.5, 2.5]):
            for sp in spreads:
                extra = () if sp is None else (sp,)
                shape = model(x, c, r, 1.0, *extra)
                denom = float(np.sum(w ** 2 * shape ** 2))
                a = float(np.sum(w ** 2 * shape * y) / denom) if denom > 0 else 1.0
                grid.append((c, r, min(max(a, 0.01), 1.2)) + extra)
    starts = _grid_starts(model, x, y, w, grid)
    names = ["center", "rabi", "amplitude"]
    bounds = [(x.min() - span, x.max() + span), (fourier * 0.05, fourier * 50), (0.0, 1.2)]
    scales = [max(span, fourier), fourier, 1.0]
    if broadened:
        names.append("sigma")
        bounds.append((0.0, span))
        scales.append(fourier)
    report, cov = _binomial_fit(model, x, y, shots, names, starts, bounds, scales,
                                "broadened_lineshape" if broadened else "rabi_lineshape")
    r, dr = report.params["rabi"]
    if broadened:
        def fwhm(rabi, spread):
            shape = lambda d: broadened_lineshape(d, 0.0, rabi, 1.0, spread, duration_us)
            return _curve_fwhm(shape, 0.0, max(rabi, spread, fourier))

        sp = report["sigma"]
        width = fwhm(r, sp)
        # gradient of the width wrt (rabi, sigma) by forward differences
        h = 1e-4 * fourier
        g = np.array([fwhm(r + h, sp) - width, fwhm(r, sp + h) - width]) / h
        sub = cov[np.ix_([1, 3], [1, 3])]
        report.derived["width"] = Param(width, float(np.sqrt(max(g @ sub @ g, 0.0))))
        return report
    width = lineshape_fwhm(r, duration_us)
    # propagate rabi error into the width numerically
    dw = abs(lineshape_fwhm(r + max(dr, 1e-9 * r), duration_us) - width) / max(dr, 1e-9 * r) * dr
    report.derived["width"] = Param(width, dw)
    return report


# -- fringes ---------------------------------------------------------------------

def fringe_model(x, offset, amplitude, period, phase):
    return offset + amplitude * np.cos(2 * np.pi * np.asarray(x) / period + phase)


def fit_fringe(data, y=None, shots=None) -> FitReport:
    """Sinusoidal fit P = offset + amplitude cos(2 pi x / period + phase).

    Derived ``contrast`` = (P_max - P_min)/(P_max + P_min) of the fitted
    curve, clipped to [0, 1].
    """
    x, y, shots = _unpack(data, y, shots)
    if x.size < 4:
        raise ValueError("need at least 4 points")
    sigma = binomial_sigma(y, shots) if shots is not None else None
    w = 1 / sigma if sigma is not None else np.ones_like(y)
    span = np.ptp(x)
    if np.ptp(y) == 0:
        params = {"offset": Param(float(y[0]), 0.0), "amplitude": Param(0.0, math.inf),
                  "period": Param(math.nan, math.inf), "phase": Param(0.0, math.inf)}
        rep = FitReport("fringe", params, 0.0, x.size - 4, True, ("degenerate",))
        rep.derived["contrast"] = Param(0.0, 1.0)
        return rep
    step = np.min(np.diff(np.sort(x))) if x.size > 1 else span
    periods = np.geomspace(max(2.5 * step, span / 20), 2 * span, 120)
    grid = []
    for per in periods:
        basis = np.stack([np.ones_like(x), np.cos(2 * np.pi * x / per), np.sin(2 * np.pi * x / per)], 1)
        coef, *_ = np.linalg.lstsq(basis * w[:, None], y * w, rcond=None)
        off, cc, ss_ = coef
        grid.append((off, math.hypot(cc, ss_), per, math.atan2(-ss_, cc)))
    # one start per basin: local minima of the residual along the period axis
    resid = np.array([float(np.sum(((fringe_model(x, *g) - y) * w) ** 2)) for g in grid])
    padded = np.concatenate([[np.inf], resid, [np.inf]])
    minima = [i for i in range(len(grid)) if padded[i + 1] <= padded[i] and padded[i + 1] <= padded[i + 2]]
    starts = [grid[i] for i in sorted(minima, key=lambda i: (resid[i], i))[:3]]
    bounds = [(-1.0, 2.0), (0.0, 2.0), (2 * step, 4 * span), (-4 * np.pi, 4 * np.pi)]
    report, cov = _binomial_fit(fringe_model, x, y, shots, ["offset", "amplitude", "period", "phase"],
                                starts, bounds, [1.0, 1.0, span, np.pi], "fringe")
    off, amp = report["offset"], report["amplitude"]
    pmax, pmin = off + amp, off - amp
    if off <= 0:
        c, dc = 0.0, 1.0
    else:
        c = amp / off
        # gradient of amp/off wrt (offset, amplitude)
        g = np.array([-amp / off ** 2, 1 / off])
        dc = float(np.sqrt(max(g @ cov[:2, :2] @ g, 0.0)))
    report.derived["contrast"] = Param(float(min(max(c, 0.0), 1.0)), dc)
    report.derived["p_max"] = Param(pmax, 0.0)
    report.derived["p_min"] = Param(pmin, 0.0)
    return report


# -- contrast decay --------------------------------------------------------------

def gaussian_decay(t, tau):
    return np.exp(-(np.asarray(t) / tau) ** 2)


def exponential_decay(t, tau):
    return np.exp(-np.asarray(t) / tau)


@dataclass
class ContrastDecayReport:
    gaussian: FitReport
    exponential: FitReport
    preferred: str


def _decay_fit(model, name, t, c, sigma, nu_name):
    t = np.asarray(t, dtype=float)
    c = np.asarray(c, dtype=float)
    w = 1 / np.asarray(sigma) if sigma is not None else np.ones_like(c)
    tmax = float(np.max(t))
    upper = 1e3 * tmax
    grid = [(tau,) for tau in np.geomspace(tmax / 100, upper, 60)]
    starts = _grid_starts(model, t, c, w, grid, keep=2)
    report, _ = simplex_fit(model, t, c, sigma, ["tau"], starts, [(tmax * 1e-4, upper)], [tmax], name)
    tau, dtau = report.params["tau"]
    nu = 1 / (2 * np.pi * tau * 1e-3)  # tau in ms -> Hz
    report.derived[nu_name] = Param(nu, nu * dtau / tau)
    if any(f == "at_bound:tau" for f in report.flags) and tau > tmax:
        report.flags = report.flags + ("non_identifiable",)
    return report


def fit_contrast_decay(waits_ms, contrast, errors=None) -> ContrastDecayReport:
    """Fit exp(-(t/tau)^2) and exp(-t/tau) to contrast vs wait (ms).

    The Gaussian width is reported as nu = 1/(2 pi tau); the exponential as
    the Lorentzian linewidth nu_half = 1/(2 pi tau).  The preferred model has
    the lower residual sum per degree of freedom.
    """
    if len(waits_ms) < 4:
        raise ValueError("need at least 4 wait times")
    g = _decay_fit(gaussian_decay, "gaussian", waits_ms, contrast, errors, "nu")
    e = _decay_fit(exponential_decay, "exponential", waits_ms, contrast, errors, "nu_half")
    preferred = "gaussian" if g.reduced_ss <= e.reduced_ss else "exponential"
    return ContrastDecayReport(g, e, preferred)


# -- sine drift ------------------------------------------------------------------

def sine_model(t, offset, amplitude, phase, frequency_hz=50.0):
    return offset + amplitude * np.sin(2 * np.pi * frequency_hz * 1e-3 * np.asarray(t) + phase)


def fit_sine_drift(delays_ms, centers, errors=None, frequency_hz: float = 50.0,
                   susceptibility: float = 2.80) -> FitReport:
    """Fixed-frequency sine through line centres vs trigger delay.

    ``centers`` and the fitted amplitude share units (kHz by convention);
    ``field_amplitude`` = amplitude / susceptibility (mGauss for kHz/mGauss).
    """
    t = np.asarray(delays_ms, dtype=float)
    y = np.asarray(centers, dtype=float)
    if np.ptp(t) < 1e3 / frequency_hz * (1 - 1e-9) - 1e-9 and t.size < 3:
        raise ValueError("delays must span one period")
    w = 1 / np.asarray(errors) if errors is not None else np.ones_like(y)
    arg = 2 * np.pi * frequency_hz * 1e-3 * t
    basis = np.stack([np.ones_like(t), np.sin(arg), np.cos(arg)], 1)
    (off, a, b), *_ = np.linalg.lstsq(basis * w[:, None], y * w, rcond=None)
    amp0, ph0 = math.hypot(a, b), math.atan2(b, a)
    model = lambda tt, o, A, p: sine_model(tt, o, A, p, frequency_hz)
    scale = max(float(np.ptp(y)), 1e-6)
    starts = [(off, amp0, ph0)]
    report, cov = simplex_fit(model, t, y, errors, ["offset", "amplitude", "phase"], starts,
                              [(-np.inf, np.inf), (0.0, np.inf), (ph0 - 2 * np.pi, ph0 + 2 * np.pi)],
                              [scale, scale, np.pi], "sine_drift")
    amp, damp = report.params["amplitude"]
    report.derived["field_amplitude"] = Param(amp / susceptibility, damp / susceptibility)
    resid = y - model(t, *(report[k] for k in ("offset", "amplitude", "phase")))
    report.derived["residual_std"] = Param(float(np.std(resid, ddof=min(3, t.size - 1))), 0.0)
    report.derived["data_std"] = Param(float(np.std(y, ddof=1)) if t.size > 1 else 0.0, 0.0)
    return report


# -- exponential survival --------------------------------------------------------

def fit_exponential_decay(waits_ms, survival, shots) -> FitReport:
    """Binomially weighted fit of survival = exp(-t/tau); tau in ms."""
    t = np.asarray(waits_ms, dtype=float)
    p = np.asarray(survival, dtype=float)
    sigma = binomial_sigma(p, shots)
    w = 1 / sigma
    tmax = float(np.max(t))
    upper = 1e4 * max(tmax, 1e-9)
    grid = [(tau,) for tau in np.geomspace(max(tmax, 1e-9) / 100, upper, 80)]
    starts = _grid_starts(exponential_decay, t, p, w, grid, keep=2)
    report, _ = _binomial_fit(exponential_decay, t, p, shots, ["tau"], starts,
                              [(max(tmax, 1e-9) * 1e-5, upper)], [max(tmax, 1e-9)], "exponential")
    if np.all(p >= 1):
        report.flags = report.flags + ("lower_bound_only",)
    return report


# -- linear ----------------------------------------------------------------------

def fit_linear(x, y, sigma=None) -> FitReport:
    """(Weighted) ordinary least squares y = slope x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points")
    w = np.ones_like(y) if sigma is None else 1 / np.asarray(sigma, dtype=float)
    A = np.stack([x, np.ones_like(x)], 1) * w[:, None]
    coef, *_ = np.linalg.lstsq(A, y * w, rcond=None)
    r = A @ coef - y * w
    ss = float(r @ r)
    dof = x.size - 2
    cov = np.linalg.inv(A.T @ A)
    if sigma is None:
        cov = cov * ss / dof
    err = np.sqrt(np.diag(cov))
    params = {"slope": Param(float(coef[0]), float(err[0])),
              "intercept": Param(float(coef[1]), float(err[1]))}
    return FitReport("linear", params, ss, dof, True)


# -- thermal blue-sideband flop --------------------------------------------------

def blue_flop_model(t_us, nbar, omega0, eta):
    dist = ThermalDistribution(float(nbar))
    n = np.arange(dist.cutoff + 1)
    pn = dist.probabilities()
    om = omega0 * motional_matrix_element(eta, n, 1)
    t = np.asarray(t_us, dtype=float)
    return np.sin(np.outer(t, om) / 2) ** 2 @ pn


def fit_thermal_blue_flop(durations_us, p_d, shots, omega0: float, eta: float) -> FitReport:
    """Mean phonon number from a blue-sideband flop, assuming a thermal
    distribution.  ``omega0`` is the bare Rabi frequency in rad/us."""
    t = np.asarray(durations_us, dtype=float)
    p = np.asarray(p_d, dtype=float)
    sigma = binomial_sigma(p, shots)
    model = lambda tt, nb: blue_flop_model(tt, nb, omega0, eta)
    grid = [(nb,) for nb in (0.0, 0.05, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0)]
    starts = _grid_starts(model, t, p, 1 / sigma, grid, keep=2)
    report, _ = _binomial_fit(model, t, p, shots, ["nbar"], starts, [(0.0, 50.0)], [1.0],
                              "thermal_blue_flop")
    return report
