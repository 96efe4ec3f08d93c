"""Correlation functions, spectra, and exponential fits over dipole records.

All estimators work on the complex dipole amplitude J = (jx - i*jy)/2 sampled
by the simulation.  The reference protocol averages a fixed time origin t0
over the trajectory ensemble; every estimator also accepts n_offsets > 1 to
additionally average over a comb of evenly spaced later origins, which is a
variance-reduction extension beyond the reference protocol and changes only
the statistical error, not the estimated quantity (the process is stationary
after its initial transient).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .model import ModelParams


@dataclass
class CorrelationSeries:
    """Two-time correlation estimate on the record's lag grid."""

    lags: np.ndarray              # [tau], starts at 0
    values: np.ndarray            # complex
    t0: float                     # earliest time origin used
    n_traj: int

    def __post_init__(self) -> None:
        self.lags = np.asarray(self.lags, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if len(self.lags) != len(self.values):
            raise ValueError("lags and values must have equal length")
        if len(self.lags) == 0 or self.lags[0] != 0.0:
            raise ValueError("lag grid must start at 0")


@dataclass
class SpectrumResult:
    """Fourier integral of a correlation series over a window [0, tf]."""

    omega: np.ndarray             # [1/tau], symmetric about 0
    values: np.ndarray            # complex
    tf: float                     # window length; resolution is 2*pi/tf

    def __post_init__(self) -> None:
        self.omega = np.asarray(self.omega, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if len(self.omega) != len(self.values):
            raise ValueError("omega and values must have equal length")
        if not np.allclose(self.omega, -self.omega[::-1], atol=1e-12):
            raise ValueError("omega grid must be symmetric about 0")

    @property
    def resolution(self) -> float:
        return 2.0 * np.pi / self.tf


def complex_dipole(record) -> np.ndarray:
    """J(t) = (jx - i*jy)/2 of one record."""
    return 0.5 * (record.jx - 1j * record.jy)


def _stack(records):
    records = list(records)
    if not records:
        raise ValueError("need at least one record")
    times = records[0].times
    for r in records[1:]:
        if not np.array_equal(r.times, times):
            raise ValueError("records must share one time grid")
    return times, np.stack([complex_dipole(r) for r in records])


def _origins(times: np.ndarray, t0: float, n_lags: int, n_offsets: int) -> np.ndarray:
    """Indices of the time origins: t0, plus an evenly spaced comb after it."""
    i0 = int(np.searchsorted(times, t0 - 1e-9))
    if i0 >= len(times):
        raise ValueError(f"t0 = {t0} is beyond the record end {times[-1]}")
    i_last = len(times) - n_lags
    if i_last < i0:
        raise ValueError(
            f"record too short: t0 + max_lag needs t >= "
            f"{times[i0] + (n_lags - 1) * (times[1] - times[0]):g}, "
            f"record ends at {times[-1]:g}")
    if n_offsets < 1:
        raise ValueError("n_offsets must be >= 1")
    return np.unique(np.linspace(i0, i_last, n_offsets).round().astype(int))


def _lag_count(times: np.ndarray, max_lag: float) -> int:
    dt = times[1] - times[0]
    return min(int(np.floor(max_lag / dt + 1e-9)) + 1, len(times))


def g1(records, t0: float, max_lag: float, n_offsets: int = 1,
       subtract_mean: bool = False) -> CorrelationSeries:
    """First-order coherence <J*(t0+lag) J(t0)>, trajectory-ensemble averaged.

    Unnormalized: g1(0) is the mean intensity <|J(t0)|^2>.

    subtract_mean removes each trajectory's sample-mean dipole over the
    averaging span before correlating.  The sample mean of a zero-mean field
    is itself nonzero over a finite span T, and its squared magnitude enters
    the plain estimator as a positive lag-independent offset that buries a
    decaying tail.  Plain subtraction overshoots by the deterministic level
    -(2/T) * integral(C), so that level is estimated from the measured
    series and added back (the usual finite-span bias correction; it assumes
    the correlations decay within max_lag and the span is several times
    max_lag).  Keep the option off when the mean field is the signal
    (phase-locked emission), where the offset term is exactly the coherent
    part being measured.
    """
    times, J = _stack(records)
    n_lags = _lag_count(times, max_lag)
    offs = _origins(times, t0, n_lags, n_offsets)
    if subtract_mean:
        span = slice(offs[0], offs[-1] + n_lags)
        J = J - J[:, span].mean(axis=1, keepdims=True)
    base = J[:, offs]
    values = np.empty(n_lags, dtype=complex)
    for k in range(n_lags):
        values[k] = np.mean(np.conj(J[:, offs + k]) * base)
    lags = times[:n_lags] - times[0]
    if subtract_mean:
        t_span = float(times[offs[-1] + n_lags - 1] - times[offs[0]])
        denom = 1.0 - 2.0 * lags[-1] / t_span
        if denom <= 0.25:
            raise ValueError("subtract_mean needs an averaging span several "
                             f"times max_lag, got span {t_span:g} for "
                             f"max_lag {lags[-1]:g}")
        values = values + (2.0 / t_span) * np.trapezoid(values, lags) / denom
    return CorrelationSeries(lags=lags, values=values,
                             t0=float(times[offs[0]]), n_traj=J.shape[0])


def g2(records, t0: float, max_lag: float, n_offsets: int = 1) -> CorrelationSeries:
    """Normalized intensity correlation <I(t0+lag) I(t0)> / <I>^2, I = J*J."""
    times, J = _stack(records)
    intensity = np.abs(J) ** 2
    denom = dipole_correlation(records, t0)
    if denom <= 0.0:
        raise ValueError("degenerate g2 normalization: <J*J> vanishes for t >= t0")
    n_lags = _lag_count(times, max_lag)
    offs = _origins(times, t0, n_lags, n_offsets)
    base = intensity[:, offs]
    values = np.empty(n_lags, dtype=complex)
    for k in range(n_lags):
        values[k] = np.mean(intensity[:, offs + k] * base)
    lags = times[:n_lags] - times[0]
    return CorrelationSeries(lags=lags, values=values / denom**2,
                             t0=float(times[offs[0]]), n_traj=J.shape[0])


def dipole_correlation(records, t0: float) -> float:
    """Time-and-ensemble average of J*J over t >= t0."""
    times, J = _stack(records)
    mask = times >= t0 - 1e-9
    if not mask.any():
        raise ValueError(f"t0 = {t0} is beyond the record end {times[-1]}")
    return float(np.mean(np.abs(J[:, mask]) ** 2))


def effective_rabi_sq(records, params: ModelParams, t0: float) -> float:
    """Square of the dipole drive rate felt by one atom, Gamma_c^2 <J*J>.

    This is the per-atom normalization: it collapses across atom number at
    fixed collective linewidth.  The collective form (N*Gamma_c)^2 <J*J>
    would grow as N^2 there, so it is not used.
    """
    return params.gamma_c**2 * dipole_correlation(records, t0)


def spectrum(series: CorrelationSeries, tf: float, which: str,
             omega_max: float | None = None,
             oversample: int = 4) -> SpectrumResult:
    """Fourier integral of g1 (S1) or g2 - 1 (S2) over the window [0, tf].

    Direct trapezoidal integral of exp(i*omega*t) times the series on its
    own lag grid; the omega grid is symmetric with spacing (2*pi/tf) divided
    by oversample, extending to omega_max (default: the lag-grid Nyquist
    frequency).  Oversampling refines peak positions but not the physical
    resolution 2*pi/tf.
    """
    if which not in ("S1", "S2"):
        raise ValueError(f"which must be 'S1' or 'S2', got {which!r}")
    lags = series.lags
    if tf <= 0.0:
        raise ValueError(f"tf must be positive, got {tf}")
    if lags[-1] < tf - 1e-9:
        raise ValueError(f"insufficient lag coverage: series ends at "
                         f"{lags[-1]:g} < tf = {tf:g}")
    mask = lags <= tf + 1e-9
    t = lags[mask]
    f = series.values[mask]
    if which == "S2":
        f = f - 1.0

    d_omega = 2.0 * np.pi / tf / max(int(oversample), 1)
    if omega_max is None:
        omega_max = np.pi / (lags[1] - lags[0])
    n_half = int(np.floor(omega_max / d_omega + 1e-9))
    omega = d_omega * np.arange(-n_half, n_half + 1)
    kernel = np.exp(1j * np.outer(omega, t))
    values = np.trapezoid(kernel * f, t, axis=1)
    return SpectrumResult(omega=omega, values=values, tf=float(tf))


def fit_exponent(series: CorrelationSeries, window: tuple[float, float],
                 model: str = "exp_tail", part: str = "abs",
                 offset: bool = False) -> tuple[float, float]:
    """Least-squares exponential rate of the series over a lag window.

    Fits log y = log(A) + c*lag on window = (t_a, t_b).  exp_tail returns
    (c, stderr); linewidth returns (Gamma, stderr) with Gamma = -2c, the
    full width of the Lorentzian whose coherence decays as exp(-Gamma*t/2).

    part picks y: "abs" fits |values|, appropriate while the magnitude sits
    well above the estimator noise; "real" fits the real part, dropping
    non-positive samples.  Near the noise level "abs" is biased shallow
    (|noise| has a positive mean, so the tail flattens into a floor) where
    the noise in the real part averages to zero, so "real" is the honest
    choice for a decay measured down to the noise.  It requires a majority
    of the window to stay positive.

    offset=True (real part only) fits A*exp(c*lag) + b instead, with a free
    lag-independent level b.  Finite-span correlation estimates carry such a
    level: the plain estimator a realization of the squared sample-mean
    dipole, the mean-subtracted one a deterministic -2*tau_c/T*C(0); both
    distort a pure-exponential fit of a tail that decays into them, and a
    free b absorbs either without picking a side.
    """
    if model not in ("exp_tail", "linewidth"):
        raise ValueError(f"model must be 'exp_tail' or 'linewidth', got {model!r}")
    if part not in ("abs", "real"):
        raise ValueError(f"part must be 'abs' or 'real', got {part!r}")
    if offset and part != "real":
        raise ValueError("offset fit requires part='real'")
    t_a, t_b = window
    if not (t_a < t_b):
        raise ValueError(f"empty fit window {window}")
    if t_a < series.lags[0] - 1e-9 or t_b > series.lags[-1] + 1e-9:
        raise ValueError(f"fit window {window} outside lag range "
                         f"[{series.lags[0]:g}, {series.lags[-1]:g}]")
    mask = (series.lags >= t_a - 1e-9) & (series.lags <= t_b + 1e-9)
    t = series.lags[mask]
    if part == "real":
        raw = series.values[mask].real
        keep = np.ones(len(raw), bool) if offset else raw > 0.0
        if keep.sum() < max(3, mask.sum() // 2):
            raise ValueError("real part not positive over the fit window")
        t, mag = t[keep], raw[keep]
    else:
        mag = np.abs(series.values[mask])
        if np.any(mag <= 0.0):
            raise ValueError("non-positive magnitudes in fit window")
    if len(t) < (4 if offset else 3):
        raise ValueError(f"underdetermined fit: {len(t)} points in window")

    if offset:
        slope, stderr = _fit_exp_offset(t, mag)
    else:
        y = np.log(mag)
        tc = t - t.mean()
        sxx = float(tc @ tc)
        slope = float(tc @ y) / sxx
        resid = y - y.mean() - slope * tc
        var = float(resid @ resid) / (len(t) - 2) / sxx if len(t) > 2 else 0.0
        stderr = float(np.sqrt(var))
    if model == "linewidth":
        return -2.0 * slope, 2.0 * stderr
    return slope, stderr


def _fit_exp_offset(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Rate and stderr of y = A*exp(c*t) + b by nonlinear least squares."""
    b0 = float(y[t >= t[0] + 0.75 * (t[-1] - t[0])].mean())
    head = max(float(y[0] - b0), 1e-12 * max(abs(y[0]), 1.0))
    tail = max(float(y[-1] - b0), 0.1 * head)
    c0 = np.log(tail / head) / (t[-1] - t[0])
    if not np.isfinite(c0) or c0 >= 0.0:
        c0 = -1.0 / (t[-1] - t[0])
    model = lambda tt, a, c, b: a * np.exp(c * (tt - t[0])) + b
    try:
        popt, pcov = curve_fit(model, t, y, p0=(head, c0, b0), maxfev=20000)
    except RuntimeError as err:
        raise ValueError(f"offset fit did not converge: {err}") from err
    return float(popt[1]), float(np.sqrt(pcov[1, 1]))
