"""Oscillation analysis of recorded trajectories.

Periodograms of the magnetization, the oscillation decay rate from an
extremum-envelope fit, and its finite-size power law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import Trajectory, evolve
from .liouv import ModelParams
from .spectral import PowerLawFit, fit_power_law
from .spinops import coherent_spin_state

__all__ = [
    "Periodogram",
    "DecayFit",
    "EtaScalingResult",
    "periodogram",
    "decay_rate_fit",
    "eta_scaling",
]


@dataclass(frozen=True)
class Periodogram:
    """One-sided power spectrum on a uniform angular-frequency grid.

    ``power`` is normalized so its maximum is 1; ``power * scale`` is
    the raw spectrum, whose sum equals the biased variance of the
    mean-removed, untapered signal (Parseval).
    """

    frequencies: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)
    window: str = "none"
    scale: float = 1.0
    signal_variance: float = 0.0

    def peak_frequency(self) -> float:
        return float(self.frequencies[int(np.argmax(self.power))])


@dataclass(frozen=True)
class DecayFit:
    """Envelope decay rate of an oscillating observable.

    ``fittable`` is False when the signal shows fewer than 5 usable
    extrema; the remaining fields are then zero/NaN and ``message``
    explains why.
    """

    eta: float
    frequency: float
    residual: float
    n_peaks_used: int
    fittable: bool = True
    message: str = ""


@dataclass(frozen=True)
class EtaScalingResult:
    beta: float
    r_squared: float
    fit: Optional[PowerLawFit]
    table: tuple  # of (n_spins, DecayFit)


def periodogram(
    traj: Trajectory,
    observable: str = "sz",
    discard_transient: Optional[float] = None,
    *,
    window: str = "none",
) -> Periodogram:
    """DFT power spectrum of a recorded observable.

    The first ``discard_transient`` time units are dropped (default: the
    first 10% of the window), the mean is removed, and an optional Hann
    taper is applied.  Frequencies are angular, in units of kappa.

    Raises
    ------
    ValueError
        If fewer than 64 samples remain after the transient discard.
    """
    times = traj.times
    signal = traj.observable(observable)
    if discard_transient is None:
        discard_transient = 0.1 * (times[-1] - times[0])
    keep = times >= times[0] + discard_transient
    times, signal = times[keep], signal[keep]
    if signal.size < 64:
        raise ValueError(
            f"only {signal.size} samples after transient discard; need >= 64"
        )
    dt = float(times[1] - times[0])

    x = signal - signal.mean()
    variance = float(np.mean(x**2))
    if window == "hann":
        x = x * np.hanning(x.size)
    elif window != "none":
        raise ValueError(f"unknown window {window!r}; expected 'none' or 'hann'")

    m = x.size
    spectrum = np.fft.rfft(x)
    two_sided = np.abs(spectrum) ** 2 / m**2
    one_sided = two_sided.copy()
    if m % 2 == 0:
        one_sided[1:-1] *= 2.0
    else:
        one_sided[1:] *= 2.0
    freqs = 2.0 * np.pi * np.fft.rfftfreq(m, d=dt)

    scale = float(one_sided.max())
    power = one_sided / scale if scale > 0 else one_sided
    return Periodogram(freqs, power, window, scale, variance)


def _refined_extrema(times, x, noise_floor):
    """Local extrema with parabolic refinement of position and value."""
    dt = float(times[1] - times[0])
    out_t, out_v = [], []
    for i in range(1, len(x) - 1):
        if (x[i] - x[i - 1]) * (x[i + 1] - x[i]) < 0 and abs(x[i]) > noise_floor:
            curv = x[i - 1] - 2.0 * x[i] + x[i + 1]
            off = 0.5 * (x[i - 1] - x[i + 1]) / curv if curv != 0 else 0.0
            out_t.append(float(times[i] + off * dt))
            out_v.append(float(x[i] - 0.25 * (x[i - 1] - x[i + 1]) * off))
    return np.asarray(out_t), np.asarray(out_v)


def decay_rate_fit(
    traj: Trajectory,
    observable: str = "sz",
    *,
    noise_floor: float = 1e-8,
) -> DecayFit:
    """Envelope decay rate from successive oscillation extrema.

    Consecutive opposite-sign extrema of the mean-removed signal are
    paired; each pair contributes half its peak-to-peak amplitude at the
    midpoint time, which cancels any slow baseline drift toward the
    steady state.  A least-squares line through log(amplitude) gives the
    decay rate; the dominant angular frequency comes from the mean
    extremum spacing (half a period apart).
    """
    times = traj.times
    x = traj.observable(observable)
    x = x - x.mean()
    ext_t, ext_v = _refined_extrema(times, x, noise_floor)
    if ext_t.size < 5:
        return DecayFit(
            0.0, float("nan"), float("nan"), int(ext_t.size), False,
            f"only {ext_t.size} extrema above the noise floor; need >= 5",
        )

    # keep the leading run of strictly alternating-sign extrema; once the
    # oscillation has decayed into baseline wiggles the signs stop alternating
    signs = np.sign(ext_v)
    run = 1
    while run < signs.size and signs[run] == -signs[run - 1]:
        run += 1
    ext_t, ext_v = ext_t[:run], ext_v[:run]
    if ext_t.size < 5:
        return DecayFit(
            0.0, float("nan"), float("nan"), int(ext_t.size), False,
            f"only {ext_t.size} alternating extrema; need >= 5",
        )

    amp_t = 0.5 * (ext_t[:-1] + ext_t[1:])
    amp = 0.5 * np.abs(ext_v[:-1] - ext_v[1:])
    design = np.vstack([amp_t, np.ones_like(amp_t)]).T
    coef, _, _, _ = np.linalg.lstsq(design, np.log(amp), rcond=None)
    pred = design @ coef
    residual = float(np.sqrt(np.mean((np.log(amp) - pred) ** 2)))
    eta = max(-float(coef[0]), 0.0)
    frequency = float(np.pi / np.mean(np.diff(ext_t)))
    return DecayFit(eta, frequency, residual, int(ext_t.size))


def eta_scaling(
    params_base: ModelParams,
    sizes: Sequence[int],
    *,
    theta: float = np.pi / 2,
    phi: float = 0.0,
    t_max: float = 40.0,
    dt: Optional[float] = None,
    observable: str = "sz",
) -> EtaScalingResult:
    """Decay rate versus system size with a power-law fit eta ~ N**(-beta).

    Each size is evolved from the coherent state (theta, phi) and fitted
    with ``decay_rate_fit``; unfittable sizes stay in the table flagged
    but are excluded from the regression.
    """
    if len(sizes) < 3:
        raise ValueError(f"need at least 3 sizes, got {len(sizes)}")
    table = []
    for n in sizes:
        params = params_base.replace(n_spins=int(n))
        rho0 = coherent_spin_state(params.sector, theta, phi)
        traj = evolve(params, rho0, t_max, dt)
        table.append((int(n), decay_rate_fit(traj, observable)))

    usable = [(n, f.eta) for n, f in table if f.fittable and f.eta > 0]
    if len(usable) < 3:
        return EtaScalingResult(float("nan"), float("nan"), None, tuple(table))
    ns, etas = zip(*usable)
    fit = fit_power_law(ns, etas)
    return EtaScalingResult(-fit.exponent, fit.r_squared, fit, tuple(table))
