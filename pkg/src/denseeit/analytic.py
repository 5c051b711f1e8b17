"""Closed-form Gaussian pulse solution and the quantities derived from it.

Depth ``z`` is the fraction of the medium traversed, in [0, 1]; the full
depth corresponds to ``k0z`` of the configuration. Times are retarded times,
so the pulse peak sits at ``z * group_delay``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DerivedRates, SystemConfig, derive_rates


@dataclass(frozen=True)
class AnalyticPulse:
    """Parameters of the propagated Gaussian.

    Attributes
    ----------
    amp : float
        Input peak amplitude.
    sigma : float
        Input width.
    k0z : float
        Full optical depth product.
    group_delay : float
        Retarded delay at full depth.
    gamma_dec : float
        Ground-state decoherence rate.
    beta1, beta2 : float
        Broadening and local-field dispersion coefficients.
    n_g, omega0 : float
        Group index and carrier frequency (rate unit).
    """

    amp: float
    sigma: float
    k0z: float
    group_delay: float
    gamma_dec: float
    beta1: float
    beta2: float
    n_g: float = 0.0
    omega0: float = 1.0

    @classmethod
    def from_config(cls, config: SystemConfig, rates: DerivedRates | None = None):
        rates = rates or derive_rates(config)
        return cls(amp=config.probe_amp, sigma=config.probe_width, k0z=config.k0z,
                   group_delay=rates.group_delay, gamma_dec=rates.gamma_dec,
                   beta1=rates.beta1, beta2=rates.beta2, n_g=rates.n_g, omega0=rates.omega0)

    def width_squared(self, z=1.0):
        """Complex modified width squared at depth ``z``."""
        return self.sigma ** 2 + 2.0 * self.k0z * np.asarray(z) * complex(self.beta1, -self.beta2)

    def width_ratio(self, z=1.0):
        """``sigma / sigma_tilde`` on the branch continuous from z = 0."""
        s2 = self.width_squared(z)
        # Re(s2) >= sigma^2 > 0 keeps the principal root continuous in z.
        return self.sigma / np.sqrt(s2)


def analytic_envelope(z, t, pulse: AnalyticPulse):
    """Complex envelope of the propagated Gaussian at depth ``z`` and time ``t``."""
    t = np.asarray(t, dtype=float)
    s2 = pulse.width_squared(z)
    if np.any(s2 == 0):
        raise ZeroDivisionError("modified width vanishes")
    delay = pulse.group_delay * np.asarray(z)
    shift = t - delay
    out = pulse.amp * pulse.width_ratio(z) * np.exp(
        -pulse.gamma_dec * delay - shift ** 2 / (2.0 * s2))
    return out if np.ndim(out) else complex(out)


def exact_phase(z, t, pulse: AnalyticPulse):
    """Phase of :func:`analytic_envelope`, continuous in ``t``."""
    return np.unwrap(np.angle(np.atleast_1d(analytic_envelope(z, t, pulse))))


def phi_lfc(t, pulse: AnalyticPulse, z=1.0):
    """First-order local-field phase parabola, zero at ``|t - delay| = sigma``."""
    peak = pulse.beta2 * pulse.k0z * z / pulse.sigma ** 2
    shift = np.asarray(t, dtype=float) - pulse.group_delay * z
    return peak * (1.0 - shift ** 2 / pulse.sigma ** 2)


def envelope_derivatives(z, t, pulse: AnalyticPulse):
    """Return ``(E, dE/dt, d2E/dt2)`` from the closed form."""
    e = analytic_envelope(z, t, pulse)
    s2 = pulse.width_squared(z)
    shift = np.asarray(t, dtype=float) - pulse.group_delay * np.asarray(z)
    d1 = -shift / s2 * e
    d2 = (shift ** 2 / s2 ** 2 - 1.0 / s2) * e
    return e, d1, d2


def polarization_components(z, t, pulse: AnalyticPulse, carrier: bool = False):
    """Group-delay and local-field parts of the probe polarization.

    Returns ``(P0, P_LFC)`` normalised by the vacuum permittivity:
    ``P0 = (n_g / omega0) i dE/dt`` and ``P_LFC = beta2 i^2 d2E/dt2``. With
    ``carrier=True`` both carry ``exp(i (k0z z - omega0 t))``; the factor is
    common and drops out of every phase difference with the envelope.
    """
    _, d1, d2 = envelope_derivatives(z, t, pulse)
    p0 = pulse.n_g / pulse.omega0 * 1j * d1
    plfc = pulse.beta2 * (1j ** 2) * d2
    if carrier:
        ph = np.exp(1j * (pulse.k0z * np.asarray(z) - pulse.omega0 * np.asarray(t, float)))
        p0, plfc = p0 * ph, plfc * ph
    return p0, plfc


def relative_phase(p, e):
    """Phase of ``p`` relative to ``e`` wrapped to (-pi, pi]."""
    return np.angle(np.asarray(p) * np.conj(np.asarray(e)))


def phi_nsm(t, n2: float, intensity, k0z: float):
    """Kerr self-phase ``n2 I(t) k0z``; ``intensity`` is an array or a callable of t."""
    values = intensity(t) if callable(intensity) else intensity
    return n2 * np.asarray(values, dtype=float) * k0z


def gaussian_intensity(t, peak: float, sigma: float):
    """Intensity of a Gaussian field envelope of width ``sigma``."""
    return peak * np.exp(-np.asarray(t, dtype=float) ** 2 / sigma ** 2)


def alpha_nsm(n2: float, peak_intensity: float, k0z: float, sigma: float) -> float:
    """Central chirp of the Kerr self-phase."""
    return 2.0 * n2 * peak_intensity * k0z / sigma ** 2


def alpha_lfc(beta2: float, k0z: float, sigma: float) -> float:
    """Uniform chirp of the local-field phase parabola."""
    return 2.0 * beta2 * k0z / sigma ** 4


def nsm_comparison(t, sigma: float, beta2: float, k0z: float):
    """Kerr phase with ``n2 I0 = beta2 / sigma^2`` and its instantaneous frequency.

    Returns ``(phase, inst_freq)``. The Kerr medium then has the same central
    chirp as the local-field modulation.
    """
    t = np.asarray(t, dtype=float)
    phase = phi_nsm(t, beta2 / sigma ** 2, gaussian_intensity(t, 1.0, sigma), k0z)
    inst = -np.gradient(phase, t)
    return phase, inst


def chirp_linearity(t, inst_freq, half_width: float) -> float:
    """RMS deviation of ``inst_freq`` from its line fit over ``|t| <= half_width``.

    Normalised by the full peak-to-peak swing of ``inst_freq`` over all ``t``.
    """
    t = np.asarray(t, dtype=float)
    inst_freq = np.asarray(inst_freq, dtype=float)
    win = np.abs(t) <= half_width
    coef = np.polyfit(t[win], inst_freq[win], 1)
    resid = inst_freq[win] - np.polyval(coef, t[win])
    return float(np.sqrt(np.mean(resid ** 2)) / np.ptp(inst_freq))
