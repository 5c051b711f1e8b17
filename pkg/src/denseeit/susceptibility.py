"""Linear response of the medium: susceptibility, wave number, dispersion."""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .bloch import Toggles, steady_state
from .config import DerivedRates, SystemConfig, derive_rates

POLE_TOL = 1e-14


class PoleError(ValueError):
    """The susceptibility denominator vanishes at an evaluation point."""


class BranchError(ValueError):
    """1 + chi lies on the branch cut of the square root."""


@dataclass(frozen=True)
class DispersionCoefficients:
    """Taylor coefficients of k(omega) z around the probe detuning ``center``.

    All quantities are for the full depth (``k z`` rather than ``k``) in the
    model's rate unit. ``closed_*`` come from the analytic expansion,
    ``numeric_*`` from finite differences of :func:`wave_number`;
    ``svea_quadratic`` from finite differences of ``k0z (1 + chi / 2)``, the
    first-order form solved by the propagation module.
    """

    center: float
    closed_absorption: float
    closed_delay: float
    closed_quadratic: complex
    numeric_value: complex
    numeric_delay: complex
    numeric_quadratic: complex
    vacuum_transit: float
    suppression: float
    svea_quadratic: complex = 0j

    @property
    def retarded_delay(self) -> float:
        """Group delay with the vacuum transit removed (numeric route)."""
        return float(self.numeric_delay.real - self.vacuum_transit)

    @property
    def quadratic_mismatch(self) -> float:
        ref = abs(self.closed_quadratic)
        return abs(self.numeric_quadratic - self.closed_quadratic) / ref if ref else 0.0

    @property
    def svea_mismatch(self) -> float:
        ref = abs(self.closed_quadratic)
        return abs(self.svea_quadratic - self.closed_quadratic) / ref if ref else 0.0


def chi(delta31, rates: DerivedRates, omega32=None, lfc_shift: bool = True):
    """Weak-probe susceptibility at probe detuning ``delta31`` (array-friendly).

    ``lfc_shift=False`` drops the local-field frequency shift from the probe
    detuning, leaving the dilute-gas line shape with the same prefactor.
    """
    w = rates.omega32 if omega32 is None else complex(omega32)
    d31 = np.asarray(delta31, dtype=float)
    delta = d31 - rates.delta32
    d31t = d31 + rates.L * rates.gamma31 / 2.0 if lfc_shift else d31
    half_gamma = rates.gamma / 2.0
    gdec = rates.gamma_dec
    num = 3.0 * rates.L * rates.gamma31 / 2.0 * (delta + 1j * gdec)
    den = half_gamma * gdec - d31t * delta + abs(w) ** 2 / 4.0 \
        - 1j * (d31t * gdec + delta * half_gamma)
    small = np.abs(den) < POLE_TOL
    if np.any(small):
        where = np.atleast_1d(d31)[np.atleast_1d(small)][0]
        raise PoleError(f"susceptibility pole at delta31={where!r}")
    out = num / den
    return complex(out) if np.ndim(out) == 0 else out


def wave_number(delta31, rates: DerivedRates, omega32=None, lfc_shift: bool = True):
    """Full-depth complex phase ``k(omega) z = (omega/omega0) k0z sqrt(1 + chi)``."""
    c = np.asarray(chi(delta31, rates, omega32, lfc_shift))
    arg = 1.0 + c
    cut = (arg.real <= 0) & (arg.imag == 0)
    if np.any(cut):
        raise BranchError("1 + chi on the negative real axis")
    ratio = 1.0 + np.asarray(delta31, float) / rates.omega0
    out = ratio * rates.k0z * np.sqrt(arg)
    return complex(out) if np.ndim(out) == 0 else out


def _richardson(f, x0, h):
    """First and second derivatives by central differences, one Richardson pass."""
    def d1(s):
        return (f(x0 + s) - f(x0 - s)) / (2 * s)

    def d2(s):
        return (f(x0 + s) - 2 * f(x0) + f(x0 - s)) / (s * s)

    return ((4 * d1(h / 2) - d1(h)) / 3, (4 * d2(h / 2) - d2(h)) / 3)


def dispersion_expansion(rates: DerivedRates, omega32=None, center: float = 0.0,
                         lfc_shift: bool = True) -> DispersionCoefficients:
    """Closed-form and finite-difference expansion of k z around ``center``."""
    w = rates.omega32 if omega32 is None else complex(omega32)
    w2 = abs(w) ** 2
    suppression = rates.gamma * rates.gamma_dec / w2 if w2 else np.inf
    if suppression > 1e-2:
        warnings.warn(f"gamma*gamma_dec/|Omega32|^2 = {suppression:.3g} is not small; "
                      "the closed-form expansion is unreliable", RuntimeWarning, stacklevel=2)
    vacuum = rates.k0z / rates.omega0
    if rates.L == 0.0:
        closed_delay, closed_abs, closed_quad = 0.0, 0.0, 0j
    else:
        closed_delay = rates.group_delay
        closed_abs = rates.gamma_dec * rates.group_delay
        closed_quad = rates.k0z * complex(rates.beta2, rates.beta1)
    h = 1e-3 * abs(w) if w2 else 1e-3 * rates.gamma

    def kz(d):
        return wave_number(d, rates, w, lfc_shift)

    def kz_svea(d):
        return rates.k0z * (1.0 + 0.5 * chi(d, rates, w, lfc_shift))

    first, second = _richardson(kz, center, h)
    _, second_svea = _richardson(kz_svea, center, h)
    coeffs = DispersionCoefficients(
        center=center,
        closed_absorption=closed_abs,
        closed_delay=closed_delay,
        closed_quadratic=closed_quad,
        numeric_value=kz(center),
        numeric_delay=complex(first),
        numeric_quadratic=complex(second) / 2.0,
        vacuum_transit=vacuum,
        suppression=suppression,
        svea_quadratic=complex(second_svea) / 2.0,
    )
    if coeffs.quadratic_mismatch > 0.1:
        warnings.warn(f"closed-form and numeric quadratic coefficients differ by "
                      f"{100 * coeffs.quadratic_mismatch:.1f}%", RuntimeWarning, stacklevel=2)
    return coeffs


def steady_state_chi_oracle(delta31: float, config: SystemConfig,
                            linearized: bool | None = None) -> complex:
    """Susceptibility from the steady state of the equations of motion.

    Uses ``chi = 3 L gamma31 rho31 / Omega31`` with Omega31 = ``probe_amp``.
    """
    w = abs(complex(config.omega32))
    if not 0 < config.probe_amp <= 1e-3 * max(w, config.gamma31):
        raise ValueError(f"probe_amp={config.probe_amp:g} is not a weak probe "
                         f"(need 0 < probe_amp <= {1e-3 * max(w, config.gamma31):g})")
    lin = config.use_linearized_eom if linearized is None else linearized
    cfg = dataclasses.replace(config, delta31=float(delta31))
    rates = derive_rates(cfg, check=False)
    rho = steady_state(cfg.probe_amp, cfg.omega32, rates, Toggles.from_config(cfg),
                       linearized=lin)
    return complex(3.0 * rates.L * rates.gamma31 * rho[2, 0] / cfg.probe_amp)
