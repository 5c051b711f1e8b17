"""Co-propagation of the probe envelope and the atoms in the retarded frame.

With tau = t - z/c and z normalised to [0, 1], the envelope obeys
``d Omega31 / dz = i g rho31(z, tau)`` where ``g = 1.5 L gamma31 k0z``. This
fixes the weak-probe gain at ``exp(i k0z chi / 2)`` for the susceptibility
of :mod:`denseeit.susceptibility`.

Each z-slab is advanced by Heun's method: the atoms are integrated along the
whole tau line with RK4 for the current field, an Euler predictor gives the
field at the next slab, the atoms are re-integrated there, and the trapezoidal
corrector produces the final field.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bloch import SolverError, Toggles, dt_max, ground_state, midpoints, steady_state
from .config import ConfigError, DerivedRates, SystemConfig, derive_rates, gaussian_input

log = logging.getLogger(__name__)

SAMPLES_PER_SIGMA = 40
WINDOW_SIGMAS = 6.0
MAX_FIELD_STEP = 0.05
MAX_SPURIOUS_GROWTH = 10.0


class PulseError(ValueError):
    """A field slice cannot be analysed (e.g. the peak touches the window edge)."""


@dataclass(frozen=True)
class FieldRecord:
    """Probe (and optionally control) envelope sampled on the (z, tau) grid.

    ``omega31[i]`` is the slice at normalised depth ``z[i]``. ``rho`` maps a
    z index of the full grid to the stored atomic history at that depth
    (shape ``(n_tau, 3, 3)``), when snapshots were requested.
    """

    z: np.ndarray
    tau: np.ndarray
    omega31: np.ndarray
    omega32: np.ndarray | None
    config: SystemConfig
    rho: dict = field(default_factory=dict)

    @property
    def vacuum_transit(self) -> float:
        """Lab-frame transit time z/c of the whole sample (not in tau)."""
        return self.config.k0z / self.config.omega0_over_gamma

    def output(self) -> np.ndarray:
        return self.omega31[-1]


@dataclass(frozen=True)
class PulseMetrics:
    peak_ratio: float
    peak_amplitude: float
    arrival_time: float
    width: float
    peak_phase: float
    phase_curvature: float
    tau: np.ndarray
    phase: np.ndarray
    inst_freq: np.ndarray
    chirp_slope: float
    chirp_intercept: float
    chirp_residual: float
    chirp_flag: str | None = None

    def summary(self) -> dict:
        """JSON-friendly scalar view."""
        return {
            "peak_ratio": self.peak_ratio,
            "peak_amplitude": self.peak_amplitude,
            "arrival_time": self.arrival_time,
            "width": self.width,
            "peak_phase": self.peak_phase,
            "phase_curvature": self.phase_curvature,
            "chirp_slope": self.chirp_slope,
            "chirp_intercept": self.chirp_intercept,
            "chirp_residual": self.chirp_residual,
            "chirp_flag": self.chirp_flag,
        }


def coupling_constant(rates: DerivedRates) -> float:
    """Field-medium coupling g per unit normalised depth."""
    return rates.coupling


def grid_diagnostics(config: SystemConfig, rates: DerivedRates | None = None) -> list[str]:
    """Resolution problems of the (z, tau) grid; empty when adequate."""
    rates = rates or derive_rates(config)
    diags = []
    dt = config.dtau
    sigma = config.probe_width
    if sigma / dt < SAMPLES_PER_SIGMA:
        diags.append(f"n_tau={config.n_tau}: {sigma / dt:.1f} samples per probe width, "
                     f"need >= {SAMPLES_PER_SIGMA}")
    limit = dt_max(rates)
    if dt > limit * (1 + 1e-12):
        diags.append(f"n_tau={config.n_tau}: tau step {dt:.4g} exceeds RK4 limit {limit:.4g}")
    lo, hi = config.tau_window()
    delay = rates.group_delay if math.isfinite(rates.group_delay) else 0.0
    if lo > -WINDOW_SIGMAS * sigma:
        diags.append(f"tau window starts at {lo:.4g} > -{WINDOW_SIGMAS:g} sigma")
    if hi < delay + WINDOW_SIGMAS * sigma:
        diags.append(f"tau window ends at {hi:.4g} < delay + {WINDOW_SIGMAS:g} sigma "
                     f"= {delay + WINDOW_SIGMAS * sigma:.4g}")
    growth = heun_growth(config, rates)
    if growth > MAX_SPURIOUS_GROWTH:
        diags.append(f"n_z={config.n_z}: z step unstable for strongly absorbing frequency "
                     f"components (spurious growth x{growth:.3g}); increase n_z")
    return diags


def heun_growth(config: SystemConfig, rates: DerivedRates) -> float:
    """Largest amplification the z-march applies to any resolvable frequency.

    Uses the weak-probe response ``rho31 / Omega31 = chi / (3 L gamma31)`` at
    every frequency of the tau grid and the Heun factor ``1 + x + x^2 / 2``.
    """
    if rates.L == 0.0:
        return 1.0
    from .susceptibility import PoleError, chi

    nu = 2 * np.pi * np.fft.fftfreq(config.n_tau, config.dtau)
    try:
        response = chi(rates.delta31 + nu, rates, lfc_shift=config.lfc_on)
    except PoleError:
        return math.inf
    x = 1j * (rates.k0z / 2.0) * response / (config.n_z - 1)
    amp = np.abs(1.0 + x + 0.5 * x * x).max()
    return float(amp ** (config.n_z - 1))


def initial_atoms(config: SystemConfig, rates: DerivedRates) -> np.ndarray:
    """Atomic state before the probe arrives (probe off, control on)."""
    if config.use_linearized_eom or config.initial_state == "ground":
        return ground_state()
    return steady_state(0.0, config.omega32, rates, Toggles.from_config(config))


class _Atoms:
    """Integrates one tau line of atoms for given fields."""

    def __init__(self, config: SystemConfig, rates: DerivedRates, rho0: np.ndarray):
        self.linear = config.use_linearized_eom
        self.p = _kernels.pack_params(rates, config.lfc_on, config.lfc_control_on,
                                      config.trapping_on)
        self.rho0 = rho0
        self.dt = config.dtau
        self.n = config.n_tau
        self.no_hist = np.empty((0, 3, 3), complex)

    def __call__(self, o31, m31, o32, m32, keep_history=False):
        out31 = np.empty(self.n, complex)
        out32 = np.empty(self.n, complex)
        hist = None
        if self.linear:
            bad = _kernels.line_linear(o31, m31, o32, m32, 0j, 0j, self.dt, self.p,
                                       out31, out32)
            out32[:] = 0.0
        else:
            hist = np.empty((self.n, 3, 3), complex) if keep_history else self.no_hist
            bad = _kernels.line_full(o31, m31, o32, m32, self.rho0.copy(), self.dt, self.p,
                                     out31, out32, hist)
        return out31, out32, bad, (hist if keep_history else None)


def propagate(config: SystemConfig, store_every: int = 1, snapshots=(),
              probe=None) -> FieldRecord:
    """Propagate the probe through the medium.

    ``store_every`` is the z stride of stored slices (the last slice is always
    kept); ``snapshots`` lists z indices whose atomic histories are kept.
    ``probe`` replaces the Gaussian input by samples on ``config.tau_grid()``.
    """
    rates = derive_rates(config)
    diags = grid_diagnostics(config, rates)
    if diags:
        raise ConfigError(diags)
    if store_every < 1:
        raise ConfigError([f"store_every={store_every}: must be >= 1"])

    tau = config.tau_grid()
    dt = config.dtau
    n_z = config.n_z
    dz = 1.0 / (n_z - 1)
    g = coupling_constant(rates)
    g32 = rates.coupling_control
    steer_control = config.propagate_control and not config.use_linearized_eom

    atoms = _Atoms(config, rates, initial_atoms(config, rates))
    if probe is None:
        om31 = gaussian_input(tau, config)
        mid31 = gaussian_input(tau[:-1] + 0.5 * dt, config)
    else:
        om31 = np.array(probe, dtype=complex)
        if om31.shape != tau.shape:
            raise ConfigError([f"probe has shape {om31.shape}, expected {tau.shape}"])
        mid31 = midpoints(om31)
    om32 = np.full(config.n_tau, complex(config.omega32))
    mid32 = om32[:-1].copy()

    zs, stored31, stored32, rho_snap = [0.0], [om31.copy()], [om32.copy()], {}
    snapshots = set(int(i) for i in snapshots)

    for iz in range(n_z - 1):
        r31, r32, bad, hist = atoms(om31, mid31, om32, mid32, keep_history=iz in snapshots)
        _check_line(bad, iz, r31)
        if hist is not None:
            rho_snap[iz] = hist
        if iz == 0:
            step = g * dz * np.abs(r31).max() / max(config.probe_amp, 1e-300)
            if step > MAX_FIELD_STEP:
                raise ConfigError([f"n_z={n_z}: relative field change per z step "
                                   f"{step:.3g} > {MAX_FIELD_STEP}"])
        pred31 = om31 + 1j * g * dz * r31
        pred32 = om32 + 1j * g32 * dz * r32 if steer_control else om32
        p31, p32, bad, _ = atoms(pred31, midpoints(pred31), pred32,
                                 midpoints(pred32) if steer_control else mid32)
        _check_line(bad, iz + 1, p31)
        om31 = om31 + 0.5j * g * dz * (r31 + p31)
        mid31 = midpoints(om31)
        if steer_control:
            om32 = om32 + 0.5j * g32 * dz * (r32 + p32)
            mid32 = midpoints(om32)
        bad_idx = np.flatnonzero(~np.isfinite(om31))
        if bad_idx.size:
            raise SolverError(f"field diverged at z index {iz + 1}, tau index {bad_idx[0]}")
        if (iz + 1) % store_every == 0 or iz + 1 == n_z - 1:
            zs.append((iz + 1) * dz)
            stored31.append(om31.copy())
            stored32.append(om32.copy())

    if n_z - 1 in snapshots:
        *_, hist = atoms(om31, mid31, om32, mid32, keep_history=True)
        rho_snap[n_z - 1] = hist

    arrs = [np.array(zs), tau, np.array(stored31),
            np.array(stored32) if config.propagate_control else None]
    for a in arrs:
        if a is not None:
            a.setflags(write=False)
    return FieldRecord(arrs[0], arrs[1], arrs[2], arrs[3], config, rho_snap)


def _check_line(bad, iz, r31):
    if bad >= 0:
        raise SolverError(f"atomic state diverged at z index {iz}, tau index {bad}")


def _quadratic_peak(tau, amp, i):
    """Vertex of the parabola through three samples around index ``i``."""
    y0, y1, y2 = amp[i - 1], amp[i], amp[i + 1]
    denom = y0 - 2.0 * y1 + y2
    shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    dt = tau[1] - tau[0]
    return tau[i] + shift * dt, y1 - 0.25 * (y0 - y2) * shift


def measure_pulse(tau, envelope, sigma: float, reference_amp: float,
                  margin_sigmas: float = 3.0) -> PulseMetrics:
    """Peak, arrival time, width, phase and chirp of one field slice.

    ``sigma`` is the input width; it sets the chirp-fit window
    ``|tau - tau_peak| <= sigma`` and the boundary margin.
    """
    tau = np.asarray(tau, float)
    env = np.asarray(envelope, complex)
    amp = np.abs(env)
    i = int(np.argmax(amp))
    if tau[i] - tau[0] < margin_sigmas * sigma or tau[-1] - tau[i] < margin_sigmas * sigma:
        raise PulseError(f"pulse peak at tau={tau[i]:.4g} closer than {margin_sigmas:g} sigma "
                         f"to the window edge [{tau[0]:.4g}, {tau[-1]:.4g}]")
    t_peak, a_peak = _quadratic_peak(tau, amp, i)

    # Gaussian width from a parabola fit of log|E| above 10% of the peak.
    core = amp >= 0.1 * amp[i]
    c2 = np.polyfit(tau[core] - t_peak, np.log(amp[core]), 2)[0]
    width = math.sqrt(-1.0 / (2.0 * c2)) if c2 < 0 else math.inf

    # Unwrap outward from the peak so noise in the tails cannot shift the core.
    phase = np.full(tau.shape, np.nan)
    live = amp >= 1e-8 * amp[i]
    lo = i
    while lo > 0 and live[lo - 1]:
        lo -= 1
    hi = i
    while hi < len(tau) - 1 and live[hi + 1]:
        hi += 1
    seg = np.angle(env[lo:hi + 1])
    right = np.unwrap(seg[i - lo:])
    left = np.unwrap(seg[:i - lo + 1][::-1])[::-1]
    phase[lo:hi + 1] = np.concatenate([left[:-1], right])
    inst = np.full(tau.shape, np.nan)
    inst[lo:hi + 1] = -np.gradient(phase[lo:hi + 1], tau[1] - tau[0])

    win = (np.abs(tau - t_peak) <= sigma) & live
    x = tau[win] - t_peak
    pc = np.polyfit(x, phase[win], 2)
    peak_phase = float(np.polyval(pc, 0.0))
    flag = None
    if np.ptp(phase[win]) < 1e-12:
        slope = intercept = resid = 0.0
        flag = "flat phase: chirp fit degenerate"
    else:
        slope, intercept = np.polyfit(x, inst[win], 1)
        resid = float(np.sqrt(np.mean((inst[win] - (slope * x + intercept)) ** 2)))
    return PulseMetrics(
        peak_ratio=float(a_peak / reference_amp),
        peak_amplitude=float(a_peak),
        arrival_time=float(t_peak),
        width=float(width),
        peak_phase=peak_phase,
        phase_curvature=float(pc[0]),
        tau=tau,
        phase=phase,
        inst_freq=inst,
        chirp_slope=float(slope),
        chirp_intercept=float(intercept),
        chirp_residual=float(resid),
        chirp_flag=flag,
    )


def measure_record(record: FieldRecord, index: int = -1) -> PulseMetrics:
    """:func:`measure_pulse` on a stored slice of ``record``."""
    cfg = record.config
    return measure_pulse(record.tau, record.omega31[index], cfg.probe_width, cfg.probe_amp)
