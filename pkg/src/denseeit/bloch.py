"""Atomic equations of motion for the Lambda system.

The state is a 3x3 density matrix over |1>, |2> (ground) and |3> (excited),
indexed 0, 1, 2. ``rho[2, 0]`` is the probe coherence rho31, ``rho[1, 0]``
the Raman coherence rho21.

:func:`lindblad_rhs` is written operator by operator with ``A_ij = |i><j|``
and serves as the reference; the compiled kernels in ``_kernels`` use the
same generator expanded element-wise and are checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from . import _kernels
from .config import DerivedRates, SystemConfig


class SolverError(RuntimeError):
    """Numerical failure inside a solver."""


class StepSizeError(SolverError):
    pass


class SteadyStateError(SolverError):
    pass


@dataclass(frozen=True)
class Toggles:
    lfc_on: bool = True
    lfc_control_on: bool = True
    trapping_on: bool = True

    @classmethod
    def from_config(cls, config: SystemConfig) -> "Toggles":
        return cls(config.lfc_on, config.lfc_control_on, config.trapping_on)


@dataclass(frozen=True)
class LocalFields:
    omega31_ext: complex
    omega32_ext: complex
    omega31_mic: complex
    omega32_mic: complex


@dataclass(frozen=True)
class PumpRates:
    R31: float
    R32: float


def A(i: int, j: int) -> np.ndarray:
    """Atomic operator |i><j| with 1-based level labels."""
    op = np.zeros((3, 3), complex)
    op[i - 1, j - 1] = 1.0
    return op


def ground_state() -> np.ndarray:
    return np.diag([1.0, 0.0, 0.0]).astype(complex)


def density_matrix_errors(rho, herm_tol=1e-12, trace_tol=1e-10, eig_floor=None) -> list[str]:
    """List violated density-matrix invariants (empty if none)."""
    rho = np.asarray(rho)
    errs = []
    if rho.shape != (3, 3):
        return [f"shape {rho.shape} != (3, 3)"]
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        errs.append(f"not Hermitian (max deviation {herm:.3e})")
    tr = abs(np.trace(rho) - 1.0)
    if tr > trace_tol:
        errs.append(f"trace deviates from 1 by {tr:.3e}")
    if eig_floor is not None:
        lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if lam < eig_floor:
            errs.append(f"eigenvalue {lam:.3e} below {eig_floor:g}")
    return errs


def density_matrix(values) -> np.ndarray:
    """Validate and return a density matrix as a complex array."""
    rho = np.array(values, dtype=complex)
    errs = density_matrix_errors(rho)
    if errs:
        raise ValueError("invalid density matrix: " + "; ".join(errs))
    return rho


def local_fields(omega31, omega32, rho, rates: DerivedRates, toggles: Toggles) -> LocalFields:
    """Microscopic Rabi frequencies after the Lorentz-Lorenz substitution."""
    o31 = complex(omega31)
    o32 = complex(omega32)
    m31 = o31 + rates.L * rates.gamma31 * rho[2, 0] if toggles.lfc_on else o31
    m32 = o32 + rates.L * rates.gamma32 * rho[2, 1] if toggles.lfc_control_on else o32
    return LocalFields(o31, o32, complex(m31), complex(m32))


def pump_rates(rho, rates: DerivedRates, toggles: Toggles) -> PumpRates:
    """Radiation-trapping pump rates, linear in the excited population."""
    if not toggles.trapping_on:
        return PumpRates(0.0, 0.0)
    rho33 = float(np.real(rho[2, 2]))
    return PumpRates(rates.gamma31 * rates.trap_ratio * rho33,
                     rates.gamma32 * rates.trap_ratio * rho33)


def _comm(a, b):
    return a @ b - b @ a


def _hc(x):
    return x + x.conj().T


def _frozen_rhs(rho, o31, o32, R31, R32, rates: DerivedRates) -> np.ndarray:
    """Generator with microscopic fields and pump rates held fixed (linear in rho)."""
    H = -(rates.delta_two_photon * A(2, 2) + rates.delta31 * A(3, 3)) \
        - 0.5 * _hc(o31 * A(3, 1) + o32 * A(3, 2))
    out = -1j * _comm(H, rho)
    for j, g3j, R3j in ((1, rates.gamma31, R31), (2, rates.gamma32, R32)):
        out -= 0.5 * g3j * _hc(_comm(rho @ A(3, j), A(j, 3)))
        out -= 0.5 * R3j * _hc(_comm(A(3, j), _comm(A(j, 3), rho)))
    out -= 0.5 * rates.gamma_s * _hc(_comm(A(2, 1), _comm(A(1, 2), rho)))
    out -= rates.gamma_deph * _hc(A(2, 2) @ rho @ A(1, 1))
    return out


def lindblad_rhs(rho, omega31, omega32, rates: DerivedRates,
                 toggles: Toggles = Toggles()) -> np.ndarray:
    """Full nonlinear master-equation derivative d(rho)/dt.

    ``omega31`` and ``omega32`` are the external Rabi frequencies; the local
    field correction and the trapping pump rates are evaluated from ``rho``.
    """
    rho = np.asarray(rho, dtype=complex)
    fields = local_fields(omega31, omega32, rho, rates, toggles)
    pumps = pump_rates(rho, rates, toggles)
    return _frozen_rhs(rho, fields.omega31_mic, fields.omega32_mic,
                       pumps.R31, pumps.R32, rates)


def linearized_rhs(rho31, rho21, omega31, omega32, rates: DerivedRates, lfc_on: bool = True):
    """Weak-probe equations for (rho31, rho21); returns their time derivatives."""
    d31 = -rates.Gamma31 * rho31 + 0.5j * omega31 + 0.5j * omega32 * rho21
    if lfc_on:
        d31 = d31 + 0.5j * rates.L * rates.gamma31 * rho31
    d21 = -rates.Gamma21 * rho21 + 0.5j * np.conj(omega32) * rho31
    return d31, d21


def dt_max(rates: DerivedRates, omega32=None) -> float:
    """Largest admissible RK4 step."""
    w = rates.omega32 if omega32 is None else omega32
    scale = max(rates.gamma, abs(w), abs(rates.delta31), abs(rates.delta_two_photon),
                rates.gamma31)
    return 0.05 / scale


def _check_dt(dt, rates, omega32=None):
    limit = dt_max(rates, omega32)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise StepSizeError(f"step dt={dt:g} outside (0, {limit:g}]")


def step_rk4(state, fields: Callable[[float], tuple], t: float, dt: float,
             rates: DerivedRates, toggles: Toggles = Toggles(), linearized: bool = False):
    """One classical RK4 step from time ``t``.

    ``state`` is a 3x3 density matrix, or a pair (rho31, rho21) when
    ``linearized``. ``fields(t)`` returns the external (omega31, omega32) and
    is sampled at t, t + dt/2 and t + dt.
    """
    fa, fm, fb = fields(t), fields(t + 0.5 * dt), fields(t + dt)
    _check_dt(dt, rates, max(abs(fa[1]), abs(fm[1]), abs(fb[1])))
    p = _kernels.pack_params(rates, toggles.lfc_on, toggles.lfc_control_on, toggles.trapping_on)
    if linearized:
        r31, r21 = state
        return _kernels.rk4_step_linear(complex(r31), complex(r21),
                                        complex(fa[0]), complex(fm[0]), complex(fb[0]),
                                        complex(fa[1]), complex(fm[1]), complex(fb[1]), dt, p)
    rho = np.array(state, dtype=complex)
    _kernels.rk4_step_full(rho, complex(fa[0]), complex(fm[0]), complex(fb[0]),
                           complex(fa[1]), complex(fm[1]), complex(fb[1]), dt, p)
    return rho


def midpoints(f: np.ndarray) -> np.ndarray:
    """Cubic (4th-order) interpolation of uniformly sampled ``f`` at half steps."""
    f = np.asarray(f, dtype=complex)
    n = f.shape[-1]
    if n < 4:
        return 0.5 * (f[..., 1:] + f[..., :-1])
    mid = np.empty(f.shape[:-1] + (n - 1,), complex)
    mid[..., 1:-1] = (9.0 * (f[..., 1:-2] + f[..., 2:-1]) - f[..., :-3] - f[..., 3:]) / 16.0
    mid[..., 0] = (3.0 * f[..., 0] + 6.0 * f[..., 1] - f[..., 2]) / 8.0
    mid[..., -1] = (3.0 * f[..., -1] + 6.0 * f[..., -2] - f[..., -3]) / 8.0
    return mid


def _as_line(value, n):
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return np.full(n, complex(arr)), np.full(n - 1, complex(arr))
    return arr, midpoints(arr)


def integrate_line(rho0, omega31, omega32, dt: float, rates: DerivedRates,
                   toggles: Toggles = Toggles(), n_steps: int | None = None,
                   keep_history: bool = False, omega31_mid=None, omega32_mid=None):
    """RK4-integrate the full equations along a uniformly sampled time line.

    Fields are arrays on the time grid (scalars mean constant fields; then
    ``n_steps`` sets the length). Returns ``(rho31, rho32, final_rho, history)``
    with ``history`` None unless requested.
    """
    if n_steps is None:
        n = np.asarray(omega31).size if np.ndim(omega31) else np.asarray(omega32).size
    else:
        n = n_steps + 1
    o31, m31 = _as_line(omega31, n)
    o32, m32 = _as_line(omega32, n)
    if omega31_mid is not None:
        m31 = np.asarray(omega31_mid, complex)
    if omega32_mid is not None:
        m32 = np.asarray(omega32_mid, complex)
    _check_dt(dt, rates, np.abs(o32).max())
    p = _kernels.pack_params(rates, toggles.lfc_on, toggles.lfc_control_on, toggles.trapping_on)
    out31 = np.empty(n, complex)
    out32 = np.empty(n, complex)
    hist = np.empty((n if keep_history else 0, 3, 3), complex)
    rho = np.array(rho0, dtype=complex)
    bad = _kernels.line_full(o31, m31, o32, m32, rho, dt, p, out31, out32, hist)
    if bad >= 0:
        raise SolverError(f"non-finite atomic state at time index {bad}")
    return out31, out32, rho, (hist if keep_history else None)


def evolve(rho0, omega31, omega32, t_total: float, dt: float, rates: DerivedRates,
           toggles: Toggles = Toggles()) -> np.ndarray:
    """Integrate under constant fields for ``t_total`` and return the final state."""
    n_steps = max(1, int(np.ceil(t_total / dt)))
    dt = t_total / n_steps
    p = _kernels.pack_params(rates, toggles.lfc_on, toggles.lfc_control_on, toggles.trapping_on)
    _check_dt(dt, rates, abs(omega32))
    n = n_steps + 1
    o31 = np.full(n, complex(omega31))
    o32 = np.full(n, complex(omega32))
    rho = np.array(rho0, dtype=complex)
    out = np.empty(n, complex)
    _kernels.line_full(o31, o31[:-1], o32, o32[:-1], rho, dt, p, out, out.copy(),
                       np.empty((0, 3, 3), complex))
    return rho


def liouvillian(o31, o32, R31, R32, rates: DerivedRates) -> np.ndarray:
    """9x9 matrix of the frozen generator acting on row-major vec(rho)."""
    cols = []
    for k in range(9):
        basis = np.zeros(9, complex)
        basis[k] = 1.0
        e = basis.reshape(3, 3)
        # _frozen_rhs is exact only on Hermitian input: split E = H1 + i H2
        h1 = 0.5 * (e + e.conj().T)
        h2 = -0.5j * (e - e.conj().T)
        col = _frozen_rhs(h1, o31, o32, R31, R32, rates) \
            + 1j * _frozen_rhs(h2, o31, o32, R31, R32, rates)
        cols.append(col.ravel())
    return np.array(cols).T


def _frozen_steady(o31, o32, R31, R32, rates) -> np.ndarray:
    M = liouvillian(o31, o32, R31, R32, rates)
    M[0, :] = np.eye(3).ravel()
    rhs = np.zeros(9, complex)
    rhs[0] = 1.0
    rho = np.linalg.solve(M, rhs).reshape(3, 3)
    return 0.5 * (rho + rho.conj().T)


def _linearized_steady(omega31, omega32, rates: DerivedRates, lfc_on=True):
    """Direct 2x2 solve of the weak-probe equations."""
    g31 = rates.Gamma31 - (0.5j * rates.L * rates.gamma31 if lfc_on else 0.0)
    M = np.array([[-g31, 0.5j * omega32],
                  [0.5j * np.conj(omega32), -rates.Gamma21]])
    return np.linalg.solve(M, np.array([-0.5j * omega31, 0.0]))


def steady_state(omega31, omega32, rates: DerivedRates, toggles: Toggles = Toggles(),
                 linearized: bool = False, tol: float = 1e-12) -> np.ndarray:
    """Steady state for constant external fields.

    The linearized branch returns |1><1| dressed with the weak-probe coherences.
    The full branch solves the self-consistency between the state and the
    state-dependent quantities (microscopic fields, pump rates) with a
    quasi-Newton root search over (rho31, rho32, rho33), each evaluation being
    an exact linear steady state at frozen values; long-time integration is
    the fallback.
    """
    omega31 = complex(omega31)
    omega32 = complex(omega32)
    if linearized:
        r31, r21 = _linearized_steady(omega31, omega32, rates, toggles.lfc_on)
        rho = ground_state()
        rho[2, 0], rho[0, 2] = r31, np.conj(r31)
        rho[1, 0], rho[0, 1] = r21, np.conj(r21)
        return rho

    def solve_at(y):
        r31 = complex(y[0], y[1])
        r32 = complex(y[2], y[3])
        frozen = np.zeros((3, 3), complex)
        frozen[2, 0], frozen[2, 1], frozen[2, 2] = r31, r32, y[4]
        f = local_fields(omega31, omega32, frozen, rates, toggles)
        pu = pump_rates(frozen, rates, toggles)
        return _frozen_steady(f.omega31_mic, f.omega32_mic, pu.R31, pu.R32, rates)

    def pack(rho):
        return np.array([rho[2, 0].real, rho[2, 0].imag, rho[2, 1].real, rho[2, 1].imag,
                         rho[2, 2].real])

    rho = solve_at(np.zeros(5))
    nonlinear = toggles.lfc_on or toggles.lfc_control_on or toggles.trapping_on
    if nonlinear:
        y0 = pack(rho)
        sol = optimize.root(lambda y: pack(solve_at(y)) - y, y0, method="hybr",
                            options={"xtol": 1e-15})
        rho = solve_at(sol.x)
    residual = np.abs(pack(solve_at(pack(rho))) - pack(rho)).max() if nonlinear else 0.0
    if residual > tol:
        rho = _steady_by_integration(rho, omega31, omega32, rates, toggles, tol)
    return rho


def _steady_by_integration(rho, omega31, omega32, rates, toggles, tol):
    dt = dt_max(rates, omega32)
    chunk = 200.0 / max(rates.gamma31 * (1.0 - rates.trap_ratio), rates.gamma_s, 1e-3)
    chunk = min(chunk, 2e4)
    for _ in range(50):
        new = evolve(rho, omega31, omega32, chunk, dt, rates, toggles)
        change = np.abs(new - rho).max()
        rho = new
        if change < tol:
            return rho
    deriv = np.abs(lindblad_rhs(rho, omega31, omega32, rates, toggles)).max()
    raise SteadyStateError(f"steady state not converged; residual |drho/dt|={deriv:.3e}")
