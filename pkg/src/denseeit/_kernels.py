"""Compiled inner loops: master-equation right-hand sides and RK4 tau-lines.

Level indices are 0, 1, 2 for |1>, |2>, |3>. Parameter vector layout::

    p = [delta31, delta, gamma31, gamma32, gamma_s, gamma_deph, trap_ratio, L,
         lfc_on, lfc_control_on, trapping_on]
"""

import numpy as np
from numba import njit

P_DELTA31, P_DELTA, P_G31, P_G32, P_GS, P_GDEPH, P_TRAP, P_L, P_LFC, P_LFCC, P_TRAPON = range(11)


@njit(cache=True, fastmath=True)
def rhs_scalar(p0, p1, p2, c10, c20, c21, o31, o32, p):
    """Derivative of the Hermitian state (populations p_i, coherences c_ij, i > j)."""
    g31 = p[P_G31]
    g32 = p[P_G32]
    gs = p[P_GS]
    if p[P_LFC] != 0.0:
        o31 = o31 + p[P_L] * g31 * c20
    if p[P_LFCC] != 0.0:
        o32 = o32 + p[P_L] * g32 * c21
    if p[P_TRAPON] != 0.0:
        R31 = g31 * p[P_TRAP] * p2
        R32 = g32 * p[P_TRAP] * p2
    else:
        R31 = 0.0
        R32 = 0.0
    k0 = R31 + gs
    k1 = R32 + gs
    k2 = g31 + g32 + R31 + R32
    a = -0.5 * o31
    b = -0.5 * o32
    h11 = -p[P_DELTA]
    h22 = -p[P_DELTA31]
    ca = np.conj(a)
    cb = np.conj(b)
    c01 = np.conj(c10)
    c02 = np.conj(c20)
    c12 = np.conj(c21)
    # commutator [H, rho] element by element
    C00 = ca * c20 - c02 * a
    C11 = cb * c21 - c12 * b
    C22 = a * c02 + b * c12 - c20 * ca - c21 * cb
    C10 = h11 * c10 + cb * c20 - c12 * a
    C20 = a * p0 + b * c10 + h22 * c20 - p2 * a
    C21 = a * c01 + b * p1 + (h22 - h11) * c21 - p2 * b
    dp0 = C00.imag - k0 * p0 + (g31 + R31) * p2 + gs * p1
    dp1 = C11.imag - k1 * p1 + (g32 + R32) * p2 + gs * p0
    dp2 = C22.imag - k2 * p2 + R31 * p0 + R32 * p1
    dc10 = -1j * C10 - (0.5 * (k0 + k1) + p[P_GDEPH]) * c10
    dc20 = -1j * C20 - 0.5 * (k0 + k2) * c20
    dc21 = -1j * C21 - 0.5 * (k1 + k2) * c21
    return dp0, dp1, dp2, dc10, dc20, dc21


@njit(cache=True, fastmath=True)
def rhs_full(rho, o31, o32, p, out):
    """Write d(rho)/dt of a 3x3 Hermitian ``rho`` into ``out``."""
    d = rhs_scalar(rho[0, 0].real, rho[1, 1].real, rho[2, 2].real,
                   rho[1, 0], rho[2, 0], rho[2, 1], o31, o32, p)
    out[0, 0] = d[0]
    out[1, 1] = d[1]
    out[2, 2] = d[2]
    out[1, 0] = d[3]
    out[2, 0] = d[4]
    out[2, 1] = d[5]
    out[0, 1] = np.conj(d[3])
    out[0, 2] = np.conj(d[4])
    out[1, 2] = np.conj(d[5])


@njit(cache=True, fastmath=True)
def _rk4_scalar(p0, p1, p2, c10, c20, c21, o31a, o31m, o31b, o32a, o32m, o32b, dt, p):
    h = 0.5 * dt
    a0, a1, a2, a3, a4, a5 = rhs_scalar(p0, p1, p2, c10, c20, c21, o31a, o32a, p)
    b0, b1, b2, b3, b4, b5 = rhs_scalar(p0 + h * a0, p1 + h * a1, p2 + h * a2,
                                        c10 + h * a3, c20 + h * a4, c21 + h * a5, o31m, o32m, p)
    e0, e1, e2, e3, e4, e5 = rhs_scalar(p0 + h * b0, p1 + h * b1, p2 + h * b2,
                                        c10 + h * b3, c20 + h * b4, c21 + h * b5, o31m, o32m, p)
    f0, f1, f2, f3, f4, f5 = rhs_scalar(p0 + dt * e0, p1 + dt * e1, p2 + dt * e2,
                                        c10 + dt * e3, c20 + dt * e4, c21 + dt * e5,
                                        o31b, o32b, p)
    c = dt / 6.0
    return (p0 + c * (a0 + 2.0 * b0 + 2.0 * e0 + f0),
            p1 + c * (a1 + 2.0 * b1 + 2.0 * e1 + f1),
            p2 + c * (a2 + 2.0 * b2 + 2.0 * e2 + f2),
            c10 + c * (a3 + 2.0 * b3 + 2.0 * e3 + f3),
            c20 + c * (a4 + 2.0 * b4 + 2.0 * e4 + f4),
            c21 + c * (a5 + 2.0 * b5 + 2.0 * e5 + f5))


@njit(cache=True, fastmath=True)
def _store(rho, p0, p1, p2, c10, c20, c21):
    rho[0, 0] = p0
    rho[1, 1] = p1
    rho[2, 2] = p2
    rho[1, 0] = c10
    rho[2, 0] = c20
    rho[2, 1] = c21
    rho[0, 1] = np.conj(c10)
    rho[0, 2] = np.conj(c20)
    rho[1, 2] = np.conj(c21)


@njit(cache=True, fastmath=True)
def rk4_step_full(rho, o31a, o31m, o31b, o32a, o32m, o32b, dt, p):
    """One RK4 step of the full equations, updating ``rho`` in place."""
    s = _rk4_scalar(rho[0, 0].real, rho[1, 1].real, rho[2, 2].real,
                    rho[1, 0], rho[2, 0], rho[2, 1], o31a, o31m, o31b, o32a, o32m, o32b, dt, p)
    _store(rho, s[0], s[1], s[2], s[3], s[4], s[5])


@njit(cache=True, fastmath=True)
def line_full(om31, om31_mid, om32, om32_mid, rho, dt, p, out31, out32, hist):
    """Advance one atom along the tau grid, recording rho31 and rho32.

    ``rho`` is advanced in place. ``hist`` is filled with the full state when
    its first dimension equals the grid length; pass a (0, 3, 3) array to skip.
    """
    n = om31.shape[0]
    keep = hist.shape[0] == n
    p0 = rho[0, 0].real
    p1 = rho[1, 1].real
    p2 = rho[2, 2].real
    c10 = rho[1, 0]
    c20 = rho[2, 0]
    c21 = rho[2, 1]
    out31[0] = c20
    out32[0] = c21
    if keep:
        _store(hist[0], p0, p1, p2, c10, c20, c21)
    for k in range(n - 1):
        p0, p1, p2, c10, c20, c21 = _rk4_scalar(
            p0, p1, p2, c10, c20, c21, om31[k], om31_mid[k], om31[k + 1],
            om32[k], om32_mid[k], om32[k + 1], dt, p)
        out31[k + 1] = c20
        out32[k + 1] = c21
        if keep:
            _store(hist[k + 1], p0, p1, p2, c10, c20, c21)
        if not (np.isfinite(c20.real) and np.isfinite(p2)):
            _store(rho, p0, p1, p2, c10, c20, c21)
            return k + 1
    _store(rho, p0, p1, p2, c10, c20, c21)
    return -1


@njit(cache=True, fastmath=True)
def rhs_linear(r31, r21, o31, o32, p):
    g31 = p[P_G31]
    gamma = g31 + p[P_G32] + p[P_GS]
    Gam31 = 0.5 * gamma - 1j * p[P_DELTA31]
    Gam21 = (p[P_GDEPH] + p[P_GS]) - 1j * p[P_DELTA]
    d31 = -Gam31 * r31 + 0.5j * o31 + 0.5j * o32 * r21
    if p[P_LFC] != 0.0:
        d31 += 0.5j * p[P_L] * g31 * r31
    d21 = -Gam21 * r21 + 0.5j * np.conj(o32) * r31
    return d31, d21


@njit(cache=True, fastmath=True)
def rk4_step_linear(r31, r21, o31a, o31m, o31b, o32a, o32m, o32b, dt, p):
    a1, b1 = rhs_linear(r31, r21, o31a, o32a, p)
    a2, b2 = rhs_linear(r31 + 0.5 * dt * a1, r21 + 0.5 * dt * b1, o31m, o32m, p)
    a3, b3 = rhs_linear(r31 + 0.5 * dt * a2, r21 + 0.5 * dt * b2, o31m, o32m, p)
    a4, b4 = rhs_linear(r31 + dt * a3, r21 + dt * b3, o31b, o32b, p)
    c = dt / 6.0
    return (r31 + c * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            r21 + c * (b1 + 2.0 * b2 + 2.0 * b3 + b4))


@njit(cache=True, fastmath=True)
def line_linear(om31, om31_mid, om32, om32_mid, r31, r21, dt, p, out31, out21):
    n = om31.shape[0]
    out31[0] = r31
    out21[0] = r21
    for k in range(n - 1):
        r31, r21 = rk4_step_linear(r31, r21, om31[k], om31_mid[k], om31[k + 1],
                                   om32[k], om32_mid[k], om32[k + 1], dt, p)
        out31[k + 1] = r31
        out21[k + 1] = r21
        if not np.isfinite(r31.real):
            return k + 1
    return -1


def pack_params(rates, lfc_on=True, lfc_control_on=True, trapping_on=True):
    return np.array([
        rates.delta31, rates.delta_two_photon, rates.gamma31, rates.gamma32,
        rates.gamma_s, rates.gamma_deph, rates.trap_ratio, rates.L,
        float(lfc_on), float(lfc_control_on), float(trapping_on),
    ])
