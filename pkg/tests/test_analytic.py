import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from denseeit.analytic import (AnalyticPulse, alpha_lfc, alpha_nsm, analytic_envelope,
                               chirp_linearity, envelope_derivatives, exact_phase,
                               gaussian_intensity, nsm_comparison, phi_lfc, phi_nsm,
                               polarization_components, relative_phase)
from denseeit.config import gaussian_input

# Frozen from an independent mpmath evaluation (fig4 parameters).
PEAK_RATIO_FIG4 = 0.558775803987072965
PHI_PEAK_FIG4 = 0.118800673552743527
ALPHA_LFC_FIG4 = 5.94003367763717637e-4
WIDTH_SQ_FIG4 = complex(550.082003270212824, -95.0405388421948219)


@pytest.fixture(scope="module")
def pulse():
    from denseeit.config import load_preset
    return AnalyticPulse.from_config(load_preset("fig4"))


def test_entrance_is_input_gaussian(pulse, fig4):
    t = np.linspace(-100, 100, 201)
    assert np.allclose(analytic_envelope(0.0, t, pulse), gaussian_input(t, fig4), rtol=1e-13, atol=0)


def test_real_width_limit(pulse):
    p = dataclasses.replace(pulse, beta2=0.0, gamma_dec=0.0)
    t = np.linspace(-50, 50, 101) + p.group_delay
    e = analytic_envelope(1.0, t, p)
    assert np.all(e.imag == 0)
    s_t = np.sqrt(p.sigma ** 2 + 2 * p.k0z * p.beta1)
    assert abs(analytic_envelope(1.0, p.group_delay, p)) / p.amp == pytest.approx(p.sigma / s_t)


def test_fig4_peak_and_width(pulse):
    assert pulse.width_squared() == pytest.approx(WIDTH_SQ_FIG4, rel=1e-13)
    peak = abs(analytic_envelope(1.0, pulse.group_delay, pulse)) / pulse.amp
    assert peak == pytest.approx(PEAK_RATIO_FIG4, rel=1e-12)
    assert pulse.width_squared().real >= pulse.sigma ** 2


def test_branch_continuous_in_depth(pulse):
    z = np.linspace(0, 1, 1001)
    ratio = pulse.width_ratio(z)
    assert np.abs(np.diff(ratio)).max() < 1e-3
    assert ratio[0] == 1.0


def test_phase_parabola(pulse):
    assert phi_lfc(pulse.group_delay, pulse) == pytest.approx(PHI_PEAK_FIG4, rel=1e-12)
    edges = phi_lfc(pulse.group_delay + np.array([-1, 1]) * pulse.sigma, pulse)
    assert np.allclose(edges, 0.0, atol=1e-15)
    t = np.linspace(50, 250, 2001)
    inst = -np.gradient(phi_lfc(t, pulse), t)
    assert np.allclose(np.diff(inst[1:-1]) / np.diff(t[1:-1]), ALPHA_LFC_FIG4, rtol=1e-8)
    assert alpha_lfc(pulse.beta2, pulse.k0z, pulse.sigma) == pytest.approx(ALPHA_LFC_FIG4,
                                                                          rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(1e-4, 0.04), ratio=st.floats(0.2, 1.0))
def test_exact_phase_follows_parabola_in_weak_regime(x, ratio):
    """With 2 k0z beta1 / sigma^2 = x <= 0.04 the exact phase stays within 5% of the parabola."""
    sigma = 20.0
    beta1 = 0.2
    k0z = x * sigma ** 2 / (2 * beta1)
    p = AnalyticPulse(1.0, sigma, k0z, 100.0, 0.0, beta1, ratio * beta1)
    t = p.group_delay + np.linspace(-1, 1, 201) * sigma
    par = phi_lfc(t, p)
    assert np.abs(exact_phase(1.0, t, p) - par).max() <= 0.05 * par.max()


def test_exact_phase_departs_from_parabola_at_fig4(pulse):
    t = pulse.group_delay + np.linspace(-1, 1, 201) * pulse.sigma
    peak_exact = exact_phase(1.0, t, pulse)[100]
    assert peak_exact < 0.8 * phi_lfc(pulse.group_delay, pulse)


def test_derivatives_are_closed_form(pulse):
    t = np.linspace(0, 300, 30001)
    e, d1, d2 = envelope_derivatives(1.0, t, pulse)
    h = t[1] - t[0]
    assert np.allclose(np.gradient(e, h)[5:-5], d1[5:-5], atol=1e-8 * np.abs(d1).max())
    assert np.allclose(np.gradient(d1, h)[5:-5], d2[5:-5], atol=1e-6 * np.abs(d2).max())


def test_polarization_lfc_is_image_of_p0(pulse):
    """P_LFC / beta2 equals i d/dt of P0 / (n_g / omega0)."""
    t = np.linspace(0, 300, 601)
    p0, plfc = polarization_components(1.0, t, pulse)
    _, d1, d2 = envelope_derivatives(1.0, t, pulse)
    assert np.allclose(p0 / (pulse.n_g / pulse.omega0), 1j * d1, rtol=1e-14)
    assert np.allclose(plfc / pulse.beta2, 1j * (1j * d2), rtol=1e-14)


def test_p0_vanishes_at_peak(pulse):
    t = pulse.group_delay + np.linspace(-60, 60, 1201)
    p0, _ = polarization_components(1.0, t, pulse)
    assert np.argmin(np.abs(p0)) == 600


def test_phase_relations_real_gaussian(pulse):
    p = dataclasses.replace(pulse, beta1=0.0, beta2=0.0, gamma_dec=0.0)
    p = dataclasses.replace(p, beta2=1e-300)  # keep P_LFC nonzero with a real width
    s = np.linspace(-3, 3, 601) * p.sigma
    t = s + p.group_delay
    e = analytic_envelope(1.0, t, p)
    p0, plfc = polarization_components(1.0, t, p)
    d0 = relative_phase(p0, e)
    dl = relative_phase(plfc, e)
    assert np.allclose(d0[s < 0], np.pi / 2) and np.allclose(d0[s > 0], -np.pi / 2)
    out = np.abs(s) > 1.01 * p.sigma
    inside = np.abs(s) < 0.99 * p.sigma
    assert np.allclose(np.abs(dl[out]), np.pi) and np.allclose(dl[inside], 0.0)


def test_carrier_factor_drops_out_of_relative_phase(pulse):
    t = np.linspace(100, 200, 11)
    e = analytic_envelope(1.0, t, pulse)
    a, b = polarization_components(1.0, t, pulse)
    ca, cb = polarization_components(1.0, t, pulse, carrier=True)
    ph = np.exp(1j * (pulse.k0z - pulse.omega0 * t))
    assert np.allclose(relative_phase(ca, e * ph), relative_phase(a, e))
    assert np.allclose(relative_phase(cb, e * ph), relative_phase(b, e))


def test_nsm_chirps(pulse):
    t = np.linspace(-100, 100, 201)
    assert np.all(phi_nsm(t, 0.0, gaussian_intensity(t, 1.0, 20.0), 316.0) == 0)
    assert phi_nsm(0.0, 2.0, lambda t: 3.0, 5.0) == 30.0
    n2i0 = pulse.beta2 / pulse.sigma ** 2
    assert alpha_nsm(n2i0, 1.0, pulse.k0z, pulse.sigma) == alpha_lfc(pulse.beta2, pulse.k0z,
                                                                     pulse.sigma)


def test_nsm_central_chirp_matches_lfc(pulse):
    t = np.linspace(-10, 10, 2001)
    _, inst = nsm_comparison(t, pulse.sigma, pulse.beta2, pulse.k0z)
    slope = np.polyfit(t[900:1101], inst[900:1101], 1)[0]
    # window curvature costs ~ (1/sigma)^2 relative
    assert slope == pytest.approx(alpha_lfc(pulse.beta2, pulse.k0z, pulse.sigma), rel=3e-3)


def test_nsm_chirp_linear_only_near_centre(pulse):
    t = np.linspace(-4, 4, 8001) * pulse.sigma
    _, inst = nsm_comparison(t, pulse.sigma, pulse.beta2, pulse.k0z)
    assert chirp_linearity(t, inst, 0.5 * pulse.sigma) <= 0.02
    assert chirp_linearity(t, inst, 1.5 * pulse.sigma) >= 0.10
    # the local-field chirp is linear everywhere
    lfc_inst = -np.gradient(phi_lfc(t + pulse.group_delay, pulse), t)
    assert chirp_linearity(t, lfc_inst, 3 * pulse.sigma) < 1e-10
