"""Local-field phase modulation compared with a Kerr medium.

A Kerr medium whose peak index change is chosen to give the same central
chirp produces a phase that follows the intensity profile, so its chirp is
linear only near the pulse centre. The local-field phase is a parabola in
time and its chirp is uniform.

Run: python3 demos/03_local_field_versus_kerr.py
"""

import numpy as np

from denseeit import analytic as an
from denseeit.config import load_preset

pulse = an.AnalyticPulse.from_config(load_preset("fig4"))
t = np.linspace(-3 * pulse.sigma, 3 * pulse.sigma, 6001)
phase_kerr, inst_kerr = an.nsm_comparison(t, pulse.sigma, pulse.beta2, pulse.k0z)
phase_lfc = an.phi_lfc(t + pulse.group_delay, pulse)
inst_lfc = -np.gradient(phase_lfc, t)

print(f"uniform local-field chirp  {an.alpha_lfc(pulse.beta2, pulse.k0z, pulse.sigma):.4g}")
for half in (0.5, 1.0, 1.5):
    print(f"|t| <= {half:.1f} sigma: line-fit residual  Kerr "
          f"{an.chirp_linearity(t, inst_kerr, half * pulse.sigma):.3f}  local field "
          f"{an.chirp_linearity(t, inst_lfc, half * pulse.sigma):.1e}")

print("\npolarization phases relative to the field (rad)")
s = np.array([-1.5, -0.5, 0.5, 1.5]) * pulse.sigma
e = an.analytic_envelope(0.0, s, pulse)
p0, plfc = an.polarization_components(0.0, s, pulse)
for si, a, b in zip(s / pulse.sigma, an.relative_phase(p0, e), an.relative_phase(plfc, e)):
    print(f"  t = {si:+.1f} sigma: group-delay part {a:+.3f}, local-field part {b:+.3f}")
