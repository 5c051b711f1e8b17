import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from denseeit.config import (PRESET_NAMES, ConfigError, SystemConfig, config_from_dict,
                             derive_rates, gaussian_input, load_config, load_preset,
                             validate_config)

# Frozen from an independent mpmath evaluation (fig4 parameters).
L_FIG4 = 1.26651479552922214
DELAY_FIG4 = 150.082003270212824
BETA1_FIG4 = 0.237471524161729152
BETA2_FIG4 = 0.150380599433852566
COUPLING_FIG4 = 300.164006540425648


def test_default_config_is_baseline_preset():
    assert SystemConfig() == load_preset("fig3-baseline")


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_load_and_validate(name):
    cfg = load_preset(name)
    assert validate_config(cfg) == []


def test_fig2_density_products():
    assert derive_rates(load_preset("fig2a")).L == pytest.approx(1e-5, rel=1e-12)
    assert derive_rates(load_preset("fig2b")).L == pytest.approx(4.0, rel=1e-12)


def test_fig4_derived_rates_match_oracle(fig4):
    r = derive_rates(fig4)
    assert r.L == pytest.approx(L_FIG4, rel=1e-14)
    assert r.group_delay == pytest.approx(DELAY_FIG4, rel=1e-12)
    assert r.beta1 == pytest.approx(BETA1_FIG4, rel=1e-12)
    assert r.beta2 == pytest.approx(BETA2_FIG4, rel=1e-12)
    assert r.coupling == pytest.approx(COUPLING_FIG4, rel=1e-12)


def test_complex_rates(baseline):
    cfg = baseline.replace(delta31=0.3, delta32=-0.1)
    r = derive_rates(cfg)
    assert r.gamma == pytest.approx(cfg.gamma31 + cfg.gamma32 + cfg.gamma_s)
    assert r.gamma_dec == pytest.approx(cfg.gamma_deph + cfg.gamma_s)
    assert r.Gamma31 == pytest.approx(complex(r.gamma / 2, -0.3))
    assert r.Gamma21 == pytest.approx(complex(r.gamma_dec, -0.4))
    assert r.delta31_tilde == pytest.approx(0.3 + r.L * cfg.gamma31 / 2)


def test_l_equal_one_shift_is_half_gamma31(baseline):
    cfg = baseline.replace(n_lambda3=4 * math.pi ** 2)
    r = derive_rates(cfg)
    assert r.L == pytest.approx(1.0, rel=1e-15)
    assert r.delta31_tilde - r.delta31 == pytest.approx(0.5 * cfg.gamma31)


def test_zero_density_has_no_dispersion(baseline):
    r = derive_rates(baseline.replace(n_lambda3=0.0))
    assert (r.n_g, r.beta1, r.beta2, r.group_delay) == (0.0, 0.0, 0.0, 0.0)


def test_zero_control_gives_infinite_group_index(baseline):
    r = derive_rates(baseline.replace(omega32=0.0))
    assert math.isinf(r.n_g) and math.isinf(r.beta1)


@pytest.mark.parametrize("change, fragment", [
    ({"trap_ratio": 1.0}, "trap_ratio must be < 1"),
    ({"trap_ratio": -0.1}, "trap_ratio"),
    ({"gamma31": 0.0}, "gamma31"),
    ({"gamma32": -1.0}, "gamma32"),
    ({"probe_width": 0.0}, "probe_width"),
    ({"gamma_s": float("nan")}, "gamma_s"),
    ({"n_z": 1}, "n_z"),
    ({"initial_state": "excited"}, "initial_state"),
    ({"lfc_on": 1}, "lfc_on"),
    ({"use_linearized_eom": True, "probe_amp": 0.5}, "weak probe"),
])
def test_validate_config_diagnostics(baseline, change, fragment):
    diags = validate_config(baseline.replace(**change))
    assert any(fragment in d for d in diags), diags


def test_derive_rates_raises_config_error(baseline):
    with pytest.raises(ConfigError) as info:
        derive_rates(baseline.replace(trap_ratio=1.0))
    assert info.value.diagnostics


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config key"):
        config_from_dict({"gamma_31": 1.0})


def test_config_round_trip_with_complex_control(tmp_path, baseline):
    cfg = baseline.replace(omega32=complex(1.5, 0.5))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg


def test_invalid_json_is_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown preset"):
        load_preset("fig9")


def test_gaussian_input(baseline):
    assert gaussian_input(0.0, baseline) == pytest.approx(baseline.probe_amp)
    assert abs(gaussian_input(baseline.probe_width, baseline)) == pytest.approx(
        baseline.probe_amp * math.exp(-0.5))


def test_default_window_is_centred_between_input_and_output(baseline):
    lo, hi = baseline.tau_window()
    delay = derive_rates(baseline).group_delay
    assert 0.5 * (lo + hi) == pytest.approx(0.5 * delay)
    assert baseline.tau_grid().size == baseline.n_tau


@settings(max_examples=60, deadline=None)
@given(scale=st.floats(0.1, 10.0))
def test_rate_unit_covariance(scale):
    """Scaling every rate by s scales group delay by 1/s and beta by 1/s^2, 1/s^3."""
    base = load_preset("fig4")
    scaled = base.replace(gamma31=base.gamma31 * scale, gamma32=base.gamma32 * scale,
                          gamma_deph=base.gamma_deph * scale, omega32=base.omega32 * scale,
                          omega0_over_gamma=base.omega0_over_gamma * scale)
    r0, r1 = derive_rates(base), derive_rates(scaled)
    assert r1.group_delay == pytest.approx(r0.group_delay / scale, rel=1e-12)
    assert r1.beta1 == pytest.approx(r0.beta1 / scale ** 2, rel=1e-12)
    assert r1.beta2 == pytest.approx(r0.beta2 / scale ** 2, rel=1e-12)
    assert r1.coupling == pytest.approx(r0.coupling * scale, rel=1e-12)
