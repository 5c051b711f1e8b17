"""Configuration, validation and derived rates for the dense EIT model.

All rates, detunings and Rabi frequencies share one rate unit and all times
are measured in its inverse. The formulas keep gamma31 explicit, so any unit
works; the shipped presets use the natural linewidth gamma31 + gamma32 as the
unit, which makes gamma31 = 0.5 there. Propagation depth enters only through
the dimensionless product k0*z, and the carrier only through omega0 expressed
in the rate unit.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

PRESET_NAMES = ("fig2a", "fig2b", "fig3-baseline", "fig4")
INITIAL_STATES = ("ground", "steady")


class ConfigError(ValueError):
    """Raised when a configuration violates one of its invariants."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class SystemConfig:
    """Every physical and numerical input of one simulation.

    Defaults reproduce the ``fig3-baseline`` preset (rate unit = gamma31 + gamma32).
    """

    gamma31: float = 0.5
    gamma32: float = 0.5
    gamma_deph: float = 2.7675e-3
    gamma_s: float = 2.7675e-5
    delta31: float = 0.0
    delta32: float = 0.0
    omega32: complex = 2.0
    probe_amp: float = 1e-4
    probe_width: float = 20.0
    n_lambda3: float = 50.0
    trap_ratio: float = 0.99
    k0z: float = 316.0
    omega0_over_gamma: float = 6.6e7
    # grid: n_z samples along z in [0, 1], n_tau samples on the retarded window
    n_z: int = 161
    n_tau: int = 15681
    tau_half_width: float = 196.0
    tau_center: float | None = None
    # toggles
    lfc_on: bool = True
    lfc_control_on: bool = True
    trapping_on: bool = True
    propagate_control: bool = False
    use_linearized_eom: bool = False
    initial_state: str = "steady"

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    @property
    def dtau(self) -> float:
        return 2.0 * self.tau_half_width / (self.n_tau - 1)

    def tau_window(self) -> tuple[float, float]:
        """Return (tau_min, tau_max) of the retarded-time grid."""
        center = self.tau_center
        if center is None:
            # Centre the window between input and expected output pulse.
            rates = derive_rates(self, check=False)
            delay = rates.group_delay if math.isfinite(rates.group_delay) else 0.0
            center = 0.5 * delay
        return center - self.tau_half_width, center + self.tau_half_width

    def tau_grid(self) -> np.ndarray:
        lo, hi = self.tau_window()
        return np.linspace(lo, hi, self.n_tau)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        w = complex(self.omega32)
        out["omega32"] = w.real if w.imag == 0 else [w.real, w.imag]
        return out


FIELD_NAMES = tuple(f.name for f in dataclasses.fields(SystemConfig))


@dataclass(frozen=True)
class DerivedRates:
    """Quantities computed once from a :class:`SystemConfig`."""

    gamma31: float
    gamma32: float
    gamma_s: float
    gamma_deph: float
    delta31: float
    delta32: float
    omega32: complex
    trap_ratio: float
    k0z: float
    omega0: float
    L: float
    gamma: float
    gamma_dec: float
    Gamma31: complex
    Gamma21: complex
    delta_two_photon: float
    delta31_tilde: float
    n_g: float
    group_delay: float
    beta1: float
    beta2: float
    coupling: float
    coupling_control: float


def validate_config(config: SystemConfig) -> list[str]:
    """Return one diagnostic per violated invariant; empty when valid."""
    diags = []

    def bad(name, rule):
        diags.append(f"{name}={getattr(config, name)!r}: {name} must be {rule}")

    for name in ("gamma31", "gamma32", "gamma_deph", "gamma_s", "delta31", "delta32",
                 "probe_amp", "probe_width", "n_lambda3", "trap_ratio", "k0z",
                 "omega0_over_gamma", "tau_half_width"):
        value = getattr(config, name)
        if not isinstance(value, (int, float)) or isinstance(value, bool) \
                or not math.isfinite(value):
            bad(name, "a finite real number")
    if diags:
        return diags
    if not config.gamma31 > 0:
        bad("gamma31", "> 0")
    for name in ("gamma32", "gamma_deph", "gamma_s", "n_lambda3", "probe_amp"):
        if getattr(config, name) < 0:
            bad(name, ">= 0")
    if not config.probe_width > 0:
        bad("probe_width", "> 0")
    if not 0 <= config.trap_ratio < 1:
        bad("trap_ratio", "in [0, 1) (trap_ratio must be < 1)")
    if not config.k0z > 0:
        bad("k0z", "> 0")
    if not config.omega0_over_gamma > 0:
        bad("omega0_over_gamma", "> 0")
    try:
        w = complex(config.omega32)
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            raise ValueError
    except (TypeError, ValueError):
        bad("omega32", "a finite (complex) number")
        w = None
    if not (isinstance(config.n_z, int) and config.n_z >= 2):
        bad("n_z", "an integer >= 2")
    if not (isinstance(config.n_tau, int) and config.n_tau >= 8):
        bad("n_tau", "an integer >= 8")
    if not config.tau_half_width > 0:
        bad("tau_half_width", "> 0")
    if config.tau_center is not None and not math.isfinite(config.tau_center):
        bad("tau_center", "finite or null")
    if config.initial_state not in INITIAL_STATES:
        bad("initial_state", f"one of {INITIAL_STATES}")
    for name in ("lfc_on", "lfc_control_on", "trapping_on", "propagate_control",
                 "use_linearized_eom"):
        if not isinstance(getattr(config, name), bool):
            bad(name, "a boolean")
    if config.use_linearized_eom and w is not None:
        limit = 1e-2 * max(abs(w), config.gamma31)
        if config.probe_amp > limit:
            bad("probe_amp", f"<= {limit:g} for the linearized equations (weak probe)")
    return diags


def derive_rates(config: SystemConfig, check: bool = True) -> DerivedRates:
    """Compute L, the complex relaxation rates, n_g, beta1, beta2 and coupling."""
    if check:
        diags = validate_config(config)
        if diags:
            raise ConfigError(diags)
    g31, g32 = float(config.gamma31), float(config.gamma32)
    omega32 = complex(config.omega32)
    L = config.n_lambda3 / (4.0 * math.pi ** 2)
    gamma = g31 + g32 + config.gamma_s
    gamma_dec = config.gamma_deph + config.gamma_s
    delta = config.delta31 - config.delta32
    w2 = abs(omega32) ** 2
    if L == 0.0:
        n_g = beta1 = beta2 = 0.0
    elif w2 * w2 == 0.0:
        # also catches |Omega32|^4 underflow
        n_g = beta1 = beta2 = math.inf
    else:
        n_g = 3.0 * L * g31 * config.omega0_over_gamma / w2
        beta1 = 6.0 * L * gamma * g31 / w2 ** 2
        beta2 = 6.0 * L ** 2 * g31 ** 2 / w2 ** 2
    return DerivedRates(
        gamma31=g31,
        gamma32=g32,
        gamma_s=float(config.gamma_s),
        gamma_deph=float(config.gamma_deph),
        delta31=float(config.delta31),
        delta32=float(config.delta32),
        omega32=omega32,
        trap_ratio=float(config.trap_ratio),
        k0z=float(config.k0z),
        omega0=float(config.omega0_over_gamma),
        L=L,
        gamma=gamma,
        gamma_dec=gamma_dec,
        Gamma31=complex(gamma / 2.0, -config.delta31),
        Gamma21=complex(gamma_dec, -delta),
        delta_two_photon=delta,
        delta31_tilde=config.delta31 + L * g31 / 2.0,
        n_g=n_g,
        # n_g * z / c expressed with k0 z = omega0 z / c
        group_delay=n_g * config.k0z / config.omega0_over_gamma,
        beta1=beta1,
        beta2=beta2,
        coupling=1.5 * L * g31 * config.k0z,
        coupling_control=1.5 * L * g32 * config.k0z,
    )


def gaussian_input(t, config: SystemConfig):
    """Input probe envelope ``probe_amp * exp(-t^2 / (2 sigma^2))``."""
    t = np.asarray(t, dtype=float)
    out = config.probe_amp * np.exp(-t ** 2 / (2.0 * config.probe_width ** 2))
    return out.astype(complex) if out.ndim else complex(out)


def config_from_dict(data: dict[str, Any], base: SystemConfig | None = None) -> SystemConfig:
    """Build a config from a mapping whose keys are SystemConfig field names."""
    unknown = sorted(set(data) - set(FIELD_NAMES) - {"_comment"})
    if unknown:
        raise ConfigError([f"unknown config key {k!r}" for k in unknown])
    values = {k: v for k, v in data.items() if k != "_comment"}
    if "omega32" in values and isinstance(values["omega32"], (list, tuple)):
        re, im = values["omega32"]
        values["omega32"] = complex(re, im)
    for name in ("n_z", "n_tau"):
        if isinstance(values.get(name), float) and values[name].is_integer():
            values[name] = int(values[name])
    config = dataclasses.replace(base or SystemConfig(), **values)
    diags = validate_config(config)
    if diags:
        raise ConfigError(diags)
    return config


def load_config(path) -> SystemConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: invalid JSON ({exc})"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top-level JSON value must be an object"])
    return config_from_dict(data)


def load_preset(name: str) -> SystemConfig:
    if name not in PRESET_NAMES:
        raise ConfigError([f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"])
    text = resources.files("denseeit.presets").joinpath(f"{name}.json").read_text("utf-8")
    return config_from_dict(json.loads(text))


def preset_path(name: str) -> Path:
    return Path(str(resources.files("denseeit.presets").joinpath(f"{name}.json")))
