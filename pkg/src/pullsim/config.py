"""TOML scenario configuration with a fully defaulted schema.

Every key has a default; an empty file yields the baseline scenario
(131 kHz detuning, no frequency noise).  Unknown keys are rejected so a
typo cannot silently fall back to a default.  Frequencies are given in
the unit named by the key suffix (khz, mhz, ghz, hz, dbm, s); Rabi
amplitudes and rates are linear frequencies converted to rad/s
internally.

Schema and defaults::

    seed = 0                      # top level; overridden by PULLSIM_SEED / --seed

    [oscillator]
    delta_f0_khz = 131.0          # free-running detuning
    f_inj_ghz = 5.489             # injected-tone anchor frequency
    kappa_0 = 600.0               # coupling, kHz per sqrt(mW)
    freq_noise_psd = 0.0          # white frequency noise, Hz^2/Hz
    amplitude = 1.0               # limit-cycle amplitude
    phi0 = 0.0                    # initial phase, rad
    # soft_beta = 80.0            # optional; 1/mW; enables the soft-law bypass

    [atoms]
    Gamma2_mhz = 5.2              # level-2 population decay
    Gamma3_khz = 1.0
    Gamma4_khz = 1.0
    dephasing2_khz = 0.0          # pure dephasing on each coherence
    dephasing3_khz = 100.0
    dephasing4_khz = 100.0
    optical_depth = 1.0
    omega_p_khz = 52.0            # probe Rabi
    omega_c_mhz = 5.0             # coupling Rabi
    delta_p_khz = 0.0
    delta_c_khz = 0.0
    delta_rf_khz = 0.0

    [scene]
    omega_lo_mhz = 1.0            # local-oscillator Rabi at the cell
    rabi_per_sqrt_mw_mhz = 1.0    # signal Rabi per sqrt(mW) injected
    delta_sig_khz = 0.0
    track_lo_detuning = false

    [sweep]
    start_dbm = -50.0
    stop_dbm = -20.0
    step_db = 1.0
    dwell_s = 0.01
    fs_hz = 2e6
    transient_fraction = 0.2
    oversample = 5

    [analysis]
    band_lo_khz = 10.0
    band_hi_khz = 250.0
    window = 4096
    hop = 1024
    filter_order = 4
"""

from __future__ import annotations

import math

import tomli

from .atoms import DriveFields, LadderSystem
from .errors import DataError
from .experiment import SceneCalibration, ScenarioConfig
from .oscillator import OscillatorParams, SoftPullModel

__all__ = ["read_config", "config_from_dict"]

TWO_PI = 2 * math.pi

_DEFAULTS = {
    "seed": 0,
    "oscillator": {
        "delta_f0_khz": 131.0,
        "f_inj_ghz": 5.489,
        "kappa_0": 600.0,
        "freq_noise_psd": 0.0,
        "amplitude": 1.0,
        "phi0": 0.0,
        "soft_beta": None,
    },
    "atoms": {
        "Gamma2_mhz": 5.2,
        "Gamma3_khz": 1.0,
        "Gamma4_khz": 1.0,
        "dephasing2_khz": 0.0,
        "dephasing3_khz": 100.0,
        "dephasing4_khz": 100.0,
        "optical_depth": 1.0,
        "omega_p_khz": 52.0,
        "omega_c_mhz": 5.0,
        "delta_p_khz": 0.0,
        "delta_c_khz": 0.0,
        "delta_rf_khz": 0.0,
    },
    "scene": {
        "omega_lo_mhz": 1.0,
        "rabi_per_sqrt_mw_mhz": 1.0,
        "delta_sig_khz": 0.0,
        "track_lo_detuning": False,
    },
    "sweep": {
        "start_dbm": -50.0,
        "stop_dbm": -20.0,
        "step_db": 1.0,
        "dwell_s": 0.01,
        "fs_hz": 2e6,
        "transient_fraction": 0.2,
        "oversample": 5,
    },
    "analysis": {
        "band_lo_khz": 10.0,
        "band_hi_khz": 250.0,
        "window": 4096,
        "hop": 1024,
        "filter_order": 4,
    },
}

_BOOL_KEYS = {("scene", "track_lo_detuning")}
_INT_KEYS = {
    ("", "seed"),
    ("sweep", "oversample"),
    ("analysis", "window"),
    ("analysis", "hop"),
    ("analysis", "filter_order"),
}


def _merged(raw: dict) -> dict:
    """Defaults overlaid with the parsed file; unknown keys rejected."""
    out = {"seed": _DEFAULTS["seed"]}
    for key, value in raw.items():
        if key == "seed":
            out["seed"] = value
        elif key in _DEFAULTS and isinstance(_DEFAULTS[key], dict):
            if not isinstance(value, dict):
                raise DataError(f"'{key}' must be a table")
        else:
            raise DataError(f"unknown key '{key}'")
    for section, defaults in _DEFAULTS.items():
        if not isinstance(defaults, dict):
            continue
        table = raw.get(section, {})
        merged = dict(defaults)
        for key, value in table.items():
            if key not in defaults:
                raise DataError(f"unknown key '{section}.{key}'")
            merged[key] = value
        out[section] = merged
    return out


def _check_types(cfg: dict) -> None:
    def fail(path, value, want):
        raise DataError(f"'{path}' must be {want}, got {value!r}")

    for section, table in cfg.items():
        if not isinstance(table, dict):
            if ("", section) in _INT_KEYS and (
                isinstance(table, bool) or not isinstance(table, int)
            ):
                fail(section, table, "an integer")
            continue
        for key, value in table.items():
            if value is None:
                continue
            path = f"{section}.{key}"
            if (section, key) in _BOOL_KEYS:
                if not isinstance(value, bool):
                    fail(path, value, "a boolean")
            elif (section, key) in _INT_KEYS:
                if isinstance(value, bool) or not isinstance(value, int):
                    fail(path, value, "an integer")
            else:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    fail(path, value, "a number")


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Build a validated scenario from a parsed configuration mapping."""
    cfg = _merged(raw)
    _check_types(cfg)
    osc_t, atoms_t = cfg["oscillator"], cfg["atoms"]
    scene_t, sweep_t, ana_t = cfg["scene"], cfg["sweep"], cfg["analysis"]

    delta_f0 = osc_t["delta_f0_khz"] * 1e3
    oscillator = OscillatorParams.from_detuning(
        delta_f0,
        f_inj=osc_t["f_inj_ghz"] * 1e9,
        kappa0=osc_t["kappa_0"] * 1e3,
        freq_noise_psd=osc_t["freq_noise_psd"],
        amplitude=osc_t["amplitude"],
    )
    soft_model = None
    if osc_t["soft_beta"] is not None:
        soft_model = SoftPullModel(delta_f0=delta_f0, beta=osc_t["soft_beta"])

    Gamma2 = TWO_PI * atoms_t["Gamma2_mhz"] * 1e6
    Gamma3 = TWO_PI * atoms_t["Gamma3_khz"] * 1e3
    Gamma4 = TWO_PI * atoms_t["Gamma4_khz"] * 1e3
    atoms = LadderSystem(
        gamma2=Gamma2 / 2 + TWO_PI * atoms_t["dephasing2_khz"] * 1e3,
        gamma3=Gamma3 / 2 + TWO_PI * atoms_t["dephasing3_khz"] * 1e3,
        gamma4=Gamma4 / 2 + TWO_PI * atoms_t["dephasing4_khz"] * 1e3,
        Gamma2=Gamma2,
        Gamma3=Gamma3,
        Gamma4=Gamma4,
        optical_depth=atoms_t["optical_depth"],
    )
    fields = DriveFields(
        omega_p=TWO_PI * atoms_t["omega_p_khz"] * 1e3,
        omega_c=TWO_PI * atoms_t["omega_c_mhz"] * 1e6,
        omega_rf=0.0,
        delta_p=TWO_PI * atoms_t["delta_p_khz"] * 1e3,
        delta_c=TWO_PI * atoms_t["delta_c_khz"] * 1e3,
        delta_rf=TWO_PI * atoms_t["delta_rf_khz"] * 1e3,
    )
    scene = SceneCalibration(
        omega_lo=TWO_PI * scene_t["omega_lo_mhz"] * 1e6,
        rabi_per_sqrt_mw=TWO_PI * scene_t["rabi_per_sqrt_mw_mhz"] * 1e6,
        delta_sig=TWO_PI * scene_t["delta_sig_khz"] * 1e3,
        track_lo_detuning=scene_t["track_lo_detuning"],
    )
    return ScenarioConfig(
        oscillator=oscillator,
        atoms=atoms,
        fields=fields,
        scene=scene,
        soft_model=soft_model,
        start_dbm=float(sweep_t["start_dbm"]),
        stop_dbm=float(sweep_t["stop_dbm"]),
        step_db=float(sweep_t["step_db"]),
        dwell_s=float(sweep_t["dwell_s"]),
        fs=float(sweep_t["fs_hz"]),
        transient_fraction=float(sweep_t["transient_fraction"]),
        oversample=sweep_t["oversample"],
        band=(ana_t["band_lo_khz"] * 1e3, ana_t["band_hi_khz"] * 1e3),
        stft_window=ana_t["window"],
        stft_hop=ana_t["hop"],
        filter_order=ana_t["filter_order"],
        phi0=float(osc_t["phi0"]),
        seed=cfg["seed"],
    )


def read_config(path: str) -> ScenarioConfig:
    """Read a TOML scenario file; an empty file is the baseline scenario."""
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except tomli.TOMLDecodeError as err:
        raise DataError(f"{path}: {err}") from err
    try:
        return config_from_dict(raw)
    except DataError as err:
        raise DataError(f"{path}: {err}") from err
