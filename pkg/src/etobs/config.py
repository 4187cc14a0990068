"""Run configuration: TOML files with unit-suffixed keys.

Physical quantities carry their unit in the key name (``tau_rc_s``,
``c1_per_s``, ``t_end_s``) so configs are self-documenting. A config
describes the plant (a ``battery`` preset or explicit matrices), the
observer gain and Lyapunov weight, the trigger parameters, and optional
simulation and sweep sections.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .battery import BatteryParams, SweepConfig, build_battery_plant, phev_profile
from .design import (
    IssCertificate,
    LtiPlant,
    TriggerParams,
    iss_constants,
    params_from_gains,
    select_parameters,
)
from .hybrid import SimConfig
from .signals import InputSignal

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """The configuration file is missing, malformed, or inconsistent."""


@dataclass
class RunConfig:
    plant: LtiPlant
    l_gain: np.ndarray
    q_weight: np.ndarray
    c_split: float
    trigger: dict
    sim: SimConfig | None
    x0: np.ndarray | None
    xhat0: np.ndarray | None
    input_spec: dict
    sweep: SweepConfig | None
    sweep_eta0: float
    out_dir: str
    m_bound: float | None

    def certificate(self) -> IssCertificate:
        return iss_constants(self.plant, self.l_gain, self.q_weight, self.c_split)

    def trigger_params(self, cert: IssCertificate) -> TriggerParams:
        trig = dict(self.trigger)
        alpha_bar = trig.pop("alpha_bar", None)
        nu = trig.pop("nu", None)
        if alpha_bar is not None and nu is not None:
            return select_parameters(cert, alpha_bar, nu, **trig)
        if alpha_bar is not None or nu is not None:
            raise ConfigError("alpha_bar_per_s and nu must be given together")
        return params_from_gains(cert, **trig)

    def input_signal(self, seed_override: int | None = None) -> InputSignal:
        spec = self.input_spec
        kind = spec.get("kind", "constant")
        if kind == "phev":
            seed = seed_override if seed_override is not None else spec.get("seed", 0)
            horizon = self.sim.t_end if self.sim is not None else 1500.0
            return phev_profile(int(seed), horizon)
        if kind == "constant":
            return InputSignal.constant(spec.get("value", [0.0]))
        if kind == "piecewise":
            try:
                return InputSignal(breakpoints=spec["breakpoints_s"],
                                   values=spec["values"])
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad piecewise input: {exc}") from exc
        raise ConfigError(f"unknown input kind: {kind!r}")


def _matrix(tab: dict, key: str, what: str) -> np.ndarray:
    try:
        return np.asarray(tab[key], dtype=float)
    except KeyError:
        raise ConfigError(f"missing {what} ({key})") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what} ({key}): {exc}") from exc


def _plant_from(tab: dict) -> LtiPlant:
    preset = tab.get("preset")
    if preset == "battery":
        defaults = BatteryParams()
        if "q_cap_as" in tab:
            q_cap = float(tab["q_cap_as"])
        elif "q_cap_ah" in tab:
            q_cap = float(tab["q_cap_ah"]) * 3600.0
        else:
            q_cap = defaults.q_cap
        params = BatteryParams(
            tau_rc=tab.get("tau_rc_s", defaults.tau_rc),
            cap_c=tab.get("cap_c_farad", defaults.cap_c),
            q_cap=q_cap,
            r_int=tab.get("r_int_ohm", defaults.r_int),
            alpha_f=tab.get("alpha_f_v", defaults.alpha_f),
            beta_f=tab.get("beta_f_v", defaults.beta_f),
        )
        return build_battery_plant(params)
    if preset is not None:
        raise ConfigError(f"unknown plant preset: {preset!r}")
    try:
        return LtiPlant(
            A=_matrix(tab, "a_per_s", "plant matrix"),
            B=_matrix(tab, "b", "input matrix"),
            C=_matrix(tab, "c", "output matrix"),
            D=np.asarray(tab["d"], dtype=float) if "d" in tab else None,
            offset=np.asarray(tab["offset"], dtype=float) if "offset" in tab else None,
        )
    except ValueError as exc:
        raise ConfigError(f"bad plant: {exc}") from exc


def _trigger_from(tab: dict) -> dict:
    try:
        trig = {
            "sigma": float(tab["sigma"]),
            "c1": float(tab["c1_per_s"]),
            "c2": float(tab["c2"]),
            "c3": float(tab["c3"]),
            "epsilon": float(tab["epsilon"]),
        }
    except KeyError as exc:
        raise ConfigError(f"trigger section is missing {exc.args[0]}") from None
    if "alpha_bar_per_s" in tab:
        trig["alpha_bar"] = float(tab["alpha_bar_per_s"])
    if "nu" in tab:
        trig["nu"] = float(tab["nu"])
    if "sigma_star" in tab:
        trig["sigma_star"] = float(tab["sigma_star"])
    if "c2_star" in tab:
        trig["c2_star"] = float(tab["c2_star"])
    return trig


def _sweep_from(tab: dict, default_ranges) -> tuple[SweepConfig, float]:
    try:
        rows = []
        for row in tab["rows"]:
            rows.append({
                "sigma": float(row["sigma"]),
                "c1": float(row["c1_per_s"]),
                "c2": float(row["c2"]),
                "c3": float(row["c3"]),
                "epsilon": float(row["epsilon"]),
            })
        cfg = SweepConfig(
            param_grid=tuple(rows),
            trials=int(tab.get("trials", 100)),
            ic_ranges=tuple(tuple(r) for r in tab.get("ic_ranges", default_ranges)),
            horizon=float(tab.get("horizon_s", 1500.0)),
            error_window=tuple(tab.get("error_window_s", (1000.0, 1500.0))),
            seed=int(tab.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad sweep section: {exc}") from exc
    return cfg, float(tab.get("eta0", 1.0e6))


def load_config(path) -> RunConfig:
    """Load and validate a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    if "plant" not in raw:
        raise ConfigError("missing [plant] section")
    plant = _plant_from(raw["plant"])

    obs = raw.get("observer", {})
    if "l_gain" not in obs:
        raise ConfigError("missing observer l_gain")
    l_gain = np.asarray(obs["l_gain"], dtype=float).reshape(plant.n, plant.p)
    if "q_diag" in obs:
        q_weight = np.diag(np.asarray(obs["q_diag"], dtype=float))
    elif "q" in obs:
        q_weight = np.asarray(obs["q"], dtype=float)
    else:
        q_weight = np.eye(plant.n)
    c_split = float(obs.get("c_split", 0.5))

    if "trigger" not in raw:
        raise ConfigError("missing [trigger] section")
    trigger = _trigger_from(raw["trigger"])

    sim_tab = raw.get("simulation")
    sim = None
    x0 = xhat0 = None
    if sim_tab is not None:
        try:
            sim = SimConfig(
                t_end=float(sim_tab.get("t_end_s", 1500.0)),
                dt_max=float(sim_tab.get("dt_max_s", 0.05)),
                event_tol=float(sim_tab.get("event_tol_s", 1e-9)),
                max_jumps=int(sim_tab.get("max_jumps", 1_000_000)),
                eta0=float(sim_tab.get("eta0", 0.0)),
            )
        except ValueError as exc:
            raise ConfigError(f"bad simulation section: {exc}") from exc
        if "x0" in sim_tab:
            x0 = np.asarray(sim_tab["x0"], dtype=float).reshape(-1)
        if "xhat0" in sim_tab:
            xhat0 = np.asarray(sim_tab["xhat0"], dtype=float).reshape(-1)

    default_ranges = [(0.0, 3.0), (0.0, 1.0)] if plant.n == 2 else [(0.0, 1.0)] * plant.n
    sweep = None
    sweep_eta0 = 1.0e6
    if "sweep" in raw:
        sweep, sweep_eta0 = _sweep_from(raw["sweep"], default_ranges)

    out_dir = raw.get("output", {}).get("dir", "out")
    m_bound = raw.get("design", {}).get("m_bound")

    return RunConfig(
        plant=plant, l_gain=l_gain, q_weight=q_weight, c_split=c_split,
        trigger=trigger, sim=sim, x0=x0, xhat0=xhat0,
        input_spec=dict(raw.get("input", {"kind": "constant"})),
        sweep=sweep, sweep_eta0=sweep_eta0, out_dir=out_dir,
        m_bound=float(m_bound) if m_bound is not None else None,
    )
