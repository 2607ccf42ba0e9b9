"""Scenario configuration: JSON schema, parsing, and derived geometry objects.

Configs are plain JSON with explicit unit suffixes in the key names
(``fc_ghz``, ``spacing_m``, ``azimuth_deg``, ...).  Angles are accepted in
degrees and converted to radians internally; the Rician factor is accepted
in dB (``null`` disables the LoS component entirely).  Unspecified keys fall
back to the defaults below, so a minimal config only needs to override what
an experiment changes.  ``parse_config(serialize_config(cfg)) == cfg``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Any

import jsonschema
import numpy as np

from .geometry import SPEED_OF_LIGHT, SceneGeometry, TerminalLayout
from .largescale import LargeScaleParams


class ConfigError(ValueError):
    """Configuration rejected; ``pointer`` locates the offending key."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"
        self.reason = message


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_INT1 = {"type": "integer", "minimum": 1}
_DEG = {"type": "number"}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_OPT = lambda s: {"anyOf": [s, {"type": "null"}]}  # noqa: E731

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "fc_ghz": _POS,
        "rician_k_db": _OPT(_NUM),
        "eval_offset_hz": _NUM,
        "trials": _INT1,
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "d_bi_m": _OPT(_VEC3),
                "d_iu_m": _OPT(_VEC3),
                "d_bu_m": _OPT(_VEC3),
            },
        },
        "bs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "num_elements": _INT1,
                "spacing_m": _OPT(_POS),
                "azimuth_deg": _DEG,
                "elevation_deg": _DEG,
                "speed_mps": _NONNEG,
                "velocity_azimuth_deg": _DEG,
            },
        },
        "user": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "num_elements": _INT1,
                "spacing_m": _OPT(_POS),
                "azimuth_deg": _DEG,
                "elevation_deg": _DEG,
                "speed_mps": _NONNEG,
                "velocity_azimuth_deg": _DEG,
            },
        },
        "irs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m_x": _INT1,
                "m_y": _INT1,
                "spacing_x_m": _OPT(_POS),
                "spacing_y_m": _OPT(_POS),
                "azimuth_x_deg": _DEG,
                "elevation_x_deg": _DEG,
                "azimuth_y_deg": _DEG,
                "elevation_y_deg": _DEG,
                "phase_bits": _OPT(_INT1),
            },
        },
        "clusters": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "birth_rate": _POS,
                "death_rate": _POS,
                "correlation_factor_m": _POS,
                "evolution_rate": _OPT(_POS),
                "rays_per_cluster": _INT1,
                "sigma_xyz_m": {"type": "array", "items": _NONNEG, "minItems": 3, "maxItems": 3},
                "virtual_delay_mean_ns": _NONNEG,
                "power_decay_ns": _POS,
                "center_distance_mean_m": _POS,
                "center_distance_min_m": _NONNEG,
                "center_elevation_max_deg": {"type": "number", "minimum": 0, "maximum": 90},
                "speed_a_mps": _NONNEG,
                "velocity_azimuth_a_deg": _OPT(_DEG),
                "speed_z_mps": _NONNEG,
                "velocity_azimuth_z_deg": _OPT(_DEG),
            },
        },
        "large_scale": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "sf_sigma_db": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"bi": _NONNEG, "iu": _NONNEG, "bu": _NONNEG},
                },
                "sf_mu_db": _NUM,
                "path_loss": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"a": _NUM, "b": _NUM, "c": _NUM},
                },
                "scenario_name": {"type": "string"},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"start_s": _NUM, "stop_s": _NUM, "num": _INT1},
        },
        "acf": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "anchors_s": {"type": "array", "items": _NUM, "minItems": 1},
                "lag_max_s": _POS,
                "lag_min_s": _POS,
                "num_lags": {"type": "integer", "minimum": 2},
                "grid": {"enum": ["log", "linear"]},
            },
        },
        "ccf": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "subchannel": {"enum": ["BI", "IU", "BU"]},
                "axis": {"enum": ["tx", "rx"]},
                "t_s": _NUM,
                "dt_s": _NUM,
            },
        },
        "doppler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"start_s": _NUM, "stop_s": _NUM, "num": _INT1},
        },
        "ds_cdf": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma_scales": {"type": "array", "items": _POS, "minItems": 1},
                "t_s": _NUM,
            },
        },
    },
}

DEFAULTS: dict[str, Any] = {
    "seed": 1,
    "fc_ghz": 62.0,
    "rician_k_db": None,
    "eval_offset_hz": 0.0,
    "trials": 1000,
    "geometry": {"d_bi_m": [100.0, 0.0, 0.0], "d_iu_m": [200.0, 0.0, 0.0], "d_bu_m": None},
    "bs": {
        "num_elements": 1, "spacing_m": None, "azimuth_deg": 0.0, "elevation_deg": 0.0,
        "speed_mps": 0.0, "velocity_azimuth_deg": 0.0,
    },
    "user": {
        "num_elements": 1, "spacing_m": None, "azimuth_deg": 0.0, "elevation_deg": 0.0,
        "speed_mps": 0.0, "velocity_azimuth_deg": 0.0,
    },
    "irs": {
        "m_x": 1, "m_y": 1, "spacing_x_m": None, "spacing_y_m": None,
        "azimuth_x_deg": 0.0, "elevation_x_deg": 0.0,
        "azimuth_y_deg": 90.0, "elevation_y_deg": 0.0,
        "phase_bits": None,
    },
    "clusters": {
        "birth_rate": 40.0, "death_rate": 4.0, "correlation_factor_m": 10.0,
        "evolution_rate": None, "rays_per_cluster": 20,
        "sigma_xyz_m": [2.0, 2.0, 1.0],
        "virtual_delay_mean_ns": 300.0, "power_decay_ns": 1000.0,
        "center_distance_mean_m": 30.0, "center_distance_min_m": 5.0,
        "center_elevation_max_deg": 30.0,
        "speed_a_mps": 0.0, "velocity_azimuth_a_deg": None,
        "speed_z_mps": 0.0, "velocity_azimuth_z_deg": None,
    },
    "large_scale": {
        "enabled": False,
        "sf_sigma_db": {"bi": 3.0, "iu": 3.0, "bu": 4.0},
        "sf_mu_db": 0.0,
        "path_loss": {"a": 22.0, "b": 28.0, "c": 20.0},
        "scenario_name": "default",
    },
    "time": {"start_s": 0.0, "stop_s": 2.0, "num": 3},
    "acf": {"anchors_s": [0.0, 2.0], "lag_max_s": 0.1, "lag_min_s": 1e-5,
            "num_lags": 41, "grid": "log"},
    "ccf": {"subchannel": "BU", "axis": "tx", "t_s": 0.0, "dt_s": 0.0},
    "doppler": {"start_s": 0.0, "stop_s": 2.0, "num": 11},
    "ds_cdf": {"sigma_scales": [1.0, 2.0], "t_s": 0.0},
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _rad(deg: float) -> float:
    return math.radians(deg)


@dataclass(frozen=True)
class TerminalConfig:
    num_elements: int
    spacing_m: float
    azimuth_deg: float
    elevation_deg: float
    speed_mps: float
    velocity_azimuth_deg: float

    def layout(self, kind: str) -> TerminalLayout:
        return TerminalLayout.linear(kind, self.num_elements, self.spacing_m,
                                     _rad(self.azimuth_deg), _rad(self.elevation_deg))

    def velocity(self) -> np.ndarray:
        a = _rad(self.velocity_azimuth_deg)
        return self.speed_mps * np.array([math.cos(a), math.sin(a), 0.0])


@dataclass(frozen=True)
class IrsConfig:
    m_x: int
    m_y: int
    spacing_x_m: float
    spacing_y_m: float
    azimuth_x_deg: float
    elevation_x_deg: float
    azimuth_y_deg: float
    elevation_y_deg: float
    phase_bits: int | None

    def layout(self) -> TerminalLayout:
        return TerminalLayout.planar(
            self.m_x, self.m_y, self.spacing_x_m, self.spacing_y_m,
            _rad(self.azimuth_x_deg), _rad(self.elevation_x_deg),
            _rad(self.azimuth_y_deg), _rad(self.elevation_y_deg))


@dataclass(frozen=True)
class ClusterParams:
    birth_rate: float
    death_rate: float
    correlation_factor_m: float
    evolution_rate: float | None
    rays_per_cluster: int
    sigma_xyz_m: tuple[float, float, float]
    virtual_delay_mean_ns: float
    power_decay_ns: float
    center_distance_mean_m: float
    center_distance_min_m: float
    center_elevation_max_deg: float
    speed_a_mps: float
    velocity_azimuth_a_deg: float | None
    speed_z_mps: float
    velocity_azimuth_z_deg: float | None

    @property
    def mean_count(self) -> float:
        return self.birth_rate / self.death_rate

    @property
    def chain_rate(self) -> float:
        """Rate in the survival-probability exponent (defaults to birth_rate)."""
        return self.birth_rate if self.evolution_rate is None else self.evolution_rate


@dataclass(frozen=True)
class LargeScaleConfig:
    enabled: bool
    sf_sigma_db: dict[str, float]
    sf_mu_db: float
    path_loss: dict[str, float]
    scenario_name: str

    def params(self, subchannel: str) -> LargeScaleParams:
        return LargeScaleParams(
            sf_sigma_db=self.sf_sigma_db[subchannel.lower()],
            sf_mu_db=self.sf_mu_db,
            pl_a=self.path_loss["a"], pl_b=self.path_loss["b"], pl_c=self.path_loss["c"],
            scenario_name=self.scenario_name)


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    fc_ghz: float
    rician_k_db: float | None
    eval_offset_hz: float
    trials: int
    geometry: dict[str, Any]
    bs: TerminalConfig
    user: TerminalConfig
    irs: IrsConfig
    clusters: ClusterParams
    large_scale: LargeScaleConfig
    time: dict[str, Any]
    acf: dict[str, Any]
    ccf: dict[str, Any]
    doppler: dict[str, Any]
    ds_cdf: dict[str, Any]

    @property
    def fc_hz(self) -> float:
        return self.fc_ghz * 1e9

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.fc_hz

    @property
    def k_linear(self) -> float:
        if self.rician_k_db is None:
            return 0.0
        return 10.0 ** (self.rician_k_db / 10.0)

    def scene(self) -> SceneGeometry:
        g = self.geometry
        return SceneGeometry(d_bi=g.get("d_bi_m"), d_iu=g.get("d_iu_m"), d_bu=g.get("d_bu_m"))

    def time_grid(self) -> np.ndarray:
        t = self.time
        return np.linspace(t["start_s"], t["stop_s"], t["num"])

    def lag_grid(self) -> np.ndarray:
        """ACF lag grid starting at 0; log spacing resolves the fast early
        decay at mm-wave carriers while still covering the full window."""
        a = self.acf
        if a["grid"] == "linear":
            return np.linspace(0.0, a["lag_max_s"], a["num_lags"])
        lags = np.geomspace(a["lag_min_s"], a["lag_max_s"], a["num_lags"] - 1)
        return np.concatenate([[0.0], lags])


def _resolved(raw: dict[str, Any]) -> dict[str, Any]:
    """Fill in wavelength-derived spacing defaults (lambda/2)."""
    out = json.loads(json.dumps(raw))  # deep copy, JSON types only
    half_wl = SPEED_OF_LIGHT / (out["fc_ghz"] * 1e9) / 2.0
    for term in ("bs", "user"):
        if out[term]["spacing_m"] is None:
            out[term]["spacing_m"] = half_wl
    for key in ("spacing_x_m", "spacing_y_m"):
        if out["irs"][key] is None:
            out["irs"][key] = half_wl
    return out


def parse_config(data: dict[str, Any] | str) -> ScenarioConfig:
    """Validate a config dict (or JSON string) and build the typed scenario.

    Raises :class:`ConfigError` with a JSON-pointer path on any violation.
    """
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    merged = _merge(DEFAULTS, data)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(merged), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise ConfigError(err.message, pointer)

    merged = _resolved(merged)
    geom = merged["geometry"]
    if sum(geom[k] is not None for k in ("d_bi_m", "d_iu_m", "d_bu_m")) < 2:
        raise ConfigError("need at least two of d_bi_m, d_iu_m, d_bu_m", "/geometry")

    try:
        cfg = ScenarioConfig(
            seed=merged["seed"],
            fc_ghz=merged["fc_ghz"],
            rician_k_db=merged["rician_k_db"],
            eval_offset_hz=merged["eval_offset_hz"],
            trials=merged["trials"],
            geometry=geom,
            bs=TerminalConfig(**merged["bs"]),
            user=TerminalConfig(**merged["user"]),
            irs=IrsConfig(**merged["irs"]),
            clusters=ClusterParams(
                **{**merged["clusters"],
                   "sigma_xyz_m": tuple(merged["clusters"]["sigma_xyz_m"])}),
            large_scale=LargeScaleConfig(**merged["large_scale"]),
            time=merged["time"],
            acf=merged["acf"],
            ccf=merged["ccf"],
            doppler=merged["doppler"],
            ds_cdf=merged["ds_cdf"],
        )
        cfg.scene()
        cfg.bs.layout("BS")
        cfg.user.layout("USER")
        cfg.irs.layout()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def serialize_config(cfg: ScenarioConfig) -> dict[str, Any]:
    """Plain-JSON dict such that parse_config(serialize_config(cfg)) == cfg."""
    out = asdict(cfg)
    out["clusters"]["sigma_xyz_m"] = list(out["clusters"]["sigma_xyz_m"])
    return out


def config_json(cfg: ScenarioConfig) -> str:
    return json.dumps(serialize_config(cfg), indent=2, sort_keys=True)
