"""Scenario configuration: JSON in, validated Scenario out.

Only schema_version and geometry.layers are required; everything else has
a default. Unknown keys are rejected by full dotted path so typos fail
loudly instead of silently running the default.
"""

import hashlib
import json

from .experiments import (
    JAMMING_MODES,
    GeometryParams,
    JammingParams,
    Scenario,
    UserParams,
)
from .impairments import ImpairmentConfig
from .training import TrainConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _require_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path or 'config'} must be a JSON object")


def _check_keys(node, allowed, path):
    for key in node:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown config key: {where}")


def _number(node, key, default, path, kind=float):
    if key not in node:
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key} must be a number")
    return kind(value)


def _optional_number(node, key, default, path, kind=float):
    if key not in node or node[key] is None:
        return default
    return _number(node, key, default, path, kind=kind)


def _pair(node, key, default, path):
    if key not in node:
        return default
    value = node[key]
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{path}.{key} must be a two-element list")
    return (float(value[0]), float(value[1]))


_GEOMETRY_KEYS = (
    "wavelength",
    "layers",
    "atoms_x",
    "atoms_y",
    "atom_spacing",
    "total_thickness",
    "bs_antennas",
    "bs_spacing",
    "bs_standoff",
)
_USER_KEYS = (
    "count",
    "rician_factor",
    "pathloss_exponent",
    "reference_gain_db",
    "azimuth_deg",
    "elevation_deg",
    "distance_m",
)
_TRAIN_KEYS = ("eta0", "beta", "episodes", "tolerance", "pilots", "noise_variance")
_JAMMING_KEYS = ("mode", "jsr_db", "power_jitter")
_IMPAIRMENT_KEYS = ("quant_bits", "coupling_alpha", "phase_noise_sigma")
_TOP_KEYS = (
    "schema_version",
    "geometry",
    "users",
    "train",
    "jamming",
    "impairments",
    "snr_grid_db",
    "realizations",
    "payload_slots",
    "constellation_slots",
    "master_seed",
)


def scenario_from_config(cfg: dict) -> Scenario:
    _require_mapping(cfg, "")
    _check_keys(cfg, _TOP_KEYS, "")
    if "schema_version" not in cfg:
        raise ConfigError("schema_version is required")
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg['schema_version']!r}")

    geo_node = cfg.get("geometry")
    if geo_node is None:
        raise ConfigError("geometry.layers is required")
    _require_mapping(geo_node, "geometry")
    _check_keys(geo_node, _GEOMETRY_KEYS, "geometry")
    if "layers" not in geo_node:
        raise ConfigError("geometry.layers is required")
    geometry = GeometryParams(
        wavelength=_number(geo_node, "wavelength", 0.125, "geometry"),
        layers=_number(geo_node, "layers", None, "geometry", kind=int),
        atoms_x=_number(geo_node, "atoms_x", 8, "geometry", kind=int),
        atoms_y=_number(geo_node, "atoms_y", 8, "geometry", kind=int),
        atom_spacing=_optional_number(geo_node, "atom_spacing", None, "geometry"),
        total_thickness=_optional_number(geo_node, "total_thickness", None, "geometry"),
        bs_antennas=_optional_number(geo_node, "bs_antennas", None, "geometry", kind=int),
        bs_spacing=_optional_number(geo_node, "bs_spacing", None, "geometry"),
        bs_standoff=_optional_number(geo_node, "bs_standoff", None, "geometry"),
    )

    usr_node = cfg.get("users", {})
    _require_mapping(usr_node, "users")
    _check_keys(usr_node, _USER_KEYS, "users")
    rician = usr_node.get("rician_factor", 1.0)
    if isinstance(rician, str):
        if rician != "inf":
            raise ConfigError('users.rician_factor string form must be "inf"')
        rician = float("inf")
    elif isinstance(rician, bool) or not isinstance(rician, (int, float)):
        raise ConfigError("users.rician_factor must be a number or \"inf\"")
    users = UserParams(
        count=_number(usr_node, "count", 4, "users", kind=int),
        rician_factor=float(rician),
        pathloss_exponent=_number(usr_node, "pathloss_exponent", 2.2, "users"),
        reference_gain_db=_number(usr_node, "reference_gain_db", -30.0, "users"),
        azimuth_deg=_pair(usr_node, "azimuth_deg", (-60.0, 60.0), "users"),
        elevation_deg=_pair(usr_node, "elevation_deg", (-30.0, 30.0), "users"),
        distance_m=_pair(usr_node, "distance_m", (20.0, 60.0), "users"),
    )

    trn_node = cfg.get("train", {})
    _require_mapping(trn_node, "train")
    _check_keys(trn_node, _TRAIN_KEYS, "train")
    train_cfg = TrainConfig(
        eta0=_number(trn_node, "eta0", 0.8, "train"),
        beta=_number(trn_node, "beta", 0.99, "train"),
        episodes=_number(trn_node, "episodes", 200, "train", kind=int),
        tolerance=_number(trn_node, "tolerance", 1e-6, "train"),
        pilots=_number(trn_node, "pilots", 64, "train", kind=int),
        noise_variance=_number(trn_node, "noise_variance", 0.0, "train"),
    )

    jam_node = cfg.get("jamming", {})
    _require_mapping(jam_node, "jamming")
    _check_keys(jam_node, _JAMMING_KEYS, "jamming")
    mode = jam_node.get("mode", "none")
    if mode not in JAMMING_MODES:
        raise ConfigError(f"jamming.mode must be one of {JAMMING_MODES}")
    jamming = JammingParams(
        mode=mode,
        jsr_db=_number(jam_node, "jsr_db", 0.0, "jamming"),
        power_jitter=_pair(jam_node, "power_jitter", (0.5, 1.5), "jamming"),
    )

    imp_node = cfg.get("impairments", {})
    _require_mapping(imp_node, "impairments")
    _check_keys(imp_node, _IMPAIRMENT_KEYS, "impairments")
    impairments = ImpairmentConfig(
        quant_bits=_optional_number(imp_node, "quant_bits", None, "impairments", kind=int),
        coupling_alpha=_optional_number(imp_node, "coupling_alpha", None, "impairments"),
        phase_noise_sigma=_optional_number(imp_node, "phase_noise_sigma", None, "impairments"),
    )

    snr_grid = cfg.get("snr_grid_db", [0.0, 4.0, 8.0, 12.0, 16.0])
    if not isinstance(snr_grid, (list, tuple)):
        raise ConfigError("snr_grid_db must be a list of numbers")
    try:
        snr_grid = tuple(float(v) for v in snr_grid)
    except (TypeError, ValueError):
        raise ConfigError("snr_grid_db must be a list of numbers") from None

    try:
        return Scenario(
            geometry=geometry,
            users=users,
            train=train_cfg,
            jamming=jamming,
            impairments=impairments,
            snr_grid_db=snr_grid,
            realizations=_number(cfg, "realizations", 8, "", kind=int),
            payload_slots=_number(cfg, "payload_slots", 4096, "", kind=int),
            constellation_slots=_number(cfg, "constellation_slots", 256, "", kind=int),
            master_seed=_number(cfg, "master_seed", 0, "", kind=int),
        )
    except ValueError as exc:  # field-level validation from the dataclasses
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    _require_mapping(cfg, "")
    return cfg


def _parse_override_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw  # bare string, e.g. mode=aware


def apply_overrides(cfg: dict, overrides: list) -> dict:
    """Apply key.path=value pairs on top of a config dict. Values parse as
    JSON when possible (numbers, lists, booleans) and fall back to strings."""
    out = json.loads(json.dumps(cfg))  # deep copy, JSON types only
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        dotted, raw = item.split("=", 1)
        parts = [p for p in dotted.split(".") if p]
        if not parts:
            raise ConfigError(f"override {item!r} has an empty key path")
        node = out
        for part in parts[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = {}
                node[part] = nxt
            if not isinstance(nxt, dict):
                raise ConfigError(f"override path {dotted!r} crosses a non-object")
            node = nxt
        node[parts[-1]] = _parse_override_value(raw)
    return out


def default_config() -> dict:
    return {"schema_version": SCHEMA_VERSION, "geometry": {"layers": 5}}


def config_hash(cfg: dict) -> str:
    """Canonical hash: key order and whitespace do not matter."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("ascii")).hexdigest()
