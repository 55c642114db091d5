"""JSON configuration ingestion with fail-fast unknown-key rejection.

The main config file is a single JSON document with optional sections:

    {"system": {... SystemConfig fields ...},
     "sweep":  {... SweepSpec fields plus "cdrn_models" ...}}

Network and training configs are flat JSON objects mirroring CdrnConfig
and TrainConfig field names. Any key that does not name a config field is
rejected with an error listing the offenders.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .bench import ESTIMATORS, KIND_ALIASES, SWEEP_KINDS, SweepSpec
from .cdrn.network import CdrnConfig
from .cdrn.training import TrainConfig
from .channel import SystemConfig

_SWEEP_DEFAULTS = {
    "snr_db": [0.0, 5.0, 10.0, 15.0, 20.0],
    "n_elements": [8, 16, 32],
    "m_antennas": [2, 4, 8],
    "c_pilots": [9, 18, 36],
}


def read_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ValueError(f"top level of {path} must be a JSON object")
    return obj


def _reject_unknown(obj: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ValueError(f"unknown keys in {context}: {unknown}")


def _build_dataclass(cls, obj: dict, context: str):
    fields = {f.name for f in dataclasses.fields(cls)}
    _reject_unknown(obj, fields, context)
    try:
        return cls(**obj)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid {context}: {exc}") from None


def system_config_from(obj: dict) -> SystemConfig:
    for key in ("dist_user_bs", "dist_user_irs"):
        if isinstance(obj.get(key), list):
            obj = {**obj, key: tuple(obj[key])}
    return _build_dataclass(SystemConfig, obj, "system config")


def net_config_from(obj: dict) -> CdrnConfig:
    return _build_dataclass(CdrnConfig, obj, "network config")


def train_config_from(obj: dict) -> TrainConfig:
    return _build_dataclass(TrainConfig, obj, "training config")


def load_main_config(path: str | Path) -> dict:
    obj = read_json(path)
    _reject_unknown(obj, {"system", "sweep"}, f"{path}")
    return obj


def load_system_config(path: str | Path) -> SystemConfig:
    obj = load_main_config(path)
    return system_config_from(obj.get("system", {}))


def load_net_config(path: str | Path) -> CdrnConfig:
    return net_config_from(read_json(path))


def load_train_config(path: str | Path) -> TrainConfig:
    return train_config_from(read_json(path))


def normalize_kind(kind: str) -> str:
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in SWEEP_KINDS:
        raise ValueError(
            f"unknown sweep kind {kind!r}; expected one of "
            f"{sorted(KIND_ALIASES)} or {SWEEP_KINDS}"
        )
    return kind


def load_sweep(path: str | Path, kind: str) -> tuple[SweepSpec, dict[float, str]]:
    """Build the sweep spec and the CDRN model-file map from a config file."""
    obj = load_main_config(path)
    base = system_config_from(obj.get("system", {}))
    section = dict(obj.get("sweep", {}))
    allowed = {"values", "estimators", "trials", "master_seed", "elmmse_samples",
               "cdrn_models", "kind"}
    _reject_unknown(section, allowed, "sweep config")

    swept = normalize_kind(kind if kind else section.get("kind", "snr_db"))
    values = section.get("values", _SWEEP_DEFAULTS[swept])
    estimators = section.get("estimators", ["LS", "ELMMSE", "BLMMSE"])
    unknown = sorted(set(estimators) - set(ESTIMATORS))
    if unknown:
        raise ValueError(f"unknown estimators in sweep config: {unknown}")

    model_paths: dict[float, str] = {}
    for key, value in dict(section.get("cdrn_models", {})).items():
        try:
            model_paths[float(key)] = str(value)
        except ValueError:
            raise ValueError(f"cdrn_models keys must be SNR values, got {key!r}") from None

    spec = SweepSpec(
        swept=swept,
        values=[float(v) for v in values],
        estimators=list(estimators),
        trials=int(section.get("trials", 10_000)),
        base=base,
        master_seed=int(section.get("master_seed", 0)),
        elmmse_samples=int(section.get("elmmse_samples", 100_000)),
    )
    return spec, model_paths
