"""Evaluation configuration and its JSON form.

A config file is a single JSON object; any key left out keeps its default.
Example::

    {"spectral": {"n_mels": 40, "fmax_hz": 8000},
     "yin": {"harmonicity_threshold": 0.1},
     "mcd_order": 13}
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .audio_io import FrameParams, Window
from .errors import ConfigError
from .pitch import YinParams
from .spectral import SpectralParams


@dataclass(frozen=True)
class GpeConfig:
    rel_threshold: float = 0.2

    def __post_init__(self):
        if not self.rel_threshold > 0:
            raise ValueError("rel_threshold must be positive")


@dataclass(frozen=True)
class EvalConfig:
    spectral: SpectralParams = field(default_factory=SpectralParams)
    yin: YinParams = field(default_factory=YinParams)
    gpe: GpeConfig = field(default_factory=GpeConfig)
    mcd_order: int = 13
    # conventional 10*sqrt(2)/ln(10) dB factor; off reproduces the plain formula
    mcd_db_scaling: bool = False
    silence_db: float = -50.0

    def __post_init__(self):
        if self.spectral.frame.hop_length != self.yin.frame.hop_length:
            raise ConfigError(
                "spectral and pitch hops must match so frame t is the same instant in both"
            )
        if self.spectral.n_mels < self.mcd_order + 1:
            raise ConfigError(f"n_mels {self.spectral.n_mels} < mcd_order + 1")

    @property
    def hop_length(self) -> int:
        return self.spectral.frame.hop_length

    def to_dict(self) -> dict:
        def clean(obj):
            if isinstance(obj, dict):
                return {k: clean(v) for k, v in obj.items()}
            if isinstance(obj, Window):
                return obj.value
            return obj

        return clean(asdict(self))

    @classmethod
    def from_dict(cls, data: dict | None) -> "EvalConfig":
        data = dict(data or {})
        try:
            kwargs = {}
            if "spectral" in data:
                kwargs["spectral"] = _build(SpectralParams, data.pop("spectral"))
            if "yin" in data:
                kwargs["yin"] = _build(YinParams, data.pop("yin"))
            if "gpe" in data:
                kwargs["gpe"] = _build(GpeConfig, data.pop("gpe"))
            known = {f.name for f in fields(cls)}
            unknown = set(data) - known
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
            kwargs.update(data)
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _build(cls, data):
    if not isinstance(data, dict):
        raise ConfigError(f"{cls.__name__} section must be an object")
    data = dict(data)
    default = cls()
    if "frame" in data:
        data["frame"] = replace(default.frame, **data["frame"])
    unknown = set(data) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return replace(default, **data)


def load_config(path=None) -> EvalConfig:
    if path is None:
        return EvalConfig()
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return EvalConfig.from_dict(data)
