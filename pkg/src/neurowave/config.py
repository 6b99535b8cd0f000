"""Pipeline configuration: one versioned structured-text file for every stage.

Parsing is strict: unknown keys anywhere in the document are rejected and
the format_version field is mandatory. Any subset of keys may be given;
missing ones take the documented defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .classifier import ModelConfig
from .errors import ConfigError
from .ica import DEFAULT_REMOVE, LabelerConfig
from .synth import ArtifactSpec, BandSignature, DriftSpec, SessionSpec, SignatureSpec
from .training import TrainConfig

CONFIG_FORMAT_VERSION = 1

REFERENCE_MODES = (
    "mastoid_then_common_average",
    "common_average_then_mastoid",
    "common_average",
    "mastoid",
    "none",
)


def _from_dict(cls, data: dict, path: str):
    """Build a dataclass from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class FilterConfig:
    low_hz: float = 0.5
    high_hz: float = 80.0
    order: int = 4


@dataclass(frozen=True)
class ReferenceConfig:
    mode: str = "mastoid_then_common_average"
    left_mastoid: str = "M1"
    right_mastoid: str = "M2"

    def __post_init__(self):
        if self.mode not in REFERENCE_MODES:
            raise ConfigError(f"unknown reference mode {self.mode!r}, expected one of {REFERENCE_MODES}")


@dataclass(frozen=True)
class IcaConfig:
    enabled: bool = True
    k: int = 20
    seed: int = 0
    tolerance: float = 1e-6
    max_iterations: int = 500
    fit_max_samples: int = 200_000
    removal_threshold: float = 0.5
    remove_categories: tuple[str, ...] = tuple(sorted(DEFAULT_REMOVE))
    add_back_remainder: bool = True
    labeler: LabelerConfig = field(default_factory=LabelerConfig)


@dataclass(frozen=True)
class SegmentationConfig:
    window_s: float = 0.5
    overlap_fraction: float = 0.5
    target_rate_hz: float = 256.0


@dataclass(frozen=True)
class SplitConfig:
    kind: str = "random"
    test_fraction: float = 0.2
    train_fraction: float = 0.8
    seed: int = 0
    drop_boundary: bool = False

    def __post_init__(self):
        if self.kind not in ("random", "ordered"):
            raise ConfigError(f"split kind must be random or ordered, got {self.kind!r}")


@dataclass(frozen=True)
class MapperConfig:
    lens: str = "pca2"
    intervals_per_axis: int = 8
    overlap: float = 0.3
    cluster_eps: float = 0.65
    mass_threshold: float = 0.65
    purity_threshold: float = 0.9


@dataclass(frozen=True)
class PipelineConfig:
    filter: FilterConfig = field(default_factory=FilterConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    ica: IcaConfig = field(default_factory=IcaConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    mapper: MapperConfig = field(default_factory=MapperConfig)

    def to_dict(self) -> dict:
        payload = dataclasses.asdict(self)
        payload["ica"]["remove_categories"] = list(self.ica.remove_categories)
        payload["format_version"] = CONFIG_FORMAT_VERSION
        return payload

    def checksum(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


_SECTIONS = {
    "filter": FilterConfig,
    "reference": ReferenceConfig,
    "ica": IcaConfig,
    "segmentation": SegmentationConfig,
    "model": ModelConfig,
    "training": TrainConfig,
    "split": SplitConfig,
    "mapper": MapperConfig,
}


def config_from_dict(payload: dict) -> PipelineConfig:
    if not isinstance(payload, dict):
        raise ConfigError("config document must be a mapping")
    if "format_version" not in payload:
        raise ConfigError("config is missing the mandatory format_version field")
    if payload["format_version"] != CONFIG_FORMAT_VERSION:
        raise ConfigError(f"unsupported config format_version {payload['format_version']!r}")
    unknown = set(payload) - set(_SECTIONS) - {"format_version"}
    if unknown:
        raise ConfigError(f"unknown config section(s) {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name not in payload:
            continue
        section = dict(payload[name]) if isinstance(payload[name], dict) else payload[name]
        if name == "ica" and isinstance(section, dict):
            if "labeler" in section:
                labeler = section["labeler"]
                if isinstance(labeler, dict) and "heartbeat_lag_range_s" in labeler:
                    labeler = dict(labeler)
                    labeler["heartbeat_lag_range_s"] = tuple(labeler["heartbeat_lag_range_s"])
                section["labeler"] = _from_dict(LabelerConfig, labeler, "ica.labeler")
            if "remove_categories" in section:
                section["remove_categories"] = tuple(section["remove_categories"])
        kwargs[name] = _from_dict(cls, section, name)
    try:
        return PipelineConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid structured text: {exc}") from exc
    return config_from_dict(payload)


def save_config(config: PipelineConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")


# -- synthesis specs ----------------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Inputs for the session generator command."""

    session: SessionSpec
    signature: SignatureSpec = field(default_factory=lambda: _default_signature())
    channels: int = 64
    rate_hz: float = 5000.0


def _default_signature() -> SignatureSpec:
    from .synth import DEFAULT_SIGNATURE

    return DEFAULT_SIGNATURE


def synth_spec_from_dict(payload: dict) -> SynthSpec:
    if not isinstance(payload, dict):
        raise ConfigError("synth spec document must be a mapping")
    if "format_version" not in payload:
        raise ConfigError("synth spec is missing the mandatory format_version field")
    if payload["format_version"] != CONFIG_FORMAT_VERSION:
        raise ConfigError(f"unsupported synth spec format_version {payload['format_version']!r}")
    unknown = set(payload) - {"format_version", "session", "signature", "channels", "rate_hz"}
    if unknown:
        raise ConfigError(f"unknown synth spec key(s) {sorted(unknown)}")
    if "session" not in payload:
        raise ConfigError("synth spec needs a session section")
    try:
        session = _from_dict(SessionSpec, payload["session"], "session")
        signature = _default_signature()
        if "signature" in payload:
            sig = dict(payload["signature"])
            for band_key in ("real", "fake"):
                if band_key in sig:
                    sig[band_key] = _from_dict(BandSignature, sig[band_key], f"signature.{band_key}")
            if "artifacts" in sig:
                sig["artifacts"] = _from_dict(ArtifactSpec, sig["artifacts"], "signature.artifacts")
            if "drift" in sig and sig["drift"] is not None:
                sig["drift"] = _from_dict(DriftSpec, sig["drift"], "signature.drift")
            signature = _from_dict(SignatureSpec, sig, "signature")
        return SynthSpec(
            session=session,
            signature=signature,
            channels=int(payload.get("channels", 64)),
            rate_hz=float(payload.get("rate_hz", 5000.0)),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid synth spec: {exc}") from exc


def load_synth_spec(path) -> SynthSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"synth spec file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid structured text: {exc}") from exc
    return synth_spec_from_dict(payload)
