"""Versioned on-disk formats.

Array-bearing artifacts are stored as a pair: `<base>.raw` holding raw
little-endian samples and `<base>.json` holding a structured-text header
with a mandatory format_version. Recordings, epoch archives, and point
clouds use float32 payloads; ICA models and classifier parameters use
float64 to preserve round-trip identities.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .classifier import ModelConfig, ModelParams
from .errors import FormatError
from .ica import IcaModel
from .mapper import PointCloud
from .recording import Epoch, EpochSet, Interval, LabelTrack, Recording

FORMAT_VERSION = 1


def _data_path(base: Path) -> Path:
    return base.with_name(base.name + ".raw")


def _header_path(base: Path) -> Path:
    return base.with_name(base.name + ".json")


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: Path, expected_kind: str) -> dict:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"missing file: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid structured text: {exc}") from exc
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: expected a mapping at top level")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {version!r}")
    kind = payload.get("kind")
    if kind != expected_kind:
        raise FormatError(f"{path}: kind {kind!r}, expected {expected_kind!r}")
    return payload


def _write_pair(base: Path, array: np.ndarray, dtype: str, header: dict) -> None:
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    _data_path(base).write_bytes(np.ascontiguousarray(array).astype(dtype).tobytes())
    write_json(_header_path(base), header)


def _read_pair(base: Path, expected_kind: str, dtype: str) -> tuple[np.ndarray, dict]:
    base = Path(base)
    header = read_json(_header_path(base), expected_kind)
    data_file = _data_path(base)
    if not data_file.exists():
        raise FormatError(f"missing binary payload: {data_file}")
    flat = np.frombuffer(data_file.read_bytes(), dtype=dtype)
    return flat, header


def sha256_bytes(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


# -- recordings ----------------------------------------------------------------


def save_recording(rec: Recording, base) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "recording",
        "sample_rate_hz": rec.sample_rate_hz,
        "channel_names": list(rec.channel_names),
        "start_time_s": rec.start_time_s,
        "sample_count": rec.n_samples,
        "dtype": "<f4",
        "layout": "channel_major",
    }
    _write_pair(Path(base), rec.data, "<f4", header)


def load_recording(base) -> Recording:
    flat, header = _read_pair(Path(base), "recording", "<f4")
    names = header["channel_names"]
    count = int(header["sample_count"])
    expected = len(names) * count
    if flat.size != expected:
        raise FormatError(f"recording payload has {flat.size} samples, header claims {expected}")
    data = flat.reshape(len(names), count).astype(np.float64)
    return Recording(
        data=data,
        sample_rate_hz=float(header["sample_rate_hz"]),
        channel_names=tuple(names),
        start_time_s=float(header["start_time_s"]),
    )


# -- label tracks ----------------------------------------------------------------


def save_label_track(track: LabelTrack, path, metadata: dict | None = None) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": "label_track",
        "intervals": [
            {"start_s": iv.start_s, "end_s": iv.end_s, "tag": iv.tag} for iv in track.intervals
        ],
    }
    if metadata:
        payload["metadata"] = metadata
    write_json(Path(path), payload)


def load_label_track(path) -> LabelTrack:
    payload = read_json(Path(path), "label_track")
    try:
        intervals = tuple(
            Interval(start_s=float(iv["start_s"]), end_s=float(iv["end_s"]), tag=str(iv["tag"]))
            for iv in payload["intervals"]
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed interval entry ({exc})") from exc
    return LabelTrack(intervals=intervals)


# -- epoch archives ----------------------------------------------------------------


def save_epoch_set(epoch_set: EpochSet, base) -> None:
    windows = epoch_set.windows_array()
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "epoch_set",
        "n_epochs": len(epoch_set),
        "window_len": int(windows.shape[1]) if len(epoch_set) else 0,
        "n_channels": int(windows.shape[2]) if len(epoch_set) else 0,
        "window_s": epoch_set.window_s,
        "overlap_fraction": epoch_set.overlap_fraction,
        "sample_rate_hz": epoch_set.sample_rate_hz,
        "labels": [e.label for e in epoch_set],
        "origin_times_s": [e.origin_time_s for e in epoch_set],
        "dtype": "<f4",
    }
    _write_pair(Path(base), windows, "<f4", header)


def load_epoch_set(base) -> EpochSet:
    flat, header = _read_pair(Path(base), "epoch_set", "<f4")
    n = int(header["n_epochs"])
    length = int(header["window_len"])
    channels = int(header["n_channels"])
    if flat.size != n * length * channels:
        raise FormatError(
            f"epoch payload has {flat.size} values, header claims {n * length * channels}"
        )
    windows = flat.reshape(n, length, channels).astype(np.float64)
    labels = header["labels"]
    origins = header["origin_times_s"]
    if len(labels) != n or len(origins) != n:
        raise FormatError("label/origin lists do not match epoch count")
    epochs = tuple(
        Epoch(window=windows[i], origin_time_s=float(origins[i]), label=labels[i])
        for i in range(n)
    )
    return EpochSet(
        epochs=epochs,
        window_s=float(header["window_s"]),
        overlap_fraction=float(header["overlap_fraction"]),
        sample_rate_hz=float(header["sample_rate_hz"]),
    )


# -- ICA models ----------------------------------------------------------------


def save_ica_model(model: IcaModel, base) -> None:
    blob = np.concatenate([model.unmixing.ravel(), model.mixing.ravel(), model.mean_uv])
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "ica_model",
        "k": model.k,
        "n_channels": model.n_channels,
        "sample_rate_hz": model.sample_rate_hz,
        "channel_names": list(model.channel_names),
        "n_iterations": model.n_iterations,
        "component_scores": [dict(s) for s in model.component_scores]
        if model.component_scores is not None
        else None,
        "dominant_freq_hz": list(model.dominant_freq_hz)
        if model.dominant_freq_hz is not None
        else None,
        "dtype": "<f8",
    }
    _write_pair(Path(base), blob, "<f8", header)


def load_ica_model(base) -> IcaModel:
    flat, header = _read_pair(Path(base), "ica_model", "<f8")
    k = int(header["k"])
    channels = int(header["n_channels"])
    expected = 2 * k * channels + channels
    if flat.size != expected:
        raise FormatError(f"ICA payload has {flat.size} values, header claims {expected}")
    unmixing = flat[: k * channels].reshape(k, channels).copy()
    mixing = flat[k * channels : 2 * k * channels].reshape(channels, k).copy()
    mean = flat[2 * k * channels :].copy()
    scores = header.get("component_scores")
    dominant = header.get("dominant_freq_hz")
    return IcaModel(
        unmixing=unmixing,
        mixing=mixing,
        mean_uv=mean,
        sample_rate_hz=float(header["sample_rate_hz"]),
        channel_names=tuple(header["channel_names"]),
        n_iterations=int(header["n_iterations"]),
        component_scores=tuple({k2: float(v) for k2, v in s.items()} for s in scores)
        if scores is not None
        else None,
        dominant_freq_hz=tuple(float(f) for f in dominant) if dominant is not None else None,
    )


# -- classifier parameters ----------------------------------------------------------------


def save_params(params: ModelParams, base) -> None:
    flat = params.flatten()
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "model_params",
        "config": asdict(params.config),
        "blocks": [{"name": name, "shape": list(b.shape)} for name, b in params.blocks.items()],
        "sha256": sha256_bytes(flat.tobytes()),
        "dtype": "<f8",
    }
    _write_pair(Path(base), flat, "<f8", header)


def load_params(base) -> ModelParams:
    flat, header = _read_pair(Path(base), "model_params", "<f8")
    if sha256_bytes(flat.tobytes()) != header["sha256"]:
        raise FormatError("parameter payload checksum mismatch")
    config = ModelConfig(**header["config"])
    params = ModelParams(config=config)
    offset = 0
    for entry in header["blocks"]:
        shape = tuple(int(s) for s in entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        params.blocks[entry["name"]] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    if offset != flat.size:
        raise FormatError(f"parameter payload has {flat.size} values, blocks claim {offset}")
    return params


# -- point clouds ----------------------------------------------------------------


def save_point_cloud(cloud: PointCloud, base) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "kind": "point_cloud",
        "n_points": cloud.n_points,
        "dim": cloud.dim,
        "source": cloud.source,
        "labels": list(cloud.labels),
        "dtype": "<f4",
    }
    _write_pair(Path(base), cloud.points, "<f4", header)


def load_point_cloud(base) -> PointCloud:
    flat, header = _read_pair(Path(base), "point_cloud", "<f4")
    n = int(header["n_points"])
    dim = int(header["dim"])
    if flat.size != n * dim:
        raise FormatError(f"point cloud payload has {flat.size} values, header claims {n * dim}")
    return PointCloud(
        points=flat.reshape(n, dim).astype(np.float64),
        labels=tuple(header["labels"]),
        source=str(header.get("source", "unknown")),
    )
