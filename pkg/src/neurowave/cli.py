"""Command-line entry point chaining the analysis workflow.

Subcommands: synth (generate a session), preprocess (recording -> labeled
epochs), train-eval (epochs -> metrics report), mapper (point clouds ->
graph exports + separation report). Exit codes: 0 success, 2 input or
config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io as nwio
from .config import PipelineConfig, load_config, load_synth_spec
from .errors import ConfigError, DataError, FormatError, NumericalError
from .evaluation import metrics_table, metrics_to_dict
from .ica import component_report
from .mapper import build_mapper, export_graph, hdr_filter, lens, separation_score
from .pipeline import run_preprocess, run_train_eval
from .synth import gen_recording, gen_schedule

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("neurowave.cli")


def _setup_logging() -> None:
    level_name = os.environ.get("NEUROWAVE_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_pipeline_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return load_config(path)


def _write_report(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_synth(args) -> int:
    spec = load_synth_spec(args.spec)
    session = spec.session
    if args.seed is not None:
        import dataclasses

        session = dataclasses.replace(session, seed=args.seed)
    track = gen_schedule(session)
    rec = gen_recording(track, spec.signature, spec.channels, spec.rate_hz, seed=session.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nwio.save_recording(rec, out / "recording")
    nwio.save_label_track(
        track,
        out / "track.json",
        metadata={"quality_tag": session.quality_tag, "seed": session.seed},
    )
    log.info("wrote %s and %s", out / "recording.raw", out / "track.json")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = _load_pipeline_config(args.config)
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, ica=dataclasses.replace(cfg.ica, seed=args.seed))
    rec = nwio.load_recording(args.recording)
    track = nwio.load_label_track(args.track)
    result = run_preprocess(rec, track, cfg, skip_ica=args.skip_ica)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nwio.save_epoch_set(result.epoch_set, out / "epochs")
    report = {
        "config_sha256": cfg.checksum(),
        "stages": result.stages,
        "n_epochs": len(result.epoch_set),
        "labels": {
            "real": sum(1 for e in result.epoch_set if e.label == "real"),
            "fake": sum(1 for e in result.epoch_set if e.label == "fake"),
        },
    }
    if result.ica_model is not None:
        nwio.save_ica_model(result.ica_model, out / "ica_model")
        _write_report(out / "ica_components.json", {
            "config_sha256": cfg.checksum(),
            "components": component_report(result.ica_model),
        })
    _write_report(out / "preprocess_report.json", report)
    return EXIT_OK


def cmd_train_eval(args) -> int:
    cfg = _load_pipeline_config(args.config)
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(
            cfg,
            training=dataclasses.replace(cfg.training, seed=args.seed),
            split=dataclasses.replace(cfg.split, seed=args.seed),
        )
    epoch_set = nwio.load_epoch_set(args.epochs)
    result = run_train_eval(epoch_set, cfg, split_kind=args.split)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    nwio.save_params(result.params, out / "params")
    metrics_payload = {
        "config_sha256": cfg.checksum(),
        "split": result.summary(),
        "metrics": metrics_to_dict(result.metrics),
    }
    _write_report(out / "metrics.json", metrics_payload)
    (out / "metrics.txt").write_text(metrics_table(result.metrics) + "\n")
    _write_report(out / "train_report.json", {
        "config_sha256": cfg.checksum(),
        **result.train_report.to_dict(),
    })
    return EXIT_OK


def cmd_mapper(args) -> int:
    cfg = _load_pipeline_config(args.config)
    mass = args.mass_threshold if args.mass_threshold is not None else cfg.mapper.mass_threshold
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    per_cloud = []
    for cloud_path in args.clouds:
        cloud = nwio.load_point_cloud(cloud_path)
        lens_values = lens(cloud, cfg.mapper.lens)
        graph = build_mapper(
            cloud,
            lens_values,
            intervals_per_axis=cfg.mapper.intervals_per_axis,
            overlap=cfg.mapper.overlap,
            cluster_eps=cfg.mapper.cluster_eps,
        )
        filtered = hdr_filter(graph, mass)
        stem = Path(cloud_path).name
        (out / f"{stem}.dot").write_bytes(export_graph(filtered, "dot"))
        (out / f"{stem}.graph.json").write_bytes(export_graph(filtered, "structured-text"))
        per_cloud.append(
            {
                "cloud": str(cloud_path),
                "source": cloud.source,
                "n_points": cloud.n_points,
                "n_nodes": filtered.n_nodes,
                "n_edges": len(filtered.edges),
                "separation_score": separation_score(filtered, cfg.mapper.purity_threshold),
            }
        )
    report = {"config_sha256": cfg.checksum(), "mass_threshold": mass, "clouds": per_cloud}
    if len(per_cloud) == 2:
        a, b = per_cloud
        higher = a if a["separation_score"] >= b["separation_score"] else b
        report["comparison"] = {
            "purity": {a["cloud"]: a["separation_score"], b["cloud"]: b["separation_score"]},
            "higher_purity_cloud": higher["cloud"],
        }
    _write_report(out / "mapper_report.json", report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neurowave",
        description="Biosignal preprocessing, classification, and mapper visualisation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic session (recording + label track)")
    p_synth.add_argument("spec", help="synth spec file (structured text)")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p_synth.set_defaults(func=cmd_synth)

    p_pre = sub.add_parser("preprocess", help="run the preprocessing chain to labeled epochs")
    p_pre.add_argument("--recording", required=True, help="recording base path (without .raw/.json)")
    p_pre.add_argument("--track", required=True, help="label track file")
    p_pre.add_argument("--out", required=True, help="output directory")
    p_pre.add_argument("--config", default=None, help="pipeline config file")
    p_pre.add_argument("--skip-ica", action="store_true", help="skip the ICA stage")
    p_pre.add_argument("--seed", type=int, default=None, help="override the ICA seed")
    p_pre.set_defaults(func=cmd_preprocess)

    p_te = sub.add_parser("train-eval", help="train the classifier and write a metrics report")
    p_te.add_argument("--epochs", required=True, help="epoch archive base path")
    p_te.add_argument("--out", required=True, help="output directory")
    p_te.add_argument("--config", default=None, help="pipeline config file")
    p_te.add_argument("--split", choices=("random", "ordered"), default=None)
    p_te.add_argument("--seed", type=int, default=None, help="override training/split seeds")
    p_te.set_defaults(func=cmd_train_eval)

    p_map = sub.add_parser("mapper", help="build mapper graphs from point cloud files")
    p_map.add_argument("clouds", nargs="+", help="point cloud base path(s)")
    p_map.add_argument("--out", required=True, help="output directory")
    p_map.add_argument("--config", default=None, help="pipeline config file")
    p_map.add_argument("--mass-threshold", type=float, default=None)
    p_map.set_defaults(func=cmd_mapper)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
