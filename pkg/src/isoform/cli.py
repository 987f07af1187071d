"""Operator command line: synthesize, segment, featurize, train, eval, serve.

All results are machine-readable JSON (one object to stdout, or files
when --out is given); --pretty switches to indented output. Exit codes:
0 success, 1 flag or input validation error, 2 runtime failure. Errors
go to standard error as {"error": code, "detail": ...} with stable codes.

Every subcommand is deterministic under fixed flags: rerunning synth,
train, or eval with the same arguments produces byte-identical files.
A JSON config file (--config) can supply any flag defaults by their
long names with dashes as underscores; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .classifier import (
    ModelBundle,
    NonFiniteLoss,
    TrainConfig,
    fit_bands,
    load_bundle,
    predict_proba,
    save_bundle,
    train_mlp,
)
from .dataset import (
    DatasetManifest,
    IoFailure,
    ManifestClip,
    NonMonotonicTime,
    SchemaMismatch,
    write_clip,
)
from .exercises import UnknownExercise, get_exercise
from .features import FeatureConfig, feature_vector, resolve_triplets
from .metrics import EmptyEvalSet, EvalSet, summary
from .segmentation import SegmenterConfig, detect_reps, extract_signal
from .server import replay, resolve_models_dir
from .service import ModelMissing
from .synth import dataset_specs, synthesize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class CliError(Exception):
    """A validation problem detected before any work starts."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliError(message)


def _dump(data: dict, pretty: bool) -> str:
    if pretty:
        return json.dumps(data, sort_keys=True, indent=2) + "\n"
    return json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n"


def _emit(data: dict, args: argparse.Namespace) -> None:
    """Write the payload to --out for report-style subcommands (segment,
    eval), otherwise to stdout; file-producing subcommands print their
    summary since --out already names their product."""
    text = _dump(data, args.pretty)
    if getattr(args, "out_is_payload", False) and getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _positive(value: float, name: str) -> None:
    if value <= 0:
        raise CliError(f"{name} must be positive")


# -- synth ----------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> dict:
    exercise = get_exercise(args.exercise)
    _positive(args.reps, "--reps")
    _positive(args.clips, "--clips")
    if args.noise < 0:
        raise CliError("--noise must be non-negative")
    if args.klass != "all" and args.klass not in ("0", "1", "2"):
        raise CliError("--class must be 0, 1, 2, or all")

    specs = list(
        dataset_specs(
            exercise.name,
            clips_per_class=args.clips,
            reps_per_clip=args.reps,
            noise_sigma=args.noise,
            seed=args.seed,
            fps=args.fps,
        )
    )
    if args.klass != "all":
        specs = [s for s in specs if s.class_index == int(args.klass)]

    root = Path(args.out) / exercise.name
    clips: list[ManifestClip] = []
    counters = [0, 0, 0]
    total_frames = 0
    for spec in specs:
        result = synthesize(spec)
        label = exercise.classes[spec.class_index]
        relative = f"{label}/clip_{counters[spec.class_index]:03d}.csv"
        counters[spec.class_index] += 1
        path = root / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        write_clip(result.clip, path)
        total_frames += len(result.clip)
        clips.append(
            ManifestClip(
                path=relative,
                class_index=spec.class_index,
                subject_id=f"s{spec.seed}",
            )
        )
    manifest = DatasetManifest(
        exercise=exercise.name,
        classes=exercise.classes,
        profile="coco17",
        clips=tuple(clips),
    )
    manifest.save(root / "manifest.json")
    return {
        "exercise": exercise.name,
        "dataset": str(root),
        "clips": len(clips),
        "frames": total_frames,
    }


# -- segment ---------------------------------------------------------------


def _segment_dataset(data_dir: Path, config: SegmenterConfig) -> dict:
    manifest = DatasetManifest.load(data_dir / "manifest.json")
    exercise = get_exercise(manifest.exercise)
    source = exercise.signal_source()
    entries = []
    for clip, meta in manifest.iter_clips(data_dir):
        signal = extract_signal(clip, source, config)
        segments = detect_reps(signal, config)
        entries.append(
            {
                "clip_id": meta.path,
                "class_index": meta.class_index,
                "segments": [
                    {
                        "start_index": s.start_index,
                        "end_index": s.end_index,
                        "peak_index": s.peak_index,
                        "prominence": s.prominence,
                        "start_ms": float(clip.times[s.start_index]),
                        "end_ms": float(clip.times[s.end_index]),
                    }
                    for s in segments
                ],
            }
        )
    return {"exercise": manifest.exercise, "clips": entries}


def cmd_segment(args: argparse.Namespace) -> dict:
    return _segment_dataset(Path(args.data), SegmenterConfig())


# -- featurize ---------------------------------------------------------------


def _feature_rows(data_dir: Path, segment_dump: dict) -> tuple[list[str], list[list]]:
    manifest = DatasetManifest.load(data_dir / "manifest.json")
    exercise = get_exercise(manifest.exercise)
    profile = manifest.skeleton_profile()
    labels = exercise.feature_triplets
    triplets = resolve_triplets(profile, labels)
    config = FeatureConfig()
    meta_by_id = {c.path: c for c in manifest.clips}
    clip_by_id = {meta.path: clip for clip, meta in manifest.iter_clips(data_dir)}

    header = ["clip_id", "rep_idx", "class_index", *labels]
    rows: list[list] = []
    for entry in segment_dump["clips"]:
        meta = meta_by_id[entry["clip_id"]]
        clip = clip_by_id[entry["clip_id"]]
        for rep_idx, segment in enumerate(entry["segments"]):
            rep = clip.slice(segment["start_index"], segment["end_index"])
            feature = feature_vector(rep, triplets, config)
            rows.append(
                [
                    meta.path,
                    rep_idx,
                    meta.class_index,
                    *[repr(float(v)) for v in feature.values],
                ]
            )
    return header, rows


def _write_features(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_featurize(args: argparse.Namespace) -> dict:
    data_dir = Path(args.data)
    segment_dump = json.loads(Path(args.segments).read_text())
    header, rows = _feature_rows(data_dir, segment_dump)
    _write_features(Path(args.out), header, rows)
    return {"out": args.out, "reps": len(rows), "columns": len(header)}


def _read_features(
    path: Path,
) -> tuple[list[str], list[str], list[str], list[int], np.ndarray]:
    """Feature CSV -> (header, clip ids, rep indices, class indices, matrix)."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        clip_ids, rep_idx, classes, values = [], [], [], []
        for row in reader:
            clip_ids.append(row[0])
            rep_idx.append(row[1])
            classes.append(int(row[2]))
            values.append([float(v) for v in row[3:]])
    if not values:
        raise EmptyEvalSet(f"no feature rows in {path}")
    return header, clip_ids, rep_idx, classes, np.array(values, dtype=np.float64)


# -- train ---------------------------------------------------------------


def cmd_train(args: argparse.Namespace) -> dict:
    exercise = get_exercise(args.exercise)
    _positive(args.epochs, "--epochs")
    _positive(args.learning_rate, "--learning-rate")
    config = TrainConfig(
        hidden_size=args.hidden_size,
        learning_rate=args.learning_rate,
        momentum=args.momentum,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    header, _, _, classes, features = _read_features(Path(args.features))
    if tuple(header[3:]) != exercise.feature_triplets:
        raise SchemaMismatch(
            f"feature columns {header[3:]} do not match {exercise.name}'s triplets"
        )
    class_labels = np.array(classes, dtype=int)
    model = train_mlp(features, class_labels, config)
    bands = fit_bands(
        features[class_labels == 0], exercise.feature_triplets, FeatureConfig()
    )
    bundle = ModelBundle(
        exercise=exercise.name,
        profile="coco17",
        classes=exercise.classes,
        triplet_labels=exercise.feature_triplets,
        bin_count=FeatureConfig().bin_count,
        mlp=model,
        bands=bands,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(bundle, out)
    return {
        "out": args.out,
        "examples": int(len(class_labels)),
        "initial_loss": model.loss_history[0],
        "final_loss": model.loss_history[-1],
    }


# -- eval ---------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> dict:
    if bool(args.features) == bool(args.from_clips):
        raise CliError("eval needs exactly one of --features or --from-clips")
    if args.from_clips and not args.data:
        raise CliError("--from-clips requires --data")
    if not 0.0 <= args.tau <= 1.0:
        raise CliError("--tau must lie in [0, 1]")
    _positive(args.beta, "--beta")

    bundle = load_bundle(args.model)
    if args.from_clips:
        data_dir = Path(args.data)
        dump = _segment_dataset(data_dir, SegmenterConfig())
        header, rows = _feature_rows(data_dir, dump)
        clip_ids = [r[0] for r in rows]
        rep_idx = [str(r[1]) for r in rows]
        classes = [int(r[2]) for r in rows]
        features = np.array(
            [[float(v) for v in r[3:]] for r in rows], dtype=np.float64
        )
        if features.size == 0:
            raise EmptyEvalSet("no repetitions detected in the dataset")
    else:
        header, clip_ids, rep_idx, classes, features = _read_features(
            Path(args.features)
        )
        if tuple(header[3:]) != bundle.triplet_labels:
            raise SchemaMismatch(
                f"feature columns {header[3:]} do not match the model's triplets"
            )

    probs = predict_proba(bundle.mlp, features)
    eval_set = EvalSet(
        truths=np.array(classes, dtype=int),
        probs=probs,
        tau=args.tau,
        beta=args.beta,
        class_names=bundle.classes,
    )
    if args.dump_predictions:
        with open(args.dump_predictions, "w") as handle:
            for cid, rid, truth, row in zip(clip_ids, rep_idx, classes, probs):
                handle.write(
                    json.dumps(
                        {
                            "clip_id": cid,
                            "rep_idx": int(rid),
                            "truth": truth,
                            "probs": [float(p) for p in row],
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    return summary(eval_set)


# -- serve / replay ---------------------------------------------------------


def _parse_listen(listen: str) -> tuple[str, int]:
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise CliError(f"--listen must look like host:port, got {listen!r}")
    return host, int(port)


def cmd_serve(args: argparse.Namespace) -> None:
    import uvicorn

    from .server import create_app

    host, port = _parse_listen(args.listen)
    models = resolve_models_dir(args.models)
    uvicorn.run(create_app(models), host=host, port=port, log_level="warning")


def cmd_replay(args: argparse.Namespace) -> None:
    # The protocol lines are the output; no summary object on top.
    replay(
        args.csv,
        args.exercise,
        models_dir=args.models,
        realtime=args.realtime,
    )


# -- wiring ---------------------------------------------------------------


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    parser = _Parser(prog="isoform", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: _Parser) -> None:
        p.add_argument("--config", help="JSON file with default flag values")
        p.add_argument("--pretty", action="store_true", help="indent JSON output")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--exercise", required=True)
    p.add_argument("--class", dest="klass", default="all", help="0, 1, 2, or all")
    p.add_argument("--clips", type=int, default=4, help="clips per class")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="dataset root directory")
    common(p)
    p.set_defaults(func=cmd_synth, writes_files=True)

    p = sub.add_parser("segment", help="detect reps in a dataset")
    p.add_argument("--data", required=True, help="dataset directory with manifest.json")
    p.add_argument("--out", help="write JSON here instead of stdout")
    common(p)
    p.set_defaults(func=cmd_segment, out_is_payload=True)

    p = sub.add_parser("featurize", help="angle features per rep")
    p.add_argument("--data", required=True)
    p.add_argument("--segments", required=True, help="segment dump JSON")
    p.add_argument("--out", required=True, help="feature CSV path")
    common(p)
    p.set_defaults(func=cmd_featurize, writes_files=True)

    p = sub.add_parser("train", help="train a model bundle")
    p.add_argument("--features", required=True)
    p.add_argument("--exercise", required=True)
    p.add_argument("--out", required=True, help="bundle JSON path")
    p.add_argument("--hidden-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_train, writes_files=True)

    p = sub.add_parser("eval", help="score a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--features", help="feature CSV from featurize")
    p.add_argument("--from-clips", action="store_true", help="segment + featurize internally")
    p.add_argument("--data", help="dataset directory (with --from-clips)")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--dump-predictions", help="write JSON-lines predictions here")
    p.add_argument("--out", help="write the report here instead of stdout")
    common(p)
    p.set_defaults(func=cmd_eval, out_is_payload=True)

    p = sub.add_parser("serve", help="run the websocket service")
    p.add_argument("--listen", default="127.0.0.1:8765")
    p.add_argument("--models", help="models directory (default $ISOFORM_MODELS_DIR)")
    common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="stream a CSV through the protocol")
    p.add_argument("--csv", required=True)
    p.add_argument("--exercise", required=True)
    p.add_argument("--models", help="models directory (default $ISOFORM_MODELS_DIR)")
    p.add_argument("--realtime", action="store_true", help="sleep to match frame times")
    common(p)
    p.set_defaults(func=cmd_replay)

    return parser, dict(sub.choices)


def _apply_config(args: argparse.Namespace, parser: _Parser) -> None:
    """Fill flag values from the --config JSON for flags left at default."""
    if not args.config:
        return
    try:
        overrides = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file: {exc}") from exc
    if not isinstance(overrides, dict):
        raise CliError("config file must hold a JSON object")
    defaults = {
        action.dest: action.default
        for action in parser._actions  # noqa: SLF001 - argparse has no public view
        if action.dest != "help"
    }
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest not in defaults:
            raise CliError(f"config key {key!r} is not a flag of this subcommand")
        if getattr(args, dest) == defaults[dest]:
            setattr(args, dest, value)


_ERROR_CODES = {
    IoFailure: "io_failure",
    SchemaMismatch: "schema_mismatch",
    NonMonotonicTime: "bad_timestamps",
    ModelMissing: "model_missing",
    NonFiniteLoss: "training_diverged",
    EmptyEvalSet: "empty_eval_set",
    FileNotFoundError: "io_failure",
}


def _stderr_error(code: str, detail: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "detail": detail}, sort_keys=True) + "\n")


def run(argv: list[str] | None = None) -> int:
    parser, subparsers = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args, subparsers[args.command])
        payload = args.func(args)
    except CliError as exc:
        _stderr_error("validation", str(exc))
        return EXIT_USAGE
    except UnknownExercise as exc:
        _stderr_error("unknown_exercise", str(exc))
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - boundary: map to stable codes
        for kind, code in _ERROR_CODES.items():
            if isinstance(exc, kind):
                _stderr_error(code, str(exc))
                return EXIT_RUNTIME
        _stderr_error("runtime", f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    if payload is not None:
        _emit(payload, args)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
