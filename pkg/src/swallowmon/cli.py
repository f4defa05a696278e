"""Operator command line.

One binary, seven subcommands::

    simulate        generate a labelled synthetic corpus (JSON lines)
    preprocess      corpus -> per-event envelope CSVs + filter report
    train           corpus -> checkpoint + training-log CSV
    eval            checkpoint + corpus -> metrics JSON
    compare         corpus -> two-architecture comparison JSON
    gradient-check  finite-difference audit of the backward pass
    serve           host the HTTP session service
    replay          re-run a manifest and verify bit-identical outputs

Every artifact-producing run writes ``<artifact>.manifest.json`` capturing
the resolved arguments, seeds, input/output hashes and wall time; `replay`
re-executes the recorded command into a fresh directory and fails unless
the new outputs hash identically.

Tuning flags may also come from a JSON file via ``--config``; explicit
flags win over the file, the file wins over built-in defaults.

Exit codes: 0 success, 1 usage, 2 I/O, 3 validation, 4 internal.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import socket
import sys
import time
import traceback
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from swallowmon import __version__
from swallowmon.classifier import (
    Model2DConfig,
    ModelConfig,
    Network,
    Network2D,
    TrainConfig,
    compare_models,
    comparison_to_json,
    evaluate,
    gradient_check,
    load_checkpoint,
    metrics_to_json,
    save_checkpoint,
    train,
    trainlog_to_csv,
)
from swallowmon.dsp import (
    PreprocessConfig,
    design_butterworth_highpass,
    design_notch,
    filter_to_json,
    preprocess_pipeline,
    save_envelope_csv,
)
from swallowmon.signal_model import (
    ALLOWED_VOLUMES_ML,
    NoiseConfig,
    load_corpus,
    make_corpus,
    save_corpus,
)


@dataclass(frozen=True)
class RunManifest:
    """Reproduction record written next to every artifact."""

    tool_version: str
    command: str
    args: dict
    seeds: dict
    inputs: list
    outputs: list
    started_at: str
    wall_time_s: float


@dataclass(frozen=True)
class _CommandSpec:
    fn: Callable  # ns -> (input paths, output paths)
    defaults: dict
    output_flags: tuple[str, ...]
    manifest_flag: str | None  # manifest goes at <this flag's path>.manifest.json


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now_iso() -> str:
    return (
        datetime.now(timezone.utc)
        .isoformat(timespec="milliseconds")
        .replace("+00:00", "Z")
    )


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _hash_entries(paths) -> list:
    return [{"path": str(p), "sha256": _sha256(Path(p))} for p in paths]


def _write_manifest(command: str, ns: argparse.Namespace, inputs, outputs,
                    started_at: str, t0: float) -> None:
    spec = COMMANDS[command]
    if spec.manifest_flag is None:
        return
    target = getattr(ns, spec.manifest_flag, None)
    if target is None or not outputs:
        return
    args = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    manifest = RunManifest(
        tool_version=__version__,
        command=command,
        args=args,
        seeds={k: args[k] for k in ("seed", "model_seed") if args.get(k) is not None},
        inputs=_hash_entries(inputs),
        outputs=_hash_entries(outputs),
        started_at=started_at,
        wall_time_s=time.monotonic() - t0,
    )
    _atomic_write_text(
        Path(str(target) + ".manifest.json"), json.dumps(asdict(manifest), indent=2)
    )


# ---------------------------------------------------------------------------
# subcommands (each returns (input paths, output paths))
# ---------------------------------------------------------------------------


def cmd_simulate(ns):
    volumes = ALLOWED_VOLUMES_ML if ns.volume is None else (ns.volume,)
    noise = NoiseConfig.typical() if ns.noise == "typical" else None
    ds = make_corpus(
        ns.healthy,
        ns.patient,
        ns.events,
        ns.seed,
        duration_s=ns.duration,
        sample_rate_hz=ns.rate,
        noise=noise,
        volumes=volumes,
    )
    out = Path(ns.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    save_corpus(ds, tmp)
    os.replace(tmp, out)
    return [], [out]


def cmd_preprocess(ns):
    src = Path(getattr(ns, "in"))
    ds = load_corpus(src)
    cfg = PreprocessConfig(
        highpass_cutoff_hz=ns.cutoff_hz,
        highpass_order=int(ns.order),
        notch_hz=ns.notch_hz,
        notch_q=ns.notch_q,
        rms_window_ms=ns.rms_ms,
    )
    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    fs = ds.items[0].segment.sample_rate_hz
    for i, item in enumerate(ds.items):
        env = preprocess_pipeline(item.segment, cfg)
        path = out_dir / f"envelope_{i:04d}.csv"
        save_envelope_csv(env, path)
        outputs.append(path)
    hp = design_butterworth_highpass(cfg.highpass_cutoff_hz, fs, cfg.highpass_order)
    notch = design_notch(cfg.notch_hz, cfg.notch_q, fs)
    report = {
        "sample_rate_hz": fs,
        "cutoff_hz": cfg.highpass_cutoff_hz,
        "order": cfg.highpass_order,
        "cutoff_magnitude": float(hp.magnitude([cfg.highpass_cutoff_hz], fs)[0]),
        "highpass": json.loads(filter_to_json(hp)),
        "notch": json.loads(filter_to_json(notch)),
    }
    report_path = out_dir / "filter_report.json"
    _atomic_write_text(report_path, json.dumps(report, indent=2))
    outputs.append(report_path)
    return [src], outputs


def _train_config(ns) -> TrainConfig:
    return TrainConfig(
        iterations=int(ns.iterations),
        batch_size=int(ns.batch_size),
        learning_rate=ns.learning_rate,
        momentum=ns.momentum,
        val_fraction=ns.val_fraction,
        seed=int(ns.seed),
    )


def _build_net(arch: str, model_seed: int):
    if arch == "1d":
        return Network(ModelConfig(seed=model_seed))
    if arch == "2d":
        return Network2D(Model2DConfig(seed=model_seed))
    raise ValueError(f"arch must be '1d' or '2d', got {arch!r}")


def cmd_train(ns):
    corpus = Path(ns.corpus)
    ds = load_corpus(corpus)
    net = _build_net(ns.arch, int(ns.model_seed))
    tc = _train_config(ns)
    log = train(net, ds, tc)
    ckpt = Path(ns.checkpoint)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    tmp = ckpt.with_name(ckpt.name + ".tmp")
    save_checkpoint(net, tmp, training_seed=tc.seed)
    os.replace(tmp, ckpt)
    log_path = ckpt.with_name(ckpt.stem + ".trainlog.csv")
    _atomic_write_text(log_path, trainlog_to_csv(log))
    return [corpus], [ckpt, log_path]


def cmd_eval(ns):
    corpus = Path(ns.corpus)
    ds = load_corpus(corpus)
    net = load_checkpoint(ns.checkpoint)
    blob = metrics_to_json(evaluate(net, ds, threshold=ns.threshold))
    if ns.out is None:
        print(blob)
        return [corpus, Path(ns.checkpoint)], []
    out = Path(ns.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(out, blob)
    return [corpus, Path(ns.checkpoint)], [out]


def cmd_compare(ns):
    corpus = Path(ns.corpus)
    ds = load_corpus(corpus)
    report = compare_models(ds, model_seed=int(ns.model_seed), train_config=_train_config(ns))
    out = Path(ns.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(out, comparison_to_json(report))
    return [corpus], [out]


def cmd_gradient_check(ns):
    net = _build_net_for_check(ns.arch, int(ns.model_seed), int(ns.input_len))
    rng = np.random.default_rng(int(ns.seed))
    if ns.arch == "1d":
        shape = (int(ns.batch), net.cfg.in_channels, net.cfg.input_len)
    else:
        shape = (
            int(ns.batch),
            net.cfg.in_channels,
            net.cfg.input_frames,
            net.cfg.input_bins,
        )
    inputs = rng.standard_normal(shape)
    labels = rng.integers(0, 2, int(ns.batch)).astype(np.float64)
    err = gradient_check(
        net,
        inputs,
        labels,
        epsilon=ns.epsilon,
        n_samples=int(ns.samples),
        seed=int(ns.seed),
    )
    print(f"gradient-check max relative error {err!r}")
    outputs = []
    if ns.out is not None:
        out = Path(ns.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(
            out,
            json.dumps(
                {
                    "arch": ns.arch,
                    "max_rel_err": err,
                    "samples": int(ns.samples),
                    "batch": int(ns.batch),
                    "epsilon": ns.epsilon,
                    "seed": int(ns.seed),
                },
                indent=2,
            ),
        )
        outputs.append(out)
    if err >= ns.tolerance:
        raise ValueError(
            f"max relative gradient error {err!r} exceeds tolerance {ns.tolerance!r}"
        )
    return [], outputs


def _build_net_for_check(arch: str, model_seed: int, input_len: int):
    if arch == "1d":
        return Network(ModelConfig(input_len=input_len, seed=model_seed))
    if arch == "2d":
        return Network2D(Model2DConfig(input_len=input_len, seed=model_seed))
    raise ValueError(f"arch must be '1d' or '2d', got {arch!r}")


def cmd_serve(ns):
    import uvicorn

    from swallowmon.service.app import create_app

    # surface "port already taken" as an I/O error before uvicorn starts
    probe = socket.socket()
    try:
        probe.bind((ns.host, int(ns.port)))
    finally:
        probe.close()

    app = create_app(ns.data_dir, checkpoint_path=ns.model)
    uvicorn.run(app, host=ns.host, port=int(ns.port), log_level="warning")
    return [], []


def cmd_replay(ns):
    mpath = Path(ns.manifest)
    manifest = json.loads(mpath.read_text())
    command = manifest["command"]
    spec = COMMANDS.get(command)
    if spec is None or command == "replay":
        raise ValueError(f"manifest names unknown command {command!r}")
    args = dict(manifest["args"])
    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for flag in spec.output_flags:
        if args.get(flag) is not None:
            args[flag] = str(out_dir / Path(args[flag]).name)
    replay_ns = argparse.Namespace(**args)
    _, new_outputs = spec.fn(replay_ns)
    recorded = manifest["outputs"]
    if len(recorded) != len(new_outputs):
        raise ValueError(
            f"replay produced {len(new_outputs)} outputs, manifest lists {len(recorded)}"
        )
    for old, new in zip(recorded, new_outputs):
        if Path(old["path"]).name != Path(new).name:
            raise ValueError(f"output name mismatch: {old['path']} vs {new}")
        if _sha256(Path(new)) != old["sha256"]:
            raise ValueError(f"replayed output {Path(new).name} is not bit-identical")
    return [mpath], []


# ---------------------------------------------------------------------------
# parser + dispatch
# ---------------------------------------------------------------------------

_TRAIN_DEFAULTS = {
    "iterations": 200,
    "batch_size": 16,
    "learning_rate": 1e-3,
    "momentum": 0.9,
    "val_fraction": 0.2,
    "seed": 0,
    "model_seed": 0,
}

COMMANDS: dict[str, _CommandSpec] = {
    "simulate": _CommandSpec(
        fn=cmd_simulate,
        defaults={
            "healthy": 7,
            "patient": 7,
            "events": 10,
            "seed": 0,
            "duration": 4.0,
            "rate": 250.0,
            "volume": None,
            "noise": "none",
        },
        output_flags=("out",),
        manifest_flag="out",
    ),
    "preprocess": _CommandSpec(
        fn=cmd_preprocess,
        defaults={
            "cutoff_hz": 100.0,
            "order": 8,
            "notch_hz": 60.0,
            "notch_q": 30.0,
            "rms_ms": 200.0,
        },
        output_flags=("out",),
        manifest_flag="out",
    ),
    "train": _CommandSpec(
        fn=cmd_train,
        defaults=dict(_TRAIN_DEFAULTS, arch="1d"),
        output_flags=("checkpoint",),
        manifest_flag="checkpoint",
    ),
    "eval": _CommandSpec(
        fn=cmd_eval,
        defaults={"threshold": 0.5, "out": None},
        output_flags=("out",),
        manifest_flag="out",
    ),
    "compare": _CommandSpec(
        fn=cmd_compare,
        defaults=dict(_TRAIN_DEFAULTS),
        output_flags=("out",),
        manifest_flag="out",
    ),
    "gradient-check": _CommandSpec(
        fn=cmd_gradient_check,
        defaults={
            "arch": "1d",
            "input_len": 1000,
            "batch": 4,
            "samples": 200,
            "epsilon": 1e-5,
            "seed": 0,
            "model_seed": 0,
            "tolerance": 1e-4,
            "out": None,
        },
        output_flags=("out",),
        manifest_flag="out",
    ),
    "serve": _CommandSpec(
        fn=cmd_serve,
        defaults={"host": "127.0.0.1", "port": 8450, "model": None},
        output_flags=(),
        manifest_flag=None,
    ),
    "replay": _CommandSpec(
        fn=cmd_replay,
        defaults={},
        output_flags=(),
        manifest_flag=None,
    ),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="swallowmon", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add_config_flag(p):
        p.add_argument("--config", help="JSON file of flag defaults (flags win)")

    p = sub.add_parser("simulate", help="generate a synthetic corpus")
    p.add_argument("--healthy", type=int)
    p.add_argument("--patient", type=int)
    p.add_argument("--events", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--volume", type=int)
    p.add_argument("--noise", choices=("none", "typical"))
    p.add_argument("--out", required=True)
    add_config_flag(p)

    p = sub.add_parser("preprocess", help="corpus -> envelope CSVs + filter report")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cutoff-hz", dest="cutoff_hz", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--notch-hz", dest="notch_hz", type=float)
    p.add_argument("--notch-q", dest="notch_q", type=float)
    p.add_argument("--rms-ms", dest="rms_ms", type=float)
    add_config_flag(p)

    def add_train_flags(p):
        p.add_argument("--iterations", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--momentum", type=float)
        p.add_argument("--val-fraction", dest="val_fraction", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--model-seed", dest="model_seed", type=int)
        add_config_flag(p)

    p = sub.add_parser("train", help="train a classifier on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--arch", choices=("1d", "2d"))
    add_train_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--out")
    add_config_flag(p)

    p = sub.add_parser("compare", help="train and compare both architectures")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    add_train_flags(p)

    p = sub.add_parser("gradient-check", help="finite-difference backward audit")
    p.add_argument("--arch", choices=("1d", "2d"))
    p.add_argument("--input-len", dest="input_len", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--model-seed", dest="model_seed", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--out")
    add_config_flag(p)

    p = sub.add_parser("serve", help="host the HTTP session service")
    p.add_argument("--data-dir", dest="data_dir", required=True)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--model")
    add_config_flag(p)

    p = sub.add_parser("replay", help="re-run a manifest, verify bit-exact outputs")
    p.add_argument("manifest")
    p.add_argument("--out-dir", dest="out_dir", required=True)

    return parser


def _resolve_args(ns: argparse.Namespace) -> None:
    """Fill unset flags from --config file values, then built-in defaults."""
    spec = COMMANDS[ns.command]
    overrides = {}
    if getattr(ns, "config", None):
        overrides = json.loads(Path(ns.config).read_text())
        if not isinstance(overrides, dict):
            raise ValueError("--config file must hold a JSON object")
    for dest, default in spec.defaults.items():
        if getattr(ns, dest, None) is None:
            setattr(ns, dest, overrides.get(dest, default))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        started_at = _now_iso()
        t0 = time.monotonic()
        _resolve_args(ns)
        inputs, outputs = COMMANDS[ns.command].fn(ns)
        _write_manifest(ns.command, ns, inputs, outputs, started_at, t0)
        return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:
        return int(exc.code or 0)
    except Exception:
        traceback.print_exc()
        return 4


if __name__ == "__main__":
    sys.exit(main())
