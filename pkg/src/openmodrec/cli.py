"""Command-line pipeline: each subcommand runs exactly one stage and hands
off through files, so every experiment is an auditable artifact chain.

    generate        synthesize a labeled frame file
    split           open-set (or degenerate close-set) train/test split
    train           fit a model, checkpointing every epoch
    eval-close      close-set metrics for a checkpoint on a test file
    fit-weibull     per-class Weibull tails from a checkpoint + train file
    eval-open       open-set metrics (modes: slo, slwf, clwf)
    export-features 2-D feature CSV from a visualization-layer model
    plot            SVG rendering of metric/feature CSVs

Every flag has a config-file equivalent (plain key=value lines, '#'
comments); precedence is flag > file > default. The effective
configuration is echoed as a manifest next to each stage's outputs.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataio, evaluate, openset, svgplot, training
from .errors import FitError, FormatError, NumericError
from .network import Architecture, init_model
from .siggen import MODULATIONS, GenConfig, gen_dataset


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise _UsageError(f"{self.format_usage()}error: {message}")


@dataclass(frozen=True)
class Opt:
    name: str
    kind: str  # int | float | str | bool
    default: object
    help: str
    required: bool = False


_COMMANDS: dict[str, list[Opt]] = {
    "generate": [
        Opt("out", "str", None, "output .sigf path", required=True),
        Opt("classes", "str", "all", "comma list of modulation classes, or 'all'"),
        Opt("snr", "str", "0:18:2", "SNR grid start:stop:step (dB), or comma list"),
        Opt("frames", "int", 1000, "frames per (class, snr) pair"),
        Opt("seed", "int", 0, "run seed"),
        Opt("sps", "int", 4, "samples per symbol"),
        Opt("frame-len", "int", 128, "samples per frame"),
        Opt("random-phase", "bool", True, "rotate each frame by a random phase"),
        Opt("cfo-max", "float", 0.0, "max carrier frequency offset (cycles/sample)"),
    ],
    "split": [
        Opt("data", "str", None, "source .sigf file", required=True),
        Opt("train-out", "str", None, "train split output path", required=True),
        Opt("test-out", "str", None, "test split output path", required=True),
        Opt("known-classes", "str", "all", "classes kept for training, or 'all'"),
        Opt("fraction", "float", 0.5, "train fraction per known class"),
        Opt("seed", "int", 0, "shuffle seed"),
    ],
    "train": [
        Opt("data", "str", None, "training .sigf file", required=True),
        Opt("out", "str", None, "output directory", required=True),
        Opt("channels", "str", "dual", "iq, ap, or dual"),
        Opt("cells", "int", 128, "LSTM cells per layer"),
        Opt("bidirectional", "bool", False, "bidirectional LSTM layers"),
        Opt("viz-layer", "bool", False, "insert the 2-neuron visualization layer"),
        Opt("epochs", "int", 70, "training epochs"),
        Opt("batch", "int", 256, "mini-batch size"),
        Opt("lr", "float", 0.01, "Adam learning rate"),
        Opt("lambda", "float", 0.1, "center loss weight"),
        Opt("alpha", "float", 0.5, "center update rate"),
        Opt("seed", "int", 0, "run seed"),
        Opt("loss", "str", "center", "loss mode: center or softmax"),
        Opt("literal-eq5", "bool", False, "divide amplitude by the frame RMS twice"),
        Opt("resume", "str", "", "checkpoint to resume from"),
        Opt("threads", "int", 0, "worker cap (0 = available cores)"),
    ],
    "eval-close": [
        Opt("model", "str", None, "checkpoint .npz", required=True),
        Opt("test", "str", None, "test .sigf file", required=True),
        Opt("out", "str", None, "output directory", required=True),
        Opt("threads", "int", 0, "worker cap (0 = available cores)"),
    ],
    "fit-weibull": [
        Opt("model", "str", None, "checkpoint .npz", required=True),
        Opt("data", "str", None, "training .sigf file", required=True),
        Opt("m-tail", "int", 1000, "tail size M (farthest correct examples per class)"),
        Opt("out", "str", None, "tails CSV output path", required=True),
    ],
    "eval-open": [
        Opt("model", "str", None, "checkpoint .npz", required=True),
        Opt("test", "str", None, "test .sigf file (may contain unknown classes)", required=True),
        Opt("mode", "str", None, "slo, slwf, or clwf", required=True),
        Opt("tails", "str", "", "tails CSV (required for slwf/clwf)"),
        Opt("out", "str", None, "output directory", required=True),
        Opt("threads", "int", 0, "worker cap (0 = available cores)"),
    ],
    "export-features": [
        Opt("model", "str", None, "checkpoint .npz (visualization-layer model)", required=True),
        Opt("data", "str", None, ".sigf file to embed", required=True),
        Opt("out", "str", None, "features CSV output path", required=True),
    ],
    "plot": [
        Opt("per-snr", "str", "", "per-SNR CSV to render as a polyline"),
        Opt("bars", "str", "", "comparison CSV (scenario,mode,accuracy) for grouped bars"),
        Opt("features", "str", "", "feature CSV to render as a scatter"),
        Opt("out", "str", None, "output directory", required=True),
    ],
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _attr(name: str) -> str:
    return name.replace("-", "_")


def _build_parser() -> _Parser:
    parser = _Parser(prog="openmodrec", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in _COMMANDS.items():
        p = sub.add_parser(cmd)
        p.error = parser.error  # type: ignore[method-assign]
        p.add_argument("--config", default=None, help="key=value config file")
        for o in opts:
            flag = f"--{o.name}"
            if o.kind == "bool":
                p.add_argument(flag, dest=_attr(o.name), action=argparse.BooleanOptionalAction, default=None, help=o.help)
            elif o.kind == "int":
                p.add_argument(flag, dest=_attr(o.name), type=int, default=None, help=o.help)
            elif o.kind == "float":
                p.add_argument(flag, dest=_attr(o.name), type=float, default=None, help=o.help)
            else:
                p.add_argument(flag, dest=_attr(o.name), default=None, help=o.help)
        p.set_defaults(command=cmd)
    return parser


def _convert(opt: Opt, raw: str):
    if opt.kind == "int":
        return int(raw)
    if opt.kind == "float":
        return float(raw)
    if opt.kind == "bool":
        low = raw.strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise _UsageError(f"config value for {opt.name!r} must be boolean, got {raw!r}")
    return raw


def _load_config_file(path: str, opts: list[Opt]) -> dict:
    known = {o.name: o for o in opts}
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in known:
            raise _UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _convert(known[key], raw.strip())
    return values


def _resolve(args, cmd: str) -> dict:
    opts = _COMMANDS[cmd]
    file_values = _load_config_file(args.config, opts) if args.config else {}
    resolved = {}
    for o in opts:
        flag_value = getattr(args, _attr(o.name))
        if flag_value is not None:
            resolved[o.name] = flag_value
        elif o.name in file_values:
            resolved[o.name] = file_values[o.name]
        else:
            resolved[o.name] = o.default
    missing = [o.name for o in opts if o.required and resolved[o.name] in (None, "")]
    if missing:
        raise _UsageError(f"missing required option(s): {', '.join('--' + m for m in missing)}")
    return resolved


def _manifest_text(cmd: str, cfg: dict) -> str:
    lines = [f"command={cmd}"]
    for key in sorted(cfg):
        v = cfg[key]
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{key}={v}")
    return "\n".join(lines) + "\n"


def _write_manifest(cmd: str, cfg: dict, anchor: Path) -> None:
    """Echo the effective config next to the stage output. Directory outputs
    get manifest.cfg inside; file outputs get <name>.manifest beside them."""
    if anchor.is_dir():
        (anchor / "manifest.cfg").write_text(_manifest_text(cmd, cfg))
    else:
        anchor.parent.mkdir(parents=True, exist_ok=True)
        Path(str(anchor) + ".manifest").write_text(_manifest_text(cmd, cfg))


def parse_snr_spec(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"SNR spec must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR step must be positive")
        n = int(round((stop - start) / step)) + 1
        return tuple(start + k * step for k in range(max(n, 0)) if start + k * step <= stop + 1e-9)
    return tuple(float(p) for p in text.split(",") if p.strip())


def parse_classes(text: str) -> tuple[str, ...]:
    if text.strip().lower() == "all":
        return MODULATIONS
    classes = tuple(c.strip() for c in text.split(",") if c.strip())
    if not classes:
        raise ValueError("empty class list")
    return classes


# ---------------------------------------------------------------------------
# subcommands


def _cmd_generate(cfg: dict) -> int:
    gen_cfg = GenConfig(
        classes=parse_classes(cfg["classes"]),
        samples_per_symbol=cfg["sps"],
        frame_len=cfg["frame-len"],
        snrs_db=parse_snr_spec(cfg["snr"]),
        frames_per_pair=cfg["frames"],
        seed=cfg["seed"],
        random_phase=cfg["random-phase"],
        cfo_max=cfg["cfo-max"],
    )
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    summary = gen_dataset(gen_cfg, out)
    _write_manifest("generate", cfg, out)
    print(f"wrote {summary.total} frames ({summary.bytes_written} bytes) to {out}")
    for name in sorted(summary.per_class):
        print(f"  {name}: {summary.per_class[name]}")
    return 0


def _cmd_split(cfg: dict) -> int:
    _, table = dataio.read_frames(cfg["data"])
    known = table if cfg["known-classes"].strip().lower() == "all" else parse_classes(cfg["known-classes"])
    spec = dataio.SplitSpec(known=tuple(known), full=table, fraction=cfg["fraction"], seed=cfg["seed"])
    n_train, n_test = dataio.split_open_set(cfg["data"], spec, cfg["train-out"], cfg["test-out"])
    _write_manifest("split", cfg, Path(cfg["train-out"]))
    print(f"train: {n_train} frames ({len(known)} classes) -> {cfg['train-out']}")
    print(f"test:  {n_test} frames ({len(table)} classes) -> {cfg['test-out']}")
    return 0


def _cmd_train(cfg: dict) -> int:
    frames, table = dataio.read_frames(cfg["data"])
    arch = Architecture(
        channels=cfg["channels"],
        cells=cfg["cells"],
        n_classes=len(table),
        bidirectional=cfg["bidirectional"],
        viz_layer=cfg["viz-layer"],
        literal_eq5=cfg["literal-eq5"],
    )
    model = init_model(arch, table, seed=cfg["seed"])
    tconf = training.TrainConfig(
        batch_size=cfg["batch"],
        lr=cfg["lr"],
        lam=cfg["lambda"],
        alpha=cfg["alpha"],
        epochs=cfg["epochs"],
        seed=cfg["seed"],
        loss_mode=cfg["loss"],
    )
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    model, centers, log = training.train(
        frames, tconf, model, out_dir=out, resume=cfg["resume"] or None
    )
    log.write_csv(out / "trainlog.csv")
    _write_manifest("train", cfg, out)
    last = log.epochs[-1]
    print(
        f"trained {tconf.epochs} epochs on {len(frames)} frames; final "
        f"L_s={last.loss_s:.4f} L_c={last.loss_c:.4f} acc={last.accuracy:.4f}"
    )
    print(f"checkpoint: {out / 'model.npz'}")
    return 0


def _predictions(model, frames):
    _, logits = openset.forward_dataset(model, frames)
    return logits.argmax(axis=1)


def _cmd_eval_close(cfg: dict) -> int:
    model, _, _, _ = training.load_checkpoint(cfg["model"])
    frames, _ = dataio.read_frames(cfg["test"])
    labels = training._labels_to_indices(frames, model.classes)
    preds = _predictions(model, frames)
    snrs = [f.snr_db for f in frames]
    report = evaluate.build_report(preds, labels, snrs, model.classes, open_mode=False)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    evaluate.write_report_csv(report, out / "report.csv")
    evaluate.write_per_snr_csv(report, out / "per_snr.csv")
    evaluate.write_confusion_csv(report, out / "confusion.csv")
    _write_manifest("eval-close", cfg, out)
    print(f"close-set accuracy: {report.accuracy:.4f} over {report.count} frames -> {out}")
    return 0


def _cmd_fit_weibull(cfg: dict) -> int:
    model, centers, _, _ = training.load_checkpoint(cfg["model"])
    tails = openset.fit_tails(model, centers, cfg["data"], cfg["m-tail"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    openset.save_tails(tails, out)
    _write_manifest("fit-weibull", cfg, out)
    for name in sorted(tails):
        t = tails[name]
        sat = " (saturated)" if t.saturated else ""
        print(f"{name}: a={t.a:.6g} b={t.b:.6g} M={t.m_used}{sat}")
    return 0


def _cmd_eval_open(cfg: dict) -> int:
    mode = cfg["mode"].lower()
    if mode not in ("slo", "slwf", "clwf"):
        raise _UsageError(f"--mode must be slo, slwf, or clwf, got {cfg['mode']!r}")
    model, centers, _, _ = training.load_checkpoint(cfg["model"])
    frames, _ = dataio.read_frames(cfg["test"])
    known = model.classes
    n = len(known)
    index = {name: k for k, name in enumerate(known)}
    labels = np.array([index.get(f.label, n) for f in frames], dtype=np.int64)

    feats, logits = openset.forward_dataset(model, frames)
    if mode == "slo":
        preds = logits.argmax(axis=1)
    else:
        if not cfg["tails"]:
            raise _UsageError(f"--tails is required for mode {mode}")
        tails_by_name = openset.load_tails(cfg["tails"])
        missing = [c for c in known if c not in tails_by_name]
        if missing:
            raise ValueError(f"tails file lacks classes: {missing}")
        aligned = [tails_by_name[c] for c in known]
        _, _, preds = openset.recalibrate_batch(logits, feats, centers, aligned)

    snrs = [f.snr_db for f in frames]
    report = evaluate.build_report(preds, labels, snrs, known, open_mode=True)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    evaluate.write_report_csv(report, out / "report.csv")
    evaluate.write_per_snr_csv(report, out / "per_snr.csv")
    evaluate.write_confusion_csv(report, out / "confusion.csv")
    _write_manifest("eval-open", cfg, out)
    recall = f" unknown_recall={report.unknown_recall:.4f}" if report.unknown_recall is not None else ""
    print(f"open-set [{mode}] accuracy: {report.accuracy:.4f} over {report.count} frames{recall} -> {out}")
    return 0


def _cmd_export_features(cfg: dict) -> int:
    model, _, _, _ = training.load_checkpoint(cfg["model"])
    frames, _ = dataio.read_frames(cfg["data"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    count = evaluate.export_features(model, frames, out)
    _write_manifest("export-features", cfg, out)
    print(f"exported {count} feature rows -> {out}")
    return 0


def read_bars_csv(path) -> list[tuple[str, str, float]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["scenario", "mode", "accuracy"]:
        raise ValueError(f"{path}: not a comparison table (scenario,mode,accuracy)")
    return [(r[0], r[1], float(r[2])) for r in rows[1:]]


def _cmd_plot(cfg: dict) -> int:
    if not (cfg["per-snr"] or cfg["bars"] or cfg["features"]):
        raise _UsageError("plot needs at least one of --per-snr, --bars, --features")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    made = []
    if cfg["per-snr"]:
        rows = evaluate.read_per_snr_csv(cfg["per-snr"])
        svgplot.render_accuracy_curve(rows, out / "accuracy_vs_snr.svg")
        made.append("accuracy_vs_snr.svg")
    if cfg["bars"]:
        svgplot.render_bars(read_bars_csv(cfg["bars"]), out / "openset_bars.svg")
        made.append("openset_bars.svg")
    if cfg["features"]:
        pts = evaluate.read_features_csv(cfg["features"])
        svgplot.render_scatter(pts, out / "features.svg")
        made.append("features.svg")
    _write_manifest("plot", cfg, out)
    print(f"rendered {', '.join(made)} -> {out}")
    return 0


_DISPATCH = {
    "generate": _cmd_generate,
    "split": _cmd_split,
    "train": _cmd_train,
    "eval-close": _cmd_eval_close,
    "fit-weibull": _cmd_fit_weibull,
    "eval-open": _cmd_eval_open,
    "export-features": _cmd_export_features,
    "plot": _cmd_plot,
}


def run(argv) -> int:
    """Parse argv (without the program name) and run one subcommand."""
    try:
        args = _build_parser().parse_args(argv)
        cfg = _resolve(args, args.command)
        return _DISPATCH[args.command](cfg)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, FormatError, FitError, NumericError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        return run(argv)
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return int(code) if isinstance(code, int) else 0


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
