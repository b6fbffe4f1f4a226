"""Command-line entry point: ``drillsound <subcommand> ...``.

Exit codes: 0 success, 1 pipeline error (one ``error: ...`` line on stderr),
2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dsp, models
from .audio_io import CLASS_ORDER, AudioClip, Label, read_wav, write_wav
from .augment import VARIANT_SUFFIXES, AugmentPlan, augment_clip
from .errors import DrillSoundError
from .experiments import ablate, compare_augmentation, run_experiment, write_json
from .synth import SynthSpec, generate_corpus
from .training import Dataset, SplitSpec, TrainConfig, evaluate, featurize, split

log = logging.getLogger("drillsound")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2
MANIFEST = "manifest.csv"
CONFIG_ECHO = "config.txt"


# -- helpers -----------------------------------------------------------------

def read_config_file(path) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment. Keys use dashes or underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _resolved(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
            if k not in ("func", "config")}


def _echo_config(args, out_dir: Path) -> None:
    lines = [f"{k} = {v}" for k, v in _resolved(args).items()]
    (out_dir / CONFIG_ECHO).write_text("\n".join(lines) + "\n")


def _label_from_name(stem: str) -> Label:
    return Label.parse(stem.split("_", 1)[0])


def _source_from_name(stem: str) -> str:
    head, _, tail = stem.rpartition("_")
    return head if head and tail in VARIANT_SUFFIXES else stem


def _wav_files(directory: Path) -> list[Path]:
    files = sorted(directory.glob("*.wav"))
    if not files:
        raise DrillSoundError(f"no .wav files in {directory}")
    return files


def _load_clips(directory: Path) -> list[AudioClip]:
    return [read_wav(f, label=_label_from_name(f.stem), source_id=_source_from_name(f.stem))
            for f in _wav_files(directory)]


def load_dataset(directory, paper_literal: bool = False) -> Dataset:
    """A featurized directory (``manifest.csv`` + ``.lmsp`` files) or a directory of labelled WAVs."""
    directory = Path(directory)
    manifest = directory / MANIFEST
    if manifest.exists():
        with open(manifest, newline="") as fh:
            rows = list(csv.DictReader(fh))
        x = np.stack([dsp.load_spectrogram(directory / r["file"]) for r in rows]).astype(np.float32)
        y = [Label.parse(r["label"]).index for r in rows]
        return Dataset(x, y, [r["source_id"] for r in rows])
    return featurize(_load_clips(directory), paper_literal=paper_literal)


def _train_config(args) -> TrainConfig:
    return TrainConfig(lr=args.lr, batch_size=args.batch_size, beta1=args.beta1, epochs=args.epochs,
                       patience=args.patience, seed=args.seed)


# -- subcommands ---------------------------------------------------------------

def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = SynthSpec(n_per_class=args.n_per_class, duration_ms=args.duration_ms, seed=args.seed,
                     sample_rate=args.sample_rate)
    corpus = generate_corpus(spec)
    for clip in corpus:
        write_wav(clip, out / f"{clip.source_id}.wav")
    _echo_config(args, out)
    print(f"wrote {len(corpus)} clips to {out}")
    return EXIT_OK


def cmd_augment(args) -> int:
    src, out = Path(args.input), Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    plan = AugmentPlan(shift_ms=args.shift_ms, gain_db=args.gain_db)
    count = 0
    for f in _wav_files(src):
        clip = read_wav(f, label=_label_from_name(f.stem))
        for suffix, c in zip(VARIANT_SUFFIXES, augment_clip(clip, plan)):
            write_wav(c, out / f"{f.stem}_{suffix}.wav")
            count += 1
    _echo_config(args, out)
    print(f"wrote {count} clips to {out}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    src, out = Path(args.input), Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for f in _wav_files(src):
        clip = read_wav(f, label=_label_from_name(f.stem), source_id=_source_from_name(f.stem))
        spec = dsp.log_mel(clip, paper_literal=args.paper_literal, target_frames=args.frames)
        dsp.save_spectrogram(spec, out / f"{f.stem}.lmsp")
        rows.append({"file": f"{f.stem}.lmsp", "label": clip.label.value, "source_id": clip.source_id})
    with open(out / MANIFEST, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["file", "label", "source_id"])
        writer.writeheader()
        writer.writerows(rows)
    _echo_config(args, out)
    print(f"wrote {len(rows)} spectrograms to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    data = load_dataset(args.data)
    cfg = _train_config(args)
    spec = SplitSpec(mode=args.split_mode, seed=args.seed)
    result = run_experiment(data, args.variant, cfg, spec,
                            callback=lambda r: log.info("epoch %d val_loss %.4f", r.epoch, r.val_loss))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    models.save(result.model, out / "model.dfdm")
    result.history.to_csv(out / "history.csv")
    summary = result.summary()
    summary["cli_config"] = _resolved(args)
    write_json(summary, out / "summary.json")
    print(f"test accuracy {result.metrics.accuracy:.4f} after {result.history.epochs_run} epochs; "
          f"model saved to {out / 'model.dfdm'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = models.load(args.model)
    data = load_dataset(args.data)
    if not args.all:
        _, _, data = split(data, SplitSpec(mode=args.split_mode, seed=args.seed))
    metrics = evaluate(model, data)
    print(metrics.report())
    if args.out:
        write_json({"metrics": metrics.to_dict(), "config": _resolved(args)}, args.out)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = models.load(args.model)
    clip = read_wav(args.wav)
    spec = dsp.log_mel(clip, paper_literal=args.paper_literal)
    probs = model.forward(spec.data)[0]
    k = int(probs.argmax())
    label = CLASS_ORDER[k].value if k < len(CLASS_ORDER) else str(k)
    line = f"label={label} p=[{','.join(f'{p:.4f}' for p in probs)}]"
    if model.attention is not None:
        att = model.attention.last_weights[0]
        line += f" att=[{','.join(f'{a:.4f}' for a in att)}]"
    print(line)
    return EXIT_OK


def cmd_ablate(args) -> int:
    data = load_dataset(args.data)
    seeds = [int(s) for s in str(args.seeds).split(",") if s.strip()]
    table = ablate(data, _train_config(args), seeds, split_mode=args.split_mode)
    print(table)
    if args.out:
        table.to_csv(args.out)
        Path(args.out).with_suffix(".config.txt").write_text(
            "\n".join(f"{k} = {v}" for k, v in _resolved(args).items()) + "\n")
    return EXIT_OK


def cmd_compare_aug(args) -> int:
    original = load_dataset(args.original)
    augmented = load_dataset(args.augmented)
    table = compare_augmentation(original, augmented, _train_config(args), split_mode=args.split_mode)
    print(table)
    if args.out:
        table.to_csv(args.out)
        Path(args.out).with_suffix(".config.txt").write_text(
            "\n".join(f"{k} = {v}" for k, v in _resolved(args).items()) + "\n")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _add_train_flags(p):
    p.add_argument("--variant", default=models.PROPOSED.value, choices=[v.value for v in models.ModelVariant])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--split-mode", choices=["paper", "grouped"], default="grouped")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drillsound", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="key=value file; command-line flags take precedence")
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "generate the synthetic three-class corpus as WAV files")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=67)
    p.add_argument("--duration-ms", type=float, default=41.67)
    p.add_argument("--sample-rate", type=int, default=96_000)
    p.add_argument("--seed", type=int, default=1)

    p = add("augment", cmd_augment, "write original, time-shifted and gained copies of each WAV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--shift-ms", type=float, default=5.0)
    p.add_argument("--gain-db", type=float, default=2.0)

    p = add("featurize", cmd_featurize, "convert WAVs to LMSP log-Mel spectrogram files")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--paper-literal", action="store_true", help="100 ms windows with 50 ms hop")
    p.add_argument("--frames", type=int, default=dsp.DEFAULT_FRAMES)

    p = add("train", cmd_train, "train one variant and evaluate it on the held-out split")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)

    p = add("evaluate", cmd_evaluate, "evaluate a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--split-mode", choices=["paper", "grouped"], default="grouped")
    p.add_argument("--all", action="store_true", help="evaluate on every item instead of the test split")
    p.add_argument("--out")

    p = add("predict", cmd_predict, "classify one WAV file")
    p.add_argument("model")
    p.add_argument("wav")
    p.add_argument("--paper-literal", action="store_true")

    p = add("ablate", cmd_ablate, "train all four variants over several seeds")
    p.add_argument("--data", required=True)
    p.add_argument("--seeds", default="1")
    p.add_argument("--out")
    _add_train_flags(p)

    p = add("compare-aug", cmd_compare_aug, "train the proposed model on original vs augmented data")
    p.add_argument("--original", required=True)
    p.add_argument("--augmented", required=True)
    p.add_argument("--out")
    _add_train_flags(p)
    return parser


def _apply_config(sub: argparse.ArgumentParser, values: dict) -> None:
    known = {a.dest: a for a in sub._actions}
    unknown = sorted(set(values) - set(known))
    if unknown:
        sub.error(f"unknown config keys: {', '.join(unknown)}")
    defaults = {}
    for dest, raw in values.items():
        action = known[dest]
        if action.nargs == 0:
            defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[dest] = action.type(raw) if action.type else raw
        action.required = False
    sub.set_defaults(**defaults)


def parse_args(argv=None, parser=None) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config FILE`` act as defaults under the flags."""
    parser = parser or build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        command = next((tok for tok in argv if tok in subparsers.choices), None)
        if command is not None:
            _apply_config(subparsers.choices[command], read_config_file(known.config))
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parse_args(argv, parser)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DrillSoundError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
