"""Command-line entry point: ``pseudostutter <subcommand>``.

stdout carries data only (JSON-lines or plain text); logs go to stderr.
Exit codes: 0 success, 1 validation error, 2 runtime error, 3 partial
(some items quarantined).
"""

from __future__ import annotations

import argparse
import enum
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import audio, metrics, pipeline, synthesis
from .disfluency import DisfluencyError, inject
from .normalize import normalize_text
from .rng import derive_rng

log = logging.getLogger("pseudostutter")


class ExitStatus(enum.IntEnum):
    OK = 0
    VALIDATION = 1
    RUNTIME = 2
    PARTIAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def d(value):
        return argparse.SUPPRESS if suppress else value

    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d(None),
                   help="64-bit unsigned seed; overrides the config file (default: config value or 0)")
    g.add_argument("--config", type=Path, default=d(None),
                   help="YAML config file (pipeline keys plus an 'augmentation' section)")
    g.add_argument("--offline", action="store_true", default=d(False),
                   help="use deterministic mock clients only; no network access")
    g.add_argument("--workers", type=int, default=d(None),
                   help="parallel workers for build (default: config value or 1)")
    g.add_argument("--log-level", default=d("WARNING"),
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="stderr log level (default: WARNING)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pseudostutter",
                     description="Build and score synthetic Indonesian stuttered-speech datasets.")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("normalize", parents=[common], help="normalize text, one sentence per line",
                       description="Lowercase, strip punctuation (keeping word-internal hyphens), "
                                   "collapse whitespace. Reads stdin unless --in is given.")
    p.add_argument("--in", dest="input", type=Path, help="input text file (default: stdin)")

    p = sub.add_parser("augment", parents=[common], help="inject disfluencies, emit JSON-lines",
                       description="Normalize each input line and inject rule-based disfluencies. "
                                   "Each output line is {source, text, events}.")
    p.add_argument("--in", dest="input", type=Path, help="input text file (default: stdin)")
    p.add_argument("--p", type=float, default=None, help="per-word disfluency probability")
    p.add_argument("--filler-surface", choices=["raw", "normalized"], default=None,
                   help="keep filler punctuation (raw) or strip it (normalized)")
    p.add_argument("--at-least-one", action="store_true",
                   help="force one event into sentences that drew none")

    p = sub.add_parser("synthesize", parents=[common], help="synthesize audio for text lines",
                       description="Send each input line to the TTS client (mock with --offline) "
                                   "and write <out>/<n>.wav. Voice and speed are sampled per line.")
    p.add_argument("--in", dest="input", type=Path, help="input text file (default: stdin)")
    p.add_argument("--out", type=Path, required=True, help="output directory for WAV files")
    p.add_argument("--voice", help="fixed voice instead of sampling")
    p.add_argument("--speed", type=float, help="fixed speed in [0.75, 1.25] instead of sampling")

    p = sub.add_parser("prep-audio", parents=[common], help="resample and pad WAV files",
                       description="Resample every *.wav in --in and pad/truncate to a fixed window.")
    p.add_argument("--in", dest="input", type=Path, required=True, help="input directory")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--rate", type=int, default=audio.TARGET_RATE, help="target sample rate (default: 16000)")
    p.add_argument("--window", type=float, default=audio.WINDOW_SECONDS, help="window length in s (default: 30)")

    p = sub.add_parser("split", parents=[common], help="speaker-stratified train/dev/test split",
                       description="Assign speakers of a Common Voice TSV to train/dev/test. "
                                   "Emits one JSON line per speaker.")
    p.add_argument("--in", dest="input", type=Path, required=True, help="Common Voice TSV")
    target = p.add_mutually_exclusive_group()
    target.add_argument("--targets", help="utterance counts TRAIN,DEV,TEST")
    target.add_argument("--ratios", help="ratios TRAIN,DEV,TEST (default: 9928,1102,1103)")

    p = sub.add_parser("build", parents=[common], help="run the full dataset pipeline",
                       description="Ingest, augment, synthesize, prepare audio and write the manifest. "
                                   "Prints the run report as JSON.")
    p.add_argument("--input", type=Path, help="Common Voice TSV (default: config, else bundled sample)")
    p.add_argument("--output", type=Path, help="dataset directory (default: config, else ./dataset)")
    p.add_argument("--rule-ratio", type=float, help="fraction of utterances augmented by rules")

    p = sub.add_parser("score", parents=[common], help="WER/CER of line-aligned files",
                       description="Micro-averaged WER and CER. Emits one JSON summary line, "
                                   "preceded by per-utterance lines with --per-utt.")
    p.add_argument("--ref", type=Path, required=True, help="reference file, one utterance per line")
    p.add_argument("--hyp", type=Path, required=True, help="hypothesis file, line-aligned with --ref")
    p.add_argument("--per-utt", action="store_true", help="also emit per-utterance records")
    p.add_argument("--diff", choices=["plain", "markup"], help="attach a word diff to per-utterance records")
    p.add_argument("--no-normalize", action="store_true", help="score the text as given")

    p = sub.add_parser("diff", parents=[common], help="render error-highlighted alignments",
                       description="Print REF/HYP line pairs with substitution, deletion and "
                                   "insertion spans marked.")
    p.add_argument("--ref", type=Path, required=True, help="reference file")
    p.add_argument("--hyp", type=Path, required=True, help="hypothesis file")
    p.add_argument("--mode", choices=["plain", "markup"], default="plain", help="marker style (default: plain)")
    p.add_argument("--unit", choices=["word", "char"], default="word", help="alignment unit (default: word)")
    p.add_argument("--no-normalize", action="store_true", help="align the text as given")
    return parser


def _lines(path: Optional[Path]) -> list[str]:
    if path is None:
        return sys.stdin.read().splitlines()
    return path.read_text(encoding="utf-8").splitlines()


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _config(args) -> pipeline.PipelineConfig:
    cfg = pipeline.PipelineConfig.from_file(args.config) if args.config else pipeline.PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.offline:
        cfg.offline = True
    cfg.__post_init__()
    return cfg


def cmd_normalize(args) -> ExitStatus:
    for line in _lines(args.input):
        sys.stdout.write(normalize_text(line) + "\n")
    return ExitStatus.OK


def cmd_augment(args) -> ExitStatus:
    cfg = _config(args)
    aug = cfg.augmentation.to_dict()
    aug["seed"] = cfg.seed if args.seed is not None else aug["seed"]
    if args.p is not None:
        aug["p_disfluency"] = args.p
    if args.filler_surface:
        aug["filler_surface"] = args.filler_surface
    aug_cfg = type(cfg.augmentation).from_dict(aug)
    for n, line in enumerate(_lines(args.input)):
        text = normalize_text(line)
        if not text:
            log.warning("line %d is empty after normalization; skipped", n + 1)
            continue
        _emit(inject(text, aug_cfg, key=str(n), at_least_one=args.at_least_one).to_dict())
    return ExitStatus.OK


def cmd_synthesize(args) -> ExitStatus:
    cfg = _config(args)
    _, tts = synthesis.make_clients(cfg.clients, cfg.offline, seed=cfg.seed)
    style = synthesis.load_prompt(cfg.stutter_style_prompt).template
    args.out.mkdir(parents=True, exist_ok=True)
    status = ExitStatus.OK
    for n, line in enumerate(_lines(args.input)):
        if not line.strip():
            continue
        voice, speed = synthesis.sample_voice_and_speed(derive_rng(cfg.seed, "synthesize", str(n)), cfg.voices)
        request = synthesis.SynthesisRequest(line.strip(), args.voice or voice,
                                             args.speed if args.speed is not None else speed, style)
        try:
            result = synthesis.synthesize(request, tts, cfg.clients.retry)
        except synthesis.SynthesisError as exc:
            log.error("line %d: %s", n + 1, exc)
            status = ExitStatus.PARTIAL
            continue
        path = args.out / f"{n:06d}.wav"
        path.write_bytes(result.audio)
        _emit({"line": n + 1, "text": request.text, "voice": result.voice,
               "speed": result.speed, "path": str(path)})
    return status


def cmd_prep_audio(args) -> ExitStatus:
    if not args.input.is_dir():
        raise pipeline.IoError(f"{args.input} is not a directory")
    args.out.mkdir(parents=True, exist_ok=True)
    status = ExitStatus.OK
    for path in sorted(args.input.glob("*.wav")):
        try:
            buf = audio.prepare(audio.read_wav(path.read_bytes()), args.rate, args.window)
        except audio.AudioError as exc:
            log.error("%s: %s", path.name, exc)
            status = ExitStatus.PARTIAL
            continue
        (args.out / path.name).write_bytes(audio.write_wav(buf))
        _emit({"file": path.name, "samples": len(buf), "sample_rate": buf.sample_rate})
    return status


def _triple(text: str, kind=float) -> list:
    parts = [kind(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated values, got {text!r}")
    return parts


def cmd_split(args) -> ExitStatus:
    seed = args.seed if args.seed is not None else _config(args).seed
    utts, _ = pipeline.ingest_commonvoice(args.input)
    if args.targets:
        targets = _triple(args.targets, int)
    else:
        ratios = _triple(args.ratios) if args.ratios else list(pipeline.DEFAULT_SPLIT_COUNTS)
        targets = pipeline.counts_from_ratios(ratios, len(utts))
    plan = pipeline.stratified_split(utts, targets, seed=seed)
    sizes = {}
    for u in utts:
        sizes[u.speaker_id] = sizes.get(u.speaker_id, 0) + 1
    for spk in sorted(plan.assignment):
        _emit({"speaker_id": spk, "split": plan.assignment[spk], "utterances": sizes[spk]})
    log.info("targets %s achieved %s", plan.target_counts, plan.counts)
    return ExitStatus.OK


def cmd_build(args) -> ExitStatus:
    cfg = _config(args)
    if args.input:
        cfg.input_tsv = str(args.input)
    if args.output:
        cfg.output_dir = str(args.output)
    if args.rule_ratio is not None:
        cfg.rule_ratio = args.rule_ratio
    cfg.__post_init__()
    report = pipeline.run_pipeline(cfg)
    _emit(report.to_dict())
    return ExitStatus.PARTIAL if report.partial else ExitStatus.OK


def _pairs(args) -> list[tuple[str, str]]:
    refs, hyps = _lines(args.ref), _lines(args.hyp)
    if len(refs) != len(hyps):
        raise ValueError(f"{args.ref} has {len(refs)} lines but {args.hyp} has {len(hyps)}")
    if args.no_normalize:
        return list(zip(refs, hyps))
    return [(normalize_text(r), normalize_text(h)) for r, h in zip(refs, hyps)]


def cmd_score(args) -> ExitStatus:
    pairs = _pairs(args)
    score = metrics.score_corpus(pairs)
    if args.per_utt:
        for n, (w, c) in enumerate(score.per_utterance):
            rec = {"line": n + 1, "wer": w.to_dict(), "cer": c.to_dict()}
            if args.diff:
                rec["diff"] = metrics.render_diff(w, args.diff)
            _emit(rec)
    _emit(score.to_dict())
    return ExitStatus.OK


def cmd_diff(args) -> ExitStatus:
    align = metrics.wer if args.unit == "word" else metrics.cer
    for ref, hyp in _pairs(args):
        sys.stdout.write(metrics.render_diff(align(ref, hyp), args.mode) + "\n\n")
    return ExitStatus.OK


COMMANDS = {
    "normalize": cmd_normalize, "augment": cmd_augment, "synthesize": cmd_synthesize,
    "prep-audio": cmd_prep_audio, "split": cmd_split, "build": cmd_build,
    "score": cmd_score, "diff": cmd_diff,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return ExitStatus.VALIDATION
    except SystemExit as exc:  # --help
        return ExitStatus.OK if not exc.code else ExitStatus.VALIDATION
    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        return COMMANDS[args.command](args)
    except (pipeline.IoError, OSError, synthesis.GiveUp) as exc:
        log.error("%s", exc)
        return ExitStatus.RUNTIME
    except (ValueError, DisfluencyError, metrics.MetricsError, pipeline.PipelineError,
            synthesis.SynthesisError) as exc:
        log.error("%s", exc)
        return ExitStatus.VALIDATION


if __name__ == "__main__":
    sys.exit(main())
