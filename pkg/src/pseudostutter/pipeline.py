"""Corpus-to-dataset orchestration.

ingest -> normalize -> augment (rule or LLM) -> synthesize clean and stuttered
audio -> resample and pad -> write WAVs -> manifest record.

Output layout::

    <output_dir>/clean/<id>.wav
    <output_dir>/stuttered/<id>.wav
    <output_dir>/manifest.jsonl   one ManifestRecord per line, sorted by id
    <output_dir>/rejects.jsonl    quarantined utterances with stage and error
    <output_dir>/report.json      counts per stage
"""

from __future__ import annotations

import csv
import json
import logging
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import audio
from .disfluency import AugmentationConfig, DisfluencyEvent, DisfluencyError, inject
from .normalize import normalize_text
from .rng import derive_rng
from .synthesis import (
    CLEAN_STYLE_PROMPT, DEFAULT_VOICES, REWRITE_PROMPT, STUTTER_STYLE_PROMPT,
    ClientConfigError, ClientSettings, RetryPolicy, RewriteRequest, SynthesisRequest,
    load_prompt, make_clients, rewrite_stutter, sample_voice_and_speed, synthesize,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SPLITS = ("train", "dev", "test")
# sentence counts of the reference train/dev/test profile
DEFAULT_SPLIT_COUNTS = (9928, 1102, 1103)
REQUIRED_COLUMNS = ("client_id", "path", "sentence")


class PipelineError(Exception):
    pass


class SchemaError(PipelineError, ValueError):
    pass


class IoError(PipelineError, OSError):
    pass


class InsufficientSpeakers(PipelineError, ValueError):
    pass


class ConfigError(PipelineError, ValueError):
    pass


def sample_corpus_path() -> Path:
    return Path(str(resources.files("pseudostutter.data").joinpath("sample_validated.tsv")))


@dataclass(frozen=True)
class Utterance:
    id: str
    speaker_id: str
    text: str
    audio_path: Optional[str] = None


def ingest_commonvoice(tsv_path) -> tuple[list[Utterance], int]:
    """Read a Common Voice style TSV.

    Columns are located by header name. Returns the utterances and the
    number of rows skipped for an empty sentence or empty client_id.
    """
    try:
        with open(tsv_path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
            header = reader.fieldnames or []
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise SchemaError(f"{tsv_path}: missing columns {missing}")
            rows = list(reader)
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {tsv_path}: {exc}") from exc

    utterances, skipped, seen = [], 0, set()
    for row in rows:
        sentence = (row.get("sentence") or "").strip()
        speaker = (row.get("client_id") or "").strip()
        path = (row.get("path") or "").strip()
        if not sentence or not speaker:
            skipped += 1
            continue
        if not path:
            raise SchemaError(f"{tsv_path}: row without a path for speaker {speaker}")
        uid = Path(path).stem
        if uid in seen:
            raise SchemaError(f"{tsv_path}: duplicate utterance id {uid}")
        seen.add(uid)
        utterances.append(Utterance(uid, speaker, sentence, path))
    return utterances, skipped


@dataclass(frozen=True)
class SplitPlan:
    assignment: dict
    target_counts: tuple
    counts: tuple

    def split_of(self, speaker_id: str) -> str:
        return self.assignment[speaker_id]

    def speakers(self, split: str) -> set:
        return {s for s, v in self.assignment.items() if v == split}


def counts_from_ratios(ratios: Sequence[float], total: int) -> tuple[int, int, int]:
    """Largest-remainder apportionment of ``total`` by ``ratios``."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ConfigError(f"need three non-negative split ratios, got {ratios!r}")
    scale = total / sum(ratios)
    raw = [r * scale for r in ratios]
    counts = [int(x) for x in raw]
    order = sorted(range(3), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:total - sum(counts)]:
        counts[i] += 1
    return tuple(counts)


def stratified_split(utterances: Sequence[Utterance], target_counts: Sequence[int],
                     seed: int = 0) -> SplitPlan:
    """Assign whole speakers to train/dev/test to approach ``target_counts``.

    Speakers go largest first (ties in a seeded random order) to the split
    with the largest remaining deficit; ties between splits go to the
    earlier split.
    """
    targets = tuple(int(t) for t in target_counts)
    if len(targets) != 3 or min(targets) < 0:
        raise ConfigError(f"need three non-negative targets, got {target_counts!r}")
    if sum(targets) > len(utterances):
        raise ConfigError(f"targets sum {sum(targets)} exceeds corpus size {len(utterances)}")
    sizes = Counter(u.speaker_id for u in utterances)
    if len(sizes) < 3:
        raise InsufficientSpeakers(f"need at least 3 speakers, found {len(sizes)}")

    speakers = sorted(sizes)
    rng = derive_rng(seed, "split")
    rng.shuffle(speakers)
    speakers.sort(key=lambda s: -sizes[s])

    assigned = [0, 0, 0]
    assignment = {}
    for spk in speakers:
        deficits = [t - a for t, a in zip(targets, assigned)]
        k = deficits.index(max(deficits))
        assignment[spk] = SPLITS[k]
        assigned[k] += sizes[spk]
    return SplitPlan(assignment, targets, tuple(assigned))


def synthetic_utterances(total: int, speakers: int, seed: int = 0,
                         skew: float = 1.0) -> list[Utterance]:
    """Fake corpus with a long-tailed utterances-per-speaker profile.

    Every speaker gets at least one utterance; the rest are spread with
    weights ``1 / rank**skew``. Useful for profiling the splitter.
    """
    if speakers < 1 or total < speakers:
        raise ConfigError("need 1 <= speakers <= total")
    rng = derive_rng(seed, "synthetic")
    weights = 1.0 / np.arange(1, speakers + 1) ** skew
    sizes = 1 + rng.multinomial(total - speakers, weights / weights.sum())
    out = []
    for s, n in enumerate(sizes):
        spk = f"spk{s:05d}"
        out += [Utterance(f"{spk}_{i:05d}", spk, "kalimat contoh") for i in range(n)]
    return out


@dataclass
class PipelineConfig:
    input_tsv: str = ""
    output_dir: str = "dataset"
    clips_dir: str = ""
    seed: int = 0
    workers: int = 1
    offline: bool = False
    # fraction of utterances augmented by the rule injector; the rest go to the LLM
    rule_ratio: float = 0.5
    split_counts: Optional[list] = None
    split_ratios: list = field(default_factory=lambda: list(DEFAULT_SPLIT_COUNTS))
    voices: list = field(default_factory=lambda: list(DEFAULT_VOICES))
    sample_rate: int = audio.TARGET_RATE
    window_seconds: float = audio.WINDOW_SECONDS
    # "tts" synthesizes the clean variant; "source" uses <clips_dir>/<id>.wav
    clean_audio: str = "tts"
    rewrite_prompt: str = REWRITE_PROMPT
    stutter_style_prompt: str = STUTTER_STYLE_PROMPT
    clean_style_prompt: str = CLEAN_STYLE_PROMPT
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    clients: ClientSettings = field(default_factory=ClientSettings)

    def __post_init__(self):
        if not 0.0 <= self.rule_ratio <= 1.0:
            raise ConfigError("rule_ratio must be in [0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.clean_audio not in ("tts", "source"):
            raise ConfigError("clean_audio must be 'tts' or 'source'")
        if not self.voices:
            raise ConfigError("voices must not be empty")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if isinstance(data.get("augmentation"), dict):
                data["augmentation"] = AugmentationConfig.from_dict(data["augmentation"])
            if isinstance(data.get("clients"), dict):
                clients = dict(data["clients"])
                if isinstance(clients.get("retry"), dict):
                    clients["retry"] = RetryPolicy(**clients["retry"])
                data["clients"] = ClientSettings(**clients)
            return cls(**data)
        except (TypeError, DisfluencyError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["augmentation"] = self.augmentation.to_dict()
        return d


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    speaker_id: str
    split: str
    original_text: str
    original_audio: str
    stuttered_text: str
    stuttered_audio: str
    events: tuple
    voice: str
    speed: float
    strategy: str

    def __post_init__(self):
        for name in ("original_text", "original_audio", "stuttered_text", "stuttered_audio"):
            if not getattr(self, name):
                raise SchemaError(f"record {self.id}: {name} is empty")
        if self.strategy not in ("rule", "llm"):
            raise SchemaError(f"record {self.id}: unknown strategy {self.strategy!r}")
        if bool(self.events) == (self.strategy == "llm"):
            raise SchemaError(f"record {self.id}: events must be empty iff strategy is llm")

    def to_json(self) -> str:
        d = {"schema_version": SCHEMA_VERSION, **asdict(self)}
        d["events"] = [e.to_dict() for e in self.events]
        return json.dumps(d, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "ManifestRecord":
        d = json.loads(line)
        if d.pop("schema_version", None) != SCHEMA_VERSION:
            raise SchemaError("unsupported manifest schema version")
        d["events"] = tuple(DisfluencyEvent.from_dict(e) for e in d["events"])
        return cls(**d)


class UtteranceFailure(Exception):
    def __init__(self, stage: str, error: Exception):
        super().__init__(f"{stage}: {error}")
        self.stage = stage
        self.error = error


def read_manifest(path) -> list[ManifestRecord]:
    """Records in ``path``; a torn final line from an interrupted run is ignored."""
    records = []
    p = Path(path)
    if not p.exists():
        return records
    lines = p.read_text(encoding="utf-8").splitlines()
    for n, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            records.append(ManifestRecord.from_json(line))
        except (ValueError, KeyError, TypeError):
            if n == len(lines) - 1:
                log.warning("ignoring truncated last line of %s", p)
                break
            raise
    return records


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class _Context:
    """Everything a worker needs; read-only once built."""

    def __init__(self, config: PipelineConfig, plan: SplitPlan, out: Path):
        self.config = config
        self.plan = plan
        self.out = out
        self.rewriter, self.tts = make_clients(config.clients, config.offline, seed=config.seed,
                                               augmentation=config.augmentation)
        self.rewrite_template = load_prompt(config.rewrite_prompt).template
        self.stutter_style = load_prompt(config.stutter_style_prompt).template
        self.clean_style = load_prompt(config.clean_style_prompt).template


def _prepared_wav(data: bytes, config: PipelineConfig) -> bytes:
    buf = audio.read_wav(data)
    buf = audio.prepare(buf, config.sample_rate, config.window_seconds)
    return audio.write_wav(buf)


def process_utterance(utt: Utterance, ctx: _Context) -> ManifestRecord:
    """Run one utterance through every stage; failures carry the stage name."""
    cfg = ctx.config
    stage = "normalize"
    try:
        text = normalize_text(utt.text)
        if not text:
            raise ValueError("sentence is empty after normalization")

        rng = derive_rng(cfg.seed, "utterance", utt.id)
        use_rule = rng.random() < cfg.rule_ratio
        voice, speed = sample_voice_and_speed(rng, cfg.voices)

        stage = "augment"
        if use_rule:
            stuttered = inject(text, cfg.augmentation, key=f"{cfg.seed}/{utt.id}", at_least_one=True)
            stuttered_text, events, strategy = stuttered.text, stuttered.events, "rule"
        else:
            request = RewriteRequest(text, ctx.rewrite_template)
            stuttered_text = rewrite_stutter(request, ctx.rewriter, cfg.clients.retry)
            events, strategy = (), "llm"

        stage = "synthesize"
        if cfg.clean_audio == "tts":
            clean_req = SynthesisRequest(text, voice, speed, ctx.clean_style)
            clean_raw = synthesize(clean_req, ctx.tts, cfg.clients.retry).audio
        else:
            clean_raw = (Path(cfg.clips_dir) / f"{utt.id}.wav").read_bytes()
        stutter_req = SynthesisRequest(stuttered_text, voice, speed, ctx.stutter_style)
        stutter_raw = synthesize(stutter_req, ctx.tts, cfg.clients.retry).audio

        stage = "audio"
        clean_wav = _prepared_wav(clean_raw, cfg)
        stutter_wav = _prepared_wav(stutter_raw, cfg)

        stage = "write"
        clean_rel = f"clean/{utt.id}.wav"
        stutter_rel = f"stuttered/{utt.id}.wav"
        _write_atomic(ctx.out / clean_rel, clean_wav)
        _write_atomic(ctx.out / stutter_rel, stutter_wav)
    except ClientConfigError:
        raise
    except Exception as exc:
        raise UtteranceFailure(stage, exc) from exc

    return ManifestRecord(
        id=utt.id, speaker_id=utt.speaker_id, split=ctx.plan.split_of(utt.speaker_id),
        original_text=text, original_audio=clean_rel,
        stuttered_text=stuttered_text, stuttered_audio=stutter_rel,
        events=tuple(events), voice=voice, speed=speed, strategy=strategy,
    )


def _safe(fn, utt, ctx):
    try:
        return fn(utt, ctx)
    except UtteranceFailure as exc:
        return exc


@dataclass
class PipelineReport:
    ingested: int = 0
    skipped_rows: int = 0
    already_done: int = 0
    processed: int = 0
    rejected: int = 0
    rejects_by_stage: dict = field(default_factory=dict)
    strategies: dict = field(default_factory=dict)
    split_targets: dict = field(default_factory=dict)
    split_counts: dict = field(default_factory=dict)
    manifest_records: int = 0
    wav_files: int = 0

    @property
    def partial(self) -> bool:
        return self.rejected > 0

    def to_dict(self) -> dict:
        return asdict(self)


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    """Build the dataset directory; resumable and order-stable.

    Records already in the manifest are skipped by id. The manifest is
    rewritten sorted by id at the end, so the worker count and interruptions
    do not change its bytes.
    """
    source = config.input_tsv or sample_corpus_path()
    utterances, skipped = ingest_commonvoice(source)
    utterances.sort(key=lambda u: u.id)
    if config.split_counts is not None:
        targets = tuple(config.split_counts)
    else:
        targets = counts_from_ratios(config.split_ratios, len(utterances))
    plan = stratified_split(utterances, targets, seed=config.seed)

    out = Path(config.output_dir)
    try:
        for sub in ("clean", "stuttered"):
            (out / sub).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc

    manifest_path = out / "manifest.jsonl"
    done = {r.id: r for r in read_manifest(manifest_path)}
    wanted = {u.id for u in utterances}
    todo = [u for u in utterances if u.id not in done]
    report = PipelineReport(ingested=len(utterances), skipped_rows=skipped,
                            already_done=len(wanted & done.keys()))
    log.info("%d utterances, %d already done, %d to process", len(utterances),
             report.already_done, len(todo))

    ctx = _Context(config, plan, out)
    rejects = []
    with open(manifest_path, "a", encoding="utf-8") as manifest, \
            ThreadPoolExecutor(max_workers=config.workers) as pool:
        for utt, result in zip(todo, pool.map(lambda u: _safe(process_utterance, u, ctx), todo)):
            if isinstance(result, UtteranceFailure):
                log.warning("quarantined %s at %s: %s", utt.id, result.stage, result.error)
                rejects.append({"id": utt.id, "stage": result.stage,
                                "error": f"{type(result.error).__name__}: {result.error}"})
                continue
            manifest.write(result.to_json() + "\n")
            manifest.flush()
            done[result.id] = result
            report.processed += 1

    records = [done[k] for k in sorted(done) if k in wanted]
    _write_atomic(manifest_path, "".join(r.to_json() + "\n" for r in records).encode("utf-8"))
    _write_atomic(out / "rejects.jsonl",
                  "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rejects).encode("utf-8"))

    report.rejected = len(rejects)
    report.rejects_by_stage = dict(sorted(Counter(r["stage"] for r in rejects).items()))
    report.strategies = dict(sorted(Counter(r.strategy for r in records).items()))
    report.split_targets = dict(zip(SPLITS, plan.target_counts))
    report.split_counts = {s: sum(1 for r in records if r.split == s) for s in SPLITS}
    report.manifest_records = len(records)
    report.wav_files = sum(1 for sub in ("clean", "stuttered") for _ in (out / sub).glob("*.wav"))
    _write_atomic(out / "report.json", (json.dumps(report.to_dict(), indent=2) + "\n").encode("utf-8"))
    return report
