"""Clients for the external stutter rewriter (LLM) and text-to-speech engine.

Real vendors are reached through a small HTTP JSON contract (see README);
``Mock*`` clients are pure functions of their inputs and are what offline
runs and the test-suite use.

HTTP contract, relative to a client's endpoint::

    POST /rewrite     {"text", "prompt"}                    -> {"text"}
    POST /synthesize  {"text", "voice", "speed", "style_prompt"}
                                                            -> {"audio_wav_base64"}

429 and 5xx responses and connection errors are retried; other non-2xx
responses are not.
"""

from __future__ import annotations

import base64
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from . import audio
from .disfluency import AugmentationConfig, inject
from .normalize import normalize_text
from .rng import derive_rng

log = logging.getLogger(__name__)

SPEED_RANGE = (0.75, 1.25)
DEFAULT_VOICES = ("alloy", "ash", "ballad", "coral", "echo", "fable",
                  "nova", "onyx", "sage", "shimmer")
REWRITE_PROMPT = "rewrite_stutter.v1"
STUTTER_STYLE_PROMPT = "tts_style.v1"
CLEAN_STYLE_PROMPT = "tts_clean.v1"


class SynthesisError(RuntimeError):
    pass


class EmptyText(SynthesisError, ValueError):
    pass


class NoVoices(SynthesisError, ValueError):
    pass


class Retryable(SynthesisError):
    """Transient transport failure; the request may be repeated."""


class GiveUp(SynthesisError):
    def __init__(self, attempts: int, last: Exception):
        super().__init__(f"giving up after {attempts} attempts: {last}")
        self.attempts = attempts
        self.last = last


class InvalidResponse(SynthesisError):
    pass


class ClientConfigError(SynthesisError, ValueError):
    pass


def load_prompt(name: str) -> Template:
    """Load a prompt template by packaged name or by file path.

    ``#`` comment lines are dropped; ``$text`` is the substitution slot.
    """
    path = Path(name)
    if path.suffix == ".txt" and path.exists():
        raw = path.read_text(encoding="utf-8")
    else:
        raw = resources.files("pseudostutter.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    body = "\n".join(line for line in raw.splitlines() if not line.startswith("#"))
    return Template(body.strip())


@dataclass(frozen=True)
class SynthesisRequest:
    text: str
    voice: str
    speed: float
    style_prompt: str = ""

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise EmptyText("cannot synthesize empty text")
        if not self.voice:
            raise NoVoices("voice must be non-empty")
        lo, hi = SPEED_RANGE
        if not lo <= self.speed <= hi:
            raise ValueError(f"speed {self.speed} outside [{lo}, {hi}]")

    def check_voice(self, voices: Sequence[str]) -> "SynthesisRequest":
        if self.voice not in voices:
            raise NoVoices(f"voice {self.voice!r} not in configured list")
        return self


@dataclass(frozen=True)
class RewriteRequest:
    text: str
    instruction_prompt: str = "$text"

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise EmptyText("cannot rewrite empty text")

    @property
    def prompt(self) -> str:
        return Template(self.instruction_prompt).safe_substitute(text=self.text)


@dataclass(frozen=True)
class SynthesisResult:
    audio: bytes
    voice: str
    speed: float


def sample_voice_and_speed(rng: np.random.Generator, voices: Sequence[str]) -> tuple[str, float]:
    """Uniform voice, uniform speed in [0.75, 1.25). Consumes exactly two draws."""
    if not voices:
        raise NoVoices("voice list is empty")
    voice = voices[int(rng.integers(len(voices)))]
    speed = float(rng.uniform(*SPEED_RANGE))
    return voice, speed


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 4
    base_delay: float = 0.5
    multiplier: float = 2.0
    max_delay: float = 8.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def delays(self) -> list[float]:
        """Waits between attempts; their sum bounds the total wait."""
        return [min(self.max_delay, self.base_delay * self.multiplier ** k)
                for k in range(self.max_attempts - 1)]

    def call(self, fn: Callable, *args, sleep: Callable[[float], None] = time.sleep):
        delays = self.delays()
        for attempt in range(1, self.max_attempts + 1):
            try:
                return fn(*args)
            except Retryable as exc:
                if attempt == self.max_attempts:
                    raise GiveUp(attempt, exc) from exc
                log.info("attempt %d failed (%s); retrying in %.2fs", attempt, exc, delays[attempt - 1])
                sleep(delays[attempt - 1])


class TokenBucket:
    """Thread-safe token bucket; ``acquire`` blocks until a token is free."""

    def __init__(self, rate: float, capacity: float = 1.0,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if rate <= 0 or capacity < 1:
            raise ValueError("rate must be > 0 and capacity >= 1")
        self.rate = rate
        self.capacity = capacity
        self._clock = clock
        self._sleep = sleep
        self._tokens = capacity
        self._stamp = clock()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Take one token; returns the time spent waiting."""
        waited = 0.0
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return waited
                wait = (1 - self._tokens) / self.rate
            self._sleep(wait)
            waited += wait


class RewriteClient(Protocol):
    def rewrite(self, request: RewriteRequest) -> str: ...


class TTSClient(Protocol):
    def synthesize(self, request: SynthesisRequest) -> bytes: ...


class MockRewriteClient:
    """Stand-in for the LLM: runs the rule injector with a fixed seed."""

    def __init__(self, config: Optional[AugmentationConfig] = None, seed: int = 0):
        base = config or AugmentationConfig()
        self.config = AugmentationConfig.from_dict({**base.to_dict(), "seed": seed})

    def rewrite(self, request: RewriteRequest) -> str:
        return inject(normalize_text(request.text), self.config, at_least_one=True).text


class MockTTSClient:
    """Deterministic tone-burst "speech".

    Duration is ``base_seconds * (len(text) / chars_per_unit) / speed``, so the
    speed setting is observable in the output length.
    """

    def __init__(self, sample_rate: int = 24_000, base_seconds: float = 1.0,
                 chars_per_unit: float = 10.0, seed: int = 0):
        self.sample_rate = sample_rate
        self.base_seconds = base_seconds
        self.chars_per_unit = chars_per_unit
        self.seed = seed

    def duration(self, request: SynthesisRequest) -> float:
        return self.base_seconds * (len(request.text) / self.chars_per_unit) / request.speed

    def synthesize(self, request: SynthesisRequest) -> bytes:
        n = int(round(self.duration(request) * self.sample_rate))
        rng = derive_rng(self.seed, request.text, request.voice, repr(request.speed))
        t = np.arange(n) / self.sample_rate
        f0 = 100.0 + 150.0 * rng.random()
        syllable_rate = 4.0 * request.speed
        envelope = 0.5 * (1 - np.cos(2 * np.pi * syllable_rate * t))
        signal = 0.25 * envelope * (np.sin(2 * np.pi * f0 * t) + 0.5 * np.sin(4 * np.pi * f0 * t))
        signal += 0.01 * rng.standard_normal(n)
        return audio.write_wav(audio.AudioBuffer(np.clip(signal, -1, 1), self.sample_rate))


class JsonContract:
    """Default request/response mapping; subclass to adapt another vendor."""

    rewrite_path = "/rewrite"
    synthesize_path = "/synthesize"

    def rewrite_payload(self, request: RewriteRequest) -> dict:
        return {"text": request.text, "prompt": request.prompt}

    def rewrite_result(self, body: dict) -> str:
        return body.get("text", "")

    def synthesize_payload(self, request: SynthesisRequest) -> dict:
        return {"text": request.text, "voice": request.voice,
                "speed": request.speed, "style_prompt": request.style_prompt}

    def synthesize_result(self, body: dict) -> bytes:
        encoded = body.get("audio_wav_base64") or ""
        try:
            return base64.b64decode(encoded, validate=True)
        except ValueError as exc:
            raise InvalidResponse(f"audio is not valid base64: {exc}") from exc


class HttpClient:
    """Shared plumbing: auth header, rate limit, in-flight cap, error mapping."""

    def __init__(self, endpoint: str, api_key_env: Optional[str] = None,
                 timeout: float = 60.0, rate_per_second: Optional[float] = None,
                 max_in_flight: int = 4, contract: Optional[JsonContract] = None,
                 session=None):
        if not endpoint:
            raise ClientConfigError("endpoint is required for an HTTP client")
        self.endpoint = endpoint.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.contract = contract or JsonContract()
        self.bucket = TokenBucket(rate_per_second) if rate_per_second else None
        self._slots = threading.BoundedSemaphore(max_in_flight)
        if session is None:
            import requests
            session = requests.Session()
        self.session = session

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise ClientConfigError(f"environment variable {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def post(self, path: str, payload: dict) -> dict:
        import requests

        if self.bucket is not None:
            self.bucket.acquire()
        with self._slots:
            try:
                resp = self.session.post(self.endpoint + path, json=payload,
                                         headers=self._headers(), timeout=self.timeout)
            except (requests.ConnectionError, requests.Timeout) as exc:
                raise Retryable(f"transport failure: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise Retryable(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise SynthesisError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise InvalidResponse(f"response is not JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise InvalidResponse("response JSON is not an object")
        return body


class HttpRewriteClient(HttpClient):
    def rewrite(self, request: RewriteRequest) -> str:
        body = self.post(self.contract.rewrite_path, self.contract.rewrite_payload(request))
        return self.contract.rewrite_result(body)


class HttpTTSClient(HttpClient):
    def synthesize(self, request: SynthesisRequest) -> bytes:
        body = self.post(self.contract.synthesize_path, self.contract.synthesize_payload(request))
        return self.contract.synthesize_result(body)


def rewrite_stutter(request: RewriteRequest, client: RewriteClient,
                    retry: Optional[RetryPolicy] = None, sleep=time.sleep) -> str:
    text = (retry or RetryPolicy()).call(client.rewrite, request, sleep=sleep)
    if not isinstance(text, str) or not text.strip():
        raise InvalidResponse("rewriter returned empty text")
    return text.strip()


def synthesize(request: SynthesisRequest, client: TTSClient,
               retry: Optional[RetryPolicy] = None, sleep=time.sleep) -> SynthesisResult:
    data = (retry or RetryPolicy()).call(client.synthesize, request, sleep=sleep)
    if not data:
        raise InvalidResponse("TTS returned no audio")
    return SynthesisResult(bytes(data), request.voice, request.speed)


@dataclass
class ClientSettings:
    """Where the two external generators live. Credentials come from env vars only."""

    llm_endpoint: str = ""
    tts_endpoint: str = ""
    llm_api_key_env: str = "PSEUDOSTUTTER_LLM_API_KEY"
    tts_api_key_env: str = "PSEUDOSTUTTER_TTS_API_KEY"
    timeout: float = 60.0
    rate_per_second: Optional[float] = None
    max_in_flight: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)


def make_clients(settings: ClientSettings, offline: bool, seed: int = 0,
                 augmentation: Optional[AugmentationConfig] = None):
    """(rewriter, tts) pair; offline always yields mocks and never touches the network."""
    if offline:
        return MockRewriteClient(augmentation, seed=seed), MockTTSClient(seed=seed)
    if not settings.llm_endpoint or not settings.tts_endpoint:
        raise ClientConfigError("llm_endpoint and tts_endpoint are required unless offline")
    common = dict(timeout=settings.timeout, rate_per_second=settings.rate_per_second,
                  max_in_flight=settings.max_in_flight)
    return (HttpRewriteClient(settings.llm_endpoint, settings.llm_api_key_env, **common),
            HttpTTSClient(settings.tts_endpoint, settings.tts_api_key_env, **common))
