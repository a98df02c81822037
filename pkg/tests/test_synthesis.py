import base64
from collections import Counter

import numpy as np
import pytest

from pseudostutter.audio import read_wav
from pseudostutter.disfluency import AugmentationConfig, inject
from pseudostutter.rng import derive_rng
from pseudostutter.synthesis import (
    DEFAULT_VOICES, SPEED_RANGE, ClientConfigError, ClientSettings, EmptyText, GiveUp,
    HttpRewriteClient, HttpTTSClient, InvalidResponse, MockRewriteClient, MockTTSClient,
    NoVoices, RetryPolicy, Retryable, RewriteRequest, SynthesisError, SynthesisRequest,
    TokenBucket, load_prompt, make_clients, rewrite_stutter, sample_voice_and_speed,
    synthesize,
)


def test_speed_draws_in_range_and_centered():
    rng = derive_rng(7, "speed")
    speeds = np.array([sample_voice_and_speed(rng, DEFAULT_VOICES)[1] for _ in range(20000)])
    assert speeds.min() >= SPEED_RANGE[0] and speeds.max() <= SPEED_RANGE[1]
    se = 0.5 / np.sqrt(12) / np.sqrt(len(speeds))
    assert abs(speeds.mean() - 1.0) < 4 * se


def test_voice_draws_uniform():
    rng = derive_rng(3, "voice")
    n = 20000
    counts = Counter(sample_voice_and_speed(rng, DEFAULT_VOICES)[0] for _ in range(n))
    assert set(counts) == set(DEFAULT_VOICES)
    k = len(DEFAULT_VOICES)
    chi2 = sum((c - n / k) ** 2 / (n / k) for c in counts.values())
    assert chi2 < 27.88  # chi2(9) at p = 0.001


def test_sampling_is_seeded():
    a = [sample_voice_and_speed(derive_rng(1, "u1"), DEFAULT_VOICES) for _ in range(3)]
    b = [sample_voice_and_speed(derive_rng(1, "u1"), DEFAULT_VOICES) for _ in range(3)]
    assert a == b


def test_empty_voice_list():
    with pytest.raises(NoVoices):
        sample_voice_and_speed(derive_rng(0), [])


def test_request_validation():
    with pytest.raises(EmptyText):
        SynthesisRequest("  ", "alloy", 1.0)
    with pytest.raises(ValueError):
        SynthesisRequest("halo", "alloy", 1.3)
    with pytest.raises(NoVoices):
        SynthesisRequest("halo", "nobody", 1.0).check_voice(DEFAULT_VOICES)
    with pytest.raises(EmptyText):
        RewriteRequest("")


def test_mock_tts_duration_follows_speed():
    tts = MockTTSClient(sample_rate=24000)
    slow = read_wav(tts.synthesize(SynthesisRequest("saya mau makan nasi", "alloy", 0.75)))
    fast = read_wav(tts.synthesize(SynthesisRequest("saya mau makan nasi", "alloy", 1.25)))
    assert slow.sample_rate == fast.sample_rate == 24000
    assert len(fast) / len(slow) == pytest.approx(0.6, abs=1e-3)


def test_mock_tts_deterministic():
    req = SynthesisRequest("terus kenapa", "echo", 1.1)
    assert MockTTSClient(seed=4).synthesize(req) == MockTTSClient(seed=4).synthesize(req)
    assert MockTTSClient(seed=4).synthesize(req) != MockTTSClient(seed=5).synthesize(req)


def test_mock_rewrite_matches_injector():
    config = AugmentationConfig(p_disfluency=0.5)
    client = MockRewriteClient(config, seed=11)
    expected = inject("saya mau makan", AugmentationConfig(p_disfluency=0.5, seed=11),
                      at_least_one=True).text
    assert client.rewrite(RewriteRequest("Saya mau makan.")) == expected
    assert expected != "saya mau makan"


class Scripted:
    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = 0

    def __call__(self, *args):
        self.calls += 1
        out = self.outcomes.pop(0)
        if isinstance(out, Exception):
            raise out
        return out

    rewrite = synthesize = __call__


def test_retry_then_success():
    waits = []
    fn = Scripted([Retryable("429"), Retryable("503"), "ok"])
    assert RetryPolicy().call(fn, sleep=waits.append) == "ok"
    assert waits == [0.5, 1.0]


def test_retry_gives_up():
    waits = []
    fn = Scripted([Retryable("x")] * 4)
    with pytest.raises(GiveUp) as info:
        RetryPolicy(max_attempts=4).call(fn, sleep=waits.append)
    assert info.value.attempts == 4 and fn.calls == 4
    assert waits == [0.5, 1.0, 2.0]
    assert sum(waits) <= sum(RetryPolicy().delays())


def test_non_retryable_propagates_immediately():
    fn = Scripted([SynthesisError("400")])
    with pytest.raises(SynthesisError):
        RetryPolicy().call(fn, sleep=lambda s: None)
    assert fn.calls == 1


def test_delays_capped():
    assert RetryPolicy(max_attempts=8, max_delay=3).delays()[-1] == 3


def test_empty_rewrite_is_invalid():
    with pytest.raises(InvalidResponse):
        rewrite_stutter(RewriteRequest("halo"), Scripted(["   "]), sleep=lambda s: None)


def test_empty_audio_is_invalid():
    with pytest.raises(InvalidResponse):
        synthesize(SynthesisRequest("halo", "alloy", 1.0), Scripted([b""]), sleep=lambda s: None)


def test_token_bucket_paces_requests():
    now = [0.0]
    bucket = TokenBucket(rate=2.0, capacity=1, clock=lambda: now[0],
                         sleep=lambda s: now.__setitem__(0, now[0] + s))
    for _ in range(5):
        bucket.acquire()
    assert now[0] == pytest.approx(2.0)


class FakeResponse:
    def __init__(self, status, body=None):
        self.status_code = status
        self._body = body
        self.text = str(body)

    def json(self):
        if isinstance(self._body, Exception):
            raise self._body
        return self._body


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.seen = []

    def post(self, url, json, headers, timeout):
        self.seen.append((url, json, headers))
        return self.responses.pop(0)


def test_http_tts_retries_and_decodes(monkeypatch):
    monkeypatch.setenv("TTS_KEY", "secret")
    wav = MockTTSClient().synthesize(SynthesisRequest("halo", "alloy", 1.0))
    session = FakeSession([FakeResponse(429), FakeResponse(500),
                           FakeResponse(200, {"audio_wav_base64": base64.b64encode(wav).decode()})])
    client = HttpTTSClient("https://tts.example/", "TTS_KEY", session=session)
    result = synthesize(SynthesisRequest("halo", "alloy", 1.0), client, sleep=lambda s: None)
    assert result.audio == wav
    url, payload, headers = session.seen[-1]
    assert url == "https://tts.example/synthesize"
    assert payload["voice"] == "alloy" and payload["speed"] == 1.0
    assert headers["Authorization"] == "Bearer secret"
    assert len(session.seen) == 3


def test_http_client_errors(monkeypatch):
    monkeypatch.delenv("MISSING_KEY", raising=False)
    client = HttpRewriteClient("https://llm.example", "MISSING_KEY", session=FakeSession([]))
    with pytest.raises(ClientConfigError):
        client.rewrite(RewriteRequest("halo"))

    client = HttpRewriteClient("https://llm.example", None, session=FakeSession([FakeResponse(403, "no")]))
    with pytest.raises(SynthesisError):
        rewrite_stutter(RewriteRequest("halo"), client, sleep=lambda s: None)

    client = HttpRewriteClient("https://llm.example", None,
                               session=FakeSession([FakeResponse(200, ValueError("bad"))]))
    with pytest.raises(InvalidResponse):
        client.rewrite(RewriteRequest("halo"))

    client = HttpTTSClient("https://tts.example", None,
                           session=FakeSession([FakeResponse(200, {"audio_wav_base64": "%%%"})]))
    with pytest.raises(InvalidResponse):
        client.synthesize(SynthesisRequest("halo", "alloy", 1.0))


def test_http_rewrite_sends_prompt():
    session = FakeSession([FakeResponse(200, {"text": "s-saya mau"})])
    client = HttpRewriteClient("https://llm.example", None, session=session)
    req = RewriteRequest("saya mau", load_prompt("rewrite_stutter.v1").template)
    assert rewrite_stutter(req, client) == "s-saya mau"
    sent = session.seen[0][1]
    assert "saya mau" in sent["prompt"] and "$text" not in sent["prompt"]


@pytest.mark.parametrize("name", ["rewrite_stutter.v1", "tts_style.v1", "tts_clean.v1"])
def test_packaged_prompts(name):
    template = load_prompt(name)
    assert not any(line.startswith("#") for line in template.template.splitlines())
    assert template.template.strip()


def test_prompt_from_path(tmp_path):
    path = tmp_path / "mine.txt"
    path.write_text("# comment\nUlangi: $text\n", encoding="utf-8")
    assert load_prompt(str(path)).substitute(text="halo") == "Ulangi: halo"


def test_make_clients():
    rewriter, tts = make_clients(ClientSettings(), offline=True, seed=2)
    assert isinstance(rewriter, MockRewriteClient) and isinstance(tts, MockTTSClient)
    with pytest.raises(ClientConfigError):
        make_clients(ClientSettings(), offline=False)
    rewriter, tts = make_clients(ClientSettings("https://a", "https://b"), offline=False)
    assert isinstance(rewriter, HttpRewriteClient) and isinstance(tts, HttpTTSClient)
