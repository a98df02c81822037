import logging
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dft_peak_hz
from pseudostutter.audio import (
    AudioBuffer, AudioError, MalformedWav, UnsupportedFormat, pad_to_window,
    prepare, read_wav, resample, resampled_length, write_wav,
)


def wav_bytes(payload: bytes, *, tag=1, channels=1, rate=16000, bits=16, extensible=False):
    block = channels * bits // 8
    if extensible:
        fmt = struct.pack("<HHIIHHHHIH14s", 0xFFFE, channels, rate, rate * block, block, bits,
                          22, bits, 0, tag,
                          b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71")
    else:
        fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def sine(freq, rate, seconds, amp=0.5):
    t = np.arange(int(rate * seconds)) / rate
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), rate)


def test_silence_decodes_to_zeros():
    buf = read_wav(wav_bytes(b"\x00\x00" * 100))
    assert buf.sample_rate == 16000 and len(buf) == 100
    assert not buf.samples.any()


def test_pcm16_scaling():
    payload = np.array([32767, -32768, 16384], dtype="<i2").tobytes()
    buf = read_wav(wav_bytes(payload))
    assert buf.samples[0] == pytest.approx(32767 / 32768)
    assert buf.samples[1] == -1.0
    assert buf.samples[2] == 0.5


def test_stereo_downmix_by_mean():
    left = np.array([1000, -2000, 3000], dtype="<i2")
    frames = np.stack([left, -left], axis=1).astype("<i2").tobytes()
    buf = read_wav(wav_bytes(frames, channels=2))
    assert len(buf) == 3 and not buf.samples.any()


def test_float32_and_extensible():
    values = np.array([0.25, -0.5, 1.0], dtype="<f4")
    a = read_wav(wav_bytes(values.tobytes(), tag=3, bits=32))
    b = read_wav(wav_bytes(values.tobytes(), tag=3, bits=32, extensible=True))
    np.testing.assert_array_equal(a.samples, values)
    np.testing.assert_array_equal(b.samples, values)


@pytest.mark.parametrize("data", [b"", b"RIFF\x00\x00\x00\x00WAVX", b"RIFF\x04\x00\x00\x00WAVE"])
def test_malformed(data):
    with pytest.raises(MalformedWav):
        read_wav(data)


def test_unsupported_formats():
    with pytest.raises(UnsupportedFormat):
        read_wav(wav_bytes(b"\x00" * 6, bits=24))
    with pytest.raises(UnsupportedFormat):
        read_wav(wav_bytes(b"\x00" * 12, channels=3))


def test_truncated_data_chunk_is_tolerated():
    data = wav_bytes(np.zeros(10, dtype="<i2").tobytes())
    buf = read_wav(data[:-4])
    assert len(buf) == 8


def test_buffer_validation():
    with pytest.raises(AudioError):
        AudioBuffer(np.zeros((2, 2)), 16000)
    with pytest.raises(AudioError):
        AudioBuffer(np.array([np.nan]), 16000)
    with pytest.raises(AudioError):
        AudioBuffer(np.zeros(3), 0)


@given(st.lists(st.floats(-1.0, 1.0), max_size=200), st.sampled_from([8000, 16000, 44100]))
def test_write_read_round_trip(values, rate):
    buf = AudioBuffer(np.array(values), rate)
    back = read_wav(write_wav(buf))
    assert back.sample_rate == rate
    assert np.all(np.abs(back.samples - buf.samples) <= 1 / 32768 + 1e-12)


@pytest.mark.parametrize("n, source, target, expected", [
    (44100, 44100, 16000, 16000),
    (48000, 48000, 16000, 16000),
    (1, 48000, 16000, 0),
    (2, 48000, 16000, 1),  # 2/3 rounds up
    (3, 24000, 16000, 2),
    (1, 32000, 16000, 1),  # exactly half rounds up
])
def test_resampled_length(n, source, target, expected):
    assert resampled_length(n, source, target) == expected


def test_one_second_at_44100():
    out = resample(AudioBuffer(np.zeros(44100), 44100), 16000)
    assert out.sample_rate == 16000 and len(out) == 16000


def test_equal_rates_are_identity():
    buf = sine(440, 16000, 0.1)
    assert resample(buf, 16000) is buf


@pytest.mark.parametrize("source", [48000, 44100, 24000, 22050, 8000])
def test_sine_peak_preserved(source):
    out = resample(sine(440, source, 1.0), 16000)
    peak, width = dft_peak_hz(out.samples, 16000)
    assert abs(peak - 440) <= width


def test_dc_gain_is_unity():
    out = resample(AudioBuffer(np.full(4800, 0.5), 48000), 16000)
    middle = out.samples[200:-200]
    np.testing.assert_allclose(middle, 0.5, atol=1e-9)


def test_alias_rejection():
    # 10 kHz is above the 16 kHz Nyquist and must be attenuated
    out = resample(sine(10000, 48000, 1.0, amp=0.9), 16000)
    assert np.sqrt(np.mean(out.samples[500:-500] ** 2)) < 1e-3


def test_agrees_with_scipy_in_passband():
    signal = pytest.importorskip("scipy.signal")
    buf = sine(1000, 48000, 0.5)
    ours = resample(buf, 16000).samples
    ref = signal.resample_poly(buf.samples, 1, 3)
    assert len(ours) == len(ref)
    np.testing.assert_allclose(ours[200:-200], ref[200:-200], atol=2e-3)


def test_chunk_size_does_not_change_output():
    buf = sine(300, 44100, 0.3)
    a = resample(buf, 16000, chunk=97)
    b = resample(buf, 16000, chunk=100000)
    np.testing.assert_array_equal(a.samples, b.samples)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3000), st.sampled_from([8000, 11025, 22050, 24000, 44100, 48000]))
def test_resample_length_and_bounds(n, rate):
    rng = np.random.default_rng(n)
    out = resample(AudioBuffer(rng.uniform(-1, 1, n), rate), 16000)
    assert len(out) == resampled_length(n, rate, 16000)
    assert np.all(np.abs(out.samples) <= 1.0)


def test_pad_short_clip():
    out = pad_to_window(AudioBuffer(np.ones(10), 16000), 1)
    assert len(out) == 16000
    assert out.samples[:10].all() and not out.samples[10:].any()


def test_truncate_long_clip_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="pseudostutter.audio"):
        out = pad_to_window(AudioBuffer(np.ones(20000), 16000), 1)
    assert len(out) == 16000
    assert "truncating" in caplog.text


def test_prepare_yields_full_window():
    out = prepare(sine(440, 24000, 2.5))
    assert out.sample_rate == 16000 and len(out) == 480_000
    decoded = read_wav(write_wav(out))
    assert len(decoded) == 480_000
