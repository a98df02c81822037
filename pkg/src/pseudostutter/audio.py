"""WAV I/O, resampling and fixed-window padding.

Reads RIFF/WAVE with 16-bit PCM or 32-bit IEEE float samples (plain or
WAVE_FORMAT_EXTENSIBLE), mono or stereo; writes 16-bit PCM mono.
"""

from __future__ import annotations

import io
import logging
import math
import struct
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

TARGET_RATE = 16_000
WINDOW_SECONDS = 30

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE
_GUID_TAIL = b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"


class AudioError(ValueError):
    pass


class MalformedWav(AudioError):
    pass


class UnsupportedFormat(AudioError):
    pass


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise AudioError("AudioBuffer holds mono audio only")
        if not np.all(np.isfinite(samples)):
            raise AudioError("samples must be finite")
        if int(self.sample_rate) <= 0:
            raise AudioError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return 1

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def _chunks(data: bytes):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWav("missing RIFF/WAVE header")
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            if cid == b"data":
                # streamed writers leave the size field unset; take what is there
                yield cid, body
                return
            raise MalformedWav(f"chunk {cid!r} truncated")
        yield cid, body
        pos += 8 + size + (size & 1)


def read_wav(data: bytes) -> AudioBuffer:
    """Decode WAV bytes to a mono buffer in [-1, 1].

    Stereo is downmixed by averaging the channels.
    """
    fmt = None
    payload = None
    for cid, body in _chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise MalformedWav("fmt chunk too short")
            fmt = body
        elif cid == b"data":
            payload = body
    if fmt is None or payload is None:
        raise MalformedWav("missing fmt or data chunk")

    tag, channels, rate, byte_rate, block_align, bits = struct.unpack_from("<HHIIHH", fmt)
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 40 or fmt[26:40] != _GUID_TAIL:
            raise UnsupportedFormat("unknown WAVE_FORMAT_EXTENSIBLE sub-format")
        (tag,) = struct.unpack_from("<H", fmt, 24)
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{channels} channels")
    if rate == 0:
        raise MalformedWav("zero sample rate")
    if (tag, bits) == (WAVE_FORMAT_PCM, 16):
        dtype, scale = np.dtype("<i2"), 32768.0
    elif (tag, bits) == (WAVE_FORMAT_IEEE_FLOAT, 32):
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedFormat(f"format tag {tag:#06x} with {bits} bits per sample")
    if block_align != channels * dtype.itemsize:
        raise MalformedWav(f"block_align {block_align} inconsistent with {channels}x{bits} bit")

    usable = len(payload) - len(payload) % block_align
    frames = np.frombuffer(payload[:usable], dtype=dtype).astype(np.float64) / scale
    frames = frames.reshape(-1, channels).mean(axis=1)
    if not np.all(np.isfinite(frames)):
        raise MalformedWav("non-finite float samples")
    return AudioBuffer(np.clip(frames, -1.0, 1.0), rate)


def write_wav(buffer: AudioBuffer) -> bytes:
    """Encode as 16-bit PCM mono."""
    pcm = np.clip(np.round(buffer.samples * 32768.0), -32768, 32767).astype("<i2")
    payload = pcm.tobytes()
    out = io.BytesIO()
    out.write(b"RIFF")
    out.write(struct.pack("<I", 36 + len(payload)))
    out.write(b"WAVE")
    out.write(b"fmt ")
    out.write(struct.pack("<IHHIIHH", 16, WAVE_FORMAT_PCM, 1, buffer.sample_rate,
                          buffer.sample_rate * 2, 2, 16))
    out.write(b"data")
    out.write(struct.pack("<I", len(payload)))
    out.write(payload)
    return out.getvalue()


def resampled_length(n: int, source: int, target: int) -> int:
    # round half up in exact integer arithmetic
    return (2 * n * target + source) // (2 * source)


def _kaiser(x: np.ndarray, beta: float) -> np.ndarray:
    inside = np.abs(x) <= 1.0
    arg = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    return np.where(inside, np.i0(beta * arg) / np.i0(beta), 0.0)


def polyphase_filters(up: int, down: int, source: int, target: int,
                      zero_crossings: int = 16, beta: float = 8.6):
    """Kaiser-windowed sinc taps for each of the ``up`` output phases.

    Cutoff is 0.45 * min(source, target) Hz. Returns ``(taps, offsets)``
    where row ``p`` weights input samples ``base + offsets`` for an output
    whose position falls ``p/up`` of the way past input sample ``base``.
    Rows are normalized to unit DC gain.
    """
    cutoff = 0.45 * min(source, target) / source  # cycles per input sample
    half_width = zero_crossings / (2.0 * cutoff)
    reach = int(math.ceil(half_width))
    offsets = np.arange(-reach + 1, reach + 1)
    frac = np.arange(up)[:, None] / up
    tau = frac - offsets[None, :]
    taps = 2 * cutoff * np.sinc(2 * cutoff * tau) * _kaiser(tau / half_width, beta)
    taps /= taps.sum(axis=1, keepdims=True)
    return taps, offsets


def resample(buffer: AudioBuffer, target_rate: int, chunk: int = 8192) -> AudioBuffer:
    """Windowed-sinc polyphase resampling to ``target_rate``.

    Output length is ``round(len * target / source)``; equal rates return
    the input unchanged.
    """
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise AudioError(f"target_rate must be positive, got {target_rate}")
    source = buffer.sample_rate
    if source == target_rate:
        return buffer
    g = math.gcd(source, target_rate)
    up, down = target_rate // g, source // g
    taps, offsets = polyphase_filters(up, down, source, target_rate)

    x = buffer.samples
    n_out = resampled_length(len(x), source, target_rate)
    pad = len(offsets)
    padded = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    out = np.empty(n_out)
    for start in range(0, n_out, chunk):
        k = np.arange(start, min(start + chunk, n_out), dtype=np.int64)
        pos = k * down
        base, phase = pos // up, pos % up
        idx = base[:, None] + offsets[None, :] + pad
        out[start:start + len(k)] = np.einsum("ij,ij->i", padded[idx], taps[phase])
    return AudioBuffer(np.clip(out, -1.0, 1.0), target_rate)


def pad_to_window(buffer: AudioBuffer, window_seconds: float = WINDOW_SECONDS) -> AudioBuffer:
    """Zero-pad at the tail, or truncate with a warning, to exactly one window."""
    size = int(round(window_seconds * buffer.sample_rate))
    n = len(buffer.samples)
    if n == size:
        return buffer
    if n > size:
        log.warning("truncating %.2f s of audio to %.2f s window", buffer.duration, window_seconds)
        return AudioBuffer(buffer.samples[:size], buffer.sample_rate)
    return AudioBuffer(np.concatenate([buffer.samples, np.zeros(size - n)]), buffer.sample_rate)


def prepare(buffer: AudioBuffer, rate: int = TARGET_RATE,
            window_seconds: float = WINDOW_SECONDS) -> AudioBuffer:
    return pad_to_window(resample(buffer, rate), window_seconds)
