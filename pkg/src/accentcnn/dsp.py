"""Audio front end: WAV decoding, resampling, STFT, log spectrograms, segments.

The chain is decode_wav -> resample -> stft -> log_magnitude -> segment.
Everything here is a pure function of its inputs, so clips can be processed
concurrently and the output is byte-stable across runs.

The Fourier transform is a hand-rolled iterative radix-2 kernel (inputs are
restricted to power-of-two lengths); tests check it against a direct
O(N^2) evaluation of the transform sum.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    ClipTooShort,
    LengthNotPowerOfTwo,
    MalformedHeader,
    UnsupportedEncoding,
)

HANN = "hann"
RECTANGULAR = "rectangular"


@dataclass
class AudioClip:
    """Mono audio: float64 samples in [-1, 1] plus their sample rate."""

    samples: np.ndarray
    sample_rate_hz: int


@dataclass
class StftFrames:
    """Complex one-sided short-time spectra, shape (window_size/2 + 1, num_frames)."""

    frames: np.ndarray
    window_size: int
    hop: int

    @property
    def num_bins(self) -> int:
        return self.frames.shape[0]

    @property
    def num_frames(self) -> int:
        return self.frames.shape[1]


# ---------------------------------------------------------------------------
# WAV container
# ---------------------------------------------------------------------------

_FMT_STRUCT = struct.Struct("<HHIIHH")


def decode_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte buffer into a mono AudioClip.

    Only PCM 16-bit, 1 or 2 channels is accepted.  Samples are scaled by
    1/32768 into [-1, 1); stereo frames are averaged to mono.

    Raises:
        MalformedHeader: missing/truncated RIFF, WAVE, fmt, or data chunks.
        UnsupportedEncoding: non-PCM format, bit depth != 16, or > 2 channels.
    """
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedHeader("not a RIFF/WAVE container")

    fmt_fields = None
    payload = None
    off = 12
    while off + 8 <= len(data):
        chunk_id = data[off : off + 4]
        (chunk_size,) = struct.unpack_from("<I", data, off + 4)
        body_start = off + 8
        if body_start + chunk_size > len(data):
            raise MalformedHeader(f"chunk {chunk_id!r} truncated")
        if chunk_id == b"fmt ":
            if chunk_size < _FMT_STRUCT.size:
                raise MalformedHeader("fmt chunk too small")
            fmt_fields = _FMT_STRUCT.unpack_from(data, body_start)
        elif chunk_id == b"data":
            payload = data[body_start : body_start + chunk_size]
        # chunks are word-aligned: odd sizes carry one pad byte
        off = body_start + chunk_size + (chunk_size & 1)

    if fmt_fields is None:
        raise MalformedHeader("missing fmt chunk")
    if payload is None:
        raise MalformedHeader("missing data chunk")

    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt_fields
    if audio_format != 1:
        raise UnsupportedEncoding(f"format tag {audio_format}, only PCM (1) supported")
    if bits != 16:
        raise UnsupportedEncoding(f"bit depth {bits}, only 16-bit supported")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels, only mono/stereo supported")
    if sample_rate <= 0:
        raise MalformedHeader("non-positive sample rate")
    if len(payload) == 0:
        raise MalformedHeader("empty data chunk")
    if len(payload) % (2 * channels) != 0:
        raise MalformedHeader("data chunk size not a whole number of frames")

    raw = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    return AudioClip(samples=raw, sample_rate_hz=sample_rate)


def encode_wav(clip: AudioClip) -> bytes:
    """Serialize a mono clip as PCM 16-bit RIFF/WAVE bytes (round-trips
    through decode_wav)."""
    pcm = np.clip(np.rint(clip.samples * 32767.0), -32768, 32767).astype("<i2")
    body = pcm.tobytes()
    rate = clip.sample_rate_hz
    header = b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVE"
    fmt = b"fmt " + struct.pack("<I", 16) + _FMT_STRUCT.pack(1, 1, rate, rate * 2, 2, 16)
    data = b"data" + struct.pack("<I", len(body))
    return header + fmt + data + body


# ---------------------------------------------------------------------------
# Resampling and windows
# ---------------------------------------------------------------------------


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Linear-interpolation resampling to target_rate_hz.

    Output length is floor(n * target / source).  No anti-aliasing
    pre-filter is applied; adequate for the >= 2x source rates this
    pipeline sees.  Identity when the rates already match.
    """
    if target_rate_hz <= 0:
        raise ValueError("target rate must be positive")
    src = clip.sample_rate_hz
    if target_rate_hz == src:
        return clip
    n_out = (len(clip.samples) * target_rate_hz) // src
    positions = np.arange(n_out, dtype=np.float64) * (src / target_rate_hz)
    out = np.interp(positions, np.arange(len(clip.samples)), clip.samples)
    return AudioClip(samples=out, sample_rate_hz=target_rate_hz)


def make_window(kind: str, n: int) -> np.ndarray:
    """Analysis window of length n: 'hann' or 'rectangular'.

    The Hann window is the symmetric form w[k] = 0.5 * (1 - cos(2 pi k / (n-1)));
    n = 1 degenerates to [1.0].
    """
    if n < 1:
        raise ValueError("window length must be >= 1")
    if kind == RECTANGULAR:
        return np.ones(n, dtype=np.float64)
    if kind == HANN:
        if n == 1:
            return np.ones(1, dtype=np.float64)
        k = np.arange(n, dtype=np.float64)
        return 0.5 * (1.0 - np.cos(2.0 * math.pi * k / (n - 1)))
    raise ValueError(f"unknown window kind {kind!r}")


# ---------------------------------------------------------------------------
# Fourier kernels
# ---------------------------------------------------------------------------


def _bit_reversal(n: int) -> np.ndarray:
    rev = np.zeros(1, dtype=np.int64)
    while len(rev) < n:
        rev = np.concatenate([2 * rev, 2 * rev + 1])
    return rev


def _fft_last_axis(a: np.ndarray) -> np.ndarray:
    """Unnormalized DFT along the last axis; length must be a power of two.

    Iterative decimation-in-time butterflies, vectorized over all leading
    axes so a whole frame matrix transforms in one call.
    """
    n = a.shape[-1]
    out = np.ascontiguousarray(a[..., _bit_reversal(n)], dtype=np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * math.pi * np.arange(half) / size)
        v = out.reshape(-1, n // size, size)
        even = v[..., :half].copy()
        odd = v[..., half:] * tw
        v[..., :half] = even + odd
        v[..., half:] = even - odd
        size *= 2
    return out


def fft(x) -> np.ndarray:
    """Unnormalized discrete Fourier transform X[k] = sum_n x[n] e^{-2 pi i k n / N}.

    Raises LengthNotPowerOfTwo unless len(x) is a power of two.
    """
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim != 1:
        raise ValueError("fft expects a 1-D sequence")
    n = a.shape[0]
    if n < 1 or (n & (n - 1)) != 0:
        raise LengthNotPowerOfTwo(f"length {n} is not a power of two")
    if n == 1:
        return a.copy()
    return _fft_last_axis(a)


def stft(clip: AudioClip, window_size: int, hop: int, kind: str = HANN) -> StftFrames:
    """Windowed short-time transform of a clip.

    Frame tau covers samples [tau*hop, tau*hop + window_size), multiplied
    pointwise by the window, transformed, and truncated to the one-sided
    window_size/2 + 1 bins.

    Raises ClipTooShort when the clip holds fewer samples than one window.
    """
    if window_size < 1 or (window_size & (window_size - 1)) != 0:
        raise LengthNotPowerOfTwo(f"window size {window_size} is not a power of two")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    x = clip.samples
    if len(x) < window_size:
        raise ClipTooShort(
            f"{len(x)} samples < window size {window_size}"
        )
    num_frames = (len(x) - window_size) // hop + 1
    window = make_window(kind, window_size)
    starts = np.arange(num_frames) * hop
    frames = x[starts[:, None] + np.arange(window_size)] * window
    spectra = _fft_last_axis(frames.astype(np.complex128))
    one_sided = spectra[:, : window_size // 2 + 1].T.copy()
    return StftFrames(frames=one_sided, window_size=window_size, hop=hop)


def log_magnitude(frames: StftFrames, floor_eps: float) -> np.ndarray:
    """Natural log of spectral magnitudes, floored at floor_eps to keep the
    log finite at zero magnitude.  Returns a real (bins x frames) matrix."""
    if floor_eps <= 0:
        raise ValueError("floor_eps must be positive")
    return np.log(np.maximum(np.abs(frames.frames), floor_eps))


def segment(spec: np.ndarray, width: int) -> list[np.ndarray]:
    """Cut a (f x t) spectrogram into floor(t/width) segments of shape
    (f x width), left to right; trailing remainder columns are dropped."""
    if width < 1:
        raise ValueError("segment width must be >= 1")
    t = spec.shape[1]
    return [
        np.ascontiguousarray(spec[:, i * width : (i + 1) * width])
        for i in range(t // width)
    ]
