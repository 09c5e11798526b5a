"""Corpus plumbing: manifest parsing, WAV-to-segment preprocessing, the
binary segment store, speaker-disjoint splitting, and a synthetic corpus
generator for end-to-end checks without licensed audio.

A segment store is the unit of exchange between pipeline stages: a flat
file of (label, speaker, f x t float32 spectrogram segment) records plus a
speaker name table, so train/eval never re-touch the raw audio.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dsp
from .config import CLASS_NAMES, SEED_OFFSET_SPLIT, SEED_OFFSET_SYNTH, TrainConfig
from .errors import (
    BadHeader,
    DuplicatePath,
    FormatVersionMismatch,
    IndexOutOfRange,
    IoFailure,
    MissingFile,
    TooFewSpeakers,
    UnknownLabel,
)
from .rng import SplitMix64

STORE_MAGIC = b"ACNSTORE"
STORE_VERSION = 1

MANIFEST_HEADER = ["path", "label", "speaker_id"]


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: int  # index into CLASS_NAMES
    speaker_id: str


@dataclass
class SegmentRecord:
    label: int
    speaker: int  # index into the store's speaker table
    segment: np.ndarray  # (freq_bins, segment_width) float32


@dataclass
class SegmentStore:
    freq_bins: int
    segment_width: int
    speakers: list[str]
    records: list[SegmentRecord]

    def __len__(self) -> int:
        return len(self.records)

    def record(self, i: int) -> SegmentRecord:
        if not 0 <= i < len(self.records):
            raise IndexOutOfRange(f"record {i} outside [0, {len(self.records)})")
        return self.records[i]


def load_manifest(path) -> list[ManifestEntry]:
    """Read a `path,label,speaker_id` CSV; relative clip paths resolve
    against the manifest's own directory."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BadHeader("manifest is empty") from None
        if [h.strip() for h in header] != MANIFEST_HEADER:
            raise BadHeader(
                f"manifest header {header!r} != {','.join(MANIFEST_HEADER)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise BadHeader(f"manifest line {lineno}: expected 3 fields, got {len(row)}")
            raw_path, label_name, speaker = (c.strip() for c in row)
            if label_name not in CLASS_NAMES:
                raise UnknownLabel(
                    f"manifest line {lineno}: label {label_name!r} not one of {CLASS_NAMES}"
                )
            if raw_path in seen:
                raise DuplicatePath(f"manifest line {lineno}: duplicate path {raw_path!r}")
            seen.add(raw_path)
            clip_path = Path(raw_path)
            if not clip_path.is_absolute():
                clip_path = base / clip_path
            entries.append(
                ManifestEntry(
                    path=clip_path,
                    label=CLASS_NAMES.index(label_name),
                    speaker_id=speaker,
                )
            )
    return entries


def preprocess_corpus(entries: list[ManifestEntry], cfg: TrainConfig) -> SegmentStore:
    """Decode every clip, resample, compute the log spectrogram, and slice
    it into fixed-width segments.  Clips shorter than one segment after
    framing contribute no records."""
    speakers: list[str] = []
    index: dict[str, int] = {}
    records: list[SegmentRecord] = []
    for entry in entries:
        if not entry.path.is_file():
            raise MissingFile(f"clip not found: {entry.path}")
        try:
            blob = entry.path.read_bytes()
        except OSError as exc:
            raise IoFailure(f"cannot read {entry.path}: {exc}") from exc
        clip = dsp.decode_wav(blob)
        clip = dsp.resample(clip, cfg.sample_rate_hz)
        frames = dsp.stft(clip, cfg.window_size, cfg.hop, cfg.window_kind)
        spec = dsp.log_magnitude(frames, cfg.floor_eps)
        if entry.speaker_id not in index:
            index[entry.speaker_id] = len(speakers)
            speakers.append(entry.speaker_id)
        spk = index[entry.speaker_id]
        for seg in dsp.segment(spec, cfg.segment_width):
            records.append(
                SegmentRecord(
                    label=entry.label,
                    speaker=spk,
                    segment=seg.astype(np.float32),
                )
            )
    return SegmentStore(
        freq_bins=cfg.freq_bins,
        segment_width=cfg.segment_width,
        speakers=speakers,
        records=records,
    )


# ---------------------------------------------------------------------------
# Store file: magic, version u32, freq_bins u32, segment_width u32,
# record count u64, speaker table (count u32, each name length-prefixed
# UTF-8), then records (label u8, speaker u32, f*t float32).  Little endian.
# ---------------------------------------------------------------------------


def save_store(store: SegmentStore, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(STORE_MAGIC)
            fh.write(struct.pack("<I", STORE_VERSION))
            fh.write(struct.pack("<II", store.freq_bins, store.segment_width))
            fh.write(struct.pack("<Q", len(store.records)))
            fh.write(struct.pack("<I", len(store.speakers)))
            for name in store.speakers:
                raw = name.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
            for rec in store.records:
                fh.write(struct.pack("<BI", rec.label, rec.speaker))
                fh.write(np.ascontiguousarray(rec.segment, dtype="<f4").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write store {path}: {exc}") from exc


def load_store(path) -> SegmentStore:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"store not found: {path}")
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read store {path}: {exc}") from exc

    if len(blob) < 12 or blob[:8] != STORE_MAGIC:
        raise BadHeader("bad magic bytes, not a segment store")
    (version,) = struct.unpack_from("<I", blob, 8)
    if version != STORE_VERSION:
        raise FormatVersionMismatch(f"store version {version}, expected {STORE_VERSION}")

    off = 12

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(blob):
            raise IoFailure("store truncated")
        vals = struct.unpack_from(fmt, blob, off)
        off += size
        return vals

    freq_bins, seg_width = take("<II")
    (count,) = take("<Q")
    (n_speakers,) = take("<I")
    speakers = []
    for _ in range(n_speakers):
        (name_len,) = take("<I")
        if off + name_len > len(blob):
            raise IoFailure("store truncated in speaker table")
        speakers.append(blob[off : off + name_len].decode("utf-8"))
        off += name_len

    seg_bytes = freq_bins * seg_width * 4
    records = []
    for _ in range(count):
        label, speaker = take("<BI")
        if speaker >= n_speakers:
            raise BadHeader(f"record references speaker {speaker} of {n_speakers}")
        if off + seg_bytes > len(blob):
            raise IoFailure("store truncated in segment data")
        seg = np.frombuffer(blob, dtype="<f4", count=freq_bins * seg_width, offset=off)
        records.append(
            SegmentRecord(
                label=label,
                speaker=speaker,
                segment=seg.reshape(freq_bins, seg_width).copy(),
            )
        )
        off += seg_bytes
    if off != len(blob):
        raise IoFailure(f"{len(blob) - off} unexpected trailing bytes in store")
    return SegmentStore(
        freq_bins=freq_bins,
        segment_width=seg_width,
        speakers=speakers,
        records=records,
    )


# ---------------------------------------------------------------------------
# Speaker-disjoint split
# ---------------------------------------------------------------------------


def split_by_speaker(
    store: SegmentStore, test_fraction: float, seed: int
) -> tuple[SegmentStore, SegmentStore]:
    """Split so no speaker contributes to both sides.

    Per label the speaker list is shuffled and the first
    ceil(test_fraction * n) speakers (clamped to [1, n-1]) go to the test
    side; every label therefore needs at least two speakers.
    """
    by_label: dict[int, list[int]] = {}
    for rec in store.records:
        by_label.setdefault(rec.label, [])
        if rec.speaker not in by_label[rec.label]:
            by_label[rec.label].append(rec.speaker)

    rng = SplitMix64(seed + SEED_OFFSET_SPLIT)
    test_speakers: set[tuple[int, int]] = set()
    for label in sorted(by_label):
        speakers = sorted(by_label[label])
        if len(speakers) < 2:
            raise TooFewSpeakers(
                f"label {CLASS_NAMES[label] if label < len(CLASS_NAMES) else label} "
                f"has {len(speakers)} speaker(s); need at least 2 to split"
            )
        rng.shuffle(speakers)
        m = math.ceil(test_fraction * len(speakers))
        m = max(1, min(m, len(speakers) - 1))
        test_speakers.update((label, s) for s in speakers[:m])

    def subset(predicate) -> SegmentStore:
        speakers: list[str] = []
        index: dict[int, int] = {}
        records: list[SegmentRecord] = []
        for rec in store.records:
            if not predicate(rec):
                continue
            if rec.speaker not in index:
                index[rec.speaker] = len(speakers)
                speakers.append(store.speakers[rec.speaker])
            records.append(
                SegmentRecord(
                    label=rec.label,
                    speaker=index[rec.speaker],
                    segment=rec.segment,
                )
            )
        return SegmentStore(
            freq_bins=store.freq_bins,
            segment_width=store.segment_width,
            speakers=speakers,
            records=records,
        )

    test = subset(lambda r: (r.label, r.speaker) in test_speakers)
    train = subset(lambda r: (r.label, r.speaker) not in test_speakers)
    return train, test


def clip_runs(store: SegmentStore) -> list[tuple[int, list[int]]]:
    """Group record indices into clips.

    The store format carries no clip ids, so a clip is recovered as a
    maximal run of consecutive records sharing (label, speaker) — exact for
    stores written by preprocess_corpus, whose records are emitted clip by
    clip.  Returns (label, record indices) per clip.
    """
    runs: list[tuple[int, list[int]]] = []
    prev_key = None
    for i, rec in enumerate(store.records):
        key = (rec.label, rec.speaker)
        if key != prev_key:
            runs.append((rec.label, []))
            prev_key = key
        runs[-1][1].append(i)
    return runs


# ---------------------------------------------------------------------------
# Synthetic corpus: each class occupies a separate frequency band, so a
# correct pipeline must separate them from spectral shape alone.
# ---------------------------------------------------------------------------

SYNTH_BANDS_HZ = {
    "ENG": (300.0, 800.0),
    "ARA": (1200.0, 2000.0),
    "MAN": (2800.0, 3600.0),
}
SYNTH_SINES_PER_CLIP = 4
SYNTH_SNR_DB = 20.0
SYNTH_CLIP_SECONDS = 2.0
SYNTH_PEAK = 0.9


def synth_clip(rng: SplitMix64, band_hz: tuple[float, float], cfg: TrainConfig) -> dsp.AudioClip:
    """One clip: a few random sinusoids inside the class band plus white
    Gaussian noise at a fixed signal-to-noise ratio, peak-normalised."""
    n = int(round(SYNTH_CLIP_SECONDS * cfg.sample_rate_hz))
    t = np.arange(n, dtype=np.float64) / cfg.sample_rate_hz
    signal = np.zeros(n, dtype=np.float64)
    for _ in range(SYNTH_SINES_PER_CLIP):
        freq = rng.uniforms(1, band_hz[0], band_hz[1])[0]
        amp = rng.uniforms(1, 0.5, 1.0)[0]
        phase = rng.uniforms(1, 0.0, 2.0 * np.pi)[0]
        signal += amp * np.sin(2.0 * np.pi * freq * t + phase)
    sig_power = float(np.mean(signal**2))
    noise_power = sig_power / (10.0 ** (SYNTH_SNR_DB / 10.0))
    noise = rng.normals(n) * np.sqrt(noise_power)
    samples = signal + noise
    samples *= SYNTH_PEAK / np.max(np.abs(samples))
    return dsp.AudioClip(samples=samples, sample_rate_hz=cfg.sample_rate_hz)


def synth_dataset(out_dir, clips_per_class: int, cfg: TrainConfig, seed: int) -> Path:
    """Write a labelled synthetic corpus (WAV files + manifest.csv) under
    out_dir and return the manifest path.  Every clip gets its own speaker
    id so speaker-disjoint splitting stays meaningful."""
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    rng = SplitMix64(seed + SEED_OFFSET_SYNTH)
    rows = []
    for label in CLASS_NAMES:
        band = SYNTH_BANDS_HZ[label]
        for i in range(clips_per_class):
            clip = synth_clip(rng, band, cfg)
            name = f"{label.lower()}_{i:04d}.wav"
            try:
                (wav_dir / name).write_bytes(dsp.encode_wav(clip))
            except OSError as exc:
                raise IoFailure(f"cannot write {wav_dir / name}: {exc}") from exc
            rows.append((f"wav/{name}", label, f"{label.lower()}_spk{i:04d}"))
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    return manifest
