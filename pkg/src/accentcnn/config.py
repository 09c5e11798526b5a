"""Run configuration: one flat record of every knob, the class-name table,
and the `key = value` config-file reader the CLI layers under its flags.

All stochastic stages derive their generator from a single base seed plus a
fixed per-stage offset, so rerunning any subcommand with the same seed and
inputs reproduces its outputs bit for bit.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .dsp import HANN, RECTANGULAR
from .model import NetConfig

CLASS_NAMES = ("ENG", "ARA", "MAN")

# Per-stage seed offsets added to the base seed.
SEED_OFFSET_SYNTH = 1000  # synthetic corpus generation
SEED_OFFSET_SPLIT = 2000  # speaker-level train/test split
SEED_OFFSET_INIT = 3000  # parameter initialisation
SEED_OFFSET_SHUFFLE = 4000  # per-epoch example shuffling


@dataclass(frozen=True)
class TrainConfig:
    """Every tunable of the pipeline, with its default."""

    # optimiser
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 30
    seed: int = 42
    # signal front end
    sample_rate_hz: int = 16000
    window_size: int = 256
    hop: int = 128
    window_kind: str = HANN
    floor_eps: float = 1e-10
    segment_width: int = 120
    # architecture
    filter_heights: tuple[int, ...] = (3, 5, 7, 9)
    channels_per_height: int = 64
    hidden_units: int = 128
    num_classes: int = 3
    # corpus handling
    test_fraction: float = 0.2
    clips_per_class: int = 100

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("learning_rate, batch_size, epochs out of range")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.adam_eps > 0):
            raise ValueError("Adam constants out of range")
        if self.window_size < 2 or self.window_size & (self.window_size - 1):
            raise ValueError("window_size must be a power of two >= 2")
        if self.hop < 1:
            raise ValueError("hop must be positive")
        if self.window_kind not in (HANN, RECTANGULAR):
            raise ValueError(f"unknown window kind {self.window_kind!r}")
        if self.segment_width < 1 or self.sample_rate_hz < 1:
            raise ValueError("segment_width and sample_rate_hz must be positive")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.clips_per_class < 1:
            raise ValueError("clips_per_class must be positive")

    @property
    def freq_bins(self) -> int:
        return self.window_size // 2 + 1

    def net_config(self) -> NetConfig:
        """Architecture record consistent with the signal front end."""
        return NetConfig(
            filter_heights=self.filter_heights,
            channels_per_height=self.channels_per_height,
            freq_bins=self.freq_bins,
            segment_width=self.segment_width,
            hidden_units=self.hidden_units,
            num_classes=self.num_classes,
        )


_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}


def _coerce(name: str, raw: str):
    f = _FIELDS[name]
    if f.type == "tuple[int, ...]":
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        return tuple(int(p) for p in parts)
    if f.type == "int":
        return int(raw)
    if f.type == "float":
        return float(raw)
    return raw


def read_config_file(path) -> dict:
    """Parse a flat `key = value` file (# starts a comment) into typed
    overrides.  Unknown keys and malformed lines raise ValueError."""
    overrides: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = text.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in _FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                overrides[key] = _coerce(key, raw)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return overrides


def build_config(file_overrides: dict | None = None, flag_overrides: dict | None = None) -> TrainConfig:
    """Defaults, then config-file values, then command-line flags."""
    merged: dict = {}
    if file_overrides:
        merged.update(file_overrides)
    if flag_overrides:
        merged.update({k: v for k, v in flag_overrides.items() if v is not None})
    return TrainConfig(**merged)


def render_config(cfg: TrainConfig) -> str:
    """The effective configuration in the same format the reader accepts."""
    lines = []
    for f in dataclasses.fields(TrainConfig):
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"
