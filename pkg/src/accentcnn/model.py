"""Spectrogram classifier: parallel frequency convolutions of several filter
heights, each globally max-pooled per channel, concatenated, and fed to a
fully connected head.

Filters span the full time width of a segment and slide along frequency
only, so each one scores a spectral pattern at every vertical position;
the per-channel max keeps the best response and yields a feature vector of
fixed length regardless of filter height.  Backpropagation is analytic and
exact: max-pool gradients flow to the stored argmax position only (first
occurrence on ties), ReLU uses the zero subgradient at the kink.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import tensor
from .errors import (
    EmptySegmentList,
    FormatVersionMismatch,
    IoFailure,
    LabelOutOfRange,
    ShapeMismatch,
)
from .rng import SplitMix64

PARAMS_MAGIC = b"ACNPARAM"
PARAMS_VERSION = 1


@dataclass(frozen=True)
class NetConfig:
    """Architecture hyperparameters.

    filter_heights are the distinct heights of the parallel banks;
    channels_per_height is the number of filters per bank; hidden_units = 0
    means the pooled features feed the output layer directly.
    """

    filter_heights: tuple[int, ...]
    channels_per_height: int
    freq_bins: int
    segment_width: int
    hidden_units: int
    num_classes: int

    def __post_init__(self):
        if len(self.filter_heights) < 1:
            raise ValueError("need at least one filter height")
        if len(set(self.filter_heights)) != len(self.filter_heights):
            raise ValueError("filter heights must be distinct")
        if min(self.filter_heights) < 1:
            raise ValueError("filter heights must be positive")
        if max(self.filter_heights) > self.freq_bins:
            raise ValueError("filter height exceeds frequency bins")
        if self.channels_per_height < 1 or self.num_classes < 1:
            raise ValueError("channels and classes must be positive")
        if self.hidden_units < 0:
            raise ValueError("hidden_units must be >= 0")

    @property
    def feature_len(self) -> int:
        """Length of the concatenated pooled feature vector."""
        return len(self.filter_heights) * self.channels_per_height


@dataclass
class NetParams:
    """All learnable weights, shaped per the owning NetConfig."""

    config: NetConfig
    filters: list[np.ndarray]  # per height: (C, h_i, t)
    filter_biases: list[np.ndarray]  # per height: (C,)
    hidden_w: np.ndarray | None  # (feature_len, hidden) or None
    hidden_b: np.ndarray | None  # (hidden,) or None
    out_w: np.ndarray  # (hidden or feature_len, num_classes)
    out_b: np.ndarray  # (num_classes,)

    def arrays(self) -> list[np.ndarray]:
        """Live references to every tensor, in fixed declaration order."""
        out: list[np.ndarray] = []
        for w, b in zip(self.filters, self.filter_biases):
            out.append(w)
            out.append(b)
        if self.hidden_w is not None:
            out.append(self.hidden_w)
            out.append(self.hidden_b)
        out.append(self.out_w)
        out.append(self.out_b)
        return out

    def clone(self) -> "NetParams":
        return NetParams(
            config=self.config,
            filters=[w.copy() for w in self.filters],
            filter_biases=[b.copy() for b in self.filter_biases],
            hidden_w=None if self.hidden_w is None else self.hidden_w.copy(),
            hidden_b=None if self.hidden_b is None else self.hidden_b.copy(),
            out_w=self.out_w.copy(),
            out_b=self.out_b.copy(),
        )


@dataclass
class ForwardCache:
    """Intermediates one forward pass stores for the exact backward pass."""

    segment: np.ndarray
    pre_maps: list[np.ndarray]  # per height: (C, f-h+1) pre-activation
    argmax: list[np.ndarray]  # per height: (C,) pooled position
    features: np.ndarray  # concatenated pooled vector, length k*C
    hidden_pre: np.ndarray | None
    hidden_act: np.ndarray | None
    logits: np.ndarray


def zeros_like_params(params: NetParams) -> NetParams:
    cfg = params.config
    return NetParams(
        config=cfg,
        filters=[np.zeros_like(w) for w in params.filters],
        filter_biases=[np.zeros_like(b) for b in params.filter_biases],
        hidden_w=None if params.hidden_w is None else np.zeros_like(params.hidden_w),
        hidden_b=None if params.hidden_b is None else np.zeros_like(params.hidden_b),
        out_w=np.zeros_like(params.out_w),
        out_b=np.zeros_like(params.out_b),
    )


def init_params(config: NetConfig, seed: int) -> NetParams:
    """Fresh parameters, a deterministic function of the seed.

    Weights are uniform on [-a, +a] with a = sqrt(6 / (fan_in + fan_out));
    for a filter bank fan_in = h*t and fan_out = channels, for the dense
    layers fan_in/fan_out are the layer widths.  All biases start at zero.
    """
    rng = SplitMix64(seed)
    t = config.segment_width
    c = config.channels_per_height

    def draw(shape, fan_in, fan_out):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniforms(int(np.prod(shape)), -a, a).reshape(shape)

    filters = []
    biases = []
    for h in config.filter_heights:
        filters.append(draw((c, h, t), h * t, c))
        biases.append(np.zeros(c, dtype=np.float64))

    d = config.feature_len
    if config.hidden_units > 0:
        hidden_w = draw((d, config.hidden_units), d, config.hidden_units)
        hidden_b = np.zeros(config.hidden_units, dtype=np.float64)
        out_in = config.hidden_units
    else:
        hidden_w = None
        hidden_b = None
        out_in = d
    out_w = draw((out_in, config.num_classes), out_in, config.num_classes)
    out_b = np.zeros(config.num_classes, dtype=np.float64)

    return NetParams(
        config=config,
        filters=filters,
        filter_biases=biases,
        hidden_w=hidden_w,
        hidden_b=hidden_b,
        out_w=out_w,
        out_b=out_b,
    )


def _check_segment(config: NetConfig, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (config.freq_bins, config.segment_width):
        raise ShapeMismatch(
            f"segment shape {x.shape} != expected "
            f"({config.freq_bins}, {config.segment_width})"
        )
    return x


def forward(params: NetParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Logits for one (f x t) segment plus the cache for backprop.

    No softmax is applied here; callers needing probabilities use
    predict_segment or the loss."""
    cfg = params.config
    x = _check_segment(cfg, x)

    pre_maps = []
    argmax = []
    pooled_parts = []
    for w, b in zip(params.filters, params.filter_biases):
        pre = tensor.conv_freq_bank(x, w) + b[:, None]  # (C, positions)
        act = np.maximum(pre, 0.0)
        pos = np.argmax(act, axis=1)  # first occurrence on ties
        pre_maps.append(pre)
        argmax.append(pos)
        pooled_parts.append(act[np.arange(act.shape[0]), pos])
    features = np.concatenate(pooled_parts)

    if params.hidden_w is not None:
        hidden_pre = features @ params.hidden_w + params.hidden_b
        hidden_act = np.maximum(hidden_pre, 0.0)
        logits = hidden_act @ params.out_w + params.out_b
    else:
        hidden_pre = None
        hidden_act = None
        logits = features @ params.out_w + params.out_b

    cache = ForwardCache(
        segment=x,
        pre_maps=pre_maps,
        argmax=argmax,
        features=features,
        hidden_pre=hidden_pre,
        hidden_act=hidden_act,
        logits=logits,
    )
    return logits, cache


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max subtraction before exponentiation)."""
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / np.sum(e)


def loss_and_grad(
    params: NetParams, x: np.ndarray, label: int
) -> tuple[float, NetParams]:
    """Cross-entropy loss for one labelled segment and its exact gradients.

    Loss is -log softmax(logits)[label].  The returned gradients share the
    NetParams layout.
    """
    cfg = params.config
    if not 0 <= label < cfg.num_classes:
        raise LabelOutOfRange(f"label {label} outside [0, {cfg.num_classes})")
    logits, cache = forward(params, x)

    z = logits - np.max(logits)
    log_norm = np.log(np.sum(np.exp(z)))
    loss = float(log_norm - z[label])

    dlogits = np.exp(z - log_norm)
    dlogits[label] -= 1.0

    grads = zeros_like_params(params)
    if params.hidden_w is not None:
        grads.out_w[:] = np.outer(cache.hidden_act, dlogits)
        grads.out_b[:] = dlogits
        dhidden = params.out_w @ dlogits
        dhidden_pre = dhidden * (cache.hidden_pre > 0.0)
        grads.hidden_w[:] = np.outer(cache.features, dhidden_pre)
        grads.hidden_b[:] = dhidden_pre
        dfeatures = params.hidden_w @ dhidden_pre
    else:
        grads.out_w[:] = np.outer(cache.features, dlogits)
        grads.out_b[:] = dlogits
        dfeatures = params.out_w @ dlogits

    c = cfg.channels_per_height
    for i, h in enumerate(cfg.filter_heights):
        dpool = dfeatures[i * c : (i + 1) * c]  # (C,)
        pos = cache.argmax[i]
        pre_at_max = cache.pre_maps[i][np.arange(c), pos]
        gate = dpool * (pre_at_max > 0.0)
        for ch in range(c):
            if gate[ch] != 0.0:
                grads.filters[i][ch] = gate[ch] * cache.segment[pos[ch] : pos[ch] + h, :]
                grads.filter_biases[i][ch] = gate[ch]
    return loss, grads


def predict_segment(params: NetParams, x: np.ndarray) -> tuple[int, np.ndarray]:
    """Class index (argmax of logits) and softmax posterior for one segment."""
    logits, _ = forward(params, x)
    post = softmax(logits)
    return int(np.argmax(logits)), post


def predict_clip(params: NetParams, segments: list[np.ndarray]) -> int:
    """Whole-clip decision: mean of per-segment posteriors, then argmax
    (ties resolve to the lowest class index)."""
    if len(segments) == 0:
        raise EmptySegmentList("clip produced no segments")
    posts = [predict_segment(params, seg)[1] for seg in segments]
    return int(np.argmax(np.mean(posts, axis=0)))


# ---------------------------------------------------------------------------
# Parameter file: 8-byte magic, version u32, config as u32 fields, then every
# tensor as little-endian float64 in declaration order.
# ---------------------------------------------------------------------------


def save_params(params: NetParams, path) -> None:
    cfg = params.config
    try:
        with open(path, "wb") as fh:
            fh.write(PARAMS_MAGIC)
            fh.write(struct.pack("<I", PARAMS_VERSION))
            fh.write(struct.pack("<I", len(cfg.filter_heights)))
            for h in cfg.filter_heights:
                fh.write(struct.pack("<I", h))
            fh.write(
                struct.pack(
                    "<IIIII",
                    cfg.channels_per_height,
                    cfg.freq_bins,
                    cfg.segment_width,
                    cfg.hidden_units,
                    cfg.num_classes,
                )
            )
            for arr in params.arrays():
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write parameter file {path}: {exc}") from exc


def load_params(path) -> NetParams:
    """Read a parameter file; never returns a partial load.

    Raises FormatVersionMismatch on wrong magic/version and IoFailure on
    truncation or OS-level failures.
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read parameter file {path}: {exc}") from exc

    if len(blob) < 12 or blob[:8] != PARAMS_MAGIC:
        raise FormatVersionMismatch("bad magic bytes, not a parameter file")
    (version,) = struct.unpack_from("<I", blob, 8)
    if version != PARAMS_VERSION:
        raise FormatVersionMismatch(f"format version {version}, expected {PARAMS_VERSION}")

    off = 12

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(blob):
            raise IoFailure("parameter file truncated in header")
        vals = struct.unpack_from(fmt, blob, off)
        off += size
        return vals

    (k,) = take("<I")
    heights = tuple(take(f"<{k}I")) if k else ()
    channels, freq_bins, seg_width, hidden_units, num_classes = take("<IIIII")
    cfg = NetConfig(
        filter_heights=heights,
        channels_per_height=channels,
        freq_bins=freq_bins,
        segment_width=seg_width,
        hidden_units=hidden_units,
        num_classes=num_classes,
    )

    def take_tensor(shape):
        nonlocal off
        count = int(np.prod(shape))
        size = count * 8
        if off + size > len(blob):
            raise IoFailure("parameter file truncated in tensor data")
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape)
        off += size
        return arr.astype(np.float64)

    filters = []
    biases = []
    for h in heights:
        filters.append(take_tensor((channels, h, seg_width)))
        biases.append(take_tensor((channels,)))
    if hidden_units > 0:
        hidden_w = take_tensor((cfg.feature_len, hidden_units))
        hidden_b = take_tensor((hidden_units,))
        out_in = hidden_units
    else:
        hidden_w = None
        hidden_b = None
        out_in = cfg.feature_len
    out_w = take_tensor((out_in, num_classes))
    out_b = take_tensor((num_classes,))

    if off != len(blob):
        raise IoFailure(f"{len(blob) - off} unexpected trailing bytes")

    return NetParams(
        config=cfg,
        filters=filters,
        filter_biases=biases,
        hidden_w=hidden_w,
        hidden_b=hidden_b,
        out_w=out_w,
        out_b=out_b,
    )
