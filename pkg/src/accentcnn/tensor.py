"""Dense numeric kernels used by the classifier.

Thin wrappers over float64 numpy with the shape checking the model relies
on.  All math runs in 64-bit; tests pin each kernel against a naive-loop
oracle.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeMismatch


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product of a (m x n) and b (n x p)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatch("matmul expects rank-2 operands")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(0, x), shape preserved."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def conv_freq(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Valid cross-correlation of a full-time-width filter along frequency.

    x is (f x t), w is (h x t) with h <= f and matching time width.  Output
    position j is sum over the filter of x[j+u][v] * w[u][v], for
    j = 0..f-h, i.e. stride 1, no padding, no kernel flip.
    """
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 2 or w.ndim != 2:
        raise ShapeMismatch("conv_freq expects rank-2 operands")
    f, t = x.shape
    h, wt = w.shape
    if wt != t:
        raise ShapeMismatch(f"filter time width {wt} != input time width {t}")
    if h > f:
        raise ShapeMismatch(f"filter height {h} exceeds input height {f}")
    # windows: (f-h+1, t, h); contract both filter axes in one pass
    windows = sliding_window_view(x, h, axis=0)
    return np.einsum("pth,ht->p", windows, w, optimize=True)


def conv_freq_bank(x: np.ndarray, bank: np.ndarray) -> np.ndarray:
    """conv_freq applied to a (C x h x t) filter bank at once -> (C x f-h+1).

    Row c equals conv_freq(x, bank[c]); the model's hot path uses this to
    keep the per-channel loop inside numpy.
    """
    x = np.asarray(x, dtype=np.float64)
    bank = np.asarray(bank, dtype=np.float64)
    if bank.ndim != 3:
        raise ShapeMismatch("filter bank must be rank-3 (channels x h x t)")
    f, t = x.shape
    _, h, wt = bank.shape
    if wt != t:
        raise ShapeMismatch(f"filter time width {wt} != input time width {t}")
    if h > f:
        raise ShapeMismatch(f"filter height {h} exceeds input height {f}")
    windows = sliding_window_view(x, h, axis=0)
    return np.einsum("pth,cht->cp", windows, bank, optimize=True)
