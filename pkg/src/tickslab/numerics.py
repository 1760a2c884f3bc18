"""Shared float discipline: 32-bit storage, 64-bit accumulation.

Matrix-vector products avoid BLAS on purpose: ``np.einsum`` with a plain
subscript spec runs numpy's own fixed-order sum-of-products loop, which
keeps results identical run-to-run regardless of thread count or BLAS
backend.  Activations are evaluated in float64 and clamped to the largest
float32 strictly inside (-1, 1) before storage, so saturation can never
round to exactly +-1.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch

# Largest float32 below 1.0; activations are clamped to +-this value.
F32_INTERIOR = float(np.nextafter(np.float32(1.0), np.float32(0.0)))


def matvec(weights: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """float64 product ``weights @ vec`` with a fixed accumulation order."""
    if weights.ndim != 2 or weights.shape[1] != vec.shape[0]:
        raise DimensionMismatch(
            f"matvec: {weights.shape} incompatible with vector of {vec.shape[0]}"
        )
    w = weights.astype(np.float64, copy=False)
    x = vec.astype(np.float64, copy=False)
    return np.einsum("ij,j->i", w, x)


def bounded_tanh(pre: np.ndarray) -> np.ndarray:
    """tanh in float64, stored as float32 strictly inside (-1, 1)."""
    out = np.tanh(pre.astype(np.float64, copy=False))
    return np.clip(out, -F32_INTERIOR, F32_INTERIOR).astype(np.float32)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax in float64 (max-subtraction)."""
    h = logits.astype(np.float64, copy=False)
    shifted = h - np.max(h)
    e = np.exp(shifted)
    return e / np.sum(e)


def entropy(probs: np.ndarray) -> float:
    """Shannon entropy in nats; 0 * log 0 treated as 0."""
    p = probs[probs > 0.0]
    return float(-np.sum(p * np.log(p)))


def require_finite(arr: np.ndarray, what: str, exc: type[Exception]) -> None:
    if not np.all(np.isfinite(arr)):
        raise exc(f"{what} contains non-finite values")
