"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np

from .patches import Frame
from .tensor import MaskedTensor


def resolve_mask(X, mask=None):
    """Return ``(values, mask)``; without an explicit mask, NaN marks a missing entry."""
    X = np.asarray(X, dtype=float)
    if mask is None:
        mask = ~np.isnan(X)
    else:
        mask = np.asarray(mask)
        if mask.shape != X.shape:
            try:
                mask = np.broadcast_to(mask, X.shape)
            except ValueError:
                raise ValueError(f"mask shape {mask.shape} is incompatible with X {X.shape}") from None
        mask = mask.astype(bool) & ~np.isnan(X)
    if not np.all(np.isfinite(X[mask])):
        raise ValueError("observed entries must be finite")
    return np.where(mask, X, 0.0), mask


def check_masked_tensor(X, mask=None, min_order=1):
    values, mask = resolve_mask(X, mask)
    if values.ndim < min_order:
        raise ValueError(f"expected a tensor of order >= {min_order}, got shape {values.shape}")
    if not mask.any():
        raise ValueError("no observed entries")
    return MaskedTensor(values, mask)


def check_frame(X, mask=None):
    values, mask = resolve_mask(X, mask)
    if values.ndim not in (2, 3):
        raise ValueError(f"expected an (H, W) or (H, W, n) frame, got shape {values.shape}")
    return Frame(values, mask)


def check_video(X, mask=None):
    """Split an ``(H, W, T)`` or ``(H, W, n, T)`` array into frames."""
    values, mask = resolve_mask(X, mask)
    if values.ndim == 3:
        values, mask = values[:, :, None, :], mask[:, :, None, :]
    if values.ndim != 4:
        raise ValueError(f"expected an (H, W, n, T) video, got shape {values.shape}")
    return [Frame(values[..., t], mask[..., t]) for t in range(values.shape[-1])]
