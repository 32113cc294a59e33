"""Quality metrics and subspace diagnostics."""
from __future__ import annotations

import csv
import math

import numpy as np

from .tensor import unfold_bracket


def psnr(ref, test, peak=1.0):
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    ref = np.asarray(getattr(ref, "values", ref), dtype=float)
    test = np.asarray(getattr(test, "values", test), dtype=float)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def subspace_diagnostic(stack):
    """Singular values of the temporal (last-mode) unfolding, divided by the largest.

    ``stack`` is an ``(H, W, n, T)`` array or a sequence of ``(H, W, n)``
    frames/patches. Values come back in descending order.
    """
    if isinstance(stack, (list, tuple)):
        if not stack:
            raise ValueError("empty stack")
        stack = np.stack([np.asarray(getattr(f, "values", f), dtype=float) for f in stack], axis=-1)
    stack = np.asarray(stack, dtype=float)
    if stack.ndim == 3:
        stack = stack[:, :, None, :]
    if stack.ndim != 4 or stack.size == 0:
        raise ValueError(f"expected a non-empty 4-way stack, got shape {stack.shape}")
    sv = np.linalg.svd(unfold_bracket(stack, 3), compute_uv=False)
    if sv[0] == 0:
        return np.zeros_like(sv)
    return sv / sv[0]


def write_diagnostic_csv(values, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "normalized_singular_value"])
        for i, v in enumerate(values, start=1):
            writer.writerow([i, repr(float(v))])
