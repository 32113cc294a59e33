"""Synthetic frames and videos for tests and demos."""
from __future__ import annotations

import numpy as np


def texture(height, width, channels=3, rng=None, n_waves=4, contrast=0.3):
    """Smooth colour texture: random plane waves around a random base colour, in [0, 1]."""
    rng = np.random.default_rng(rng)
    rows, cols = np.mgrid[0:height, 0:width].astype(float)
    img = np.zeros((height, width, channels))
    for _ in range(n_waves):
        freq = rng.uniform(0.05, 0.25, size=2) * rng.choice([-1, 1], size=2)
        phase = rng.uniform(0, 2 * np.pi)
        wave = np.sin(freq[0] * rows + freq[1] * cols + phase)
        img += wave[:, :, None] * rng.uniform(0.3, 1.0, size=channels)
    img /= np.abs(img).max()
    base = rng.uniform(0.5 - (0.5 - contrast) * 0.9, 0.5 + (0.5 - contrast) * 0.9, size=channels)
    return base + contrast * img


def moving_square_video(height=64, width=64, channels=3, n_frames=20, square=16, speed=2,
                        rng=None):
    """Textured background with a differently textured square moving right.

    Returns an ``(H, W, n, T)`` array in [0, 1].
    """
    rng = np.random.default_rng(rng)
    background = texture(height, width, channels, rng)
    patch = texture(square, square, channels, rng, contrast=0.4)
    top = (height - square) // 2
    frames = []
    for t in range(n_frames):
        left = (4 + speed * t) % (width - square)
        f = background.copy()
        f[top:top + square, left:left + square] = patch
        frames.append(f)
    return np.stack(frames, axis=-1)


def shifted_pair(height, width, channels, shift, rng=None):
    """Two frames where the second is the first moved right by ``shift`` columns."""
    rng = np.random.default_rng(rng)
    big = texture(height, width + shift, channels, rng, n_waves=6)
    return big[:, shift:], big[:, :width]
