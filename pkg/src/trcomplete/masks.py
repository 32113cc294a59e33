"""Observation-mask patterns for benchmarking completion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw, ImageFont

PATTERNS = ("random-pixel", "random-stripe", "random-tube", "random-block", "watermark")


@dataclass(frozen=True)
class MaskSpec:
    """How to draw a mask.

    ``p`` is the observation ratio for the random pixel, stripe and tube
    patterns. Block and watermark masks take their own parameters and ignore
    ``p``.
    """

    pattern: str = "random-pixel"
    p: float = 0.2
    seed: int = 0
    block_count: tuple = (50, 150)
    block_height: tuple = (1, 10)
    block_width: tuple = (1, 100)
    text: str = "SAMPLE WATERMARK"
    text_scale: int = 2

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown mask pattern {self.pattern!r}; choose from {PATTERNS}")
        if not 0 < self.p <= 1:
            raise ValueError(f"observation ratio must be in (0, 1], got {self.p}")


def _normalize_shape(shape):
    shape = tuple(int(x) for x in shape)
    if len(shape) == 2:
        return shape, shape + (1, 1)
    if len(shape) == 3:
        return shape, shape + (1,)
    if len(shape) == 4:
        return shape, shape
    raise ValueError(f"mask shape must be (H, W), (H, W, n) or (H, W, n, T), got {shape}")


def _stripe(h, w, p, rng):
    keep = math.sqrt(p)
    rows = rng.random(h) < keep
    cols = rng.random(w) < keep
    return rows[:, None] & cols[None, :]


def _blocks(h, w, n, spec, rng):
    mask = np.ones((h, w, n), dtype=bool)
    count = rng.integers(spec.block_count[0], spec.block_count[1] + 1)
    for _ in range(count):
        bh = rng.integers(spec.block_height[0], spec.block_height[1] + 1)
        bw = rng.integers(spec.block_width[0], spec.block_width[1] + 1)
        r = rng.integers(0, max(h - bh, 0) + 1)
        c = rng.integers(0, max(w - bw, 0) + 1)
        if n > 1 and rng.random() < 0.5:
            chans = rng.choice(n, size=rng.integers(1, n), replace=False)
        else:
            chans = np.arange(n)
        mask[r:r + bh, c:c + bw, chans] = False
    return mask


def watermark_mask(h, w, text, scale=2):
    """``(H, W)`` mask that is False under ``text`` rendered across the middle."""
    font = ImageFont.load_default()
    left, top, right, bottom = ImageDraw.Draw(Image.new("L", (1, 1))).textbbox((0, 0), text, font=font)
    glyphs = Image.new("L", (right - left + 2, bottom - top + 2), 0)
    ImageDraw.Draw(glyphs).text((1 - left, 1 - top), text, fill=255, font=font)
    if scale > 1:
        glyphs = glyphs.resize((glyphs.width * scale, glyphs.height * scale), Image.NEAREST)
    if glyphs.width > w or glyphs.height > h:
        ratio = min(w / glyphs.width, h / glyphs.height)
        glyphs = glyphs.resize((max(1, int(glyphs.width * ratio)), max(1, int(glyphs.height * ratio))),
                               Image.NEAREST)
    canvas = np.zeros((h, w), dtype=bool)
    ink = np.asarray(glyphs) > 127
    r0 = (h - ink.shape[0]) // 2
    c0 = (w - ink.shape[1]) // 2
    canvas[r0:r0 + ink.shape[0], c0:c0 + ink.shape[1]] = ink
    return ~canvas


def gen_mask(shape, spec: MaskSpec):
    """Boolean observation mask of ``shape`` (True = observed), deterministic in ``spec.seed``."""
    out_shape, (h, w, n, t) = _normalize_shape(shape)
    rng = np.random.default_rng(spec.seed)
    if spec.pattern == "random-pixel":
        mask = np.broadcast_to((rng.random((h, w, t)) < spec.p)[:, :, None, :], (h, w, n, t))
    elif spec.pattern == "random-tube":
        mask = np.broadcast_to((rng.random((h, w)) < spec.p)[:, :, None, None], (h, w, n, t))
    elif spec.pattern == "random-stripe":
        frames = np.stack([_stripe(h, w, spec.p, rng) for _ in range(t)], axis=-1)
        mask = np.broadcast_to(frames[:, :, None, :], (h, w, n, t))
    elif spec.pattern == "random-block":
        mask = np.stack([_blocks(h, w, n, spec, rng) for _ in range(t)], axis=-1)
    else:
        mask = np.broadcast_to(watermark_mask(h, w, spec.text, spec.text_scale)[:, :, None, None],
                               (h, w, n, t))
    return np.ascontiguousarray(mask).reshape(out_shape)
