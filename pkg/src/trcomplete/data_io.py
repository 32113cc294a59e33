"""Reading and writing 8-bit frames (PGM/PPM/PNG) and masks."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

FRAME_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm")


def read_frame(path):
    """Load an 8-bit image as an ``(H, W, n)`` float array in [0, 1]."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("L" if img.mode in ("1", "I", "I;16", "F", "LA") else "RGB")
            arr = np.asarray(img, dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read frame {path}: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr.astype(float) / 255.0


def to_uint8(values):
    return np.round(np.clip(np.asarray(values, dtype=float), 0.0, 1.0) * 255.0).astype(np.uint8)


def quantize(values):
    """Values as they will read back after an 8-bit write."""
    return to_uint8(values).astype(float) / 255.0


def write_frame(path, values):
    """Write ``(H, W)``/``(H, W, 1)`` as grayscale or ``(H, W, 3)`` as RGB; format from suffix."""
    arr = to_uint8(values)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path, format=_pil_format(path))


def _pil_format(path):
    return "PNG" if path.suffix.lower() == ".png" else "PPM"


def read_mask(path, channels=None):
    """Load a mask image (nonzero = observed).

    Single-channel masks are broadcast to ``channels`` when given.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("L") if img.mode not in ("L", "RGB") else img)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read mask {path}: {exc}") from exc
    mask = arr > 0
    if mask.ndim == 2:
        mask = mask[:, :, None]
    if channels is not None and mask.shape[2] != channels:
        if mask.shape[2] != 1:
            raise ValueError(f"mask {path} has {mask.shape[2]} channels, frame has {channels}")
        mask = np.repeat(mask, channels, axis=2)
    return mask


def write_mask(path, mask):
    """Single-channel 0/255 map when all channels agree, per-channel RGB otherwise.

    A per-channel mask aimed at a ``.pgm`` path is written as ``.ppm``.
    Returns the path actually written.
    """
    path = Path(path)
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim == 3 and mask.shape[2] > 1 and not np.all(mask == mask[:, :, :1]):
        if path.suffix.lower() == ".pgm":
            path = path.with_suffix(".ppm")
    elif mask.ndim == 3:
        mask = mask[:, :, 0]
    write_frame(path, mask.astype(float))
    return path


def list_frames(directory):
    """Frame files of a directory in filename order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"input directory {directory} does not exist")
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    if not files:
        raise ValueError(f"no frames ({', '.join(FRAME_SUFFIXES)}) found in {directory}")
    return files
