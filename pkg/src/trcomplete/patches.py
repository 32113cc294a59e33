"""Patch mechanics: padding, dilation, coarse-scale matching, aggregation.

Frames are ``(H, W, n)`` float arrays in [0, 1] with a boolean mask of the
same shape. Patch locations are 0-based ``(row, col)`` of the top-left
pixel in padded-frame coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .tensor import MaskedTensor


@dataclass(frozen=True)
class Frame:
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.mask)
        if values.ndim == 2:
            values = values[:, :, None]
        if mask.ndim == 2:
            mask = np.broadcast_to(mask[:, :, None], values.shape)
        if values.ndim != 3:
            raise ValueError(f"frame must be (H, W) or (H, W, n), got {values.shape}")
        if mask.shape != values.shape:
            raise ValueError(f"mask shape {mask.shape} does not match frame {values.shape}")
        mask = mask.astype(bool)
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("observed pixels must be finite")
        object.__setattr__(self, "values", np.where(mask, values, 0.0))
        object.__setattr__(self, "mask", np.ascontiguousarray(mask))

    @property
    def shape(self):
        return self.values.shape

    @property
    def channels(self):
        return self.values.shape[2]


@dataclass(frozen=True)
class PaddedFrame(Frame):
    """A frame grown by mirror padding; ``pad`` is ``((top, bottom), (left, right))``."""

    pad: tuple = ((0, 0), (0, 0))

    def crop(self, arr):
        (top, bottom), (left, right) = self.pad
        h, w = arr.shape[:2]
        return arr[top:h - bottom, left:w - right]


@dataclass(frozen=True, order=True)
class PatchDescriptor:
    row: int
    col: int
    size: int

    def slices(self):
        return (slice(self.row, self.row + self.size), slice(self.col, self.col + self.size))

    def fits(self, shape):
        return 0 <= self.row and 0 <= self.col and \
            self.row + self.size <= shape[0] and self.col + self.size <= shape[1]


@dataclass
class MatchResult:
    """Matches ordered by ascending distance plus the work spent finding them."""

    descriptors: list
    distances: np.ndarray
    n_candidates: int = 0
    n_pixels: int = 0


@dataclass(frozen=True)
class PatchTensor:
    tensor: MaskedTensor
    descriptors: list = field(default_factory=list)


def _axis_padding(extent, b, s):
    for bb in range(b, b + s):
        if (extent + 2 * bb) % s == 0:
            return (bb, bb)
    # even s with an odd extent: no symmetric border works
    extra = (-(extent + 2 * b)) % s
    return (b, b + extra)


def pad_mirror(frame: Frame, b, s=1) -> PaddedFrame:
    """Mirror-pad values and mask by at least ``b`` pixels on every side.

    Reflection duplicates the edge pixel (``[a, b, c]`` padded by 2 gives
    ``[b, a, a, b, c, c, b]``). The border grows until both padded extents
    are divisible by ``s``.
    """
    if b < 0 or s < 1:
        raise ValueError("need b >= 0 and s >= 1")
    h, w, _ = frame.shape
    pad = (_axis_padding(h, b, s), _axis_padding(w, b, s))
    width = (pad[0], pad[1], (0, 0))
    values = np.pad(frame.values, width, mode="symmetric")
    mask = np.pad(frame.mask, width, mode="symmetric")
    return PaddedFrame(values, mask, pad=pad)


def dilate(frame: PaddedFrame) -> PaddedFrame:
    """Per-channel 3x3 max over observed neighbours; no observed neighbour means missing."""
    filled = np.where(frame.mask, frame.values, -np.inf)
    out = ndimage.maximum_filter(filled, size=(3, 3, 1), mode="constant", cval=-np.inf)
    mask = np.isfinite(out)
    return PaddedFrame(np.where(mask, out, 0.0), mask, pad=frame.pad)


def coord_map(x, y, s):
    """1-based pixel ``(x, y)`` to ``(x', y', c)`` in the ``c``-th interleaved sub-frame."""
    return ((x - 1) // s + 1, (y - 1) // s + 1, (x - 1) % s + ((y - 1) % s) * s + 1)


def coord_map_inv(xd, yd, c, s):
    """Inverse of :func:`coord_map`."""
    return ((xd - 1) * s + 1 + (c - 1) % s, (yd - 1) * s + 1 + (c - 1) // s)


def patch_distance(a: MaskedTensor, b: MaskedTensor):
    """Mean squared difference over commonly observed entries; inf if there are none."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    common = a.mask & b.mask
    n = int(common.sum())
    if n == 0:
        return math.inf
    diff = np.where(common, a.values - b.values, 0.0)
    return float(np.sum(diff**2) / n)


def subframes(frame: Frame, s):
    """The ``s*s`` interleaved down-sampled frames; index ``c`` (0-based) takes
    rows ``c % s :: s`` and columns ``c // s :: s``."""
    return [(frame.values[c % s::s, c // s::s], frame.mask[c % s::s, c // s::s])
            for c in range(s * s)]


def _window(center, w, lo, hi):
    start = center - w // 2
    return max(start, lo), min(start + w, hi + 1)


def ecpm_match(ref: PatchDescriptor, prev: Frame, nxt: Frame, k, l, s, *,
               include_ref=False, prev_subframes=None, next_subframes=None) -> MatchResult:
    """K nearest patches to ``ref`` (in ``prev``) found in ``nxt`` at coarse scale.

    Both frames are split into ``s*s`` interleaved sub-frames. The reference
    is cut at ``ceil(m/s)`` edge from its own sub-frame and compared with every
    sub-frame of ``nxt`` inside a ``ceil(l/s)`` window centred on its coarse
    location. Winners are mapped back to full resolution; candidates whose
    full patch leaves the frame are skipped. Ties go to raster order, then
    sub-frame index.

    With ``include_ref`` the reference location itself is returned first
    (used when matching inside one frame) and excluded from the rest.
    """
    hp, wp, n = nxt.shape
    if prev.shape != nxt.shape:
        raise ValueError("frames must have the same shape")
    if hp % s or wp % s:
        raise ValueError(f"padded size {hp}x{wp} is not divisible by s={s}")
    if not ref.fits(prev.shape):
        raise ValueError(f"{ref} does not fit in a {hp}x{wp} frame")
    m = ref.size
    mp = math.ceil(m / s)
    w = math.ceil(l / s)
    psub = prev_subframes or subframes(prev, s)
    nsub = next_subframes or subframes(nxt, s)
    x0, y0 = ref.row // s, ref.col // s
    c0 = ref.row % s + (ref.col % s) * s
    ref_v = psub[c0][0][x0:x0 + mp, y0:y0 + mp].transpose(2, 0, 1)
    ref_m = psub[c0][1][x0:x0 + mp, y0:y0 + mp].transpose(2, 0, 1)
    hs, ws = hp // s, wp // s

    dists, keys, locs = [], [], []
    n_cand = 0
    for c in range(s * s):
        dr, dc = c % s, c // s
        # coarse top-left limits: inside the sub-frame and full patch inside the frame
        r_hi = min(hs - mp, (hp - m - dr) // s)
        c_hi = min(ws - mp, (wp - m - dc) // s)
        r0, r1 = _window(x0, w, 0, r_hi)
        q0, q1 = _window(y0, w, 0, c_hi)
        if r0 >= r1 or q0 >= q1:
            continue
        sv, sm = nsub[c]
        win_v = sliding_window_view(sv, (mp, mp), axis=(0, 1))[r0:r1, q0:q1]
        win_m = sliding_window_view(sm, (mp, mp), axis=(0, 1))[r0:r1, q0:q1]
        common = win_m & ref_m
        cnt = common.sum(axis=(2, 3, 4))
        sq = np.where(common, win_v - ref_v, 0.0) ** 2
        num = sq.sum(axis=(2, 3, 4))
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(cnt > 0, num / np.maximum(cnt, 1), np.inf)
        rr, qq = np.meshgrid(np.arange(r0, r1), np.arange(q0, q1), indexing="ij")
        n_cand += d.size
        dists.append(d.ravel())
        keys.append(np.stack([rr.ravel(), qq.ravel(), np.full(d.size, c)], axis=1))
        locs.append(np.stack([rr.ravel() * s + dr, qq.ravel() * s + dc], axis=1))

    n_pixels = n_cand * mp * mp * n
    if not dists:
        descs = [ref] if include_ref else []
        return MatchResult(descs, np.zeros(len(descs)), 0, 0)
    dist = np.concatenate(dists)
    key = np.concatenate(keys)
    loc = np.concatenate(locs)
    if include_ref:
        keep = ~((loc[:, 0] == ref.row) & (loc[:, 1] == ref.col))
        dist, key, loc = dist[keep], key[keep], loc[keep]
        k = k - 1
    order = np.lexsort((key[:, 2], key[:, 1], key[:, 0], dist))[:max(k, 0)]
    descs = [PatchDescriptor(int(loc[i, 0]), int(loc[i, 1]), m) for i in order]
    out_dist = dist[order]
    if include_ref:
        descs = [ref] + descs
        out_dist = np.concatenate([[0.0], out_dist])
    return MatchResult(descs, out_dist, n_cand, n_pixels)


def extract_patch_tensor(frame: Frame, descs, k=None) -> PatchTensor:
    """Stack the pixels under ``descs`` into an ``m x m x n x K`` masked tensor.

    When ``k`` exceeds the number of descriptors the first one is repeated.
    """
    descs = list(descs)
    if not descs:
        raise ValueError("no patch descriptors")
    if k is not None and len(descs) < k:
        descs = descs + [descs[0]] * (k - len(descs))
    for d in descs:
        if not d.fits(frame.shape):
            raise ValueError(f"{d} does not fit in frame of shape {frame.shape}")
    vals = np.stack([frame.values[d.slices()] for d in descs], axis=-1)
    mask = np.stack([frame.mask[d.slices()] for d in descs], axis=-1)
    return PatchTensor(MaskedTensor(vals, mask), descs)


def coverage_count(descs, shape):
    """Number of patches covering each pixel of an ``(H, W)`` canvas."""
    count = np.zeros(shape[:2], dtype=np.int64)
    for d in descs:
        count[d.slices()] += 1
    return count


def overlap_degree(d: PatchDescriptor, others):
    """Minimum over the pixels of ``d`` of how many of ``others`` cover that pixel."""
    count = np.zeros((d.size, d.size), dtype=np.int64)
    for o in others:
        if o is d:
            continue
        r0, r1 = max(d.row, o.row), min(d.row + d.size, o.row + o.size)
        c0, c1 = max(d.col, o.col), min(d.col + d.size, o.col + o.size)
        if r0 < r1 and c0 < c1:
            count[r0 - d.row:r1 - d.row, c0 - d.col:c1 - d.col] += 1
    return int(count.min())


def aggregate(patches, canvas_shape, crop=None) -> Frame:
    """Uniformly average overlapping recovered blocks on a canvas.

    ``patches`` is an iterable of ``(PatchDescriptor, block)`` with blocks
    of shape ``(m, m, n)``. ``crop`` is a :class:`PaddedFrame` whose border
    is removed from the result. Uncovered pixels come back masked out.
    """
    patches = list(patches)
    if not patches:
        raise ValueError("no patches to aggregate")
    acc = np.zeros(canvas_shape, dtype=float)
    cnt = np.zeros(canvas_shape[:2], dtype=np.int64)
    for d, block in patches:
        sl = d.slices()
        acc[sl] += block
        cnt[sl] += 1
    covered = cnt > 0
    acc[covered] /= cnt[covered][:, None]
    mask = np.broadcast_to(covered[:, :, None], acc.shape)
    if crop is not None:
        acc, mask = crop.crop(acc), crop.crop(mask)
    return Frame(acc, mask)
