"""Frame-by-frame video completion with tracked patch tensors.

Each tracked patch keeps the spatial TR cores of its patch tensor. A new
frame is handled in phases: match every tracked patch into the new frame,
prune failed or redundant tracks, refresh survivors with one streaming
update, cover what is left with fresh patches completed in batch, then
aggregate all recovered patches and keep observed pixels as they are.
"""
from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .batch import BatchStopCriteria, RankHeuristicParams, estimate_rank, trssd_complete
from .exceptions import InvalidStateError
from .patches import (
    Frame,
    PaddedFrame,
    PatchDescriptor,
    aggregate,
    coverage_count,
    dilate,
    ecpm_match,
    extract_patch_tensor,
    pad_mirror,
    subframes,
)
from .streaming import StreamParams, strc_update

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    patch_size: int = 36
    overlap: int = 12
    border: int = 20
    interval: int = 3
    search_size: int = 41
    k_new: int = 30
    k_track: int = 10
    tau_f: float = 0.02
    tau_c: float = 3.0
    gamma: float = 1e-5
    max_iter: int = 10
    tol: float = 1e-2
    C1: float = 1000.0
    C2: float = 6.0
    r_o: int = 4
    rank_max: int | None = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.patch_size > self.overlap >= 0:
            raise ValueError("need patch_size > overlap >= 0")
        if self.search_size < 1 or self.search_size % 2 == 0:
            raise ValueError("search_size must be a positive odd number")
        if not 1 <= self.k_track <= self.k_new:
            raise ValueError("need 1 <= k_track <= k_new")
        if self.interval < 1 or self.border < 0 or self.threads < 1:
            raise ValueError("need interval >= 1, border >= 0, threads >= 1")

    @property
    def stride(self):
        return self.patch_size - self.overlap

    def rank_params(self):
        return RankHeuristicParams(C1=self.C1, C2=self.C2, r_o=self.r_o, r_max=self.rank_max)

    def stop(self):
        return BatchStopCriteria(max_iter=self.max_iter, tol=self.tol)

    def stream_params(self):
        return StreamParams(gamma=self.gamma)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class TrackedPatchState:
    descriptor: PatchDescriptor
    cores: list  # spatial cores only; the temporal core is re-solved each frame


@dataclass
class FrameStats:
    pool_size: int = 0
    new_patches: int = 0
    pruned: int = 0
    pruned_mistracked: int = 0
    pruned_overlap: int = 0
    candidates: int = 0
    matched_pixels: int = 0


@dataclass
class PipelineState:
    previous: PaddedFrame
    tracks: list
    t: int
    frame_shape: tuple
    stats: FrameStats = field(default_factory=FrameStats)
    # every descriptor that contributed to the last aggregation
    patch_descriptors: list = field(default_factory=list)


def grid_starts(lo, hi, extent, m, stride):
    """Top-left offsets of size-``m`` patches covering ``[lo, hi]`` inside ``[0, extent)``."""
    starts = []
    start = lo
    while True:
        clipped = min(start, extent - m)
        if not starts or clipped != starts[-1]:
            starts.append(clipped)
        if clipped + m > hi:
            break
        start += stride
    return starts


def new_patch_grid(uncovered, m, stride):
    """Grid patches over the bounding box of ``uncovered`` that touch it."""
    if not uncovered.any():
        return []
    rows = np.flatnonzero(uncovered.any(axis=1))
    cols = np.flatnonzero(uncovered.any(axis=0))
    h, w = uncovered.shape
    descs = []
    for r in grid_starts(rows[0], rows[-1], h, m, stride):
        for c in grid_starts(cols[0], cols[-1], w, m, stride):
            if uncovered[r:r + m, c:c + m].any():
                descs.append(PatchDescriptor(int(r), int(c), m))
    return descs


def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _blocks(descs, recon):
    return [(d, recon[..., j]) for j, d in enumerate(descs)]


def _complete_new(padded, dil, subs, descs, cfg, t):
    """Match, assemble and batch-complete fresh patches; returns (tracks, blocks, candidates)."""

    def work(item):
        idx, d = item
        res = ecpm_match(d, dil, dil, cfg.k_new, cfg.search_size, cfg.interval,
                         include_ref=True, prev_subframes=subs, next_subframes=subs)
        pt = extract_patch_tensor(padded, res.descriptors, cfg.k_new)
        m = pt.tensor
        if m.n_observed == 0:
            fill = float(padded.values[padded.mask].mean()) if padded.mask.any() else 0.0
            return None, _blocks(pt.descriptors, np.full(m.shape, fill)), res
        rank = estimate_rank(m, cfg.rank_params())
        seed = np.random.SeedSequence([cfg.seed, t, idx])
        cores, recon = trssd_complete(m, rank, cfg.stop(), seed=np.random.default_rng(seed))
        track = TrackedPatchState(d, cores[:-1])
        return track, _blocks(pt.descriptors, recon), res

    results = _map(work, list(enumerate(descs)), cfg.threads)
    tracks = [r[0] for r in results if r[0] is not None]
    blocks = [b for r in results for b in r[1]]
    cand = sum(r[2].n_candidates for r in results)
    pix = sum(r[2].n_pixels for r in results)
    return tracks, blocks, cand, pix


def _finish(frame, padded, blocks, tracks, cfg, t, stats, descs_used):
    recovered = aggregate(blocks, padded.shape, crop=padded)
    estimate = np.clip(recovered.values, 0.0, 1.0)
    out = np.where(frame.mask, frame.values, estimate)
    stats.pool_size = len(tracks)
    state = PipelineState(padded, tracks, t, frame.shape, stats, descs_used)
    return Frame(out, np.ones(out.shape, dtype=bool)), state


def _check_frame(frame, cfg):
    if not isinstance(frame, Frame):
        raise TypeError("expected a Frame")
    h, w, _ = frame.shape
    if min(h, w) + 2 * cfg.border < cfg.patch_size:
        raise ValueError(
            f"padded frame {h}x{w} (+2*{cfg.border}) is smaller than patch size {cfg.patch_size}")


def process_first_frame(frame: Frame, cfg: PipelineConfig = PipelineConfig()):
    """Recover a frame with no history: the whole padded frame is uncovered.

    Returns ``(recovered_frame, state)``.
    """
    _check_frame(frame, cfg)
    padded = pad_mirror(frame, cfg.border, cfg.interval)
    dil = dilate(padded)
    subs = subframes(dil, cfg.interval)
    uncovered = np.ones(padded.shape[:2], dtype=bool)
    descs = new_patch_grid(uncovered, cfg.patch_size, cfg.stride)
    tracks, blocks, cand, pix = _complete_new(padded, dil, subs, descs, cfg, 0)
    stats = FrameStats(new_patches=len(descs), candidates=cand, matched_pixels=pix)
    return _finish(frame, padded, blocks, tracks, cfg, 0, stats, descs)


def process_frame(frame: Frame, state: PipelineState | None, cfg: PipelineConfig = PipelineConfig()):
    """Recover the next frame of a stream given the state left by the previous one.

    Returns ``(recovered_frame, new_state)``. ``state=None`` starts a stream.
    """
    if state is None:
        return process_first_frame(frame, cfg)
    _check_frame(frame, cfg)
    if frame.shape != state.frame_shape:
        raise InvalidStateError(f"frame shape {frame.shape} differs from stream shape {state.frame_shape}")
    t = state.t + 1
    s, m = cfg.interval, cfg.patch_size
    padded = pad_mirror(frame, cfg.border, s)
    if padded.shape != state.previous.shape:
        raise InvalidStateError("padded geometry changed between frames")
    dil = dilate(padded)
    prev_dil = dilate(state.previous)
    subs = subframes(dil, s)
    prev_subs = subframes(prev_dil, s)

    matches = _map(
        lambda tr: ecpm_match(tr.descriptor, prev_dil, dil, cfg.k_track, cfg.search_size, s,
                              prev_subframes=prev_subs, next_subframes=subs),
        state.tracks, cfg.threads)
    stats = FrameStats(candidates=sum(r.n_candidates for r in matches),
                       matched_pixels=sum(r.n_pixels for r in matches))

    alive = []
    for tr, res in zip(state.tracks, matches):
        if res.descriptors and res.distances[0] <= cfg.tau_f:
            alive.append((tr, res))
        else:
            stats.pruned_mistracked += 1
    cover = coverage_count([res.descriptors[0] for _, res in alive], padded.shape)
    survivors = []
    for tr, res in alive:
        best = res.descriptors[0]
        sl = best.slices()
        if int(cover[sl].min()) - 1 > cfg.tau_c:
            cover[sl] -= 1
            stats.pruned_overlap += 1
        else:
            survivors.append((tr, res))
    stats.pruned = stats.pruned_mistracked + stats.pruned_overlap

    def update(item):
        tr, res = item
        pt = extract_patch_tensor(padded, res.descriptors, cfg.k_track)
        cores, recon = strc_update(pt.tensor, tr.cores, cfg.stream_params())
        return TrackedPatchState(res.descriptors[0], cores[:-1]), _blocks(pt.descriptors, recon)

    updated = _map(update, survivors, cfg.threads)
    tracks = [u[0] for u in updated]
    blocks = [b for u in updated for b in u[1]]

    uncovered = cover == 0
    new_descs = new_patch_grid(uncovered, m, cfg.stride)
    new_tracks, new_blocks, cand, pix = _complete_new(padded, dil, subs, new_descs, cfg, t)
    stats.new_patches = len(new_descs)
    stats.candidates += cand
    stats.matched_pixels += pix
    logger.debug("frame %d: %d tracked, %d pruned, %d new", t, len(tracks), stats.pruned,
                 len(new_descs))
    used = [tr.descriptor for tr in tracks] + new_descs
    return _finish(frame, padded, blocks + new_blocks, tracks + new_tracks, cfg, t, stats, used)


def complete_image(frame: Frame, cfg: PipelineConfig = PipelineConfig()) -> Frame:
    """Single-image completion with in-image patch matching and batch TR completion."""
    return process_first_frame(frame, cfg)[0]
