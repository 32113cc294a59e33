"""Patch-tracking streaming tensor-ring completion for images and video."""
from .batch import (
    BatchStopCriteria,
    RankHeuristicParams,
    SsdParams,
    estimate_rank,
    ssd_core_step,
    trssd_complete,
)
from .estimators import (
    PatchImageCompleter,
    PatchTrackingCompleter,
    StreamingTRCompleter,
    TRCompleter,
)
from .masks import MaskSpec, gen_mask
from .metrics import psnr, subspace_diagnostic
from .patches import Frame, PaddedFrame, PatchDescriptor, ecpm_match
from .pipeline import PipelineConfig, complete_image, process_first_frame, process_frame
from .streaming import StreamParams, solve_temporal_core, strc_update
from .tensor import (
    MaskedTensor,
    subchain_merge,
    tr_reconstruct,
    unfold_bracket,
    unfold_paren,
)

__version__ = "0.1.0"

__all__ = [
    "BatchStopCriteria",
    "Frame",
    "MaskSpec",
    "MaskedTensor",
    "PaddedFrame",
    "PatchDescriptor",
    "PatchImageCompleter",
    "PatchTrackingCompleter",
    "PipelineConfig",
    "RankHeuristicParams",
    "SsdParams",
    "StreamParams",
    "StreamingTRCompleter",
    "TRCompleter",
    "complete_image",
    "ecpm_match",
    "estimate_rank",
    "gen_mask",
    "process_first_frame",
    "process_frame",
    "psnr",
    "solve_temporal_core",
    "ssd_core_step",
    "strc_update",
    "subchain_merge",
    "subspace_diagnostic",
    "tr_reconstruct",
    "trssd_complete",
    "unfold_bracket",
    "unfold_paren",
]
