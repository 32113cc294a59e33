"""scikit-learn style wrappers around the completion algorithms.

Missing entries are given either as NaN in ``X`` or through an explicit
``mask`` argument (True = observed). Completed outputs always keep the
observed entries unchanged.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .batch import (
    BatchStopCriteria,
    RankHeuristicParams,
    SsdParams,
    estimate_rank,
    trssd_complete,
)
from .pipeline import PipelineConfig, process_first_frame, process_frame
from .streaming import StreamParams, solve_temporal_core, strc_update
from .tensor import tr_reconstruct
from .validation import check_frame, check_masked_tensor, check_video

_CONFIG_PARAMS = tuple(PipelineConfig.__dataclass_fields__)


class TRCompleter(TransformerMixin, BaseEstimator):
    """Batch tensor-ring completion (rank estimate + scaled steepest descent).

    Parameters
    ----------
    rank : int or "auto"
        Equal TR rank; "auto" applies the observation/variance heuristic.
    max_iter, tol : stop after ``max_iter`` sweeps or when the relative
        change of the reconstruction falls below ``tol``.
    C1, C2, r_o, rank_max : rank heuristic parameters.
    eps : ridge added to the scaling Gram matrix.
    random_state : seed for the core initialisation.
    """

    def __init__(self, rank="auto", max_iter=10, tol=1e-2, C1=1000.0, C2=6.0, r_o=4,
                 rank_max=None, eps=1e-10, random_state=None):
        self.rank = rank
        self.max_iter = max_iter
        self.tol = tol
        self.C1 = C1
        self.C2 = C2
        self.r_o = r_o
        self.rank_max = rank_max
        self.eps = eps
        self.random_state = random_state

    def fit(self, X, y=None, mask=None):
        m = check_masked_tensor(X, mask)
        if self.rank == "auto":
            rank = estimate_rank(m, RankHeuristicParams(self.C1, self.C2, self.r_o,
                                                        r_max=self.rank_max))
        else:
            rank = int(self.rank)
        self.cores_, self.reconstruction_ = trssd_complete(
            m, rank, BatchStopCriteria(self.max_iter, self.tol), seed=self.random_state,
            params=SsdParams(self.eps))
        self.rank_ = rank
        self.shape_ = m.shape
        return self

    def transform(self, X, mask=None):
        check_is_fitted(self, "cores_")
        values = np.asarray(X, dtype=float)
        if values.shape != self.shape_:
            raise ValueError(f"X has shape {values.shape}, fitted on {self.shape_}")
        m = check_masked_tensor(values, mask)
        return np.where(m.mask, m.values, self.reconstruction_)

    def fit_transform(self, X, y=None, mask=None):
        return self.fit(X, mask=mask).transform(X, mask=mask)


class StreamingTRCompleter(BaseEstimator):
    """Streaming tensor-ring completion along the last axis.

    The first :meth:`partial_fit` runs a batch completion; later calls do
    one streaming update (closed-form temporal core, one SSD step per
    spatial core). Only the spatial cores are kept between calls.
    """

    def __init__(self, rank="auto", gamma=1e-5, max_iter=10, tol=1e-2, C1=1000.0, C2=6.0,
                 r_o=4, rank_max=None, eps=1e-10, random_state=None):
        self.rank = rank
        self.gamma = gamma
        self.max_iter = max_iter
        self.tol = tol
        self.C1 = C1
        self.C2 = C2
        self.r_o = r_o
        self.rank_max = rank_max
        self.eps = eps
        self.random_state = random_state

    def fit(self, X, y=None, mask=None):
        """Start a new stream from ``X``."""
        if hasattr(self, "spatial_cores_"):
            del self.spatial_cores_
        return self.partial_fit(X, mask=mask)

    def partial_fit(self, X, y=None, mask=None):
        m = check_masked_tensor(X, mask, min_order=2)
        if not hasattr(self, "spatial_cores_"):
            batch = TRCompleter(self.rank, self.max_iter, self.tol, self.C1, self.C2, self.r_o,
                                self.rank_max, self.eps, self.random_state)
            batch.fit(m.values, mask=m.mask)
            cores, self.reconstruction_ = batch.cores_, batch.reconstruction_
            self.rank_ = batch.rank_
            self.n_updates_ = 0
        else:
            if m.shape[:-1] != self.spatial_shape_:
                raise ValueError(f"spatial shape {m.shape[:-1]} differs from {self.spatial_shape_}")
            cores, self.reconstruction_ = strc_update(m, self.spatial_cores_,
                                                      StreamParams(self.gamma, self.eps))
            self.n_updates_ += 1
        self.spatial_cores_ = cores[:-1]
        self.temporal_core_ = cores[-1]
        self.spatial_shape_ = m.shape[:-1]
        return self

    def transform(self, X, mask=None):
        """Complete ``X`` with the current spatial cores, without updating them."""
        check_is_fitted(self, "spatial_cores_")
        m = check_masked_tensor(X, mask, min_order=2)
        v = solve_temporal_core(m, self.spatial_cores_, StreamParams(self.gamma, self.eps))
        return np.where(m.mask, m.values, tr_reconstruct(self.spatial_cores_ + [v]))

    def fit_transform(self, X, y=None, mask=None):
        self.partial_fit(X, mask=mask)
        m = check_masked_tensor(X, mask, min_order=2)
        return np.where(m.mask, m.values, self.reconstruction_)


class _ConfigMixin:
    def _config(self):
        return PipelineConfig(**{k: getattr(self, k) for k in _CONFIG_PARAMS})


def _config_init(self, **kwargs):
    for k in _CONFIG_PARAMS:
        setattr(self, k, kwargs[k])


class PatchTrackingCompleter(_ConfigMixin, BaseEstimator):
    """Streaming video completion with tracked patch tensors.

    Feed frames one at a time with :meth:`partial_fit` (the recovered frame
    is stored in ``recovered_``) or a whole ``(H, W, n, T)`` video with
    :meth:`fit_transform`.
    """

    def __init__(self, patch_size=36, overlap=12, border=20, interval=3, search_size=41,
                 k_new=30, k_track=10, tau_f=0.02, tau_c=3.0, gamma=1e-5, max_iter=10,
                 tol=1e-2, C1=1000.0, C2=6.0, r_o=4, rank_max=None, seed=0, threads=1):
        _config_init(**{k: v for k, v in locals().items() if k != "__class__"})

    def partial_fit(self, X, y=None, mask=None):
        frame = check_frame(X, mask)
        state = getattr(self, "state_", None)
        out, self.state_ = process_frame(frame, state, self._config())
        self.recovered_ = out.values if np.ndim(X) == 3 else out.values[:, :, 0]
        return self

    def complete_frame(self, X, mask=None):
        return self.partial_fit(X, mask=mask).recovered_

    def fit(self, X, y=None, mask=None):
        self.fit_transform(X, mask=mask)
        return self

    def fit_transform(self, X, y=None, mask=None):
        frames = check_video(X, mask)
        if hasattr(self, "state_"):
            del self.state_
        cfg = self._config()
        state, out = None, []
        for f in frames:
            rec, state = process_frame(f, state, cfg)
            out.append(rec.values)
        self.state_ = state
        video = np.stack(out, axis=-1)
        return video if np.ndim(X) == 4 else video[:, :, 0, :]


class PatchImageCompleter(_ConfigMixin, TransformerMixin, BaseEstimator):
    """Single-image completion: in-image patch matching plus batch TR completion."""

    def __init__(self, patch_size=36, overlap=12, border=20, interval=3, search_size=41,
                 k_new=30, k_track=10, tau_f=0.02, tau_c=3.0, gamma=1e-5, max_iter=10,
                 tol=1e-2, C1=1000.0, C2=6.0, r_o=4, rank_max=None, seed=0, threads=1):
        _config_init(**{k: v for k, v in locals().items() if k != "__class__"})

    def fit(self, X, y=None, mask=None):
        self.fit_transform(X, mask=mask)
        return self

    def fit_transform(self, X, y=None, mask=None):
        frame = check_frame(X, mask)
        out, state = process_first_frame(frame, self._config())
        self.n_patches_ = state.stats.new_patches
        self.recovered_ = out.values if np.ndim(X) == 3 else out.values[:, :, 0]
        return self.recovered_

    def transform(self, X, mask=None):
        return self.fit_transform(X, mask=mask)
