"""Streaming tensor-ring completion (STRC).

The last mode of every tensor is temporal. At each step the temporal core
is solved in closed form against the previous spatial cores, then every
spatial core takes one scaled-steepest-descent step on the new data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .batch import SsdParams, ssd_core_step
from .exceptions import InvalidStateError, NumericalError
from .tensor import (
    MaskedTensor,
    check_cores,
    fold_paren,
    subchain_matrix,
    tr_reconstruct,
    unfold_bracket,
)


@dataclass(frozen=True)
class StreamParams:
    gamma: float = 1e-5
    eps: float = 1e-10

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


def _check_spatial(m: MaskedTensor, spatial_cores):
    spatial_cores = [np.asarray(c, dtype=float) for c in spatial_cores]
    if len(spatial_cores) != m.values.ndim - 1:
        raise InvalidStateError(
            f"expected {m.values.ndim - 1} spatial cores for a {m.values.ndim}-way tensor, "
            f"got {len(spatial_cores)}"
        )
    for k, c in enumerate(spatial_cores):
        if c.ndim != 3 or c.shape[1] != m.shape[k]:
            raise InvalidStateError(f"core {k} of shape {c.shape} does not match extent {m.shape[k]}")
    for k in range(len(spatial_cores) - 1):
        if spatial_cores[k].shape[2] != spatial_cores[k + 1].shape[0]:
            raise InvalidStateError(f"rank mismatch between spatial cores {k} and {k + 1}")
    return spatial_cores


def solve_temporal_core(m: MaskedTensor, spatial_cores, params: StreamParams = StreamParams(),
                        counter=None):
    """Ridge least-squares temporal core for fixed spatial cores.

    For every temporal slice ``k`` with observed rows ``I_k`` of the merged
    spatial subchain ``U``::

        v_k = (U[I_k]^T U[I_k] + gamma I)^{-1} U[I_k]^T m_k[I_k]

    Slices without observations get ``v_k = 0``. Returns the core of shape
    ``(r_last, K, r_first)``.
    """
    spatial_cores = _check_spatial(m, spatial_cores)
    r_first = spatial_cores[0].shape[0]
    r_last = spatial_cores[-1].shape[2]
    n_temporal = m.shape[-1]
    # the temporal core only fixes the ring bond; its content is irrelevant for U
    placeholder = np.zeros((r_last, 1, r_first))
    u = subchain_matrix(spatial_cores + [placeholder], len(spatial_cores), counter)
    mt = unfold_bracket(m.values, m.values.ndim - 1)
    pt = unfold_bracket(m.mask, m.values.ndim - 1).astype(float)
    d = u.shape[1]
    n_obs = pt.sum(axis=1)

    if params.gamma == 0:
        deficient = (n_obs > 0) & (n_obs < d)
        if np.any(deficient):
            raise NumericalError(
                f"slice(s) {np.flatnonzero(deficient).tolist()} have fewer observations "
                f"than the {d} unknowns; use gamma > 0"
            )
    if counter is not None:
        counter.add(int(n_obs.sum()) * (d * d + d) + n_temporal * d**3 // 3)

    gram = np.einsum("kj,ja,jb->kab", pt, u, u, optimize=True)
    gram += params.gamma * np.eye(d)
    rhs = (pt * mt) @ u
    v = np.zeros((n_temporal, d))
    live = n_obs > 0
    if np.any(live):
        try:
            chol = np.linalg.cholesky(gram[live])
        except np.linalg.LinAlgError as exc:
            raise NumericalError("temporal normal equations are singular") from exc
        y = np.linalg.solve(chol, rhs[live][..., None])
        v[live] = np.linalg.solve(np.swapaxes(chol, -1, -2), y)[..., 0]
    if not np.all(np.isfinite(v)):
        raise NumericalError("non-finite temporal core")
    return fold_paren(v, 1, (r_last, n_temporal, r_first))


def strc_update(m: MaskedTensor, prev_spatial_cores, params: StreamParams = StreamParams(),
                counter=None):
    """One streaming step: temporal solve, then one SSD step per spatial core.

    Returns ``(cores, reconstruction)`` where ``cores`` holds all N cores
    (spatial first, temporal last).
    """
    spatial = _check_spatial(m, prev_spatial_cores)
    v = solve_temporal_core(m, spatial, params, counter)
    cores = check_cores(spatial + [v])
    ssd = SsdParams(eps=params.eps)
    for k in range(len(spatial)):
        cores = ssd_core_step(m, cores, k, ssd, counter)
    return cores, tr_reconstruct(cores, counter)
