"""Dense tensor primitives for tensor-ring (TR) models.

Tensors are plain numpy arrays. Whenever several indices are merged into
one (unfoldings, subchains) the merged index is linearized first-index-
fastest, i.e. with Fortran ordering. Mode indices are 0-based.

A TR model is a list of 3-way cores ``Z[k]`` of shape ``(r_k, I_k, r_{k+1})``
with ``r_N == r_0`` (the ring closes).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import InvalidCoresError


class FlopCounter:
    """Accumulates multiply-add counts of the dense kernels that accept one.

    Only the dominant products are counted (matrix products, Gram matrices
    and factorizations), which is enough to compare algorithms.
    """

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += int(n)

    def matmul(self, a_shape, b_shape):
        self.add(a_shape[0] * a_shape[1] * b_shape[1])

    def __repr__(self):
        return f"FlopCounter(count={self.count})"


def _count_matmul(counter, a, b):
    if counter is not None:
        counter.add(np.prod(a.shape[:-1]) * a.shape[-1] * np.prod(b.shape[1:]))


@dataclass(frozen=True)
class MaskedTensor:
    """Values paired with a same-shape 0/1 observation mask.

    Entries where ``mask`` is 0 are never read, so they may hold anything
    finite (zero-filling is typical).
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        mask = np.asarray(self.mask)
        if values.shape != mask.shape:
            raise ValueError(f"shape mismatch: values {values.shape} vs mask {mask.shape}")
        if values.ndim < 1:
            raise ValueError("tensor order must be at least 1")
        mask = mask.astype(bool) if mask.dtype != bool else mask
        object.__setattr__(self, "values", np.where(mask, values, 0.0))
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_observed(self):
        return int(self.mask.sum())

    @property
    def observed_ratio(self):
        return self.n_observed / self.mask.size

    def observed(self):
        return self.values[self.mask]


def check_cores(cores: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Validate ring consistency and return the cores as float arrays."""
    cores = [np.asarray(c, dtype=float) for c in cores]
    if not cores:
        raise InvalidCoresError("at least one core is required")
    for k, c in enumerate(cores):
        if c.ndim != 3:
            raise InvalidCoresError(f"core {k} must be 3-way, got shape {c.shape}")
    for k, c in enumerate(cores):
        nxt = cores[(k + 1) % len(cores)]
        if c.shape[2] != nxt.shape[0]:
            raise InvalidCoresError(
                f"rank mismatch between core {k} {c.shape} and core "
                f"{(k + 1) % len(cores)} {nxt.shape}"
            )
    return cores


def tr_ranks(cores):
    return [c.shape[0] for c in cores]


def tr_shape(cores):
    return tuple(c.shape[1] for c in cores)


def _check_mode(ndim, k):
    if not 0 <= k < ndim:
        raise ValueError(f"mode {k} out of range for a {ndim}-way tensor")


def _bracket_axes(ndim, k):
    return [k] + list(range(k + 1, ndim)) + list(range(k))


def _paren_axes(ndim, k):
    return [k] + list(range(k)) + list(range(k + 1, ndim))


def unfold_bracket(x, k):
    """Cyclic mode-``k`` unfolding ``X_[k]``.

    Rows are indexed by ``i_k``; columns by ``(i_{k+1}, ..., i_{N-1}, i_0,
    ..., i_{k-1})`` linearized first-index-fastest.
    """
    x = np.asarray(x)
    _check_mode(x.ndim, k)
    return np.transpose(x, _bracket_axes(x.ndim, k)).reshape(x.shape[k], -1, order="F")


def fold_bracket(mat, k, shape):
    """Inverse of :func:`unfold_bracket`."""
    shape = tuple(shape)
    _check_mode(len(shape), k)
    axes = _bracket_axes(len(shape), k)
    t = np.reshape(mat, [shape[a] for a in axes], order="F")
    return np.transpose(t, np.argsort(axes))


def unfold_paren(x, k):
    """Classical mode-``k`` unfolding ``X_(k)``: remaining modes in natural order."""
    x = np.asarray(x)
    _check_mode(x.ndim, k)
    return np.transpose(x, _paren_axes(x.ndim, k)).reshape(x.shape[k], -1, order="F")


def fold_paren(mat, k, shape):
    """Inverse of :func:`unfold_paren`."""
    shape = tuple(shape)
    _check_mode(len(shape), k)
    axes = _paren_axes(len(shape), k)
    t = np.reshape(mat, [shape[a] for a in axes], order="F")
    return np.transpose(t, np.argsort(axes))


def _chain(cores, order, counter=None):
    """Contract ``cores[order[0]] ... cores[order[-1]]`` along their bonds.

    Returns an array of shape ``(r_first, I_a, I_b, ..., r_last)``.
    """
    out = cores[order[0]]
    for j in order[1:]:
        _count_matmul(counter, out, cores[j])
        out = np.tensordot(out, cores[j], axes=(-1, 0))
    return out


def tr_reconstruct(cores, counter=None):
    """Full tensor with entries ``Tr(Z_0[:, i_0, :] @ ... @ Z_{N-1}[:, i_{N-1}, :])``."""
    cores = check_cores(cores)
    chain = _chain(cores, list(range(len(cores))), counter)
    return np.trace(chain, axis1=0, axis2=-1)


def subchain_merge(cores, k, counter=None):
    """Merge every core except ``k`` into one 3-way tensor.

    The result has shape ``(r_{k+1}, prod_{j != k} I_j, r_k)``; the middle
    index runs over ``(i_{k+1}, ..., i_{N-1}, i_0, ..., i_{k-1})``
    first-index-fastest, matching the columns of :func:`unfold_bracket`.
    """
    cores = check_cores(cores)
    n = len(cores)
    _check_mode(n, k)
    if n == 1:
        r = cores[0].shape[0]
        return np.eye(r)[:, None, :]
    order = [(k + 1 + j) % n for j in range(n - 1)]
    chain = _chain(cores, order, counter)
    return chain.reshape(chain.shape[0], -1, chain.shape[-1], order="F")


def subchain_matrix(cores, k, counter=None):
    """``U_k``: the mode-2 cyclic unfolding of the subchain excluding core ``k``.

    Shape ``(prod_{j != k} I_j, r_k * r_{k+1})`` so that
    ``unfold_bracket(X, k) == unfold_paren(Z_k, 1) @ U_k.T``.
    """
    return unfold_bracket(subchain_merge(cores, k, counter), 1)


def core_matrix(core):
    """``Z_(2)``: lateral-slice matrix of a core, shape ``(I_k, r_k * r_{k+1})``."""
    return unfold_paren(core, 1)


def core_from_matrix(mat, r_left, r_right):
    return fold_paren(mat, 1, (r_left, mat.shape[0], r_right))


def frobenius(a):
    return float(np.linalg.norm(np.ravel(a)))


def hadamard(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def masked_frobenius(m: MaskedTensor):
    return frobenius(m.values[m.mask])


def random_cores(shape, ranks, rng=None, scale=1.0):
    """I.i.d. Gaussian cores for the given extents and ring ranks."""
    rng = np.random.default_rng(rng)
    n = len(shape)
    if np.isscalar(ranks):
        ranks = [int(ranks)] * n
    if len(ranks) != n:
        raise ValueError("need one rank per mode")
    return [
        scale * rng.standard_normal((ranks[k], shape[k], ranks[(k + 1) % n]))
        for k in range(n)
    ]
