"""Batch tensor-ring completion by scaled steepest descent (TRSSD)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import NoObservationsError, NumericalError
from .tensor import (
    MaskedTensor,
    check_cores,
    core_from_matrix,
    core_matrix,
    frobenius,
    subchain_matrix,
    tr_reconstruct,
    unfold_bracket,
)


@dataclass(frozen=True)
class RankHeuristicParams:
    C1: float = 1000.0
    C2: float = 6.0
    r_o: int = 4
    r_min: int = 1
    r_max: int | None = None

    def __post_init__(self):
        if self.C1 <= 0 or self.C2 <= 0:
            raise ValueError("C1 and C2 must be positive")
        if self.r_o < 0 or self.r_min < 1:
            raise ValueError("r_o must be >= 0 and r_min >= 1")
        if self.r_max is not None and self.r_max < self.r_min:
            raise ValueError("r_max must be >= r_min")


@dataclass(frozen=True)
class BatchStopCriteria:
    max_iter: int = 10
    tol: float = 1e-2

    def __post_init__(self):
        if self.max_iter < 1 or self.tol <= 0:
            raise ValueError("max_iter must be >= 1 and tol > 0")


@dataclass(frozen=True)
class SsdParams:
    eps: float = 1e-10

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")


def default_max_rank(shape):
    """Largest equal TR rank ``r`` with ``r**2 <= prod_{j != k} I_j`` for every mode.

    Keeps every ``U_k`` at least as tall as it is wide. Singleton modes (a
    grayscale channel axis) do not bound the rank.
    """
    total = math.prod(shape)
    return max(1, min(math.isqrt(total // ext) for ext in shape))


def estimate_rank(m: MaskedTensor, params: RankHeuristicParams = RankHeuristicParams()):
    """Adaptive TR rank from the observation ratio and the observed variance.

    ``r = min(ceil(C1 * sqrt(p) * var), floor(C2 * sqrt(p)) + r_o)``, then
    clamped to ``[r_min, r_max]``. Values are expected on a [0, 1] scale.
    """
    if m.n_observed == 0:
        raise NoObservationsError("cannot estimate a rank without observed entries")
    p = m.observed_ratio
    var = float(np.var(m.observed()))
    sp = math.sqrt(p)
    # round before ceil/floor so 4.0000000001 from float noise stays 4
    r = min(math.ceil(round(params.C1 * sp * var, 9)),
            math.floor(round(params.C2 * sp, 9)) + params.r_o)
    r_max = params.r_max if params.r_max is not None else default_max_rank(m.shape)
    return int(min(max(r, params.r_min), max(r_max, params.r_min)))


def masked_loss(m: MaskedTensor, cores):
    """Squared Frobenius misfit on the observed entries."""
    resid = np.where(m.mask, m.values - tr_reconstruct(cores), 0.0)
    return float(np.sum(resid**2))


def _spd_solve(gram, rhs, counter=None):
    # rhs @ inv(gram) with gram symmetric positive definite
    if counter is not None:
        n = gram.shape[0]
        counter.add(n**3 // 3 + rhs.shape[0] * n * n)
    try:
        c = scipy.linalg.cho_factor(gram, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("scaling matrix is not positive definite") from exc
    return scipy.linalg.cho_solve(c, rhs.T, check_finite=False).T


def mode_gradient(m: MaskedTensor, cores, k, counter=None):
    """Return ``(grad, U_k, Z_k(2), P_[k], R_[k])`` for core ``k``.

    ``grad = -(P_[k] * (M_[k] - Z_k(2) U_k^T)) U_k`` is the gradient of half
    the observed squared error with respect to ``Z_k(2)``.
    """
    u = subchain_matrix(cores, k, counter)
    zk = core_matrix(cores[k])
    pk = unfold_bracket(m.mask, k)
    mk = unfold_bracket(m.values, k)
    if counter is not None:
        counter.matmul(zk.shape, u.T.shape)
    resid = np.where(pk, mk - zk @ u.T, 0.0)
    if counter is not None:
        counter.matmul(resid.shape, u.shape)
    grad = -(resid @ u)
    return grad, u, zk, pk, resid


def scaled_direction(grad, u, eps=1e-10, counter=None):
    """``grad (U^T U + eps I)^{-1}`` via a Cholesky solve."""
    if counter is not None:
        counter.add(u.shape[0] * u.shape[1] ** 2)
    gram = u.T @ u
    gram[np.diag_indices_from(gram)] += eps
    return _spd_solve(gram, grad, counter)


def ssd_direction(m: MaskedTensor, cores, k, params: SsdParams = SsdParams(), counter=None):
    """Scaled descent direction and exact line-search step for core ``k``.

    Returns ``(g, mu)`` such that the update is ``Z_k(2) - mu * g``, with
    ``mu = <grad, g> / ||P * (g U_k^T)||^2`` minimizing the observed loss
    along the direction. ``(None, 0.0)`` when the gradient vanishes.
    """
    grad, u, _, pk, _ = mode_gradient(m, cores, k, counter)
    if not np.any(grad):
        return None, 0.0
    g = scaled_direction(grad, u, params.eps, counter)
    if counter is not None:
        counter.matmul(g.shape, u.T.shape)
    gu = np.where(pk, g @ u.T, 0.0)
    denom = float(np.sum(gu**2))
    num = float(np.sum(grad * g))
    if denom == 0.0 or num == 0.0:
        return None, 0.0
    mu = num / denom
    if not np.isfinite(mu):
        raise NumericalError("non-finite step size")
    return g, mu


def ssd_core_step(m: MaskedTensor, cores, k, params: SsdParams = SsdParams(), counter=None):
    """One scaled-steepest-descent update of core ``k`` with exact line search.

    When the gradient vanishes the cores are returned unchanged. Returns a
    new list of cores.
    """
    cores = check_cores(cores)
    g, mu = ssd_direction(m, cores, k, params, counter)
    out = list(cores)
    if g is None:
        return out
    r_left, _, r_right = cores[k].shape
    out[k] = core_from_matrix(core_matrix(cores[k]) - mu * g, r_left, r_right)
    return out


def init_cores(m: MaskedTensor, rank, rng):
    """Random cores whose initial reconstruction matches the data's magnitude.

    Nonnegative data (images) get half-normal cores scaled so the expected
    reconstruction equals the observed mean: every entry of the initial
    estimate then has the right sign, which keeps low ranks from stalling
    in sign-flipped configurations. Signed data get zero-mean Gaussian
    cores with per-entry std ``(rms / rank**(N/2))**(1/N)``, since an entry
    sums ``rank**N`` products of ``N`` core entries.
    """
    shape = m.shape
    n = len(shape)
    obs = m.observed()
    draws = [rng.standard_normal((rank, shape[k], rank)) for k in range(n)]
    if obs.size and np.all(obs >= 0) and obs.mean() > 0:
        scale = (float(obs.mean()) / (rank**n * (2 / math.pi) ** (n / 2))) ** (1.0 / n)
        return [scale * np.abs(d) for d in draws]
    rms = float(np.sqrt(np.mean(obs**2))) if obs.size else 0.0
    std = (rms / rank ** (n / 2)) ** (1.0 / n) if rms > 0 else 0.0
    return [std * d for d in draws]


def trssd_sweeps(m: MaskedTensor, cores, stop: BatchStopCriteria = BatchStopCriteria(),
                 params: SsdParams = SsdParams(), counter=None, modes=None):
    """Run SSD sweeps over ``modes`` (all by default) until the stop rule fires.

    Stops after ``stop.max_iter`` sweeps or once the relative change of the
    reconstruction between sweeps drops below ``stop.tol``. Returns
    ``(cores, reconstruction, n_sweeps)``.
    """
    cores = check_cores(cores)
    modes = range(len(cores)) if modes is None else modes
    x_prev = tr_reconstruct(cores, counter)
    sweeps = 0
    while True:
        for k in modes:
            cores = ssd_core_step(m, cores, k, params, counter)
        sweeps += 1
        x = tr_reconstruct(cores, counter)
        prev_norm = frobenius(x_prev)
        change = frobenius(x - x_prev) / prev_norm if prev_norm > 0 else np.inf
        x_prev = x
        if sweeps >= stop.max_iter or change < stop.tol:
            break
    return cores, x_prev, sweeps


def trssd_complete(m: MaskedTensor, rank, stop: BatchStopCriteria = BatchStopCriteria(),
                   seed=None, params: SsdParams = SsdParams(), counter=None):
    """Complete ``m`` with an equal-rank TR model fitted by SSD sweeps.

    Returns ``(cores, reconstruction)``.
    """
    if m.n_observed == 0:
        raise NoObservationsError("cannot complete a tensor without observed entries")
    if not np.all(np.isfinite(m.observed())):
        raise ValueError("observed values must be finite")
    rank = int(rank)
    if rank < 1:
        raise ValueError("rank must be >= 1")
    rng = np.random.default_rng(seed)
    cores = init_cores(m, rank, rng)
    cores, x, _ = trssd_sweeps(m, cores, stop, params, counter)
    return cores, x
