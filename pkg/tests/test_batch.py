import numpy as np
import pytest

from conftest import synthetic_tr
from trcomplete.batch import (
    BatchStopCriteria,
    RankHeuristicParams,
    SsdParams,
    default_max_rank,
    estimate_rank,
    masked_loss,
    mode_gradient,
    scaled_direction,
    ssd_core_step,
    ssd_direction,
    trssd_complete,
    trssd_sweeps,
)
from trcomplete.exceptions import NoObservationsError
from trcomplete.tensor import (
    MaskedTensor,
    core_from_matrix,
    core_matrix,
    random_cores,
    tr_reconstruct,
)


def _instance(seed, shape=(4, 3, 5), rank=2, p=0.6):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    m = MaskedTensor(x, rng.random(shape) < p)
    return m, random_cores(shape, rank, rng, scale=0.7)


def _with_core(cores, k, mat):
    out = list(cores)
    out[k] = core_from_matrix(mat, cores[k].shape[0], cores[k].shape[2])
    return out


def fd_gradient(m, cores, k, h=1e-6):
    """Central differences of half the observed loss w.r.t. the core matrix."""
    z = core_matrix(cores[k])
    grad = np.zeros_like(z)
    for idx in np.ndindex(z.shape):
        e = np.zeros_like(z)
        e[idx] = h
        plus = 0.5 * masked_loss(m, _with_core(cores, k, z + e))
        minus = 0.5 * masked_loss(m, _with_core(cores, k, z - e))
        grad[idx] = (plus - minus) / (2 * h)
    return grad


class TestRankEstimate:
    def _tensor(self, p, var, size=10000):
        # observed values with exactly the requested population variance
        n = int(round(p * size))
        vals = np.zeros(size)
        obs = np.r_[np.full(n // 2, 0.5 + np.sqrt(var)), np.full(n - n // 2, 0.5 - np.sqrt(var))]
        vals[:n] = obs
        mask = np.zeros(size, bool)
        mask[:n] = True
        return MaskedTensor(vals.reshape(100, 100), mask.reshape(100, 100))

    def test_hand_value(self):
        assert estimate_rank(self._tensor(0.2, 0.01)) == 5

    def test_constant_clamps_to_one(self):
        assert estimate_rank(self._tensor(0.2, 0.0)) == 1

    def test_full_unit_variance(self):
        assert estimate_rank(self._tensor(1.0, 1.0), RankHeuristicParams(r_max=50)) == 10

    def test_default_cap(self):
        assert estimate_rank(self._tensor(1.0, 1.0)) == default_max_rank((100, 100)) == 10
        assert default_max_rank((36, 36, 3, 30)) == 56

    def test_empty_mask(self):
        with pytest.raises(NoObservationsError):
            estimate_rank(MaskedTensor(np.ones((2, 2)), np.zeros((2, 2))))

    def test_bad_params(self):
        with pytest.raises(ValueError):
            RankHeuristicParams(C1=0)
        with pytest.raises(ValueError):
            RankHeuristicParams(r_min=3, r_max=2)


class TestGradient:
    @pytest.mark.parametrize("seed", range(5))
    def test_finite_differences(self, seed):
        m, cores = _instance(seed)
        for k in range(3):
            grad = mode_gradient(m, cores, k)[0]
            np.testing.assert_allclose(grad, fd_gradient(m, cores, k), atol=1e-6)

    def test_fully_observed(self):
        m, cores = _instance(9, p=1.1)
        grad = mode_gradient(m, cores, 1)[0]
        np.testing.assert_allclose(grad, fd_gradient(m, cores, 1), atol=1e-6)

    def test_exact_fit_leaves_cores(self):
        cores = random_cores((3, 4, 2), 2, 1)
        m = MaskedTensor(tr_reconstruct(cores), np.random.default_rng(0).random((3, 4, 2)) < 0.7)
        out = ssd_core_step(m, cores, 0)
        np.testing.assert_allclose(out[0], cores[0], atol=1e-12)

    def test_zero_gradient_is_noop(self):
        cores = random_cores((3, 4, 2), 2, 1)
        m = MaskedTensor(tr_reconstruct(cores), np.ones((3, 4, 2)))
        m0 = MaskedTensor(np.zeros((3, 4, 2)), np.zeros((3, 4, 2)))
        out = ssd_core_step(m0, cores, 1)
        assert all(np.array_equal(a, b) for a, b in zip(out, cores))
        assert m.n_observed == 24


class TestScaling:
    def test_orthonormal_u_is_identity(self):
        rng = np.random.default_rng(0)
        u, _ = np.linalg.qr(rng.standard_normal((20, 4)))
        grad = rng.standard_normal((5, 4))
        np.testing.assert_allclose(scaled_direction(grad, u, eps=1e-14), grad, atol=1e-10)

    def test_solves_gram_system(self):
        rng = np.random.default_rng(1)
        u = rng.standard_normal((30, 6))
        grad = rng.standard_normal((4, 6))
        g = scaled_direction(grad, u, eps=1e-3)
        np.testing.assert_allclose(g @ (u.T @ u + 1e-3 * np.eye(6)), grad, atol=1e-10)


class TestLineSearch:
    @pytest.mark.parametrize("seed", range(5))
    def test_step_minimizes_along_direction(self, seed):
        m, cores = _instance(seed + 100)
        k = seed % 3
        g, mu = ssd_direction(m, cores, k)
        assert mu > 0
        z = core_matrix(cores[k])
        grid = np.linspace(0, 2 * mu, 1001)
        losses = [masked_loss(m, _with_core(cores, k, z - t * g)) for t in grid]
        at_mu = masked_loss(m, ssd_core_step(m, cores, k))
        assert at_mu <= min(losses) + 1e-10

    def test_sweeps_monotone(self):
        m, cores = _instance(3, shape=(5, 5, 5), rank=3)
        losses = [masked_loss(m, cores)]
        for _ in range(5):
            for k in range(3):
                cores = ssd_core_step(m, cores, k)
                losses.append(masked_loss(m, cores))
        assert all(b <= a + 1e-10 for a, b in zip(losses, losses[1:]))


class TestTrssd:
    def test_fully_observed_recovery(self):
        x, _ = synthetic_tr((8, 8, 8), 2, 1.0, 0)
        m = MaskedTensor(x, np.ones(x.shape))
        _, rec = trssd_complete(m, 2, BatchStopCriteria(max_iter=50, tol=1e-12), seed=0)
        assert np.linalg.norm(rec - x) / np.linalg.norm(x) < 1e-2

    def test_partial_recovery(self):
        errs = []
        for seed in range(5):
            x, m = synthetic_tr((8, 8, 8), 2, 0.5, seed)
            _, rec = trssd_complete(m, 2, seed=seed)
            held = ~m.mask
            errs.append(np.linalg.norm((rec - x)[held]) / np.linalg.norm(x[held]))
        assert np.median(errs) < 5e-2

    def test_constant_tensor(self):
        rng = np.random.default_rng(4)
        mask = rng.random((6, 6, 6)) < 0.1
        i, j = np.meshgrid(range(6), range(6), indexing="ij")
        mask[i, j, (i + j) % 6] = True  # one observation in every fiber
        for ax in range(3):
            assert np.all(mask.any(axis=ax))
        m = MaskedTensor(np.full((6, 6, 6), 5.0), mask)
        _, rec = trssd_complete(m, 1, BatchStopCriteria(max_iter=50, tol=1e-9), seed=0)
        assert np.max(np.abs(rec - 5.0)) < 1e-3

    def test_deterministic(self):
        _, m = synthetic_tr((5, 6, 4), 2, 0.5, 1)
        a = trssd_complete(m, 3, seed=11)[1]
        b = trssd_complete(m, 3, seed=11)[1]
        assert np.array_equal(a, b)

    def test_stop_after_max_iter(self):
        _, m = synthetic_tr((5, 5, 5), 2, 0.5, 2)
        cores = random_cores((5, 5, 5), 2, 0)
        _, _, sweeps = trssd_sweeps(m, cores, BatchStopCriteria(max_iter=3, tol=1e-300))
        assert sweeps == 3

    def test_stop_on_tolerance(self):
        cores = random_cores((4, 4, 4), 2, 0)
        m = MaskedTensor(tr_reconstruct(cores), np.ones((4, 4, 4)))
        _, _, sweeps = trssd_sweeps(m, cores, BatchStopCriteria(max_iter=10, tol=1e-2))
        assert sweeps == 1

    def test_no_observations(self):
        with pytest.raises(NoObservationsError):
            trssd_complete(MaskedTensor(np.ones((2, 2, 2)), np.zeros((2, 2, 2))), 1)

    def test_bad_rank(self):
        _, m = synthetic_tr((3, 3, 3), 1, 0.5, 0)
        with pytest.raises(ValueError):
            trssd_complete(m, 0)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            BatchStopCriteria(max_iter=0)
        with pytest.raises(ValueError):
            SsdParams(eps=0)
