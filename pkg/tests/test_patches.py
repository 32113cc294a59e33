import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trcomplete.patches import (
    Frame,
    PaddedFrame,
    PatchDescriptor,
    aggregate,
    coord_map,
    coord_map_inv,
    coverage_count,
    dilate,
    ecpm_match,
    extract_patch_tensor,
    overlap_degree,
    pad_mirror,
    patch_distance,
    subframes,
)
from trcomplete.synthetic import shifted_pair, texture
from trcomplete.tensor import MaskedTensor


def full(values):
    values = np.asarray(values, dtype=float)
    return Frame(values, np.ones(values.shape, bool))


def exhaustive_match(ref, prev, nxt, k, l):
    """Full-resolution windowed search by explicit loops."""
    m = ref.size
    h, w, _ = nxt.shape
    r_ref = MaskedTensor(prev.values[ref.slices()], prev.mask[ref.slices()])
    found = []
    start_r, start_c = ref.row - l // 2, ref.col - l // 2
    for r in range(max(start_r, 0), min(start_r + l, h - m + 1)):
        for c in range(max(start_c, 0), min(start_c + l, w - m + 1)):
            d = PatchDescriptor(r, c, m)
            cand = MaskedTensor(nxt.values[d.slices()], nxt.mask[d.slices()])
            found.append((patch_distance(r_ref, cand), r, c))
    found.sort()
    return found[:k], len(found)


class TestPadding:
    def test_zero_border(self):
        f = full(np.random.default_rng(0).random((5, 4, 2)))
        p = pad_mirror(f, 0)
        np.testing.assert_array_equal(p.values, f.values)
        assert p.pad == ((0, 0), (0, 0))

    def test_edge_duplication(self):
        p = pad_mirror(full(np.array([[1.0, 2.0, 3.0]])), 2)
        np.testing.assert_array_equal(p.values[2, :, 0], [2, 1, 1, 2, 3, 3, 2])

    def test_grows_to_multiple_of_interval(self):
        p = pad_mirror(full(np.zeros((4, 4))), 2, 3)
        assert p.pad == ((4, 4), (4, 4))
        assert p.shape[:2] == (12, 12)

    def test_mask_reflected(self):
        mask = np.zeros((3, 3), bool)
        mask[0, 0] = True
        p = pad_mirror(Frame(np.ones((3, 3)), mask), 1)
        assert p.mask[0, 0, 0] and p.mask[1, 1, 0] and p.mask[0, 1, 0]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 6), st.integers(1, 4))
    def test_divisible_and_croppable(self, h, w, b, s):
        f = full(np.random.default_rng(h * w).random((h, w)))
        p = pad_mirror(f, b, s)
        assert p.shape[0] % s == 0 and p.shape[1] % s == 0
        assert min(min(x) for x in p.pad) >= b
        np.testing.assert_array_equal(p.crop(p.values), f.values)


class TestDilation:
    def _padded(self, values, mask):
        return PaddedFrame(values, mask)

    def test_all_missing(self):
        d = dilate(self._padded(np.zeros((4, 4)), np.zeros((4, 4), bool)))
        assert not d.mask.any()

    def test_single_pixel(self):
        mask = np.zeros((5, 5), bool)
        mask[2, 2] = True
        vals = np.zeros((5, 5))
        vals[2, 2] = 0.7
        d = dilate(self._padded(vals, mask))
        expect = np.zeros((5, 5), bool)
        expect[1:4, 1:4] = True
        np.testing.assert_array_equal(d.mask[..., 0], expect)
        assert np.all(d.values[1:4, 1:4] == 0.7)

    def test_max_of_neighbours(self):
        mask = np.zeros((3, 3), bool)
        mask[0, 0] = mask[0, 1] = True
        vals = np.zeros((3, 3))
        vals[0, 0], vals[0, 1] = 0.2, 0.8
        d = dilate(self._padded(vals, mask))
        assert d.values[0, 0, 0] == 0.8


class TestCoordinates:
    def test_examples(self):
        assert coord_map(1, 1, 3) == (1, 1, 1)
        assert coord_map(2, 3, 3) == (1, 1, 8)
        assert coord_map_inv(1, 1, 8, 3) == (2, 3)
        assert coord_map(4, 7, 3) == (2, 3, 1)
        assert coord_map_inv(2, 3, 1, 3) == (4, 7)

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_subframes_agree_with_map(self, s):
        vals = np.random.default_rng(s).random((6 * s, 4 * s))
        subs = subframes(full(vals), s)
        for x in range(1, vals.shape[0] + 1):
            for y in range(1, vals.shape[1] + 1):
                xd, yd, c = coord_map(x, y, s)
                assert subs[c - 1][0][xd - 1, yd - 1, 0] == vals[x - 1, y - 1]


class TestDistance:
    def test_identical(self):
        a = MaskedTensor(np.ones((2, 2)), np.ones((2, 2)))
        assert patch_distance(a, a) == 0.0

    def test_disjoint(self):
        a = MaskedTensor(np.ones((2, 2)), np.array([[1, 0], [0, 0]]))
        b = MaskedTensor(np.ones((2, 2)), np.array([[0, 1], [1, 1]]))
        assert patch_distance(a, b) == math.inf

    def test_hand_value(self):
        a = MaskedTensor(np.array([[1.0, 2], [3, 4]]), np.ones((2, 2)))
        b = MaskedTensor(np.array([[1.0, 0], [3, 8]]), np.array([[1, 0], [1, 1]]))
        assert patch_distance(a, b) == pytest.approx(16 / 3)


class TestEcpm:
    def test_self_match(self):
        f = full(texture(30, 30, 3, 0))
        ref = PatchDescriptor(9, 12, 6)
        res = ecpm_match(ref, f, f, 5, 11, 3)
        assert res.descriptors[0] == ref
        assert res.distances[0] == 0.0

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_shift_recovered(self, s):
        prev, nxt = shifted_pair(48, 48, 3, s, rng=5)
        ref = PatchDescriptor(18, 18, 12)
        oracle, _ = exhaustive_match(ref, full(prev), full(nxt), 1, 21)
        assert (oracle[0][1], oracle[0][2]) == (18, 18 + s)
        res = ecpm_match(ref, full(prev), full(nxt), 3, 21, s)
        assert res.descriptors[0] == PatchDescriptor(18, 18 + s, 12)
        pd, nd = dilate(pad_mirror(full(prev), 0, s)), dilate(pad_mirror(full(nxt), 0, s))
        assert ecpm_match(ref, pd, nd, 3, 21, s).descriptors[0] == PatchDescriptor(18, 18 + s, 12)

    @pytest.mark.parametrize("seed", range(3))
    def test_unit_interval_equals_exhaustive(self, seed):
        rng = np.random.default_rng(seed)
        prev = Frame(rng.random((24, 24, 2)), rng.random((24, 24, 2)) < 0.6)
        nxt = Frame(rng.random((24, 24, 2)), rng.random((24, 24, 2)) < 0.6)
        ref = PatchDescriptor(int(rng.integers(0, 19)), int(rng.integers(0, 19)), 5)
        oracle, n = exhaustive_match(ref, prev, nxt, 10, 9)
        res = ecpm_match(ref, prev, nxt, 10, 9, 1)
        assert [(d.row, d.col) for d in res.descriptors] == [(r, c) for _, r, c in oracle]
        np.testing.assert_allclose(res.distances, [d for d, _, _ in oracle], rtol=1e-12)
        assert res.n_candidates == n

    def test_fewer_than_k(self):
        f = full(np.random.default_rng(0).random((6, 6)))
        res = ecpm_match(PatchDescriptor(0, 0, 5), f, f, 10, 3, 1)
        assert len(res.descriptors) == 4

    def test_include_ref_first(self):
        f = full(np.ones((12, 12)))
        ref = PatchDescriptor(3, 3, 4)
        res = ecpm_match(ref, f, f, 4, 5, 1, include_ref=True)
        assert res.descriptors[0] == ref
        assert len(set(res.descriptors)) == 4

    def test_indivisible_frame(self):
        f = full(np.zeros((10, 10)))
        with pytest.raises(ValueError):
            ecpm_match(PatchDescriptor(0, 0, 3), f, f, 1, 3, 3)


class TestAggregation:
    def test_single_patch(self):
        block = np.random.default_rng(0).random((4, 4, 1))
        out = aggregate([(PatchDescriptor(0, 0, 4), block)], (4, 4, 1))
        np.testing.assert_array_equal(out.values, block)
        assert out.mask.all()

    def test_average(self):
        a = (PatchDescriptor(0, 0, 2), np.full((2, 2, 1), 0.2))
        b = (PatchDescriptor(1, 1, 2), np.full((2, 2, 1), 0.6))
        out = aggregate([a, b], (3, 3, 1))
        assert out.values[1, 1, 0] == pytest.approx(0.4)
        assert not out.mask[0, 2, 0]

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([], (3, 3, 1))

    def test_overlap_degree(self):
        d = PatchDescriptor(0, 0, 4)
        assert overlap_degree(d, []) == 0
        assert overlap_degree(d, [d, PatchDescriptor(0, 0, 4)]) == 1
        assert overlap_degree(d, [PatchDescriptor(2, 2, 4)]) == 0

    def test_coverage_count(self):
        cnt = coverage_count([PatchDescriptor(0, 0, 2), PatchDescriptor(1, 1, 2)], (3, 3))
        np.testing.assert_array_equal(cnt, [[1, 1, 0], [1, 2, 1], [0, 1, 1]])


class TestExtraction:
    def test_repeats_first(self):
        f = full(np.arange(36.0).reshape(6, 6))
        pt = extract_patch_tensor(f, [PatchDescriptor(1, 2, 3)], 3)
        assert pt.tensor.shape == (3, 3, 1, 3)
        np.testing.assert_array_equal(pt.tensor.values[..., 2], f.values[1:4, 2:5])

    def test_out_of_bounds(self):
        with pytest.raises(ValueError):
            extract_patch_tensor(full(np.zeros((4, 4))), [PatchDescriptor(2, 2, 3)])

    def test_empty(self):
        with pytest.raises(ValueError):
            extract_patch_tensor(full(np.zeros((4, 4))), [])
