import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dict_signature, dict_to_array, random_walk, streams
from sigstream.distribution import fit_linear, predict
from sigstream.signature import (
    chen_concat,
    concatenate,
    coordinate,
    level_norms,
    log_signature,
    one_variation,
    psf_features,
    signature,
    signature_path,
)
from sigstream.streams import Stream
from sigstream.tensor_algebra import DimensionError, TruncatedTensor, shuffle, tensor_exp, tensor_mul

ROUTE_A = [1, 1, 1, 0.5, 1, 0, 0.5, 1 / 6, 0.5, 0, 0.5, 0, 0, 0, 1 / 6]
ROUTE_B = [1, 1, 1, 0.5, 0, 1, 0.5, 1 / 6, 0, 0, 0, 0.5, 0, 0.5, 1 / 6]
AFFINE = [1, 3, 1, 4.5, 1.5, 1.5, 0.5, 4.5, 1.5, 1.5, 0.5, 1.5, 0.5, 0.5, 1 / 6]


def close(a, b, rel=1e-10):
    scale = max(1.0, np.abs(b).max())
    np.testing.assert_allclose(a, b, rtol=rel, atol=rel * scale)


class TestGoldens:
    def test_affine_path(self):
        s = signature(Stream([[2, -2], [5, -1]]), 3)
        close(s.coefficients, AFFINE, 1e-12)

    def test_routes(self):
        a = signature(Stream([[0, 0], [1, 0], [1, 1]]), 3)
        b = signature(Stream([[0, 0], [0, 1], [1, 1]]), 3)
        close(a.coefficients, ROUTE_A, 1e-12)
        close(b.coefficients, ROUTE_B, 1e-12)
        assert a[(1, 1, 2)] == pytest.approx(0.5) and b[(1, 1, 2)] == pytest.approx(0.0, abs=1e-15)

    def test_single_point_is_unit(self):
        assert signature(Stream([[2.0, 5.0]]), 3).coefficients.tolist() == [1] + [0] * 14

    def test_depth_zero(self):
        assert signature(Stream([[0.0], [1.0]]), 0).coefficients.tolist() == [1.0]

    def test_coordinate_word_too_long(self):
        with pytest.raises(IndexError):
            coordinate(signature(Stream([[0.0], [1.0]]), 2), (1, 1, 1))

    @settings(max_examples=40, deadline=None)
    @given(streams(max_len=6, max_d=3), st.integers(0, 4))
    def test_matches_dict_oracle(self, pts, depth):
        expected = dict_to_array(dict_signature(pts, depth), pts.shape[1], depth)
        close(signature(Stream(pts), depth).coefficients, expected, 1e-11)

    def test_long_stream_spans_blocks(self, rng):
        pts = random_walk(rng, 2500, 2, 0.02)
        whole = signature(Stream(pts), 3)
        halves = chen_concat(signature(Stream(pts[:1300]), 3), signature(Stream(pts[1299:]), 3))
        close(whole.coefficients, halves.coefficients, 1e-11)

    def test_single_segment_is_exponential(self):
        v = np.array([0.4, -1.2, 0.9])
        close(signature(Stream([np.zeros(3), v]), 4).coefficients,
              tensor_exp(TruncatedTensor.from_vector(v, 4)).coefficients, 1e-14)

    def test_signature_path_rows(self, rng):
        pts = rng.normal(size=(7, 2))
        path = signature_path(Stream(pts), 3)
        for j in range(7):
            close(path[j], signature(Stream(pts[: j + 1]), 3).coefficients, 1e-12)


class TestChen:
    @settings(max_examples=50, deadline=None)
    @given(streams(min_len=2, max_len=12, max_d=3), st.integers(0, 11), st.integers(1, 4))
    def test_split_identity(self, pts, cut, depth):
        cut = cut % (len(pts) - 1) + 1
        whole = signature(Stream(pts), depth)
        joined = chen_concat(signature(Stream(pts[: cut + 1]), depth), signature(Stream(pts[cut:]), depth))
        close(joined.coefficients, whole.coefficients, 1e-11)

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            chen_concat(signature(Stream([[0.0], [1.0]]), 2), signature(Stream([[0.0], [1.0]]), 3))

    def test_reversal_is_inverse(self, rng):
        x = Stream(rng.normal(size=(6, 3)))
        prod = tensor_mul(signature(x, 4).tensor, signature(x.reversed(), 4).tensor)
        close(prod.coefficients, np.eye(1, prod.coefficients.size)[0], 1e-11)

    def test_concatenate_paths(self, rng):
        x, y = Stream(rng.normal(size=(4, 2))), Stream(rng.normal(size=(5, 2)))
        lhs = signature(concatenate(x, y), 3)
        close(lhs.coefficients, chen_concat(signature(x, 3), signature(y, 3)).coefficients, 1e-12)


class TestInvariances:
    @settings(max_examples=40, deadline=None)
    @given(streams(min_len=2, max_len=8, max_d=3), st.integers(0, 7), st.floats(0.05, 0.95))
    def test_collinear_insertion(self, pts, seg, frac):
        j = seg % (len(pts) - 1)
        new = np.insert(pts, j + 1, pts[j] + frac * (pts[j + 1] - pts[j]), axis=0)
        close(signature(Stream(new), 4).coefficients, signature(Stream(pts), 4).coefficients, 1e-10)

    @settings(max_examples=40, deadline=None)
    @given(streams(min_len=1, max_len=8, max_d=3), st.integers(0, 7))
    def test_tree_like_excursion(self, pts, at):
        j = at % len(pts)
        d = pts.shape[1]
        excursion = pts[j] + np.linspace(0.3, -0.7, d)
        new = np.insert(pts, j + 1, [excursion, pts[j]], axis=0)
        close(signature(Stream(new), 4).coefficients, signature(Stream(pts), 4).coefficients, 1e-10)

    @settings(max_examples=40, deadline=None)
    @given(streams(max_len=8, max_d=3), st.floats(-5, 5))
    def test_translation(self, pts, c):
        close(signature(Stream(pts + c), 4).coefficients, signature(Stream(pts), 4).coefficients, 1e-10)

    def test_not_invariant_to_order(self):
        a = signature(Stream([[0, 0], [1, 0], [1, 1]]), 2)
        b = signature(Stream([[0, 0], [0, 1], [1, 1]]), 2)
        assert not np.allclose(a.coefficients, b.coefficients)


class TestFactorialDecay:
    @settings(max_examples=40, deadline=None)
    @given(streams(min_len=2, max_len=10, max_d=3))
    def test_bound(self, pts):
        L = one_variation(Stream(pts))
        norms = level_norms(signature(Stream(pts), 6))
        for n, val in enumerate(norms):
            assert val <= L**n / math.factorial(n) + 1e-12 * max(1.0, L**n)

    def test_straight_line_attains_bound(self):
        v = np.array([3.0, 4.0])
        norms = level_norms(signature(Stream([np.zeros(2), v]), 5))
        np.testing.assert_allclose(norms, [5.0**n / math.factorial(n) for n in range(6)], rtol=1e-13)


class TestShuffleIdentity:
    @settings(max_examples=40, deadline=None)
    @given(streams(min_len=2, max_len=6, d=2),
           st.lists(st.integers(1, 2), min_size=1, max_size=3),
           st.lists(st.integers(1, 2), min_size=1, max_size=2))
    def test_product_of_coordinates(self, pts, k, l):
        sig = signature(Stream(pts), len(k) + len(l))
        lhs = sig[tuple(k)] * sig[tuple(l)]
        rhs = sum(m * sig[w] for w, m in shuffle(tuple(k), tuple(l)).items())
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


class TestLogSignature:
    def test_l_path(self):
        close(log_signature(Stream([[0, 0], [1, 0], [1, 1]]), 2).coefficients, [0, 1, 1, 0, 0.5, -0.5, 0], 1e-15)

    def test_straight_line_has_only_level_one(self, rng):
        v = rng.normal(size=3)
        log = log_signature(Stream([np.zeros(3), v]), 4)
        close(log.level(1), v, 1e-14)
        assert np.abs(log.coefficients[4:]).max() < 1e-14

    @settings(max_examples=40, deadline=None)
    @given(streams(min_len=2, max_len=6, max_d=3))
    def test_roundtrip(self, pts):
        sig = signature(Stream(pts), 3)
        close(tensor_exp(log_signature(Stream(pts), 3)).coefficients, sig.coefficients, 1e-11)

    def test_symmetric_part_of_level_two_vanishes(self, rng):
        log = log_signature(Stream(rng.normal(size=(6, 3))), 2)
        area = log.level(2).reshape(3, 3)
        np.testing.assert_allclose(area, -area.T, atol=1e-13)


class TestPsf:
    def test_dyadic_layout_count(self, rng):
        landmarks = [Stream(rng.normal(size=(9, 1)), np.linspace(0, 1, 9)) for _ in range(3)]
        feats = psf_features(landmarks, 3, 2, 2)
        assert feats.shape == (1, 11, 13)
        assert feats.values.size == 143

    def test_one_dimensional_depth_two(self):
        feats = psf_features([Stream([0.0, 1.0, 3.0])], 1, 0, 2)
        np.testing.assert_allclose(feats.values, [1, 3, 4.5])

    def test_subset_order(self, rng):
        marks = [Stream(rng.normal(size=(5, 1))) for _ in range(3)]
        feats = psf_features(marks, 2, 0, 2)
        assert feats.subsets == ((0, 1), (0, 2), (1, 2))
        joined = Stream(np.hstack([marks[1].points, marks[2].points]))
        close(feats.as_array()[2, 0], signature(joined, 2).coefficients, 1e-13)


class TestUniversality:
    def test_linear_functional_recovered(self, rng):
        xs = [Stream(rng.normal(scale=0.5, size=(6, 2))) for _ in range(60)]
        feats = np.stack([signature(x, 3).coefficients for x in xs])
        true_w = rng.normal(size=feats.shape[1])
        y = feats @ true_w
        model = fit_linear(feats, y)
        assert np.abs(predict(model, feats) - y).max() < 1e-8

    def test_nonlinear_target_improves_with_depth(self, rng):
        xs = [Stream(np.cumsum(rng.normal(scale=0.3, size=(8, 2)), axis=0)) for _ in range(300)]
        ends = np.array([x.points[-1] - x.points[0] for x in xs])
        y = np.sin(ends[:, 0]) * ends[:, 1]
        errs = []
        for depth in (1, 3, 5):
            feats = np.stack([signature(x, depth).coefficients for x in xs])
            model = fit_linear(feats[:200], y[:200], reg=1e-8)
            errs.append(np.mean((predict(model, feats[200:]) - y[200:]) ** 2))
        assert errs[2] < errs[1] < errs[0]
