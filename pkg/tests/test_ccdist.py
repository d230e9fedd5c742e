import math

import numpy as np
import pytest

import dilatlab as dl
from dilatlab import ccdist
from dilatlab.errors import UnsupportedStep


class TestEndpoint:
    def test_single_segment(self, heisenberg):
        path = ccdist.HorizontalPath(np.array([[1.0, 0.0]]))
        assert ccdist.endpoint(heisenberg, path) == (1.0, 0.0, 0.0)

    def test_commutator_square(self, heisenberg):
        s = 0.5
        word = dl.GeneratorWord(((0, s), (1, s), (0, -s), (1, -s)))
        path = ccdist.controls_from_word(heisenberg, word, 4)
        end = ccdist.endpoint(heisenberg, path)
        assert end == pytest.approx((0.0, 0.0, s * s), abs=1e-15)

    def test_zero_controls(self, heisenberg):
        path = ccdist.HorizontalPath(np.zeros((8, 2)))
        assert ccdist.endpoint(heisenberg, path) == (0.0, 0.0, 0.0)

    def test_fast_path_matches_sequential_chain(self, heisenberg):
        rng = np.random.default_rng(33)
        controls = rng.uniform(-1, 1, (16, 2))
        fast = np.asarray(ccdist.endpoint_batch(heisenberg, controls))
        state = heisenberg.identity()
        h = 1.0 / 16
        for u in controls:
            state = heisenberg.bch(state, (h * u[0], h * u[1], 0.0))
        assert fast == pytest.approx(np.asarray(state), abs=1e-14)

    def test_generic_step3_chain(self, engel):
        rng = np.random.default_rng(34)
        controls = rng.uniform(-1, 1, (8, 2))
        got = np.asarray(ccdist.endpoint_batch(engel, controls))
        state = engel.identity()
        h = 1.0 / 8
        for u in controls:
            state = engel.bch(state, (h * u[0], h * u[1], 0.0, 0.0))
        assert got == pytest.approx(np.asarray(state), abs=1e-13)


class TestPathLength:
    def test_unit_segment(self, heisenberg):
        assert ccdist.path_length(ccdist.HorizontalPath(np.array([[1.0, 0.0]]))) == 1.0

    def test_commutator_square_length(self, heisenberg):
        s = 0.3
        word = dl.GeneratorWord(((0, s), (1, s), (0, -s), (1, -s)))
        path = ccdist.controls_from_word(heisenberg, word, 8)
        assert ccdist.path_length(path) == pytest.approx(4 * s, rel=1e-12)

    def test_zero_path(self):
        assert ccdist.path_length(ccdist.HorizontalPath(np.zeros((4, 2)))) == 0.0

    def test_scales_linearly(self, heisenberg):
        rng = np.random.default_rng(35)
        controls = rng.uniform(-1, 1, (8, 2))
        base = ccdist.path_length(ccdist.HorizontalPath(controls))
        assert ccdist.path_length(ccdist.HorizontalPath(3.0 * controls)) == \
            pytest.approx(3.0 * base, rel=1e-14)


class TestWordDecomposition:
    def test_central_element(self, heisenberg):
        word = ccdist.word_decomposition(heisenberg, (0.0, 0.0, 1.0))
        assert word.to_list() == [[0, 1.0], [1, 1.0], [0, -1.0], [1, -1.0]]
        assert ccdist.evaluate_word(heisenberg, word) == pytest.approx(
            (0.0, 0.0, 1.0), abs=1e-14)

    def test_horizontal_with_center_correction(self, heisenberg):
        word = ccdist.word_decomposition(heisenberg, (0.7, -0.3, 0.0))
        assert word.entries[0] == (0, 0.7)
        assert word.entries[1] == (1, -0.3)
        got = ccdist.evaluate_word(heisenberg, word)
        assert got == pytest.approx((0.7, -0.3, 0.0), abs=1e-14)

    def test_identity_gives_empty_word(self, heisenberg):
        word = ccdist.word_decomposition(heisenberg, (0.0, 0.0, 0.0))
        assert word.entries == ()

    def test_sampled_roundtrip(self, heisenberg):
        rng = np.random.default_rng(36)
        for _ in range(100):
            x = tuple(rng.uniform(-1, 1, 3))
            word = ccdist.word_decomposition(heisenberg, x)
            got = ccdist.evaluate_word(heisenberg, word)
            assert max(abs(a - b) for a, b in zip(got, x)) <= 1e-10

    def test_step_one(self):
        abelian = dl.builtin("abelian:3")
        word = ccdist.word_decomposition(abelian, (0.5, 0.0, -0.25))
        assert word.to_list() == [[0, 0.5], [2, -0.25]]

    def test_step_three_unsupported(self, engel):
        with pytest.raises(UnsupportedStep):
            ccdist.word_decomposition(engel, (0.0, 0.0, 1.0, 0.0))


class TestTBound:
    def test_central_family(self, heisenberg):
        report = ccdist.t_bound_check(heisenberg, (0.0, 0.0, 1.0))
        assert report["exponent"] == pytest.approx(1.0, abs=1e-6)

    def test_horizontal_family(self, heisenberg):
        report = ccdist.t_bound_check(heisenberg, (1.0, 0.0, 0.0))
        assert report["exponent"] == pytest.approx(1.0, abs=1e-6)

    def test_mixed_family(self, heisenberg):
        report = ccdist.t_bound_check(heisenberg, (1.0, 1.0, 1.0))
        assert report["exponent"] >= 1.0 - 0.05


class TestBounds:
    def test_lower_examples(self, heisenberg):
        e = heisenberg.identity()
        assert ccdist.cc_lower(heisenberg, e, (1.0, 0.0, 0.0)) == 1.0
        assert ccdist.cc_lower(heisenberg, e, (0.0, 0.0, 1.0)) == 0.0

    def test_horizontal_target_is_tight(self, heisenberg):
        result = ccdist.cc_upper(heisenberg, heisenberg.identity(), (1.0, 0.0, 0.0))
        assert result["lower"] <= result["upper"]
        assert result["upper"] <= 1.0 + 1e-4
        assert result["upper"] - result["lower"] <= 1e-6 * result["lower"]
        assert result["residual"] <= 1e-8

    def test_central_target_beats_word_bound(self, heisenberg):
        result = ccdist.cc_upper(heisenberg, heisenberg.identity(), (0.0, 0.0, 1.0))
        assert result["upper"] <= 4.0
        assert result["upper"] >= 2.0 * math.sqrt(math.pi) - 1e-9  # true infimum
        assert result["residual"] <= 1e-8

    def test_sandwich_on_samples(self, heisenberg):
        rng = np.random.default_rng(37)
        e = heisenberg.identity()
        for _ in range(4):
            y = tuple(rng.uniform(-0.6, 0.6, 3))
            r = ccdist.cc_upper(heisenberg, e, y, K=16, iterations=12)
            assert r["lower"] <= r["upper"]
            assert r["residual"] <= 1e-8

    def test_homogeneity(self, heisenberg):
        e = heisenberg.identity()
        full = ccdist.cc_upper(heisenberg, e, (0.0, 0.0, 1.0))
        for eps in (0.5, 0.25):
            scaled = ccdist.cc_upper(heisenberg, e, heisenberg.dilation((0.0, 0.0, 1.0), eps))
            assert scaled["upper"] / full["upper"] == pytest.approx(eps, rel=0.02)

    def test_monotone_in_segments(self, heisenberg):
        e = heisenberg.identity()
        previous = math.inf
        for K in (16, 32, 64):
            r = ccdist.cc_upper(heisenberg, e, (0.3, 0.2, 0.4), K=K)
            assert r["upper"] <= previous
            previous = r["upper"]

    def test_left_translation_invariance_of_sandwich(self, heisenberg):
        x = (0.2, -0.1, 0.05)
        y = heisenberg.bch(x, (0.4, 0.1, 0.0))
        r = ccdist.cc_upper(heisenberg, x, y, K=16, iterations=12)
        assert r["lower"] <= r["upper"]

    def test_engel_layer1_exact(self, engel):
        r = ccdist.cc_upper(engel, engel.identity(), (1.0, 0.5, 0.0, 0.0), K=16)
        assert r["upper"] == pytest.approx(r["lower"], rel=1e-9)

    def test_engel_central_unsupported(self, engel):
        with pytest.raises(UnsupportedStep):
            ccdist.cc_upper(engel, engel.identity(), (0.0, 0.0, 1.0, 0.0), K=16)

    def test_identity_target(self, heisenberg):
        r = ccdist.cc_upper(heisenberg, heisenberg.identity(), (0.0, 0.0, 0.0))
        assert r["upper"] == 0.0 and r["lower"] == 0.0
