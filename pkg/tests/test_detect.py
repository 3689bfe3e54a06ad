"""Tests for SM/SMX maximum-likelihood detection and bit-error accounting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smsim.channel import draw_iid_rayleigh
from smsim.detect import (
    SearchSpaceError,
    count_bit_errors,
    detect_sm_ml,
    detect_smx_ml,
    sm_ml_words,
    smx_candidates,
    smx_ml_words,
)
from smsim.modem import gray_qam, map_bits_sm, map_bits_smx, word_to_bits


def _sm_brute_force(y, h, constellation, nt):
    """Eq.-4-style oracle: full ||y - Hx||^2 over explicitly built SM vectors."""
    best = None
    for ell in range(1, nt + 1):
        for word in range(constellation.order):
            x = np.zeros(nt, dtype=complex)
            x[ell - 1] = constellation.points[word]
            metric = float(np.sum(np.abs(y - h @ x) ** 2))
            if best is None or metric < best[0]:
                best = (metric, ell, word)
    return best


class TestDetectSmMl:
    def test_noiseless_recovery(self):
        c = gray_qam(4)
        rng = np.random.default_rng(0)
        for _ in range(50):
            h = draw_iid_rayleigh(4, 4, rng)
            frame = map_bits_sm(word_to_bits(int(rng.integers(16)), 4), 4, c)
            y = h.entries @ frame.to_vector(4)
            result = detect_sm_ml(y, h, c, 4)
            assert result.estimate == frame
            assert result.metric == pytest.approx(0.0, abs=1e-20)

    def test_matches_brute_force_oracle(self):
        """SM-ML equals the full MIMO-ML search restricted to SM vectors."""
        c = gray_qam(4)
        rng = np.random.default_rng(1)
        for _ in range(200):
            h = draw_iid_rayleigh(4, 4, rng)
            y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            result = detect_sm_ml(y, h, c, 4)
            metric, ell, word = _sm_brute_force(y, h.entries, c, 4)
            assert result.estimate.antenna_index == ell
            assert result.estimate.symbol == c.points[word]
            assert result.metric == pytest.approx(metric, rel=1e-12)

    def test_single_antenna_reduces_to_symbol_ml(self):
        """Nt=1 is classic per-symbol ML detection."""
        c = gray_qam(16)
        rng = np.random.default_rng(2)
        h = draw_iid_rayleigh(2, 1, rng)
        y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        result = detect_sm_ml(y, h, c, 1)
        metrics = [np.sum(np.abs(y - h.entries[:, 0] * s) ** 2) for s in c.points]
        assert result.estimate.antenna_index == 1
        assert result.estimate.symbol == c.points[int(np.argmin(metrics))]

    def test_scaling_invariance(self):
        """Scaling y and H by the same positive constant keeps the argmin."""
        c = gray_qam(4)
        rng = np.random.default_rng(3)
        for scale in (0.01, 3.7, 250.0):
            h = draw_iid_rayleigh(4, 4, rng)
            y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            base = detect_sm_ml(y, h, c, 4)
            scaled = detect_sm_ml(scale * y, scale * h.entries, c, 4)
            assert base.estimate == scaled.estimate

    def test_tie_breaks_lexicographic(self):
        """With an all-zero channel every candidate ties; the first one wins."""
        c = gray_qam(4)
        h = np.zeros((2, 4), dtype=complex)
        result = detect_sm_ml(np.array([1.0 + 0j, 0]), h, c, 4)
        assert result.estimate.antenna_index == 1
        assert result.estimate.symbol == c.points[0]

    def test_zero_noise_error_rate(self):
        """Noiseless trials over random channels decode perfectly (1e4 trials)."""
        c = gray_qam(4)
        rng = np.random.default_rng(4)
        n = 10000
        h = (rng.standard_normal((n, 4, 4)) + 1j * rng.standard_normal((n, 4, 4))) / np.sqrt(2)
        words = rng.integers(0, 16, size=n)
        ant = (words >> 2).astype(np.intp)
        sym = c.points[words & 3]
        y = h[np.arange(n), :, ant] * sym[:, None]
        detected, _ = sm_ml_words(y, h, c)
        assert np.array_equal(detected, words)

    def test_dimension_checks(self):
        c = gray_qam(4)
        h = np.zeros((2, 4), dtype=complex)
        with pytest.raises(ValueError, match="columns"):
            detect_sm_ml(np.zeros(2), h, c, 8)
        with pytest.raises(ValueError, match="length"):
            detect_sm_ml(np.zeros(3), h, c, 4)


class TestDetectSmxMl:
    def test_noiseless_recovery(self):
        c = gray_qam(4)
        rng = np.random.default_rng(5)
        for _ in range(50):
            h = draw_iid_rayleigh(4, 2, rng)
            frame = map_bits_smx(word_to_bits(int(rng.integers(16)), 4), 2, c)
            y = h.entries @ frame.to_vector()
            result = detect_smx_ml(y, h, c)
            assert result.estimate == frame

    def test_matches_hand_enumeration(self):
        """Nt=2, M=2: agree with an explicit 4-candidate scan."""
        c = gray_qam(2)
        rng = np.random.default_rng(6)
        for _ in range(100):
            h = draw_iid_rayleigh(2, 2, rng)
            y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            best = None
            for word in range(4):
                x = np.array([c.points[(word >> 1) & 1], c.points[word & 1]])
                metric = float(np.sum(np.abs(y - h.entries @ x) ** 2))
                if best is None or metric < best[0]:
                    best = (metric, tuple(x))
            result = detect_smx_ml(y, h, c)
            assert result.estimate.symbols == best[1]
            assert result.metric == pytest.approx(best[0], rel=1e-12)

    def test_search_cap(self):
        """Nt=8/M=2 has 256 feasible candidates; Nt=8/M=16 blows the cap."""
        assert smx_candidates(8, gray_qam(2)).shape == (256, 8)
        with pytest.raises(SearchSpaceError):
            smx_candidates(8, gray_qam(16))

    def test_cap_is_configurable(self):
        with pytest.raises(SearchSpaceError):
            smx_candidates(2, gray_qam(4), cap=15)

    def test_tie_breaks_by_word(self):
        c = gray_qam(2)
        h = np.zeros((2, 2), dtype=complex)
        result = detect_smx_ml(np.array([1.0 + 0j, 0]), h, c)
        assert result.estimate.source_bits == (0, 0)


class TestSmEqualsRestrictedSmx:
    def test_equivalence_on_sm_candidates(self):
        """Running the SMX metric over SM-shaped vectors reproduces SM-ML."""
        c = gray_qam(4)
        rng = np.random.default_rng(7)
        sm_vectors = np.zeros((16, 4), dtype=complex)
        for word in range(16):
            sm_vectors[word, word >> 2] = c.points[word & 3]
        for _ in range(200):
            h = draw_iid_rayleigh(4, 4, rng)
            y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            words, metrics = smx_ml_words(y[None], h.entries[None], sm_vectors)
            sm = detect_sm_ml(y, h, c, 4)
            k = int(words[0])
            assert sm.estimate.antenna_index == (k >> 2) + 1
            assert sm.estimate.symbol == c.points[k & 3]
            assert sm.metric == pytest.approx(float(metrics[0]), rel=1e-12)


class TestBatchMatchesSingle:
    def test_sm_batch(self):
        c = gray_qam(4)
        rng = np.random.default_rng(8)
        h = (rng.standard_normal((32, 4, 4)) + 1j * rng.standard_normal((32, 4, 4)))
        y = rng.standard_normal((32, 4)) + 1j * rng.standard_normal((32, 4))
        words, metrics = sm_ml_words(y, h, c)
        for i in range(32):
            single = detect_sm_ml(y[i], h[i], c, 4)
            assert single.estimate.antenna_index == (int(words[i]) >> 2) + 1
            assert single.metric == pytest.approx(float(metrics[i]), rel=1e-12)

    def test_smx_batch(self):
        c = gray_qam(2)
        cands = smx_candidates(4, c)
        rng = np.random.default_rng(9)
        h = (rng.standard_normal((32, 4, 4)) + 1j * rng.standard_normal((32, 4, 4)))
        y = rng.standard_normal((32, 4)) + 1j * rng.standard_normal((32, 4))
        words, metrics = smx_ml_words(y, h, cands)
        for i in range(32):
            single = detect_smx_ml(y[i], h[i], c)
            assert tuple(single.estimate.source_bits) == tuple(word_to_bits(int(words[i]), 4))
            assert single.metric == pytest.approx(float(metrics[i]), rel=1e-12)


class TestCountBitErrors:
    def test_identical(self):
        assert count_bit_errors([0, 1, 0, 1], [0, 1, 0, 1]) == 0

    def test_all_flipped(self):
        assert count_bit_errors([0, 0, 0, 0], [1, 1, 1, 1]) == 4

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            count_bit_errors([0, 1], [0, 1, 0])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=64))
    def test_matches_popcount_oracle(self, pairs):
        a = [p[0] for p in pairs]
        b = [p[1] for p in pairs]
        word_a = int("".join(map(str, a)), 2)
        word_b = int("".join(map(str, b)), 2)
        assert count_bit_errors(a, b) == bin(word_a ^ word_b).count("1")


class TestDetectionResult:
    def test_bit_errors_vs_reference(self):
        c = gray_qam(4)
        rng = np.random.default_rng(10)
        h = draw_iid_rayleigh(4, 4, rng)
        tx = map_bits_sm([1, 0, 1, 1], 4, c)
        y = h.entries @ tx.to_vector(4)
        result = detect_sm_ml(y, h, c, 4)
        assert result.bit_errors_vs(tx) == 0
        other = map_bits_sm([0, 1, 1, 1], 4, c)
        assert result.bit_errors_vs(other) == count_bit_errors(tx.source_bits, other.source_bits)
