"""Tests for constellation construction and SM/SMX bit mapping."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smsim.modem import (
    QamConstellation,
    gray_qam,
    map_bits_sm,
    map_bits_smx,
    demap_sm_frame,
    demap_smx_frame,
    bits_to_word,
    word_to_bits,
)


def _sm_mapping_oracle(nt, order):
    """Independent table builder: word -> (antenna, symbol word) by integer arithmetic."""
    k_sym = int(np.log2(order))
    table = {}
    for word in range(nt * order):
        table[word] = (word // order + 1, word % (1 << k_sym))
    return table


class TestGrayQam:
    def test_unit_energy(self):
        """Mean |point|^2 equals 1 within 1e-12 for all supported orders."""
        for order in (2, 4, 16, 64):
            c = gray_qam(order)
            assert abs(np.mean(np.abs(c.points) ** 2) - 1.0) <= 1e-12

    def test_bijection(self):
        """Every word maps to a distinct point and word_for inverts the map."""
        for order in (2, 4, 8, 16, 64):
            c = gray_qam(order)
            assert np.unique(c.points).size == order
            for word in range(order):
                assert c.word_for(c.points[word]) == word

    def test_gray_adjacency(self):
        """Adjacent points along each I/Q axis differ in exactly one bit."""
        for order in (4, 16, 64):
            c = gray_qam(order)
            res = np.unique(np.round(c.points.real, 12))
            ims = np.unique(np.round(c.points.imag, 12))
            grid = {}
            for word in range(order):
                i = int(np.argmin(np.abs(res - c.points[word].real)))
                q = int(np.argmin(np.abs(ims - c.points[word].imag)))
                grid[(i, q)] = word
            for (i, q), word in grid.items():
                for ni, nq in ((i + 1, q), (i, q + 1)):
                    if (ni, nq) in grid:
                        assert bin(word ^ grid[(ni, nq)]).count("1") == 1

    def test_bpsk_degenerate(self):
        c = gray_qam(2)
        assert np.allclose(sorted(c.points.real), [-1.0, 1.0])
        assert np.allclose(c.points.imag, 0.0)

    def test_rejects_bad_order(self):
        for order in (1, 3, 12, 0):
            with pytest.raises(ValueError):
                gray_qam(order)

    def test_rejects_unnormalized_points(self):
        with pytest.raises(ValueError, match="energy"):
            QamConstellation(2, np.array([-2.0, 2.0]))

    def test_rejects_duplicate_points(self):
        with pytest.raises(ValueError, match="distinct"):
            QamConstellation(2, np.array([1.0, 1.0]))


class TestBitWords:
    def test_round_trip(self):
        for word in (0, 1, 5, 255):
            assert bits_to_word(word_to_bits(word, 8)) == word

    def test_msb_first(self):
        assert bits_to_word([1, 0, 1, 1]) == 11
        assert list(word_to_bits(11, 4)) == [1, 0, 1, 1]

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            bits_to_word([0, 2, 1])

    def test_rejects_overflow(self):
        with pytest.raises(ValueError):
            word_to_bits(16, 4)


class TestMapBitsSm:
    def test_all_zero_word(self):
        """All-zero word selects the first antenna and the first symbol."""
        c = gray_qam(4)
        frame = map_bits_sm([0, 0, 0, 0], 4, c)
        assert frame.antenna_index == 1
        assert frame.symbol == c.points[0]

    def test_spectral_efficiency(self):
        """Nt=128/M=2 and Nt=64/M=4 both consume m=8 bits."""
        frame = map_bits_sm(word_to_bits(0, 8), 128, gray_qam(2))
        assert len(frame.source_bits) == 8
        frame = map_bits_sm(word_to_bits(0, 8), 64, gray_qam(4))
        assert len(frame.source_bits) == 8
        with pytest.raises(ValueError, match="consumes"):
            map_bits_sm(word_to_bits(0, 7), 128, gray_qam(2))

    def test_word_1011(self):
        c = gray_qam(4)
        frame = map_bits_sm([1, 0, 1, 1], 4, c)
        assert frame.antenna_index == 3
        assert frame.symbol == c.points[0b11]

    def test_matches_table_oracle(self):
        """All 16 words at Nt=4, M=4 agree with an independent table builder."""
        c = gray_qam(4)
        oracle = _sm_mapping_oracle(4, 4)
        seen = set()
        for word in range(16):
            frame = map_bits_sm(word_to_bits(word, 4), 4, c)
            ant, sym_word = oracle[word]
            assert frame.antenna_index == ant
            assert frame.symbol == c.points[sym_word]
            seen.add((frame.antenna_index, frame.symbol))
        assert len(seen) == 16

    def test_transmit_vector_single_active_antenna(self):
        c = gray_qam(4)
        frame = map_bits_sm([1, 0, 1, 1], 4, c)
        x = frame.to_vector(4)
        assert np.count_nonzero(x) == 1
        assert x[frame.antenna_index - 1] == frame.symbol
        assert np.linalg.norm(x) == pytest.approx(abs(frame.symbol))


class TestMapBitsSmx:
    def test_all_zero_word(self):
        c = gray_qam(2)
        frame = map_bits_smx([0, 0], 2, c)
        assert frame.symbols == (complex(c.points[0]), complex(c.points[0]))

    def test_consumes_nt_log2m_bits(self):
        """SMX at m=8 tops out at Nt=8 with BPSK."""
        frame = map_bits_smx(word_to_bits(0, 8), 8, gray_qam(2))
        assert len(frame.source_bits) == 8
        with pytest.raises(ValueError, match="consumes"):
            map_bits_smx(word_to_bits(0, 6), 8, gray_qam(2))

    def test_exhaustive_bijection(self):
        """Nt=2, M=4: all 16 words produce 16 distinct vectors."""
        c = gray_qam(4)
        vectors = set()
        for word in range(16):
            frame = map_bits_smx(word_to_bits(word, 4), 2, c)
            vectors.add(frame.symbols)
            assert list(demap_smx_frame(frame, 2, c)) == list(word_to_bits(word, 4))
        assert len(vectors) == 16

    def test_group_order(self):
        """The i-th log2(M)-bit group drives the i-th antenna."""
        c = gray_qam(4)
        frame = map_bits_smx([1, 1, 0, 0], 2, c)
        assert frame.symbols == (complex(c.points[0b11]), complex(c.points[0b00]))


class TestDemapSmFrame:
    def test_inverse_of_trivial_case(self):
        c = gray_qam(4)
        frame = map_bits_sm([0, 0, 0, 0], 4, c)
        assert list(demap_sm_frame(frame, 4, c)) == [0, 0, 0, 0]

    def test_round_trip_m4(self):
        c = gray_qam(4)
        for word in range(16):
            bits = word_to_bits(word, 4)
            frame = map_bits_sm(bits, 4, c)
            assert list(demap_sm_frame(frame, 4, c)) == list(bits)

    def test_out_of_range_antenna(self):
        c = gray_qam(4)
        frame = map_bits_sm([0, 0, 0, 0], 4, c)
        bad = type(frame)(5, frame.symbol, frame.source_bits)
        with pytest.raises(ValueError, match="antenna"):
            demap_sm_frame(bad, 4, c)

    def test_foreign_symbol(self):
        c = gray_qam(4)
        frame = map_bits_sm([0, 0, 0, 0], 4, c)
        bad = type(frame)(1, 0.3 + 0.1j, frame.source_bits)
        with pytest.raises(ValueError, match="constellation"):
            demap_sm_frame(bad, 4, c)


class TestRoundTripAllSizes:
    """Map/demap are mutually inverse bijections for every supported (Nt, M)."""

    @pytest.mark.parametrize("nt", [1, 2, 4, 8, 16, 32, 64, 128, 256])
    @pytest.mark.parametrize("order", [2, 4, 16, 64])
    def test_exhaustive(self, nt, order):
        c = gray_qam(order)
        m = int(np.log2(nt)) + int(np.log2(order))
        seen = set()
        for word in range(1 << m):
            bits = word_to_bits(word, m)
            frame = map_bits_sm(bits, nt, c)
            seen.add((frame.antenna_index, frame.symbol))
            assert bits_to_word(demap_sm_frame(frame, nt, c)) == word
        assert len(seen) == 1 << m


@settings(max_examples=200, deadline=None)
@given(
    nt_exp=st.integers(min_value=0, max_value=8),
    order_exp=st.integers(min_value=1, max_value=6),
    data=st.data(),
)
def test_sm_round_trip_property(nt_exp, order_exp, data):
    """demap(map(word)) == word for random words at random power-of-two sizes."""
    nt, order = 1 << nt_exp, 1 << order_exp
    c = gray_qam(order)
    m = nt_exp + order_exp
    word = data.draw(st.integers(min_value=0, max_value=(1 << m) - 1))
    bits = word_to_bits(word, m)
    frame = map_bits_sm(bits, nt, c)
    assert list(demap_sm_frame(frame, nt, c)) == list(bits)
