import numpy as np
import pytest
from hypothesis import given, strategies as st

from blockmax.errors import DomainError
from blockmax.sampling import (
    BlockMaximaSample,
    DataFormatError,
    RawSeries,
    block_maxima,
    empirical_quantile,
    excesses_over_top_k,
    parse_lines,
    read_series,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_block_maxima_examples():
    s = RawSeries([1, 5, 2, 4, 3, 6])
    bm = block_maxima(s, 2)
    assert list(bm.maxima) == [5, 4, 6] and bm.num_blocks == 3
    assert list(bm.sorted_maxima) == [4, 5, 6]
    assert list(block_maxima(s, 6).maxima) == [6]
    s7 = RawSeries([1, 2, 3, 4, 5, 6, 100])
    assert list(block_maxima(s7, 2).maxima) == [2, 4, 6]


@pytest.mark.parametrize("m", [0, 7])
def test_block_size_out_of_range(m):
    with pytest.raises(DomainError):
        block_maxima(RawSeries([1, 2, 3, 4, 5, 6]), m)


def test_raw_series_validation():
    with pytest.raises(DomainError):
        RawSeries([])
    with pytest.raises(DomainError):
        RawSeries([1.0, np.inf])


@given(st.lists(finite, min_size=2, max_size=60), st.integers(1, 10), st.integers(0, 100))
def test_block_maxima_within_block_permutation(values, m, seed):
    m = min(m, len(values))
    v = np.array(values)
    k = len(v) // m
    shuffled = v.copy()
    j = np.random.default_rng(seed).integers(k)
    shuffled[j * m:(j + 1) * m] = shuffled[j * m:(j + 1) * m][::-1]
    a = block_maxima(RawSeries(v), m).maxima
    b = block_maxima(RawSeries(shuffled), m).maxima
    np.testing.assert_array_equal(a, b)


@given(st.integers(1, 6), st.integers(1, 5), st.integers(1, 5), st.integers(0, 1000))
def test_block_maxima_concatenation(m, k1, k2, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=m * k1), rng.normal(size=m * k2)
    whole = block_maxima(RawSeries(np.concatenate([a, b])), m).maxima
    parts = np.concatenate([block_maxima(RawSeries(a), m).maxima, block_maxima(RawSeries(b), m).maxima])
    np.testing.assert_array_equal(whole, parts)


def test_excesses_examples():
    e = excesses_over_top_k(RawSeries([1, 2, 3, 4, 5]), 2)
    assert e.threshold == 3 and sorted(e.excesses) == [1, 2] and not e.ties_at_threshold
    assert excesses_over_top_k(RawSeries([4, 2, 9, 1]), 3).threshold == 1


def test_excesses_tie_policy():
    # order statistics 3 > 2 = 2 = 2 > 1: threshold is the 3rd largest, 2
    e = excesses_over_top_k(RawSeries([1, 2, 2, 2, 3]), 2)
    assert e.threshold == 2
    assert list(e.excesses) == [1.0]
    assert e.ties_at_threshold and e.k == 1 and e.requested_k == 2
    assert np.all(e.excesses > 0)


@pytest.mark.parametrize("k", [0, 5])
def test_excesses_k_out_of_range(k):
    with pytest.raises(DomainError):
        excesses_over_top_k(RawSeries([1, 2, 3, 4, 5]), k)


@given(st.lists(finite, min_size=2, max_size=50), st.data())
def test_excesses_positive(values, data):
    k = data.draw(st.integers(1, len(values) - 1))
    e = excesses_over_top_k(RawSeries(values), k)
    assert np.all(e.excesses > 0) and e.k <= k


def test_empirical_quantile_examples():
    bm = BlockMaximaSample(1, [6.0, 4.0, 5.0])
    assert empirical_quantile(bm, 0.5) == 5.0
    assert empirical_quantile(bm, 1 / 4) == 4.0
    assert empirical_quantile(bm, 0.5, a_m=2.0, b_m=4.0) == 0.5
    with pytest.raises(DomainError):
        empirical_quantile(bm, 1.0)


@given(st.lists(finite, min_size=1, max_size=40), st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6))
def test_empirical_quantile_monotone(values, s1, s2):
    bm = BlockMaximaSample(1, values)
    lo, hi = sorted((s1, s2))
    assert empirical_quantile(bm, lo) <= empirical_quantile(bm, hi)


def test_parse_lines_comments_and_blanks():
    s = parse_lines(["# header", "1.5", "", "  2e3 ", "#x", "-4"])
    np.testing.assert_array_equal(s.values, [1.5, 2000.0, -4.0])


def test_parse_lines_reports_line_number(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("\n".join(["1"] * 16 + ["oops", "2"]) + "\n")
    with pytest.raises(DataFormatError) as info:
        read_series(p)
    assert info.value.lineno == 17 and ":17:" in str(info.value)


def test_parse_lines_rejects_nan_and_empty():
    with pytest.raises(DataFormatError):
        parse_lines(["1", "nan"])
    with pytest.raises(DomainError):
        parse_lines(["# only a comment"])
