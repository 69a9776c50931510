import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from varfuse import BM25Params, ConfigError
from varfuse.scoring import idf, score


def test_idf_hand_value():
    # N=3, f_t=1: ln(1 + 2.5/1.5)
    assert idf(3, 1) == pytest.approx(math.log(1 + 2.5 / 1.5), rel=1e-15)


@given(st.integers(1, 10**6), st.data())
def test_idf_strictly_positive(n, data):
    f = data.draw(st.integers(1, n))
    assert idf(n, f) > 0


def test_textbook_formula():
    k1, b = 0.9, 0.4
    expected = idf(10, 3) * 2 * (k1 + 1) / (2 + k1 * (1 - b + b * 7 / 5.0))
    assert score(2, 7, 3, 10, 5.0) == pytest.approx(expected, rel=1e-14)


@given(st.integers(1, 50), st.integers(1, 50), st.integers(0, 200))
def test_monotone_in_tf_and_bounded(tf, extra, length):
    s1 = score(tf, length, 2, 100, 40.0)
    s2 = score(tf + extra, length, 2, 100, 40.0)
    assert 0 < s1 < s2 < idf(100, 2) * (0.9 + 1)


def test_b_zero_ignores_length():
    p = BM25Params(0.9, 0.0)
    assert score(1, 3, 1, 10, 5.0, p) == score(1, 300, 1, 10, 5.0, p)


def test_zero_avgdl_does_not_divide():
    assert score(1, 0, 1, 1, 0.0) > 0


@pytest.mark.parametrize("k1,b", [(-0.1, 0.4), (0.9, 1.5), (0.9, -0.1)])
def test_invalid_params(k1, b):
    with pytest.raises(ConfigError):
        BM25Params(k1, b)
