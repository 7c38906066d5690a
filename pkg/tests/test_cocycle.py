from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from odoflow.cocycle import LogValue, log_rn_value
from odoflow.errors import Undecidable
from odoflow.space import CoordinateScheme

BERN = CoordinateScheme.bernoulli("1/3", 3)
words3 = st.tuples(*(st.integers(0, 1),) * 3)


def test_identity_is_empty_combination():
    assert log_rn_value(BERN, (0, 1, 0), (0, 1, 0)).terms == ()


def test_single_flip_is_log_two():
    v = log_rn_value(BERN, (0, 0, 0), (1, 0, 0))
    assert v.terms == ((Fraction(2), 1),)
    assert log_rn_value(BERN, (1, 0, 0), (0, 0, 0)).terms == ((Fraction(2), -1),)


def test_uniform_scheme_is_always_zero():
    paper = CoordinateScheme.paper(3)
    for x in paper.prefixes():
        assert log_rn_value(paper, (0, 0, 0), x).is_zero


def test_canonical_form_merges_powers():
    assert LogValue.of(4) == LogValue.from_terms([(2, 1), (2, 1)])
    assert LogValue.of(4).terms == ((Fraction(2), 2),)
    assert LogValue.of(Fraction(4, 9)).terms == ((Fraction(3, 2), -2),)
    assert LogValue.of(Fraction(8, 27)).terms == ((Fraction(2, 3), 3),) or \
        LogValue.of(Fraction(8, 27)).terms == ((Fraction(3, 2), -3),)
    assert LogValue.of(6).terms == ((Fraction(6), 1),)


@given(words3, words3, words3)
def test_chain_rule(x, y, z):
    assert log_rn_value(BERN, x, z) == log_rn_value(BERN, x, y) + log_rn_value(BERN, y, z)


@given(words3, words3)
def test_antisymmetry(x, y):
    assert log_rn_value(BERN, x, y) == -log_rn_value(BERN, y, x)


def test_certified_comparisons():
    log2 = LogValue.of(2)
    assert log2.compare(Fraction(3, 5)) == 1
    assert log2.compare(Fraction(4, 5)) == -1
    assert log2.compare(0) == 1
    assert LogValue().compare(Fraction(1, 2)) == -1
    assert (-log2).compare(0) == -1
    # log 2 < e^{-1/3} ~ 0.7165
    assert log2.compare_exp(Fraction(-1, 3)) == -1
    assert LogValue.of(3).compare_exp(Fraction(-1, 3)) == 1


def test_tight_comparison_needs_more_bits():
    near = Fraction(6931471805599453, 10 ** 16)  # just below log 2
    assert LogValue.of(2).compare(near) == 1
    with pytest.raises(Undecidable):
        LogValue.of(2).compare(near, cap=16)
