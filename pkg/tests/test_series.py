from __future__ import annotations

import json
from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from thetablock.series import (
    QDEN,
    FourierSeries,
    MultiFourierSeries,
    NotDivisibleError,
    NotInvertibleError,
    SeriesError,
    div_exact,
    inverse,
    multi_div_exact,
    multi_mul,
    qunits,
    series_mul,
    series_pow,
    zunits,
)


def naive_mul(a: dict, b: dict, qmax: int) -> dict:
    out = defaultdict(int)
    for (qa, za), ca in a.items():
        for (qb, zb), cb in b.items():
            if qa + qb <= qmax:
                out[(qa + qb, za + zb)] += ca * cb
    return {k: v for k, v in out.items() if v}


def order(terms: dict, qmax: int) -> int:
    return min((q for q, _ in terms), default=qmax + 1)


coeff = st.one_of(st.integers(-9, 9), st.fractions(min_value=-3, max_value=3, max_denominator=4))


def sparse_terms(qstep: int = 3, max_size: int = 8):
    key = st.tuples(st.integers(0, 10).map(lambda q: q * qstep), st.integers(-6, 6))
    return st.dictionaries(key, coeff, max_size=max_size)


@settings(max_examples=500)
@given(sparse_terms(), sparse_terms(), st.integers(0, 40))
def test_series_mul_matches_naive(ta, tb, qmax):
    a = FourierSeries.from_terms(ta, qmax)
    b = FourierSeries.from_terms(tb, qmax)
    prod = series_mul(a, b)
    ta = {k: v for k, v in a.terms.items()}
    tb = {k: v for k, v in b.terms.items()}
    top = min(qmax + order(tb, qmax), qmax + order(ta, qmax))
    assert prod.qmax == top
    assert prod.terms == naive_mul(ta, tb, top)


@settings(max_examples=100)
@given(sparse_terms(), sparse_terms(), st.integers(0, 30))
def test_mul_commutes_and_distributes(ta, tb, qmax):
    a = FourierSeries.from_terms(ta, qmax)
    b = FourierSeries.from_terms(tb, qmax)
    c = FourierSeries.from_terms({(0, 1): 1, (3, -1): 2}, qmax)
    assert a * b == b * a
    assert ((a + b) * c).same_terms(a * c + b * c)


@settings(max_examples=200)
@given(sparse_terms(max_size=6), sparse_terms(max_size=4), st.integers(-3, 3), st.integers(0, 30))
def test_div_exact_undoes_mul(tq, td, zlead, qmax):
    den_terms = {k: v for k, v in td.items() if k[0] > 0}
    den_terms[(0, zlead)] = 1
    den = FourierSeries.from_terms(den_terms, qmax)
    quot = FourierSeries.from_terms(tq, qmax)
    prod = quot * den
    back = div_exact(prod, den)
    assert back.same_terms(quot, min(back.qmax, quot.qmax))


def test_div_exact_with_laurent_leading_slice():
    # theta-like lowest slice zeta^(1/2) - zeta^(-1/2)
    den = FourierSeries.from_terms({(3, 1): 1, (3, -1): -1, (27, 3): -1, (27, -3): 1}, 100)
    quot = FourierSeries.from_terms({(0, 0): 2, (24, 2): 5, (48, -4): -1}, 90)
    back = div_exact(quot * den, den)
    assert back.same_terms(quot)


def test_div_exact_rejects_nondivisible():
    num = FourierSeries.from_terms({(0, 0): 1}, 10)
    den = FourierSeries.from_terms({(0, 1): 1, (0, -1): -1}, 10)
    with pytest.raises(NotDivisibleError):
        div_exact(num, den)


def test_inverse_needs_monomial_leading_slice():
    with pytest.raises(NotInvertibleError):
        inverse(FourierSeries.from_terms({(0, 1): 1, (0, -1): 1}, 10))
    a = FourierSeries.from_terms({(0, 0): 1, (24, 0): -1}, 240)
    inv = inverse(a)
    assert inv.terms == {(24 * n, 0): 1 for n in range(11)}


def test_pow_and_negative_pow():
    a = FourierSeries.from_terms({(0, 0): 1, (24, 2): 1}, 120)
    assert series_pow(a, 3).terms == {(0, 0): 1, (24, 2): 3, (48, 4): 3, (72, 6): 1}
    assert (series_pow(a, -2) * series_pow(a, 2)).same_terms(FourierSeries.one(120))


def test_exponent_units():
    assert qunits(Fraction(1, 8)) == 3 and zunits(Fraction(1, 2)) == 1
    with pytest.raises(SeriesError):
        qunits(Fraction(1, 5))


def test_scale_z_and_shift():
    a = FourierSeries.from_terms({(0, 1): 2, (24, -3): 1}, 48)
    assert a.scale_z(-2).terms == {(0, -2): 2, (24, 6): 1}
    assert a.shift(24, 1).terms == {(24, 2): 2, (48, -2): 1}
    assert a.shift(24, 1).qmax == 72


def test_truncate_cannot_raise_precision():
    a = FourierSeries.from_terms({(0, 0): 1}, 24)
    with pytest.raises(SeriesError):
        a.truncate(48)


@settings(max_examples=100)
@given(sparse_terms(), st.integers(0, 40))
def test_json_round_trip(t, qmax):
    a = FourierSeries.from_terms(t, qmax)
    assert FourierSeries.from_json(json.dumps(a.to_json())) == a


def test_big_integers_survive():
    a = FourierSeries.from_terms({(0, 0): 1 << 70, (24, 1): -(1 << 69)}, 96)
    sq = a * a
    assert sq.coefficient(0, 0) == 1 << 140
    assert div_exact(sq, a).same_terms(a)


# ---------------------------------------------------------------------------
# multivariate
# ---------------------------------------------------------------------------

vec = st.tuples(*[st.integers(-3, 3)] * 2)


def multi_terms(max_size=6):
    return st.dictionaries(st.tuples(st.integers(0, 4).map(lambda q: q * QDEN), vec), st.integers(-4, 4),
                           max_size=max_size)


def naive_multi(a, b, qmax):
    out = defaultdict(int)
    for (qa, ka), ca in a.items():
        for (qb, kb), cb in b.items():
            if qa + qb <= qmax:
                out[(qa + qb, (ka[0] + kb[0], ka[1] + kb[1]))] += ca * cb
    return {k: v for k, v in out.items() if v}


@settings(max_examples=150)
@given(multi_terms(), multi_terms())
def test_multi_mul_matches_naive(ta, tb):
    qmax = 4 * QDEN
    a = MultiFourierSeries(2, ta, qmax)
    b = MultiFourierSeries(2, tb, qmax)
    prod = multi_mul(a, b)
    top = min(qmax + order(b.terms, qmax), qmax + order(a.terms, qmax))
    assert prod.qmax == top
    assert prod.terms == naive_multi(a.terms, b.terms, top)


@settings(max_examples=150)
@given(multi_terms(), multi_terms(max_size=3))
def test_multi_div_exact_undoes_mul(tq, td):
    qmax = 4 * QDEN
    den_terms = {k: v for k, v in td.items() if k[0] > 0}
    den_terms[(0, (1, 0))] = 1
    den_terms[(0, (-1, 1))] = -1
    den = MultiFourierSeries(2, den_terms, qmax)
    quot = MultiFourierSeries(2, tq, qmax)
    back = multi_div_exact(quot * den, den)
    assert {k: v for k, v in back.terms.items() if k[0] <= back.qmax} == \
        {k: v for k, v in quot.terms.items() if k[0] <= back.qmax}


def test_multi_div_rejects_remainder():
    num = MultiFourierSeries(2, {(0, (0, 0)): 1}, QDEN)
    den = MultiFourierSeries(2, {(0, (1, 0)): 1, (0, (0, 1)): 1}, QDEN)
    with pytest.raises(NotDivisibleError):
        multi_div_exact(num, den)


def test_specialize_is_a_ring_map():
    a = MultiFourierSeries(2, {(0, (1, 0)): 1, (24, (0, 2)): -1}, 72)
    b = MultiFourierSeries(2, {(0, (0, -1)): 3, (48, (2, 1)): 1}, 72)
    v = (2, 5)
    assert (a * b).specialize(v) == a.specialize(v) * b.specialize(v)
