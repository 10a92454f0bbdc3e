import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncsparse.ncpoly import (NEG_INF, NCPolynomial, ParseError, cyclic_canonical,
                             cyclic_degree, cyclic_project, evaluate, glex_key, newton_chip,
                             parse, sigma, star, words_up_to)

from conftest import random_poly, random_tuple


# -- parsing ---------------------------------------------------------------

def test_parse_commutator():
    f = parse("x1*x2 - x2*x1", 2)
    assert f.terms == {(1, 2): 1.0, (2, 1): -1.0}


def test_parse_square_of_sum_has_nine_terms():
    f = parse("(x1+x2+x3)^2", 3)
    assert len(f.terms) == 9
    assert all(c == 1.0 for c in f.terms.values())


def test_parse_zero():
    f = parse("0", 1)
    assert f.terms == {} and f.is_zero
    assert f.degree is NEG_INF


def test_parse_scientific_and_implicit_after_power():
    f = parse("1.5e-1*X1^2x2 + .5", 2)
    assert f.coefficient((1, 1, 2)) == pytest.approx(0.15)
    assert f.coefficient(()) == 0.5


@pytest.mark.parametrize("text, offset", [
    ("x1 + ", 5),
    ("x1 $ x2", 3),
    ("x1*(x2", 6),
    ("x1 x2", 3),
    ("x1^x2", 3),
])
def test_parse_errors_report_byte_offset(text, offset):
    with pytest.raises(ParseError) as exc:
        parse(text, 2)
    assert exc.value.offset == offset


def test_parse_index_out_of_range():
    with pytest.raises(ParseError, match="out of range"):
        parse("x1 + x3", 2)


def test_str_round_trip():
    f = parse("0.1*x1*x2^3 - 2*x2*x1 + 7", 2)
    assert parse(str(f), 2) == f


# -- involution and arithmetic ---------------------------------------------

def test_star_examples():
    assert star((1, 2, 3)) == (3, 2, 1)
    f = parse("x1^2 + 2*x2", 2)
    assert f.star() == f
    c = parse("x1*x2 - x2*x1", 2)
    assert c.star() == -c


def test_products_do_not_commute():
    x1, x2 = NCPolynomial.variable(1, 2), NCPolynomial.variable(2, 2)
    assert x1 * x2 != x2 * x1
    h = x1 + x2
    assert h.star() * h == parse("x1^2 + x1*x2 + x2*x1 + x2^2", 2)
    assert h * 1 == h


def test_nvars_mismatch_rejected():
    with pytest.raises(ValueError):
        NCPolynomial({(3,): 1.0}, nvars=2)


_words = st.lists(st.integers(1, 3), max_size=4).map(tuple)
_polys = st.dictionaries(_words, st.integers(-5, 5), max_size=6).map(
    lambda d: NCPolynomial(d, 3))


@settings(max_examples=60, deadline=None)
@given(_polys, _polys)
def test_involution_reverses_products(f, g):
    assert f.star().star() == f
    assert (f * g).star() == g.star() * f.star()


@settings(max_examples=40, deadline=None)
@given(_polys, _polys, st.integers(0, 2**32 - 1))
def test_evaluation_is_multiplicative(f, g, seed):
    mats = random_tuple(np.random.default_rng(seed), 3, 3)
    lhs = evaluate(f * g, mats)
    rhs = evaluate(f, mats) @ evaluate(g, mats)
    assert np.allclose(lhs, rhs, atol=1e-10 * max(1.0, np.abs(rhs).max()))


def test_words_up_to_counts():
    assert len(words_up_to([1, 2, 3], 2)) == sigma(3, 2) == 13
    assert len(words_up_to([4], 3)) == sigma(1, 3) == 4
    ws = words_up_to([1, 2], 3)
    assert ws == sorted(ws, key=glex_key)


# -- cyclic forms ----------------------------------------------------------

def test_cyclic_canonical_examples():
    assert cyclic_canonical((1, 2, 1, 1)) == (1, 1, 1, 2)
    assert cyclic_canonical((1, 2, 3)) == cyclic_canonical((3, 2, 1))
    assert cyclic_canonical(()) == ()


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=6).map(tuple), st.integers(0, 5))
def test_cyclic_canonical_invariance(w, k):
    rep = cyclic_canonical(w)
    k %= len(w)
    assert cyclic_canonical(rep) == rep
    assert cyclic_canonical(w[k:] + w[:k]) == rep
    assert cyclic_canonical(star(w)) == rep


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=6).map(tuple),
       st.integers(0, 2**32 - 1))
def test_trace_of_canonical_word(w, seed):
    mats = random_tuple(np.random.default_rng(seed), 3, 3)
    a = evaluate(NCPolynomial({w: 1.0}, 3), mats)
    b = evaluate(NCPolynomial({cyclic_canonical(w): 1.0}, 3), mats)
    assert np.trace(a) / 3 == pytest.approx(np.trace(b) / 3, abs=1e-10)


def test_cyclic_degree_examples():
    assert cyclic_degree(parse("x1*x2 - x2*x1", 2)) is NEG_INF
    assert cyclic_degree(parse("x1^2*x2^2", 2)) == 4
    f = parse("x1*x2*x1*x2 + x2*x1*x2*x1", 2)
    assert cyclic_degree(f) == 4
    assert cyclic_project(f).terms == {(1, 2, 1, 2): 2.0}


# -- Newton chip -----------------------------------------------------------

def test_newton_chip_examples():
    assert newton_chip(parse("x1^2", 1)) == [(1,)]
    assert newton_chip(parse("x2*x1*x1*x2 + x2^2", 2)) == [(2,), (1, 2)]


def test_newton_chip_is_star_image_of_lemma_border():
    from ncsparse.bench import LEMMA_BORDER, lemma_gram_polynomial
    chip = newton_chip(lemma_gram_polynomial().objective)
    assert set(chip) == {star(w) for w in LEMMA_BORDER}


def test_newton_chip_rejects_odd_or_nonsymmetric():
    with pytest.raises(ValueError):
        newton_chip(parse("x1^3", 1))
    with pytest.raises(ValueError):
        newton_chip(parse("x1*x2", 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_newton_chip_contains_suffixes_of_h(seed):
    rng = np.random.default_rng(seed)
    h = random_poly(rng, 2, 3, density=0.4)
    if h.is_zero or h.degree < 1:
        return
    f = h.star() * h
    if f.is_zero:
        return
    chip = set(newton_chip(f))
    lo, hi = -(-f.mindeg // 2), f.degree // 2
    # the top-degree words of h always survive as pure squares
    for w in h.words():
        if len(w) == h.degree and lo <= len(w) <= hi:
            assert w in chip


# -- evaluation ------------------------------------------------------------

def test_evaluate_examples():
    f = parse("x1^2", 1)
    assert np.allclose(evaluate(f, [np.diag([1.0, -2.0])]), np.diag([1.0, 4.0]))
    c = parse("x1*x2 - x2*x1", 2)
    assert np.allclose(evaluate(c, [np.diag([1.0, 2.0]), np.diag([3.0, -1.0])]), 0)


def test_evaluate_rejects_bad_input():
    f = parse("x1*x2", 2)
    with pytest.raises(ValueError):
        evaluate(f, [np.eye(2)])
    with pytest.raises(ValueError):
        evaluate(f, [np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]])])
    with pytest.raises(ValueError):
        evaluate(f, [np.eye(2), np.eye(3)])


def test_random_cubic_at_printed_tuple():
    from ncsparse.bench import RANDOM_CUBIC_MINIMIZER, random_cubic_example
    f = random_cubic_example().objective
    A = [np.array(a) for a in RANDOM_CUBIC_MINIMIZER]
    lam = np.linalg.eigvalsh(evaluate(f, A, sym_tol=1e-3))[0]
    # the printed entries are rounded to four digits
    assert lam == pytest.approx(-27.4665, abs=2e-2)
