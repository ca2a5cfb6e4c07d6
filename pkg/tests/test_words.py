from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malnormal.errors import IndexOutOfRange, ParseError, RankMismatch
from malnormal.words import (
    BoundaryPoint,
    Word,
    abelianize,
    boundary_distance,
    commutator_square,
    conjugate,
    cyclic_reduce,
    free_reduce,
    in_commutator_subgroup,
    invert,
    iota,
    is_cyclically_reduced,
    is_proper_power,
    is_reduced_product,
    multiply,
    power,
    primitive_root,
    reduced_words,
    words_up_to,
)

from conftest import W


def letters(rank):
    gens = list(range(1, rank + 1)) + [-i for i in range(1, rank + 1)]
    return st.lists(st.sampled_from(gens), max_size=14)


words2 = letters(2).map(lambda xs: free_reduce(xs, 2))
words3 = letters(3).map(lambda xs: free_reduce(xs, 3))


def test_parse_and_print():
    assert str(W("aAb")) == "b"
    assert str(W("1")) == ""
    assert W("abBA") == Word.identity(2)
    assert W("aB").letters == (1, -2)
    with pytest.raises(IndexOutOfRange):
        W("ac")
    with pytest.raises(ParseError):
        W("a-b")


def test_rank_mismatch():
    with pytest.raises(RankMismatch):
        multiply(W("a"), Word.parse("a", 3))


def test_shortlex_order():
    ws = sorted([W("b"), W("A"), W("a"), W("B"), W("aa"), W("1")])
    assert [str(w) for w in ws] == ["", "a", "A", "b", "B", "aa"]


def test_reduced_word_counts():
    assert [sum(1 for _ in reduced_words(2, n)) for n in range(5)] == [1, 4, 12, 36, 108]
    assert sum(1 for _ in words_up_to(3, 2)) == 1 + 6 + 30


@given(words3, words3, words3)
def test_group_axioms(u, v, w):
    assert multiply(multiply(u, v), w) == multiply(u, multiply(v, w))
    assert multiply(u, invert(u)) == Word.identity(3)
    assert invert(multiply(u, v)) == multiply(invert(v), invert(u))


@given(words2, words2)
def test_abelianization_is_a_homomorphism(u, v):
    ab = tuple(x + y for x, y in zip(abelianize(u), abelianize(v)))
    assert abelianize(multiply(u, v)) == ab
    assert in_commutator_subgroup(multiply(multiply(u, v), multiply(invert(u), invert(v))))


@given(words2)
def test_iota_is_an_involution(w):
    assert iota(iota(w)) == w
    assert abelianize(iota(w)) == tuple(-x for x in abelianize(w))


@given(words2)
def test_cyclic_decomposition(w):
    dec = cyclic_reduce(w)
    assert conjugate(dec.core, dec.conjugator) == w
    assert is_cyclically_reduced(dec.core)
    assert len(w) == 2 * len(dec.conjugator) + len(dec.core)


@given(words2.filter(bool), st.integers(1, 4))
def test_primitive_root(w, n):
    root, e = primitive_root(power(w, n))
    r0, e0 = primitive_root(w)
    assert e == e0 * n and root == r0
    assert is_proper_power(power(w, n)) == (e > 1)


def test_commutator_square():
    s = W("abb")
    assert commutator_square(s) == multiply(s, iota(s))
    assert in_commutator_subgroup(commutator_square(s))
    assert str(commutator_square(W("ab"))) == "abAB"
    assert commutator_square(W("a")) == Word.identity(2)
    assert str(commutator_square(W("aB"))) == "aBAb"
    assert [str(iota(W(x))) for x in ("a", "ab", "abA")] == ["A", "AB", "ABa"]


def test_reduced_product():
    assert is_reduced_product(W("ab"), W("ba"))
    assert not is_reduced_product(W("ab"), W("Ba"))


def test_boundary_distance():
    p = BoundaryPoint(W("1"), W("ab"))
    q = BoundaryPoint(W("ababab"), W("a"))
    assert boundary_distance(p, q) == Fraction(1, 128)
    assert boundary_distance(p, p) == 0
    assert BoundaryPoint(W("ab"), W("ab")).canonical() == p.canonical()


@given(words2.filter(bool))
def test_boundary_point_of_element(g):
    p = BoundaryPoint.of_element(g)
    assert p.take(20) == p.take(20)
    assert boundary_distance(p, BoundaryPoint.of_element(power(g, 3))) == 0


rays = words2.filter(bool).map(BoundaryPoint.of_element)


@settings(max_examples=60)
@given(rays, rays, rays)
def test_ultrametric(x, y, z):
    assert boundary_distance(x, z) <= max(boundary_distance(x, y), boundary_distance(y, z))
