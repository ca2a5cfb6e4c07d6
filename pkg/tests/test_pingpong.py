import pytest

from malnormal import oracles
from malnormal.errors import BudgetExhausted, FiniteIndexInput, SeedInCommutator, TrivialElement
from malnormal.pingpong import (
    CandidateBudget,
    avoid_limit_sets,
    candidate_set_A,
    is_coned_elliptic,
    malnormal_subgroup_search,
    select_pingpong_pair,
    verify_pingpong_pair,
)
from malnormal.stallings import build, is_malnormal, rank
from malnormal.words import Word, in_commutator_subgroup, is_cyclically_reduced, multiply

from conftest import W


def H(*gens):
    return build([W(g) for g in gens], rank=2)


def test_candidates_for_abb():
    first = [str(x) for x in candidate_set_A(W("abb"), CandidateBudget(max_candidates=4))]
    assert first == ["abb", "abbabAB", "abbaBAb", "abbAbaB"]
    many = list(candidate_set_A(W("abb"), CandidateBudget(max_pad_length=4, max_candidates=500)))
    assert "abbbaBA" not in {str(x) for x in many}
    w = W("abb")
    for x in many:
        assert is_cyclically_reduced(x)
        assert x.letters[: len(w)] == w.letters
        assert in_commutator_subgroup(multiply(~w, x))


def test_padding_strategy_is_also_valid():
    w = W("abb")
    got = list(candidate_set_A(w, CandidateBudget(max_candidates=20), strategy="padding"))
    assert got and all(is_cyclically_reduced(x) for x in got)


def test_seed_in_commutator_rejected():
    with pytest.raises(SeedInCommutator):
        list(candidate_set_A(W("abAB"), CandidateBudget()))


def test_avoid_limit_sets():
    assert [str(x) for x in avoid_limit_sets([W("aaab")], [H("a")])] == ["aaab"]
    assert list(avoid_limit_sets([W("a")], [H("aaa")])) == []
    assert list(avoid_limit_sets([W("ab"), W("a")], [])) == [W("ab"), W("a")]
    with pytest.raises(FiniteIndexInput):
        list(avoid_limit_sets([W("ab")], [H("a", "b")]))


def test_coned_elliptic():
    assert is_coned_elliptic(W("a"), [H("aaa")])
    assert not is_coned_elliptic(W("ab"), [H("a"), H("b")])
    assert is_coned_elliptic(W("baB"), [H("aa")])
    with pytest.raises(TrivialElement):
        is_coned_elliptic(Word.identity(2), [H("a")])


def test_pair_for_abb_avoiding_axes():
    Es = [H("a"), H("b")]
    pair = select_pingpong_pair(W("abb"), Es, CandidateBudget())
    assert (str(pair.g1), str(pair.g2), pair.k) == ("abb", "abbabAB", 1)
    assert pair.verification["ok"]
    assert rank(pair.subgroup()) == 2
    assert verify_pingpong_pair(pair.g1, pair.g2, pair.k, W("abb"), Es)["ok"]


def test_pair_without_avoided_subgroups():
    pair = select_pingpong_pair(W("ab"), [], CandidateBudget())
    assert (str(pair.g1), str(pair.g2), pair.k) == ("ab", "ababAB", 1)


def test_seed_filtered_when_it_is_elliptic():
    pair = select_pingpong_pair(W("abb"), [H("abb")], CandidateBudget())
    assert W("abb") not in (pair.g1, pair.g2)
    assert pair.verification["ok"]


def test_budget_exhaustion_carries_state():
    with pytest.raises(BudgetExhausted) as info:
        select_pingpong_pair(W("abb"), [H("a"), H("b")], CandidateBudget(max_pad_length=1, max_candidates=1))
    assert info.value.state is not None


def test_malnormal_search_rank_two():
    K = malnormal_subgroup_search(2, 2, CandidateBudget())
    assert rank(K) == 2 and K.index() != 1
    assert is_malnormal(K).verdict
    assert oracles.malnormal_by_search(K, 5, 2)[0]


def test_search_rejects_squares():
    report = is_malnormal(H("aa", "bb"))
    assert not report.verdict
    assert "a" in {str(o.witness) for o in report.offenders}
