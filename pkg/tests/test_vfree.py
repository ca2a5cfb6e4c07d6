import pytest

from malnormal import oracles
from malnormal.errors import (
    InfiniteOrderElement,
    NotAGroup,
    NotAnAction,
    NotAnAutomorphism,
    NotCentralized,
    NotClosed,
    ScalarObstruction,
    TorsionNotSubgroup,
    TrivialSubgroup,
)
from malnormal.stallings import build, whole_group
from malnormal.vfree import (
    FiniteGroupTable,
    FiniteMatrixGroup,
    FreeAutomorphism,
    GElement,
    GSubgroup,
    VirtuallyFreeData,
    abelianized_action,
    baumslag_taylor_check,
    centralizer_of_fiber,
    choose_exponent_N,
    commensurator_in_G,
    construct_weakly_malnormal,
    determinant,
    exponent_search,
    inner_automorphism,
    matrix_order,
    torsion_and_splitting,
    validate,
    weak_malnormality_in_G,
)
from malnormal.words import Word

from conftest import W

Z2 = FiniteGroupTable.cyclic(2)
ID = FreeAutomorphism.identity(2)
SWAP = FreeAutomorphism.parse(["b", "a"], 2)
IOTA = FreeAutomorphism.parse(["A", "B"], 2)


def group(phi):
    return validate(VirtuallyFreeData(2, Z2, (ID, phi)))


def H(*gens):
    return build([W(g) for g in gens], rank=2)


def test_validate():
    group(ID)
    group(SWAP)
    with pytest.raises(NotAnAutomorphism):
        FreeAutomorphism.parse(["a", "a"], 2)
    with pytest.raises(NotAnAction):
        group(FreeAutomorphism.parse(["b", "A"], 2))
    with pytest.raises(NotAGroup):
        FiniteGroupTable.from_table([[0, 1], [0, 1]])


def test_group_law():
    G = group(SWAP)
    g, h = GElement(W("ab"), 1), GElement(W("b"), 1)
    assert G.mul(g, h) == GElement(W("aba"), 0)
    assert G.mul(g, G.inv(g)) == G.identity()
    assert G.is_torsion(GElement(W("1"), 1))
    assert not G.is_torsion(GElement(W("a"), 1))


def test_centralizers():
    assert centralizer_of_fiber(group(ID)) == [GElement(W("1"), 0), GElement(W("1"), 1)]
    assert centralizer_of_fiber(group(SWAP)) == [GElement(W("1"), 0)]
    assert centralizer_of_fiber(group(IOTA)) == [GElement(W("1"), 0)]


def test_inner_action_gives_twisted_centralizer():
    Z3 = FiniteGroupTable.cyclic(2)
    conj = inner_automorphism(W("a"))
    # conjugation by a has infinite order, so it cannot define an action of Z/2
    with pytest.raises(NotAnAction):
        validate(VirtuallyFreeData(2, Z3, (ID, conj)))


def test_abelianized_action():
    assert [M for M in abelianized_action(group(ID)).elements] == [((1, 0), (0, 1))]
    assert ((0, 1), (1, 0)) in abelianized_action(group(SWAP)).elements
    assert ((-1, 0), (0, -1)) in abelianized_action(group(IOTA)).elements
    assert determinant(((2, 1), (1, 1))) == 1
    assert matrix_order(((0, -1), (1, 0))) == 4
    with pytest.raises(NotClosed):
        FiniteMatrixGroup(2, (((1, 0), (0, 1)), ((0, -1), (1, 0))), ())


def test_baumslag_taylor():
    assert baumslag_taylor_check([ID, SWAP])
    assert baumslag_taylor_check([ID, IOTA])
    with pytest.raises(InfiniteOrderElement):
        baumslag_taylor_check([ID, inner_automorphism(W("a"))])
    with pytest.raises(NotClosed):
        baumslag_taylor_check([ID, FreeAutomorphism.parse(["b", "A"], 2)])


def test_exponent_choice():
    assert choose_exponent_N(abelianized_action(group(ID))) == 1
    choice = exponent_search(abelianized_action(group(SWAP)))
    assert choice.N == 2
    assert choice.rejected[0]["N"] == 1 and list(choice.rejected[0]["vector"]) == [1, 1]
    with pytest.raises(ScalarObstruction):
        choose_exponent_N(abelianized_action(group(IOTA)))


def test_commensurator_of_a_squared():
    G = group(ID)
    res = commensurator_in_G(H("aa"), G)
    assert res.subgroup.fiber == H("a")
    assert sorted(str(g) for g in res.subgroup.generators(G)) == ["(1,q1)", "(a,q0)"]
    assert res.index_of_K == 4


def test_commensurator_of_the_fiber():
    G = group(SWAP)
    res = commensurator_in_G(whole_group(2), G)
    assert res.subgroup.fiber == whole_group(2)
    assert sorted(res.subgroup.quotient) == [0, 1]


def test_splitting():
    G = group(ID)
    C = commensurator_in_G(H("aa"), G).subgroup
    sp = torsion_and_splitting(C, G)
    assert list(sp.A) == [GElement(W("1"), 0), GElement(W("1"), 1)]
    assert [str(f.w) for f in sp.F_basis] == ["a"]
    torsion_free = GSubgroup(H("a"), (GElement(W("1"), 0),))
    sp = torsion_and_splitting(torsion_free, G)
    assert list(sp.A) == [G.identity()] and [str(f.w) for f in sp.F_basis] == ["a"]
    Gs = group(SWAP)
    twisted = GSubgroup(H("ab"), (GElement(W("1"), 0), GElement(W("1"), 1)))
    with pytest.raises(TorsionNotSubgroup):
        torsion_and_splitting(twisted, Gs)


def test_weak_malnormality():
    trivial_Q = validate(VirtuallyFreeData(2, FiniteGroupTable.cyclic(1), (ID,)))
    assert weak_malnormality_in_G(H("a"), [], trivial_Q).verdict
    report = weak_malnormality_in_G(H("aa"), [], trivial_Q)
    assert not report.verdict and str(report.offenders[0].witness.w) == "a"
    with pytest.raises(TrivialSubgroup):
        weak_malnormality_in_G(build([], rank=2), [], trivial_Q)
    with pytest.raises(NotCentralized):
        weak_malnormality_in_G(H("ab"), [GElement(W("1"), 1)], group(SWAP))


def test_construct_direct_product():
    G = group(ID)
    res = construct_weakly_malnormal(G)
    assert len(res.A) == 2 and all(res.verdicts.values())
    assert oracles.weakly_malnormal_by_search(G, res.H1, res.A, max_len=3)[0]


def test_construct_swap():
    G = group(SWAP)
    res = construct_weakly_malnormal(G)
    assert len(res.A) == 1 and all(res.verdicts.values())
    assert res.transcript["exponent"]["N"] == 2


def test_construct_iota_obstruction():
    with pytest.raises(ScalarObstruction):
        construct_weakly_malnormal(group(IOTA))


def test_parallel_runs_match():
    G = group(ID)
    one = construct_weakly_malnormal(G, jobs=1).to_dict()
    four = construct_weakly_malnormal(G, jobs=4).to_dict()
    assert one == four
