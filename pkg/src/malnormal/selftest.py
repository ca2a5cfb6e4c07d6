"""Bounded, fully deterministic property run behind ``malnormal selftest``."""

from __future__ import annotations

import random

from . import oracles
from .errors import InfiniteOrderElement, ScalarObstruction
from .pingpong import CandidateBudget, candidate_set_A, select_pingpong_pair
from .stallings import (
    INFINITE,
    build,
    commensurator_in_free,
    conjugate_intersections,
    contains,
    in_double_coset,
    index,
    is_malnormal,
    power_conjugates_into,
    rank,
)
from .vfree import (
    FiniteGroupTable,
    FreeAutomorphism,
    VirtuallyFreeData,
    abelianized_action,
    baumslag_taylor_check,
    construct_weakly_malnormal,
    exponent_search,
    inner_automorphism,
    validate,
)
from .words import (
    BoundaryPoint,
    Word,
    abelianize,
    boundary_distance,
    cyclic_reduce,
    invert,
    iota,
    multiply,
    words_up_to,
)

SEED = 20240617


def _word_checks(rng) -> dict:
    bad = 0
    for _ in range(200):
        m = rng.randint(2, 4)
        u = oracles.random_word(rng, m, rng.randint(0, 10))
        v = oracles.random_word(rng, m, rng.randint(0, 10))
        ab = tuple(x + y for x, y in zip(abelianize(u), abelianize(v)))
        dec = cyclic_reduce(u)
        ok = (
            abelianize(multiply(u, v)) == ab
            and abelianize(iota(u)) == tuple(-x for x in abelianize(u))
            and multiply(multiply(dec.conjugator, dec.core), invert(dec.conjugator)) == u
            and iota(iota(u)) == u
        )
        bad += not ok
    W = lambda s: Word.parse(s, 2)
    d = boundary_distance(BoundaryPoint(W(""), W("ab")), BoundaryPoint(W("ababab"), W("a")))
    return {"random_failures": bad, "distance_example": str(d), "passed": bad == 0 and str(d) == "1/128"}


def _stallings_checks(rng) -> dict:
    member_fail = confluence_fail = ns_fail = 0
    finite = 0
    for _ in range(40):
        m = rng.randint(2, 3)
        gens = oracles.random_subgroup_gens(rng, m, rng.randint(1, 3), 5)
        H = build(gens)
        member_fail += sum(not contains(H, w) for w in oracles.products(gens, 3))
        shuffled = [invert(g) if rng.random() < 0.5 else g for g in gens]
        rng.shuffle(shuffled)
        confluence_fail += build(shuffled).graph != H.graph
        i = index(H)
        if i != INFINITE:
            finite += 1
            ns_fail += rank(H) - 1 != i * (m - 1)
    W = lambda s: Word.parse(s, 2)
    examples = {
        "a": is_malnormal(build([W("a")])).verdict,
        "aa": is_malnormal(build([W("aa")])).to_dict(),
        "abAB": is_malnormal(build([W("abAB")])).verdict,
        "brute_aa": str(oracles.malnormal_by_search(build([W("aa")]), 4)[1]),
        "brute_abAB": oracles.malnormal_by_search(build([W("abAB")]), 4)[0],
    }
    comm = commensurator_in_free(build([W("aa")]))
    pc = power_conjugates_into(W("baB"), build([W("aa")]))
    H = build([W("aa")])
    comps = [c for c in conjugate_intersections(H, H) if not c.trivial]
    passed = (
        member_fail == confluence_fail == ns_fail == 0
        and examples["a"] and examples["abAB"] and not examples["aa"]["verdict"]
        and examples["aa"]["offenders"][0]["witness"] == "a"
        and examples["brute_aa"] == "a" and examples["brute_abAB"]
        and comm.to_dict()["generators"] == ["a"] and comm.index_of_H == 2
        and (pc.exponent, str(pc.conjugator)) == (2, "b")
        and len(comps) == 2
        and in_double_coset(H, comps[1].witness, H, W("aaa"))
    )
    return {
        "membership_failures": member_fail,
        "confluence_failures": confluence_fail,
        "nielsen_schreier_failures": ns_fail,
        "finite_index_instances": finite,
        "malnormal_examples": examples,
        "comm_aa": comm.to_dict()["generators"],
        "passed": passed,
    }


def _pingpong_checks() -> dict:
    W = lambda s: Word.parse(s, 2)
    Es = [build([W("a")]), build([W("b")])]
    pair = select_pingpong_pair(W("abb"), Es, CandidateBudget())
    H0 = pair.subgroup()
    sample = [h for h in oracles.products(list(H0.basis()), 2) if h]
    hits = [
        (str(E.generators[0]), str(y))
        for E in Es
        for y in words_up_to(2, 4)
        for h in sample
        if contains(E, multiply(multiply(invert(y), h), y))
    ]
    first = [str(x) for x in candidate_set_A(W("abb"), CandidateBudget(max_candidates=3))]
    return {
        "pair": pair.to_dict(),
        "brute_force_hits": hits,
        "first_candidates": first,
        "passed": pair.verification["ok"] and not hits,
    }


def _vfree_checks() -> dict:
    Z2 = FiniteGroupTable.cyclic(2)
    swap = FreeAutomorphism.parse(["b", "a"], 2)
    inv = FreeAutomorphism.parse(["A", "B"], 2)
    ident = FreeAutomorphism.identity(2)
    sw = VirtuallyFreeData(2, Z2, (ident, swap))
    io = VirtuallyFreeData(2, Z2, (ident, inv))
    dp = VirtuallyFreeData.direct_product(2, Z2)
    n_swap = exponent_search(abelianized_action(sw)).to_dict()
    try:
        exponent_search(abelianized_action(io))
        scalar = "missing"
    except ScalarObstruction:
        scalar = "ScalarObstruction"
    bt = [baumslag_taylor_check([ident, swap]), baumslag_taylor_check([ident, inv])]
    try:
        baumslag_taylor_check([ident, inner_automorphism(Word.parse("a", 2))])
        inner = "missing"
    except InfiniteOrderElement:
        inner = "InfiniteOrderElement"
    runs = {}
    for name, vf in (("F2xZ2", dp), ("F2:Z2_swap", sw)):
        G = validate(vf)
        res = construct_weakly_malnormal(G)
        brute = oracles.weakly_malnormal_by_search(G, res.H1, res.A, max_len=3)
        runs[name] = {
            "H1": [str(b) for b in res.H1.basis()],
            "A_order": len(res.A),
            "verdicts": res.verdicts,
            "brute_force_ok": brute[0],
        }
    passed = (
        n_swap["N"] == 2
        and n_swap["rejected"][0]["vector"] == [1, 1]
        and scalar == "ScalarObstruction"
        and all(bt)
        and inner == "InfiniteOrderElement"
        and runs["F2xZ2"]["A_order"] == 2
        and runs["F2:Z2_swap"]["A_order"] == 1
        and all(all(r["verdicts"].values()) and r["brute_force_ok"] for r in runs.values())
    )
    return {
        "exponent_swap": n_swap,
        "exponent_iota": scalar,
        "baumslag_taylor": bt,
        "inner": inner,
        "construction": runs,
        "passed": passed,
    }


def run() -> dict:
    rng = random.Random(SEED)
    checks = {
        "words": _word_checks(rng),
        "stallings": _stallings_checks(rng),
        "pingpong": _pingpong_checks(),
        "vfree": _vfree_checks(),
    }
    return {"checks": checks, "passed": all(c["passed"] for c in checks.values())}
