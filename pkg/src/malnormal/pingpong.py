"""Synthesis of ping-pong pairs and malnormal subgroups in free groups.

Candidates are words w*g with g in the commutator subgroup and w*g reduced
and cyclically reduced. A candidate x survives the limit-set filter when no
power of x is conjugate into any of the avoided subgroups; two surviving,
non-commuting candidates then generate (after raising to a suitable power)
a free subgroup of rank two that meets every conjugate of every avoided
subgroup trivially. The fiber-product check certifies that last condition
exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from .errors import BudgetExhausted, FiniteIndexInput, SeedInCommutator, TrivialSubgroup
from .stallings import (
    INFINITE,
    Subgroup,
    build,
    conjugate_intersections,
    express,
    index,
    is_malnormal,
    power_conjugates_into,
    rank,
)
from .words import (
    Word,
    abelianize,
    apply_map,
    in_commutator_subgroup,
    is_cyclically_reduced,
    is_proper_power,
    is_reduced_product,
    iota,
    letter_key,
    multiply,
    power,
    reduced_words,
    words_up_to,
)


@dataclass(frozen=True)
class CandidateBudget:
    max_pad_length: int = 8
    max_candidates: int = 200
    max_exponent: int = 6

    def __post_init__(self):
        for name in ("max_pad_length", "max_candidates", "max_exponent"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def _commutator_words(rank: int, length: int, first_forbidden: int, last_forbidden: int):
    """Reduced words of the given length with zero exponent sums, whose first
    letter is not ``first_forbidden`` and last letter not ``last_forbidden``.
    Shortlex order."""
    alphabet = sorted(
        [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)],
        key=letter_key,
    )
    sums = [0] * (rank + 1)
    prefix: list[int] = []

    def extend(left: int):
        if left == 0:
            if not prefix or prefix[-1] != last_forbidden:
                yield tuple(prefix)
            return
        for x in alphabet:
            if prefix and prefix[-1] == -x:
                continue
            if not prefix and x == first_forbidden:
                continue
            sums[abs(x)] += 1 if x > 0 else -1
            if sum(abs(s) for s in sums) <= left - 1:
                prefix.append(x)
                yield from extend(left - 1)
                prefix.pop()
            sums[abs(x)] -= 1 if x > 0 else -1

    yield from extend(length)


def _check_seed(w: Word) -> None:
    if w.rank < 2:
        raise ValueError("candidate sets need rank at least 2")
    if in_commutator_subgroup(w):
        raise SeedInCommutator(f"seed {w} lies in the commutator subgroup")


def _exhaustive(w: Word, budget: CandidateBudget) -> Iterator[Word]:
    first_forbidden = -w.letters[-1] if w else 0
    last_forbidden = -w.letters[0] if w else 0
    for length in range(0, budget.max_pad_length + 1, 2):
        if length == 0:
            if is_cyclically_reduced(w):
                yield w
            continue
        for g in _commutator_words(w.rank, length, first_forbidden, last_forbidden):
            yield Word(w.rank, w.letters + g)


def _padding(w: Word, budget: CandidateBudget) -> Iterator[Word]:
    """Pads g = s * iota(s); only the subfamily of commutator elements used
    when the seed starts and ends with the same generator."""
    if is_cyclically_reduced(w):
        yield w
    for half in range(1, budget.max_pad_length // 2 + 1):
        batch = []
        for s in reduced_words(w.rank, half):
            g = multiply(s, iota(s))
            if len(g) != 2 * half or not is_reduced_product(w, g):
                continue
            x = multiply(w, g)
            if is_cyclically_reduced(x):
                batch.append(x)
        yield from sorted(set(batch), key=Word.sort_key)


def candidate_set_A(w: Word, budget: CandidateBudget, strategy: str = "exhaustive") -> Iterator[Word]:
    """Lazily yield candidates w*g in shortlex order, at most
    ``budget.max_candidates`` of them."""
    _check_seed(w)
    if strategy == "exhaustive":
        source = _exhaustive(w, budget)
    elif strategy == "padding":
        source = _padding(w, budget)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    def gen():
        emitted = 0
        for x in source:
            if emitted >= budget.max_candidates:
                return
            emitted += 1
            yield x
        if not emitted:
            raise BudgetExhausted(f"no candidate for seed {w} within pad length {budget.max_pad_length}")

    return gen()


def _check_avoided(Es: Sequence[Subgroup]) -> None:
    for E in Es:
        if E.is_trivial():
            raise TrivialSubgroup(f"avoided subgroup {E} is trivial")
        if index(E) != INFINITE:
            raise FiniteIndexInput(f"avoided subgroup {E} has finite index {index(E)}")


def avoid_limit_sets(candidates: Iterable[Word], Es: Sequence[Subgroup]) -> Iterator[Word]:
    """Keep the candidates none of whose powers is conjugate into any E.

    That is the same as x^{+-infinity} avoiding the limit set of every coset
    of every E, so checking one subgroup per E is enough.
    """
    Es = list(Es)
    _check_avoided(Es)
    for x in candidates:
        if not any(power_conjugates_into(x, E).found for E in Es):
            yield x


def is_coned_elliptic(g: Word, Hs: Sequence[Subgroup]) -> bool:
    """True when some power of g is conjugate into one of the Hs (g fixes a
    cone point after coning off their cosets); False means loxodromic."""
    return any(power_conjugates_into(g, H).found for H in Hs)


@dataclass(frozen=True)
class PingpongPair:
    g1: Word
    g2: Word
    k: int
    seed: Word
    verification: dict = field(compare=False)

    def subgroup(self) -> Subgroup:
        return build([power(self.g1, self.k), power(self.g2, self.k)])

    def to_dict(self) -> dict:
        return {
            "seed": str(self.seed),
            "g1": str(self.g1),
            "g2": str(self.g2),
            "k": self.k,
            "generators": [str(power(self.g1, self.k)), str(power(self.g2, self.k))],
            "verification": self.verification,
        }


def verify_pingpong_pair(g1: Word, g2: Word, k: int, seed: Word, Es: Sequence[Subgroup]) -> dict:
    """Recheck a pair from scratch on freshly built graphs."""
    H0 = build([power(g1, k), power(g2, k)])
    per_E = []
    for E in Es:
        fresh_E = build(E.generators, rank=E.ambient_rank)
        comps = conjugate_intersections(H0, fresh_E)
        per_E.append(
            {
                "E": [str(x) for x in fresh_E.generators],
                "components": len(comps),
                "nontrivial": [str(c.witness) for c in comps if not c.trivial],
                "all_trivial": all(c.trivial for c in comps),
            }
        )
    ab = abelianize(seed)
    return {
        "rank2_ok": rank(H0) == 2,
        "cyclically_reduced": is_cyclically_reduced(g1) and is_cyclically_reduced(g2),
        "abelianization_ok": abelianize(g1) == ab and abelianize(g2) == ab,
        "avoidance": per_E,
        "ok": rank(H0) == 2 and all(e["all_trivial"] for e in per_E),
    }


def select_pingpong_pair(w: Word, Es: Sequence[Subgroup], budget: CandidateBudget | None = None) -> PingpongPair:
    budget = budget or CandidateBudget()
    Es = list(Es)
    _check_avoided(Es)
    survivors: list[Word] = []
    tried = []
    for x in avoid_limit_sets(candidate_set_A(w, budget), Es):
        for g1 in survivors:
            if rank(build([g1, x])) != 2:
                continue
            for k in range(1, budget.max_exponent + 1):
                H0 = build([power(g1, k), power(x, k)])
                if all(c.trivial for E in Es for c in conjugate_intersections(H0, E)):
                    record = verify_pingpong_pair(g1, x, k, w, Es)
                    if not record["ok"]:
                        raise AssertionError(f"fresh verification failed for {g1}, {x}")
                    return PingpongPair(g1, x, k, w, record)
            tried.append((str(g1), str(x)))
        survivors.append(x)
    raise BudgetExhausted(
        "no ping-pong pair within budget",
        state={
            "seed": str(w),
            "survivors": [str(s) for s in survivors],
            "pairs_tried": tried,
        },
    )


def _tuples_by_total_length(pool: Sequence[Word], r: int) -> Iterator[tuple[Word, ...]]:
    """Strictly increasing r-tuples from the shortlex-sorted pool, ordered by
    total length and then lexicographically."""
    by_len: dict[int, list[int]] = {}
    for i, x in enumerate(pool):
        by_len.setdefault(len(x), []).append(i)
    lengths = sorted(by_len)
    max_total = r * lengths[-1]
    for total in range(r, max_total + 1):
        found = []
        for combo in itertools.combinations_with_replacement(lengths, r):
            if sum(combo) != total:
                continue
            groups = [by_len[n] for n in combo]
            for idxs in itertools.product(*groups):
                if all(a < b for a, b in zip(idxs, idxs[1:])):
                    found.append(idxs)
        for idxs in sorted(found):
            yield tuple(pool[i] for i in idxs)


def malnormal_subgroup_search(
    ambient_rank: int,
    target_rank: int,
    budget: CandidateBudget | None = None,
    within: Subgroup | None = None,
    ambient: Subgroup | None = None,
    accept: Callable[[Subgroup], bool] | None = None,
) -> Subgroup:
    """First subgroup (in a fixed enumeration order) with ``target_rank``
    free generators that is malnormal.

    Generators are words of length <= ``budget.max_pad_length`` in the free
    basis of ``within`` (default: the whole free group), so the result lies
    in ``within``. Malnormality is decided in ``ambient`` (default: the
    whole free group). ``accept`` can veto otherwise valid candidates.
    """
    budget = budget or CandidateBudget()
    if ambient_rank < 2 or target_rank < 2:
        raise ValueError("need ambient rank >= 2 and target rank >= 2")
    within_basis = within.basis() if within is not None else None
    coord_rank = len(within_basis) if within_basis is not None else ambient_rank
    if coord_rank < 1:
        raise TrivialSubgroup("cannot search inside the trivial subgroup")
    # a proper power in a free basis is never malnormal: its root commutes with it
    pool = [x for x in words_up_to(coord_rank, budget.max_pad_length) if x and not is_proper_power(x)]
    ambient_basis = ambient.basis() if ambient is not None else None
    examined = 0
    for gens in _tuples_by_total_length(pool, target_rank):
        if examined >= budget.max_candidates * 50:
            break
        if within_basis is not None:
            gens = tuple(apply_map(g, within_basis) for g in gens)
        K = build(gens, rank=ambient_rank)
        if rank(K) != target_rank:
            continue
        if ambient_basis is not None:
            local = build([express(ambient, b) for b in K.basis()], rank=len(ambient_basis))
        else:
            local = K
        if index(local) != INFINITE:
            continue
        examined += 1
        if not is_malnormal(local).verdict:
            continue
        if accept is not None and not accept(K):
            continue
        return K
    raise BudgetExhausted(
        f"no malnormal subgroup of rank {target_rank} found",
        state={"examined": examined, "max_word_length": budget.max_pad_length},
    )
