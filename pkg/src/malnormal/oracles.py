"""Brute-force cross-checks. None of these use fiber products; they only
enumerate words and products, and at most ask a subgroup graph for
membership of a single word."""

from __future__ import annotations

from typing import Iterable, Sequence

from .stallings import Subgroup, contains
from .words import Word, invert, multiply, power, words_up_to


def products(gens: Sequence[Word], max_factors: int) -> set[Word]:
    """All products of at most ``max_factors`` generators and inverses."""
    rank = gens[0].rank if gens else 1
    symbols = list(gens) + [invert(g) for g in gens]
    seen = {Word.identity(rank)}
    frontier = {Word.identity(rank)}
    for _ in range(max_factors):
        frontier = {multiply(x, s) for x in frontier for s in symbols} - seen
        seen |= frontier
    return seen


def conjugators_meeting(H: Subgroup, K: Subgroup, max_conj: int, h_elements: Iterable[Word]) -> list[tuple[Word, Word]]:
    """Pairs (g, h) with |g| <= max_conj, h != 1 in the given sample of H and
    g^-1 h g ∈ K; each certifies that H ∩ g K g^-1 is nontrivial."""
    sample = [h for h in h_elements if h]
    found = []
    for g in words_up_to(H.ambient_rank, max_conj):
        gi = invert(g)
        for h in sample:
            if contains(K, multiply(multiply(gi, h), g)):
                found.append((g, h))
                break
    return found


def malnormal_by_search(H: Subgroup, max_conj: int = 6, max_factors: int = 3) -> tuple[bool, Word | None]:
    """(True, None) if no g ∉ H with |g| <= max_conj conjugates a short
    element of H back into H; otherwise (False, shortest such g)."""
    sample = products(list(H.basis()), max_factors)
    for g, _ in conjugators_meeting(H, H, max_conj, sample):
        if not contains(H, g):
            return False, g
    return True, None


def power_conjugate_by_search(g: Word, H: Subgroup, max_exp: int = 8, max_conj: int = 6):
    """Least (n, y) with g^n ∈ y H y^-1, n <= max_exp, |y| <= max_conj."""
    for n in range(1, max_exp + 1):
        gn = power(g, n)
        for y in words_up_to(g.rank, max_conj):
            if contains(H, multiply(multiply(invert(y), gn), y)):
                return n, y
    return None


def random_word(rng, rank: int, length: int) -> Word:
    letters: list[int] = []
    while len(letters) < length:
        x = rng.choice([i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)])
        if letters and letters[-1] == -x:
            continue
        letters.append(x)
    return Word(rank, tuple(letters))


def random_subgroup_gens(rng, rank: int, count: int, max_length: int) -> list[Word]:
    return [random_word(rng, rank, rng.randint(1, max_length)) for _ in range(count)]


def brute_index(gens: Sequence[Word], rank: int, limit: int = 64):
    """Index via Todd-Coxeter style coset enumeration of the Schreier graph,
    computed with sympy; None if it does not close within ``limit`` cosets."""
    from sympy.combinatorics.fp_groups import FpGroup
    from sympy.combinatorics.free_groups import free_group

    F, *xs = free_group(",".join(f"x{i}" for i in range(1, rank + 1)))
    G = FpGroup(F, [])

    def conv(w: Word):
        out = F.identity
        for x in w.letters:
            out *= xs[abs(x) - 1] ** (1 if x > 0 else -1)
        return out

    try:
        C = G.coset_enumeration([conv(g) for g in gens], max_cosets=limit)
    except ValueError:
        return None
    C.compress()
    C.standardize()
    return len(C.table)


def weakly_malnormal_by_search(G, K: Subgroup, A, max_len: int = 5, max_factors: int = 2):
    """Scan g = (w, q) with |w| <= max_len, g ∉ K·A, for a short h ∈ K with
    g^-1 h g ∈ K. Returns (True, None) or (False, offending g)."""
    from .vfree import GElement, in_product

    A = list(A) or [G.identity()]
    sample = [h for h in products(list(K.basis()), max_factors) if h]
    for w in words_up_to(G.rank, max_len):
        for q in range(G.Q.order):
            g = GElement(w, q)
            if in_product(G, K, A, g):
                continue
            gi = G.inv(g)
            if any(contains(K, G.conj_fiber(gi, h)) for h in sample):
                return False, g
    return True, None
