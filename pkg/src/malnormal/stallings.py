"""Subgroup graphs (Stallings automata) for finitely generated subgroups of
free groups, and the decision procedures built from their fiber products.

A graph is stored as one ``{letter: target}`` dict per vertex; every edge is
recorded in both directions (``u -x-> v`` and ``v -(-x)-> u``). Graphs are
always folded, trimmed to the core around the base, and renumbered by a
breadth-first walk from the base that tries letters in the order
a, A, b, B, ... so two graphs are equal exactly when their subgroups are.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import RankMismatch, TrivialElement, TrivialSubgroup
from .words import (
    Word,
    apply_map,
    conjugate,
    cyclic_reduce,
    invert,
    letter_key,
    multiply,
)

INFINITE = math.inf


def _letters(rank: int) -> list[int]:
    return sorted(
        [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)],
        key=letter_key,
    )


def _fold(n: int, raw_edges: Iterable[tuple[int, int, int]], base):
    """Fold a labelled graph on vertices 0..n-1. Returns (out, base) with
    ``out`` a dict of vertex -> {letter: vertex} over surviving vertices and
    ``base`` mapped to its surviving vertex (or a tuple of marked vertices,
    each mapped)."""
    parent = list(range(n))
    out: list[dict[int, int]] = [dict() for _ in range(n)]
    pending: list[tuple[int, int]] = []

    def find(v):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    def attach(u, x, v):
        t = out[u].get(x)
        if t is None:
            out[u][x] = v
        else:
            pending.append((t, v))

    def drain():
        while pending:
            a, b = pending.pop()
            a, b = find(a), find(b)
            if a == b:
                continue
            if len(out[a]) < len(out[b]):
                a, b = b, a
            parent[b] = a
            moved, out[b] = out[b], {}
            for x, t in moved.items():
                attach(a, x, t)

    for u, x, v in raw_edges:
        attach(find(u), x, find(v))
        attach(find(v), -x, find(u))
        drain()

    roots = {find(v) for v in range(n)}
    folded = {r: {x: find(t) for x, t in out[r].items()} for r in roots}
    if isinstance(base, tuple):
        return folded, tuple(find(b) for b in base)
    return folded, find(base)


def _trim(out: dict[int, dict[int, int]], base: int | None):
    """Remove hanging trees. The base (if given) is never removed."""
    out = {v: dict(e) for v, e in out.items()}
    stack = [v for v, e in out.items() if len(e) <= 1 and v != base]
    while stack:
        v = stack.pop()
        if v not in out or v == base or len(out[v]) > 1:
            continue
        for x, t in out.pop(v).items():
            if t in out:
                del out[t][-x]
                if len(out[t]) <= 1 and t != base:
                    stack.append(t)
    return out


class StallingsGraph:
    """Folded based core graph. Vertices are 0..n-1 with base 0."""

    __slots__ = ("rank", "out", "_tree")

    def __init__(self, rank: int, out: Sequence[dict[int, int]]):
        self.rank = rank
        self.out = tuple(out)
        self._tree = None

    base = 0

    @classmethod
    def from_raw(cls, rank, n, raw_edges, base=0) -> "StallingsGraph":
        folded, base = _fold(n, raw_edges, base)
        return cls.from_folded(rank, folded, base)

    @classmethod
    def from_folded(cls, rank, out, base) -> "StallingsGraph":
        """Trim and renumber an already folded graph."""
        out = _trim(out, base)
        order = {base: 0}
        queue = deque([base])
        while queue:
            v = queue.popleft()
            for x in sorted(out[v], key=letter_key):
                t = out[v][x]
                if t not in order:
                    order[t] = len(order)
                    queue.append(t)
        new = [dict() for _ in order]
        for v, i in order.items():
            new[i] = {x: order[t] for x, t in sorted(out[v].items(), key=lambda e: letter_key(e[0]))}
        return cls(rank, new)

    def __len__(self) -> int:
        return len(self.out)

    @property
    def num_edges(self) -> int:
        return sum(1 for e in self.out for x in e if x > 0)

    def key(self):
        return (self.rank, tuple(tuple(sorted(e.items())) for e in self.out))

    def __eq__(self, other) -> bool:
        return isinstance(other, StallingsGraph) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"StallingsGraph(rank={self.rank}, vertices={len(self)}, edges={self.num_edges})"

    def read(self, w: Word, start: int = 0) -> int | None:
        """End vertex of the path labelled w from ``start``, or None."""
        v = start
        for x in w.letters:
            v = self.out[v].get(x)
            if v is None:
                return None
        return v

    def _spanning_tree(self):
        if self._tree is None:
            paths = {0: ()}
            tree_edges = set()
            queue = deque([0])
            while queue:
                v = queue.popleft()
                for x in sorted(self.out[v], key=letter_key):
                    t = self.out[v][x]
                    if t not in paths:
                        paths[t] = paths[v] + (x,)
                        tree_edges.add((v, x))
                        tree_edges.add((t, -x))
                        queue.append(t)
            labels = {}
            basis = []
            for v in range(len(self)):
                for x in sorted(self.out[v], key=letter_key):
                    if x < 0 or (v, x) in tree_edges:
                        continue
                    t = self.out[v][x]
                    basis.append(
                        Word(self.rank, paths[v] + (x,) + tuple(-y for y in reversed(paths[t])))
                    )
                    labels[(v, x)] = len(basis)
                    labels[(t, -x)] = -len(basis)
            self._tree = (paths, labels, tuple(basis))
        return self._tree

    def path_to(self, v: int) -> Word:
        """Label of the breadth-first tree path from the base to v."""
        return Word(self.rank, self._spanning_tree()[0][v])

    def basis(self) -> tuple[Word, ...]:
        return self._spanning_tree()[2]

    def cyclic_core(self) -> set[int]:
        """Vertices on cycles or between them (the base may be dropped)."""
        return set(_trim({v: dict(e) for v, e in enumerate(self.out)}, None))

    def is_complete(self) -> bool:
        return all(len(e) == 2 * self.rank for e in self.out)

    def to_dict(self) -> dict:
        edges = []
        for v, e in enumerate(self.out):
            for x in sorted(e, key=letter_key):
                if x > 0:
                    edges.append([v, str(Word(self.rank, (x,))), e[x]])
        return {"rank": self.rank, "vertices": len(self), "base": 0, "edges": edges}

    @classmethod
    def from_dict(cls, data: dict) -> "StallingsGraph":
        rank = data["rank"]
        raw = [(u, Word.parse(x, rank).letters[0], v) for u, x, v in data["edges"]]
        return cls.from_raw(rank, max(data["vertices"], 1), raw, data.get("base", 0))


@dataclass(frozen=True, eq=False)
class Subgroup:
    """A finitely generated subgroup of the free group of rank ``ambient_rank``.

    ``generators`` are as given by the caller; ``graph`` is the folded core.
    Equality compares graphs, i.e. the subgroups themselves.
    """

    ambient_rank: int
    generators: tuple[Word, ...]
    graph: StallingsGraph = field(repr=False)

    def __eq__(self, other) -> bool:
        return isinstance(other, Subgroup) and self.graph == other.graph

    def __hash__(self) -> int:
        return hash(self.graph)

    def basis(self) -> tuple[Word, ...]:
        return self.graph.basis()

    def contains(self, w: Word) -> bool:
        return contains(self, w)

    def __contains__(self, w: Word) -> bool:
        return contains(self, w)

    def free_rank(self) -> int:
        return rank(self)

    def index(self):
        return index(self)

    def is_trivial(self) -> bool:
        return len(self.graph) == 1 and not self.graph.out[0]

    def __str__(self) -> str:
        gens = ", ".join(str(g) or "1" for g in self.generators)
        return f"<{gens}>"


def build(generators: Sequence[Word], rank: int | None = None) -> Subgroup:
    """Subgroup generated by the given words."""
    generators = tuple(generators)
    ranks = {g.rank for g in generators}
    if rank is not None:
        ranks.add(rank)
    if len(ranks) != 1:
        raise RankMismatch(f"generators of different ranks: {sorted(ranks)}")
    m = ranks.pop()
    raw = []
    n = 1
    for g in generators:
        letters = g.letters
        if not letters:
            continue
        prev = 0
        for i, x in enumerate(letters):
            if i == len(letters) - 1:
                nxt = 0
            else:
                nxt = n
                n += 1
            raw.append((prev, x, nxt))
            prev = nxt
    graph = StallingsGraph.from_raw(m, n, raw)
    return Subgroup(m, generators, graph)


def from_graph(graph: StallingsGraph) -> Subgroup:
    return Subgroup(graph.rank, graph.basis(), graph)


def trivial_subgroup(rank: int) -> Subgroup:
    return build([], rank=rank)


def whole_group(rank: int) -> Subgroup:
    return build([Word.generator(rank, i) for i in range(1, rank + 1)])


def _same_rank(H: Subgroup, K: Subgroup) -> None:
    if H.ambient_rank != K.ambient_rank:
        raise RankMismatch(f"subgroups of F{H.ambient_rank} and F{K.ambient_rank}")


def contains(H: Subgroup, w: Word) -> bool:
    if w.rank != H.ambient_rank:
        raise RankMismatch(f"word of rank {w.rank} against subgroup of F{H.ambient_rank}")
    return H.graph.read(w) == 0


def rank(H: Subgroup) -> int:
    g = H.graph
    return g.num_edges - len(g) + 1


def index(H: Subgroup):
    """[F : H] as an int, or INFINITE."""
    return len(H.graph) if H.graph.is_complete() else INFINITE


def express(H: Subgroup, w: Word) -> Word | None:
    """Coordinates of w in the free basis ``H.basis()`` (a word of rank
    ``rank(H)``), or None when w is not in H."""
    g = H.graph
    _, labels, _ = g._spanning_tree()
    v = 0
    out = []
    for x in w.letters:
        t = g.out[v].get(x)
        if t is None:
            return None
        lab = labels.get((v, x))
        if lab is not None:
            out.append(lab)
        v = t
    if v != 0:
        return None
    return Word(max(rank(H), 1), tuple(out))


def relative_index(H: Subgroup, K: Subgroup):
    """[H : K] for K <= H, as an int or INFINITE."""
    _same_rank(H, K)
    r = rank(H)
    if r == 0:
        return 1
    coords = []
    for k in K.basis():
        c = express(H, k)
        if c is None:
            raise ValueError(f"{k} is not in {H}")
        coords.append(c)
    return index(build(coords, rank=r))


def is_subgroup_of(K: Subgroup, H: Subgroup) -> bool:
    return all(contains(H, k) for k in K.basis())


def in_double_coset(H: Subgroup, w: Word, K: Subgroup, g: Word) -> bool:
    """g ∈ H w K, decided on the folding of graph(H) with a path labelled w
    from its base and graph(K) hung at the end of that path."""
    _same_rank(H, K)
    g1, g2 = H.graph, K.graph
    n1 = len(g1)
    raw = [(v, x, t) for v, e in enumerate(g1.out) for x, t in e.items() if x > 0]
    n = n1
    end = 0
    for x in w.letters:
        raw.append((end, x, n))
        end, n = n, n + 1
    relabel = {v: (end if v == 0 else n + v - 1) for v in range(len(g2))}
    raw += [(relabel[v], x, relabel[t]) for v, e in enumerate(g2.out) for x, t in e.items() if x > 0]
    n += len(g2) - 1
    folded, roots = _fold(n, raw, (0, end))
    v = roots[0]
    for x in g.letters:
        v = folded[v].get(x)
        if v is None:
            return False
    return v == roots[1]


def conjugate_subgroup(K: Subgroup, w: Word) -> Subgroup:
    """w K w^-1"""
    return build([conjugate(k, w) for k in K.basis()], rank=K.ambient_rank)


def _product_graph(g1: StallingsGraph, g2: StallingsGraph, starts, allowed1=None, allowed2=None):
    """Vertex pairs reachable from ``starts`` and their edges in the fiber
    product, optionally restricted to allowed vertex subsets."""
    out: dict[tuple[int, int], dict[int, tuple[int, int]]] = {}
    stack = list(starts)
    for s in stack:
        out[s] = {}
    while stack:
        u, v = stack.pop()
        e1, e2 = g1.out[u], g2.out[v]
        for x, t1 in e1.items():
            t2 = e2.get(x)
            if t2 is None:
                continue
            if allowed1 is not None and (t1 not in allowed1 or t2 not in allowed2):
                continue
            t = (t1, t2)
            out[(u, v)][x] = t
            if t not in out:
                out[t] = {}
                stack.append(t)
    return out


def based_intersection(H: Subgroup, K: Subgroup) -> Subgroup:
    """H ∩ K, read off the component of the fiber product through (base, base)."""
    _same_rank(H, K)
    prod = _product_graph(H.graph, K.graph, [(0, 0)])
    return from_graph(StallingsGraph.from_folded(H.ambient_rank, prod, (0, 0)))


@dataclass(frozen=True)
class FiberComponent:
    witness: Word
    intersection: Subgroup
    left_covering: bool
    right_covering: bool
    trivial: bool
    size: int = 0

    @property
    def rank(self) -> int:
        return rank(self.intersection)

    @property
    def bicovering(self) -> bool:
        return self.left_covering and self.right_covering


def _raw_components(H: Subgroup, K: Subgroup):
    """Components of the product of the cyclic cores, each as
    (adjacency dict, cycle rank), in order of their least vertex pair."""
    g1, g2 = H.graph, K.graph
    c1, c2 = g1.cyclic_core(), g2.cyclic_core()
    seen: set[tuple[int, int]] = set()
    for u in sorted(c1):
        for v in sorted(c2):
            if (u, v) in seen:
                continue
            comp = _product_graph(g1, g2, [(u, v)], c1, c2)
            seen.update(comp)
            edges = sum(1 for e in comp.values() for x in e if x > 0)
            yield comp, edges - len(comp) + 1


def conjugate_intersections(H: Subgroup, K: Subgroup) -> list[FiberComponent]:
    """One entry per component of the fiber product of the cyclic cores of H
    and K. A component with a cycle corresponds to a double coset HwK with
    H ∩ wKw^-1 nontrivial; ``witness`` is such a w."""
    _same_rank(H, K)
    return [_component(H, K, comp, r) for comp, r in _raw_components(H, K)]


def count_nontrivial_components(H: Subgroup, K: Subgroup) -> int:
    _same_rank(H, K)
    return sum(1 for _, r in _raw_components(H, K) if r > 0)


def _component(H: Subgroup, K: Subgroup, comp, cycle_rank: int) -> FiberComponent:
    g1, g2 = H.graph, K.graph
    witness = min(
        (multiply(g1.path_to(u), invert(g2.path_to(v))) for u, v in comp),
        key=Word.sort_key,
    )
    if cycle_rank == 0:
        return FiberComponent(witness, trivial_subgroup(H.ambient_rank), False, False, True, len(comp))
    inter = based_intersection(H, conjugate_subgroup(K, witness))
    if rank(inter) != cycle_rank:
        raise AssertionError("fiber component rank disagrees with intersection")
    left = relative_index(H, inter) != INFINITE
    back = conjugate_subgroup(inter, invert(witness))
    right = relative_index(K, back) != INFINITE
    return FiberComponent(witness, inter, left, right, False, len(comp))


@dataclass(frozen=True)
class MalnormalityReport:
    verdict: bool
    offenders: tuple[FiberComponent, ...]

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "offenders": [
                {"witness": str(c.witness), "rank": c.rank} for c in self.offenders
            ],
        }


def is_malnormal(H: Subgroup) -> MalnormalityReport:
    if H.is_trivial():
        raise TrivialSubgroup("malnormality is only decided for nontrivial subgroups")
    # only the diagonal component carries a cycle
    if count_nontrivial_components(H, H) == 1:
        return MalnormalityReport(True, ())
    offenders = tuple(
        c
        for c in conjugate_intersections(H, H)
        if not c.trivial and not contains(H, c.witness)
    )
    return MalnormalityReport(not offenders, offenders)


@dataclass(frozen=True)
class PowerConjugacy:
    found: bool
    exponent: int | None = None
    conjugator: Word | None = None


def power_conjugates_into(g: Word, H: Subgroup) -> PowerConjugacy:
    """Decide whether g^n ∈ y H y^-1 for some n >= 1 and some y.

    With g = u c u^-1 and c cyclically reduced, this happens exactly when
    some power of c reads a closed loop in the graph of H. The map
    "read c from v" is injective on vertices, so each orbit is a cycle and
    the first return to v gives the least exponent for that vertex.
    """
    if g.rank != H.ambient_rank:
        raise RankMismatch("element and subgroup of different ranks")
    if not g:
        raise TrivialElement("the identity has every power in every subgroup")
    dec = cyclic_reduce(g)
    u, c = dec.conjugator, dec.core
    graph = H.graph
    best = None
    for v in range(len(graph)):
        t, n = v, 0
        while True:
            t = graph.read(c, t)
            if t is None:
                break
            n += 1
            if t == v:
                break
        if t != v:
            continue
        y = multiply(u, invert(graph.path_to(v)))
        cand = (n, y.sort_key(), y)
        if best is None or cand[:2] < best[:2]:
            best = cand
    if best is None:
        return PowerConjugacy(False)
    return PowerConjugacy(True, best[0], best[2])


def image_under_map(H: Subgroup, images: Sequence[Word]) -> Subgroup:
    return build([apply_map(g, images) for g in H.generators], rank=images[0].rank)


def is_automorphism(images: Sequence[Word]) -> bool:
    """Surjectivity is enough: a surjective endomorphism of a finitely
    generated free group is injective (free groups are Hopfian)."""
    images = list(images)
    if not images:
        return False
    m = images[0].rank
    if len(images) != m:
        raise RankMismatch(f"an endomorphism of F{m} needs {m} images")
    return index(build(images)) == 1


@dataclass(frozen=True)
class CommensuratorResult:
    subgroup: Subgroup
    index_of_H: int
    witnesses: tuple[Word, ...]

    def to_dict(self) -> dict:
        return {
            "generators": [str(b) for b in self.subgroup.basis()],
            "index_of_H": self.index_of_H,
            "witnesses": [str(w) for w in self.witnesses],
            "graph": self.subgroup.graph.to_dict(),
        }


def commensurator_in_free(H: Subgroup, verify: bool = True) -> CommensuratorResult:
    """Comm(H) in the ambient free group, generated by H together with one
    witness from each doubly covering component off the diagonal."""
    if H.is_trivial():
        raise TrivialSubgroup("the commensurator is only computed for nontrivial subgroups")
    witnesses = tuple(
        c.witness
        for c in conjugate_intersections(H, H)
        if not c.trivial and c.bicovering and not contains(H, c.witness)
    )
    C = build(list(H.basis()) + list(witnesses), rank=H.ambient_rank)
    idx = relative_index(C, H)
    if idx == INFINITE:
        raise AssertionError(f"{H} has infinite index in its commensurator")
    if verify:
        again = commensurator_in_free(C, verify=False)
        if again.subgroup != C:
            raise AssertionError("commensurator is not self-commensurated")
    return CommensuratorResult(C, idx, witnesses)
