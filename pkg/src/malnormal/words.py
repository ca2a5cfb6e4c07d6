"""Reduced words in a free group of rank m and the operations on them.

A letter is a nonzero int: ``i`` is the i-th basis element, ``-i`` its
inverse. In text, generator i is the i-th lowercase letter and its inverse
is the uppercase letter, so ``"abA"`` is x1 x2 x1^-1.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Iterator, Sequence

from .errors import IndexOutOfRange, ParseError, RankMismatch

MAX_TEXT_RANK = 26


def letter_key(x: int) -> tuple[int, int]:
    """Sort key ordering letters a < A < b < B < ..."""
    return (abs(x), 0 if x > 0 else 1)


def _reduce(letters: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


@dataclass(frozen=True)
class Word:
    """A freely reduced word. Construct with :func:`free_reduce` or
    :meth:`parse`; the constructor itself reduces as well."""

    rank: int
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        if self.rank < 1:
            raise IndexOutOfRange(f"rank must be positive, got {self.rank}")
        for x in self.letters:
            if x == 0 or abs(x) > self.rank:
                raise IndexOutOfRange(f"letter {x} outside rank {self.rank}")
        object.__setattr__(self, "letters", _reduce(self.letters))

    @classmethod
    def parse(cls, text: str, rank: int) -> "Word":
        if rank > MAX_TEXT_RANK:
            raise IndexOutOfRange(f"text format supports rank <= {MAX_TEXT_RANK}")
        letters = []
        for ch in text.strip():
            if ch in string.ascii_lowercase:
                letters.append(ord(ch) - ord("a") + 1)
            elif ch in string.ascii_uppercase:
                letters.append(-(ord(ch) - ord("A") + 1))
            elif ch == "1":  # explicit identity
                continue
            else:
                raise ParseError(f"bad character {ch!r} in word {text!r}")
        return cls(rank, tuple(letters))

    @classmethod
    def identity(cls, rank: int) -> "Word":
        return cls(rank, ())

    @classmethod
    def generator(cls, rank: int, i: int) -> "Word":
        return cls(rank, (i,))

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        """Letters as (generator index, sign) pairs."""
        return tuple((abs(x), 1 if x > 0 else -1) for x in self.letters)

    def __str__(self) -> str:
        out = []
        for x in self.letters:
            if abs(x) > MAX_TEXT_RANK:
                raise IndexOutOfRange(f"letter {x} has no text form")
            ch = chr(ord("a") + abs(x) - 1)
            out.append(ch if x > 0 else ch.upper())
        return "".join(out)

    def __repr__(self) -> str:
        try:
            return f"Word({str(self) or '1'!r}, rank={self.rank})"
        except IndexOutOfRange:
            return f"Word({self.letters!r}, rank={self.rank})"

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __invert__(self) -> "Word":
        return invert(self)

    def __pow__(self, n: int) -> "Word":
        return power(self, n)

    def sort_key(self):
        """Shortlex key: total length first, then letterwise a < A < b < ..."""
        return (len(self.letters), tuple(letter_key(x) for x in self.letters))

    def __lt__(self, other: "Word") -> bool:
        return self.sort_key() < other.sort_key()


def _check_ranks(*words: Word) -> int:
    ranks = {w.rank for w in words}
    if len(ranks) != 1:
        raise RankMismatch(f"words of different ranks: {sorted(ranks)}")
    return ranks.pop()


def free_reduce(raw: Sequence, rank: int) -> Word:
    """Free reduction of a sequence of letters.

    Letters may be signed ints or (index, sign) pairs.
    """
    letters = []
    for x in raw:
        if isinstance(x, tuple):
            i, s = x
            if s not in (1, -1):
                raise IndexOutOfRange(f"sign must be +-1, got {s}")
            x = i * s
        letters.append(x)
    return Word(rank, tuple(letters))


def multiply(u: Word, v: Word) -> Word:
    rank = _check_ranks(u, v)
    return Word(rank, u.letters + v.letters)


def invert(u: Word) -> Word:
    return Word(u.rank, tuple(-x for x in reversed(u.letters)))


def power(u: Word, n: int) -> Word:
    if n < 0:
        return power(invert(u), -n)
    return Word(u.rank, u.letters * n)


def conjugate(w: Word, by: Word) -> Word:
    """by * w * by^-1"""
    return multiply(multiply(by, w), invert(by))


def is_reduced_product(u: Word, v: Word) -> bool:
    """True iff nothing cancels when u and v are concatenated."""
    _check_ranks(u, v)
    return not (u.letters and v.letters and u.letters[-1] == -v.letters[0])


def is_cyclically_reduced(w: Word) -> bool:
    return len(w) < 2 or w.letters[0] != -w.letters[-1]


@dataclass(frozen=True)
class CyclicDecomposition:
    conjugator: Word
    core: Word


def cyclic_reduce(w: Word) -> CyclicDecomposition:
    """Write w = u c u^-1 with c cyclically reduced and u as short as possible."""
    letters = w.letters
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == -letters[j]:
        i += 1
        j -= 1
    return CyclicDecomposition(
        Word(w.rank, letters[:i]), Word(w.rank, letters[i : j + 1])
    )


def primitive_root(w: Word) -> tuple[Word, int]:
    """(r, n) with w = r^n and r not a proper power; (1, 0) for the identity."""
    if not w:
        return w, 0
    dec = cyclic_reduce(w)
    u, c = dec.conjugator, dec.core.letters
    n = len(c)
    for d in range(1, n + 1):
        if n % d == 0 and c[:d] * (n // d) == c:
            root = Word(w.rank, u.letters + c[:d] + tuple(-x for x in reversed(u.letters)))
            return root, n // d
    raise AssertionError("unreachable")


def is_proper_power(w: Word) -> bool:
    return primitive_root(w)[1] > 1


def iota(w: Word) -> Word:
    """Image under the automorphism inverting every basis letter."""
    return Word(w.rank, tuple(-x for x in w.letters))


def commutator_square(s: Word) -> Word:
    """s * iota(s), which always lies in the commutator subgroup."""
    return multiply(s, iota(s))


def abelianize(w: Word) -> tuple[int, ...]:
    vec = [0] * w.rank
    for x in w.letters:
        vec[abs(x) - 1] += 1 if x > 0 else -1
    return tuple(vec)


def in_commutator_subgroup(w: Word) -> bool:
    return not any(abelianize(w))


def format_vector(vec: Sequence[int]) -> str:
    return "(" + ",".join(str(int(c)) for c in vec) + ")"


def apply_map(w: Word, images: Sequence[Word]) -> Word:
    """Image of w under the endomorphism sending generator i to images[i-1]."""
    if len(images) != w.rank:
        raise RankMismatch(f"need {w.rank} images, got {len(images)}")
    rank = _check_ranks(*images)
    out: list[int] = []
    for x in w.letters:
        img = images[abs(x) - 1].letters
        out.extend(img if x > 0 else (-y for y in reversed(img)))
    return Word(rank, tuple(out))


def reduced_words(rank: int, length: int) -> Iterator[Word]:
    """All reduced words of exactly the given length, in shortlex order."""
    alphabet = sorted(
        [i for i in range(1, rank + 1)] + [-i for i in range(1, rank + 1)],
        key=letter_key,
    )

    def extend(prefix: list[int], left: int):
        if left == 0:
            yield Word(rank, tuple(prefix))
            return
        for x in alphabet:
            if prefix and prefix[-1] == -x:
                continue
            prefix.append(x)
            yield from extend(prefix, left - 1)
            prefix.pop()

    yield from extend([], length)


def words_up_to(rank: int, max_length: int) -> Iterator[Word]:
    for n in range(max_length + 1):
        yield from reduced_words(rank, n)


@dataclass(frozen=True)
class BoundaryPoint:
    """The eventually periodic ray prefix * period * period * ... from 1."""

    prefix: Word
    period: Word

    def __post_init__(self):
        _check_ranks(self.prefix, self.period)
        if not self.period:
            raise ValueError("period must be nontrivial")
        if not is_cyclically_reduced(self.period):
            raise ValueError(f"period {self.period} is not cyclically reduced")
        if not is_reduced_product(self.prefix, self.period):
            raise ValueError("prefix and period cancel")

    @classmethod
    def of_element(cls, g: Word) -> "BoundaryPoint":
        """The attracting fixed point g^infinity of a nontrivial element."""
        dec = cyclic_reduce(g)
        if not dec.core:
            raise ValueError("the identity has no fixed point at infinity")
        u, c = dec.conjugator, dec.core
        # g^n = u c^n u^-1; the ray starts u c c c ... after cancelling into u
        return cls(u, c).canonical()

    def canonical(self) -> "BoundaryPoint":
        """Shortest prefix and period describing the same ray."""
        prefix, period = list(self.prefix.letters), list(self.period.letters)
        # shrink period to its primitive root
        n = len(period)
        for d in range(1, n + 1):
            if n % d == 0 and period[:d] * (n // d) == period:
                period = period[:d]
                break
        # absorb trailing prefix letters into a rotated period
        while prefix and prefix[-1] == period[-1]:
            prefix.pop()
            period = period[-1:] + period[:-1]
        rank = self.prefix.rank
        return BoundaryPoint(Word(rank, tuple(prefix)), Word(rank, tuple(period)))

    def letter(self, i: int) -> int:
        p = self.prefix.letters
        if i < len(p):
            return p[i]
        c = self.period.letters
        return c[(i - len(p)) % len(c)]

    def take(self, n: int) -> Word:
        return Word(self.prefix.rank, tuple(self.letter(i) for i in range(n)))


def overlap_length(p: BoundaryPoint, q: BoundaryPoint) -> int | None:
    """Length of the common initial segment of two rays; None if they are equal."""
    _check_ranks(p.prefix, q.prefix)
    # agreement past this horizon forces agreement forever
    horizon = max(len(p.prefix), len(q.prefix)) + lcm(len(p.period), len(q.period))
    for i in range(horizon):
        if p.letter(i) != q.letter(i):
            return i
    return None


def boundary_distance(p: BoundaryPoint, q: BoundaryPoint) -> Fraction:
    n = overlap_length(p, q)
    return Fraction(0) if n is None else Fraction(1, 2**n)
