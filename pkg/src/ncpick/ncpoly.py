"""Free words and noncommutative polynomials evaluated on matrix tuples.

Letters are 1-based (``1..d``) as in the usual ``x_1, ..., x_d`` notation; a
word is a tuple of letters and the empty tuple is the empty word.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Mapping

import numpy as np

Word = tuple[int, ...]
EMPTY: Word = ()


def _mats(X) -> np.ndarray:
    mats = getattr(X, "mats", X)
    return np.asarray(mats, dtype=np.complex128)


def _check_letters(w: Word, d: int) -> None:
    for letter in w:
        if not 1 <= letter <= d:
            raise ValueError(f"letter {letter} out of range 1..{d}")


def eval_word(w: Word, X) -> np.ndarray:
    """``X^w = X_{w[0]} X_{w[1]} ...``; the empty word gives the identity."""
    mats = _mats(X)
    d, n = mats.shape[0], mats.shape[1]
    _check_letters(w, d)
    out = np.eye(n, dtype=np.complex128)
    for letter in w:
        out = out @ mats[letter - 1]
    return out


def words_up_to(d: int, L: int) -> list[Word]:
    """All words of length ``<= L`` in length-then-lexicographic order."""
    if d < 1 or L < 0:
        raise ValueError("need d >= 1 and L >= 0")
    out: list[Word] = []
    for k in range(L + 1):
        out.extend(product(range(1, d + 1), repeat=k))
    return out


def words_count(d: int, L: int) -> int:
    return L + 1 if d == 1 else (d ** (L + 1) - 1) // (d - 1)


class WordEvaluator:
    """Memoised ``X^w`` over a prefix-closed word set.

    Each new word costs one matrix product (its prefix is already cached).
    """

    def __init__(self, X):
        self.mats = _mats(X)
        self.d, self.n = self.mats.shape[0], self.mats.shape[1]
        self._cache: dict[Word, np.ndarray] = {EMPTY: np.eye(self.n, dtype=np.complex128)}

    def __call__(self, w: Word) -> np.ndarray:
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        _check_letters(w, self.d)
        val = self(w[:-1]) @ self.mats[w[-1] - 1]
        self._cache[w] = val
        return val

    def iter_words(self, L: int) -> Iterator[tuple[Word, np.ndarray]]:
        for w in words_up_to(self.d, L):
            yield w, self(w)


def level_products(X, L: int) -> Iterator[np.ndarray]:
    """Yield the stacked ``X^w`` for ``|w| = 0, 1, ..., L`` in lexicographic order.

    Level ``k`` is an array of shape ``(d**k, n, n)``.
    """
    mats = _mats(X)
    d, n = mats.shape[0], mats.shape[1]
    level = np.eye(n, dtype=np.complex128)[None]
    yield level
    for _ in range(L):
        level = np.einsum("wij,ajk->waik", level, mats).reshape(-1, n, n)
        yield level


@dataclass
class NcPoly:
    """Finite linear combination of words in ``d`` letters."""

    d: int
    terms: dict[Word, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[Word, complex] = {}
        for w, c in self.terms.items():
            w = tuple(int(x) for x in w)
            _check_letters(w, self.d)
            c = complex(c)
            if c != 0:
                clean[w] = clean.get(w, 0) + c
        self.terms = {w: c for w, c in clean.items() if c != 0}

    @classmethod
    def constant(cls, d: int, c: complex = 1.0) -> "NcPoly":
        return cls(d, {EMPTY: c})

    @classmethod
    def letter(cls, d: int, i: int, c: complex = 1.0) -> "NcPoly":
        return cls(d, {(i,): c})

    @classmethod
    def from_items(cls, d: int, items: Iterable[tuple[Word, complex]] | Mapping) -> "NcPoly":
        if isinstance(items, Mapping):
            items = items.items()
        acc: dict[Word, complex] = {}
        for w, c in items:
            acc[tuple(w)] = acc.get(tuple(w), 0) + c
        return cls(d, acc)

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def _same_d(self, other: "NcPoly") -> None:
        if other.d != self.d:
            raise ValueError(f"letter counts differ: {self.d} vs {other.d}")

    def __add__(self, other: "NcPoly") -> "NcPoly":
        self._same_d(other)
        acc = dict(self.terms)
        for w, c in other.terms.items():
            acc[w] = acc.get(w, 0) + c
        return NcPoly(self.d, acc)

    def __neg__(self) -> "NcPoly":
        return NcPoly(self.d, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "NcPoly") -> "NcPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, NcPoly):
            self._same_d(other)
            acc: dict[Word, complex] = {}
            for u, a in self.terms.items():
                for v, b in other.terms.items():
                    acc[u + v] = acc.get(u + v, 0) + a * b
            return NcPoly(self.d, acc)
        return NcPoly(self.d, {w: c * other for w, c in self.terms.items()})

    def __rmul__(self, scalar):
        return NcPoly(self.d, {w: scalar * c for w, c in self.terms.items()})

    def __call__(self, X) -> np.ndarray:
        return eval_poly(self, X)


def eval_poly(p: NcPoly, X) -> np.ndarray:
    """``sum_w coeff(w) X^w``."""
    mats = _mats(X)
    if mats.shape[0] != p.d:
        raise ValueError(f"polynomial has {p.d} letters, tuple has {mats.shape[0]}")
    ev = WordEvaluator(mats)
    out = np.zeros((ev.n, ev.n), dtype=np.complex128)
    for w, c in p.terms.items():
        out += c * ev(w)
    return out


def random_poly(d: int, degree: int, rng: np.random.Generator, density: float = 0.5) -> NcPoly:
    """Random polynomial of exact degree ``degree`` with complex Gaussian coefficients."""
    words = words_up_to(d, degree)
    terms = {}
    for w in words:
        if rng.random() < density:
            terms[w] = complex(rng.standard_normal(), rng.standard_normal())
    if not any(len(w) == degree for w in terms):
        terms[(1,) * degree] = 1.0
    return NcPoly(d, terms)
