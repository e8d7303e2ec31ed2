"""Immutable multisets of symbols with a canonical text form.

The canonical form repeats each symbol by its multiplicity in lexicographic
order, e.g. ``{c:2, f:1}`` prints as ``"ccf"``.  When any symbol is longer
than one character, occurrences are joined with single spaces instead
(``"ab ab c"``), and parsing splits on whitespace.  A lone multi-character
symbol with count 1 is therefore ambiguous on parse; validation against the
declared alphabet catches misreads.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Tuple


class Multiset:
    """A frozen mapping from symbols to positive counts."""

    __slots__ = ("_items",)

    def __init__(self, counts: Mapping[str, int] | None = None):
        items = []
        for sym, n in sorted((counts or {}).items()):
            if n < 0:
                raise ValueError(f"negative count for {sym!r}")
            if n > 0:
                items.append((sym, n))
        object.__setattr__(self, "_items", tuple(items))

    def __setattr__(self, name, value):
        raise AttributeError("Multiset is immutable")

    @classmethod
    def from_symbols(cls, symbols: Iterable[str]) -> "Multiset":
        counts: dict[str, int] = {}
        for sym in symbols:
            counts[sym] = counts.get(sym, 0) + 1
        return cls(counts)

    @classmethod
    def from_string(cls, text: str) -> "Multiset":
        text = text.strip()
        if not text:
            return cls()
        if any(ch.isspace() for ch in text):
            return cls.from_symbols(text.split())
        return cls.from_symbols(text)

    def items(self) -> Tuple[Tuple[str, int], ...]:
        return self._items

    def symbols(self) -> Tuple[str, ...]:
        return tuple(sym for sym, _ in self._items)

    def count(self, sym: str) -> int:
        for s, n in self._items:
            if s == sym:
                return n
        return 0

    def size(self) -> int:
        return sum(n for _, n in self._items)

    def is_empty(self) -> bool:
        return not self._items

    def canonical(self) -> str:
        joiner = " " if any(len(s) > 1 for s, _ in self._items) else ""
        return joiner.join(s for s, n in self._items for _ in range(n))

    def scaled(self, k: int) -> "Multiset":
        return Multiset({s: n * k for s, n in self._items})

    def __add__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._items)
        for s, n in other._items:
            counts[s] = counts.get(s, 0) + n
        return Multiset(counts)

    def __sub__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._items)
        for s, n in other._items:
            have = counts.get(s, 0)
            if have < n:
                raise ValueError(f"cannot remove {n} x {s!r}, only {have} present")
            counts[s] = have - n
        return Multiset(counts)

    def __le__(self, other: "Multiset") -> bool:
        return all(other.count(s) >= n for s, n in self._items)

    def __lt__(self, other: "Multiset") -> bool:
        return self.canonical() < other.canonical()

    def __eq__(self, other) -> bool:
        return isinstance(other, Multiset) and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __iter__(self) -> Iterator[Tuple[str, int]]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __repr__(self) -> str:
        return f"Multiset({dict(self._items)!r})"

    def __str__(self) -> str:
        return self.canonical()


EMPTY_MULTISET = Multiset()
