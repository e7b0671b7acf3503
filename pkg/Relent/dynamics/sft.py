"""Finite directed-graph presentations of 1-step subshifts of finite type.

Symbols are opaque strings mapped to dense indices when a system is built;
every computation below works on indices and on the 0/1 adjacency matrix.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from Relent.vars import Var
from .exceptions import (
    DisallowedWord,
    EnumerationCapExceeded,
    InvalidParameter,
    InvalidSystem,
)

LOGGER = logging.getLogger(__name__)

Word = Tuple[int, ...]


def join_names(names: Sequence[str]) -> str:
    """Spell a sequence of symbol names, using a space when names are multi-character."""
    if all(len(name) == 1 for name in names):
        return "".join(names)
    return " ".join(names)


@dataclass(frozen=True, eq=False)
class Sft:
    alphabet: Tuple[str, ...]
    adjacency: np.ndarray

    def __post_init__(self):
        names = tuple(str(name) for name in self.alphabet)
        if len(set(names)) != len(names):
            raise InvalidSystem("Alphabet names must be unique")
        matrix = np.asarray(self.adjacency)
        if matrix.size == 0:
            matrix = np.zeros((len(names), len(names)), dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape != (len(names), len(names)):
            raise InvalidSystem(
                f"Adjacency shape {matrix.shape} does not match {len(names)} symbols"
            )
        if np.all(np.equal(np.mod(matrix, 1), 0)):
            matrix = matrix.astype(np.int64)
        matrix = matrix.copy()
        matrix.setflags(write=False)
        object.__setattr__(self, "alphabet", names)
        object.__setattr__(self, "adjacency", matrix)

    @classmethod
    def from_edges(cls, alphabet: Sequence[str], edges: Iterable[Tuple[str, str]]) -> "Sft":
        names = tuple(alphabet)
        index = {name: i for i, name in enumerate(names)}
        matrix = np.zeros((len(names), len(names)), dtype=np.int64)
        for source, target in edges:
            try:
                matrix[index[source], index[target]] = 1
            except KeyError as e:
                raise InvalidSystem(f"Edge uses unknown symbol {e.args[0]!r}")
        return cls(names, matrix)

    def __eq__(self, other):
        if not isinstance(other, Sft):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.alphabet, self.adjacency.tobytes()))

    def __repr__(self):
        return f"Sft({len(self.alphabet)} symbols, {int(np.count_nonzero(self.adjacency))} edges)"

    @property
    def size(self) -> int:
        return len(self.alphabet)

    @cached_property
    def index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.alphabet)}

    def symbol(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise DisallowedWord(f"Unknown symbol {name!r}")

    def edges(self) -> List[Tuple[int, int]]:
        rows, cols = np.nonzero(self.adjacency)
        return list(zip(rows.tolist(), cols.tolist()))

    def successors(self, i: int) -> Tuple[int, ...]:
        return tuple(np.flatnonzero(self.adjacency[i]).tolist())

    def is_allowed(self, word: Sequence[int]) -> bool:
        if len(word) == 0:
            return False
        if any(s < 0 or s >= self.size for s in word):
            return False
        return all(self.adjacency[a, b] == 1 for a, b in zip(word, word[1:]))

    def parse_word(self, text: str) -> Word:
        """Read a word written with spaces between symbols, or run together when unambiguous."""
        text = text.strip()
        if not text:
            raise DisallowedWord("Empty word")
        if any(ch.isspace() for ch in text):
            return tuple(self.symbol(token) for token in text.split())
        by_length = sorted(self.alphabet, key=len, reverse=True)
        word, position = [], 0
        while position < len(text):
            for name in by_length:
                if text.startswith(name, position):
                    word.append(self.index[name])
                    position += len(name)
                    break
            else:
                raise DisallowedWord(f"Cannot read {text[position:]!r} over {self.alphabet}")
        return tuple(word)

    def spell(self, word: Sequence[int]) -> str:
        return join_names([self.alphabet[s] for s in word])

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.size))
        g.add_edges_from(self.edges())
        return g


@dataclass(frozen=True)
class PeriodicOrbit:
    period_block: Word

    @property
    def period(self) -> int:
        return len(self.period_block)

    def rotate(self, shift: int) -> "PeriodicOrbit":
        shift %= self.period
        return PeriodicOrbit(self.period_block[shift:] + self.period_block[:shift])

    def symbol_counts(self, size: int) -> np.ndarray:
        return np.bincount(np.asarray(self.period_block, dtype=np.int64), minlength=size)


@dataclass
class Diagnostics:
    valid: bool = True
    warnings: List[str] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)

    def warn(self, text: str) -> None:
        self.warnings.append(text)

    def fail(self, text: str) -> None:
        self.valid = False
        self.errors.append(text)

    def as_dict(self) -> dict:
        return {"valid": self.valid, "warnings": list(self.warnings), "errors": list(self.errors)}


@dataclass(frozen=True, eq=False)
class Component:
    symbols: Tuple[int, ...]
    sft: Sft
    trivial: bool


def validate(sft: Sft) -> Diagnostics:
    report = Diagnostics()
    if sft.size == 0:
        report.fail("empty alphabet")
        return report
    matrix = sft.adjacency
    bad = np.argwhere((matrix != 0) & (matrix != 1))
    for i, j in bad.tolist():
        report.fail(f"entry {sft.alphabet[i]}->{sft.alphabet[j]} is {matrix[i, j]}, expected 0 or 1")
    support = (matrix != 0).astype(np.int64)
    for i, name in enumerate(sft.alphabet):
        if not support[i].any():
            report.warn(f"stranded symbol {name}: no outgoing edge")
        if not support[:, i].any():
            report.warn(f"stranded symbol {name}: no incoming edge")
    return report


def _essential_symbols(sft: Sft) -> Tuple[int, ...]:
    keep = np.ones(sft.size, dtype=bool)
    support = sft.adjacency != 0
    while True:
        sub = support & keep[:, None] & keep[None, :]
        alive = keep & sub.any(axis=1) & sub.any(axis=0)
        if np.array_equal(alive, keep):
            return tuple(np.flatnonzero(keep).tolist())
        keep = alive


def restrict(sft: Sft, symbols: Sequence[int]) -> Sft:
    symbols = list(symbols)
    return Sft(
        tuple(sft.alphabet[s] for s in symbols),
        sft.adjacency[np.ix_(symbols, symbols)] if symbols else np.zeros((0, 0), dtype=np.int64),
    )


def trim(sft: Sft) -> Sft:
    """Remove stranded symbols until every symbol has an incoming and an outgoing edge."""
    kept = _essential_symbols(sft)
    if not kept:
        raise InvalidSystem("No symbol survives trimming")
    if len(kept) < sft.size:
        dropped = [sft.alphabet[i] for i in range(sft.size) if i not in kept]
        LOGGER.info("Trimmed stranded symbols: %s", ", ".join(dropped))
    return restrict(sft, kept)


def is_irreducible(sft: Sft) -> bool:
    if sft.size == 0:
        raise InvalidSystem("Irreducibility is undefined for an empty alphabet")
    if not np.any(sft.adjacency):
        return False
    return nx.is_strongly_connected(sft.graph())


def strongly_connected_components(sft: Sft) -> List[Component]:
    """Components in topological order of the condensation (sources first)."""
    graph = sft.graph()
    condensed = nx.condensation(graph)
    components = []
    for node in nx.lexicographical_topological_sort(
        condensed, key=lambda c: min(condensed.nodes[c]["members"])
    ):
        members = tuple(sorted(condensed.nodes[node]["members"]))
        trivial = len(members) == 1 and sft.adjacency[members[0], members[0]] == 0
        components.append(Component(members, restrict(sft, members), trivial))
    return components


def word_count(sft: Sft, n: int) -> int:
    """Number of allowed n-blocks of the shift space, exact."""
    if n < 1:
        raise InvalidParameter(f"Word length must be positive, got {n}")
    kept = _essential_symbols(sft)
    if not kept:
        return 0
    matrix = sft.adjacency[np.ix_(kept, kept)].astype(object)
    vector = np.ones(len(kept), dtype=object)
    for _ in range(n - 1):
        vector = matrix @ vector
    return int(sum(vector))


def enumerate_words(sft: Sft, n: int, cap: Optional[int] = None) -> List[Word]:
    """All allowed n-blocks in lexicographic alphabet order."""
    cap = Var.WORD_CAP if cap is None else cap
    total = word_count(sft, n)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} words of length {n} exceed the cap of {cap}")
    kept = _essential_symbols(sft)
    allowed = set(kept)
    successors = {i: [j for j in sft.successors(i) if j in allowed] for i in kept}
    words: List[Word] = [(i,) for i in kept]
    for _ in range(n - 1):
        words = [w + (j,) for w in words for j in successors[w[-1]]]
    return words


def higher_block(sft: Sft, k: int, cap: Optional[int] = None) -> Tuple[Sft, Tuple[Word, ...]]:
    """The k-block presentation and the original k-block behind each new symbol."""
    if k < 1:
        raise InvalidParameter(f"Block order must be positive, got {k}")
    blocks = enumerate_words(sft, k, cap=cap)
    names = [join_names([sft.alphabet[s] for s in w]) for w in blocks]
    if len(set(names)) != len(names):
        names = ["|".join(sft.alphabet[s] for s in w) for w in blocks]
    by_prefix: Dict[Word, List[int]] = {}
    for j, w in enumerate(blocks):
        by_prefix.setdefault(w[:-1], []).append(j)
    matrix = np.zeros((len(blocks), len(blocks)), dtype=np.int64)
    for i, w in enumerate(blocks):
        for j in by_prefix.get(w[1:], []):
            if sft.adjacency[w[-1], blocks[j][-1]]:
                matrix[i, j] = 1
    return Sft(tuple(names), matrix), tuple(blocks)


def periodic_orbit(sft: Sft, block: Sequence[int]) -> PeriodicOrbit:
    """Validate a cycle and reduce it to its primitive root."""
    block = tuple(block)
    if not sft.is_allowed(block) or not sft.adjacency[block[-1], block[0]]:
        raise DisallowedWord(f"{sft.spell(block)} is not a cycle")
    p = len(block)
    for d in range(1, p + 1):
        if p % d == 0 and block == block[:d] * (p // d):
            return PeriodicOrbit(block[:d])
    return PeriodicOrbit(block)


def periodic_orbits(sft: Sft, max_period: int, cap: Optional[int] = None) -> List[PeriodicOrbit]:
    """One representative (least rotation) per primitive periodic orbit."""
    if max_period < 1:
        raise InvalidParameter(f"Period must be positive, got {max_period}")
    orbits = []
    for p in range(1, max_period + 1):
        for w in enumerate_words(sft, p, cap=cap):
            if not sft.adjacency[w[-1], w[0]]:
                continue
            rotations = {w[i:] + w[:i] for i in range(p)}
            if len(rotations) == p and w == min(rotations):
                orbits.append(PeriodicOrbit(w))
    return orbits
