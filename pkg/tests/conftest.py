import itertools
import math
from fractions import Fraction

import pytest

from Relent.cli import load_commands
from Relent.dynamics import gallery
from Relent.dynamics.measures import markov_measure
from Relent.dynamics.sft import Sft


@pytest.fixture(scope="session")
def entries():
    return {name: gallery.load(name) for name in gallery.names()}


@pytest.fixture(scope="session")
def abk(entries):
    return entries["ABK"]


@pytest.fixture(scope="session")
def xor(entries):
    return entries["XOR"]


@pytest.fixture(scope="session")
def homc(entries):
    return entries["HOMC"]


@pytest.fixture(scope="session")
def homcplus(entries):
    return entries["HOMCPLUS"]


@pytest.fixture(scope="session")
def golden():
    return Sft.from_edges(["0", "1"], [("0", "0"), ("0", "1"), ("1", "0")])


@pytest.fixture(scope="session")
def full2():
    return Sft.from_edges(["0", "1"], [(a, b) for a in "01" for b in "01"])


@pytest.fixture(scope="session")
def commands():
    return load_commands()


def geometric_nu(base: Sft, stay: Fraction):
    """a -> b surely; b stays with probability ``stay``."""
    a, b = base.symbol("a"), base.symbol("b")
    rows = [[Fraction(0)] * 2 for _ in range(2)]
    rows[a][b] = Fraction(1)
    rows[b][b] = stay
    rows[b][a] = 1 - stay
    return markov_measure(base, rows)


def brute_count(code, y_word) -> int:
    """Preimages of ``y_word`` by walking every product of clumps."""
    return sum(
        1
        for x in itertools.product(*(code.clumps[b] for b in y_word))
        if all(code.domain.adjacency[s, t] for s, t in zip(x, x[1:]))
    )


def xor_coincidence(p: float, n: int) -> float:
    """Center coincidence of the joining of B(p) and B(1-p) lifts over windows of n image symbols.

    The window fixes the n+1 bits up to complement; a window with o ones in one
    of its two bit strings is lifted to that string with weight w under B(p) and
    1-w under B(1-p), and the lifts agree with probability 2w(1-w).
    """
    q = 1 - p
    m = n + 1
    total = 0.0
    for o in range(m + 1):
        a = p ** o * q ** (m - o)
        b = q ** o * p ** (m - o)
        w = a / (a + b)
        total += math.comb(m, o) * a * 2 * w * (1 - w)
    return total
