"""Plain-text formats for systems (.sft), codes (.map) and measures (.mkv).

    # system                # code              # measure
    alphabet: a b1 b2       map:                markov
    a -> b1 b2              a -> a              rows:
    b1 -> a b1 b2           b1 -> b             a: b=1
    b2 -> a b2              b2 -> b             b: a=1/2 b=1/2
                                                stationary: a=1/3 b=2/3

Measures may instead be ``periodic: a b``. Probabilities are read as exact
fractions ("0.7" is 7/10).
"""
import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

from Relent.dynamics.exceptions import FormatError, RelentError
from Relent.dynamics.factor import FactorCode
from Relent.dynamics.measures import MarkovMeasure, PeriodicMeasure, markov_measure, periodic_measure
from Relent.dynamics.sft import Sft

LOGGER = logging.getLogger(__name__)

ARROW = "->"


def _lines(text: str) -> Iterator[Tuple[int, str]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _probability(token: str, number: int) -> Fraction:
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"line {number}: {token!r} is not a probability")
    if value < 0:
        raise FormatError(f"line {number}: negative probability {token}")
    return value


def parse_sft(text: str) -> Sft:
    alphabet: List[str] = []
    edges: List[Tuple[str, str]] = []
    for number, line in _lines(text):
        if line.startswith("alphabet:"):
            if alphabet:
                raise FormatError(f"line {number}: second alphabet line")
            alphabet = line[len("alphabet:"):].split()
            continue
        if ARROW not in line:
            raise FormatError(f"line {number}: expected 'x -> y ...', got {line!r}")
        source, targets = (part.strip() for part in line.split(ARROW, 1))
        if not source or not targets:
            raise FormatError(f"line {number}: incomplete edge line")
        edges.extend((source, target) for target in targets.split())
    if not alphabet:
        raise FormatError("missing 'alphabet:' line")
    try:
        return Sft.from_edges(alphabet, edges)
    except RelentError as e:
        raise FormatError(e.message)


def format_sft(sft: Sft) -> str:
    lines = ["alphabet: " + " ".join(sft.alphabet)]
    for i, name in enumerate(sft.alphabet):
        targets = [sft.alphabet[j] for j in sft.successors(i)]
        if targets:
            lines.append(f"{name} {ARROW} {' '.join(targets)}")
    return "\n".join(lines) + "\n"


def parse_code(text: str, domain: Sft, codomain: Sft) -> FactorCode:
    mapping: Dict[str, str] = {}
    started = False
    for number, line in _lines(text):
        if line.startswith("map:"):
            started = True
            line = line[len("map:"):].strip()
            if not line:
                continue
        if not started:
            raise FormatError(f"line {number}: expected 'map:' before mappings")
        if ARROW not in line:
            raise FormatError(f"line {number}: expected 'x -> y', got {line!r}")
        source, target = (part.strip() for part in line.split(ARROW, 1))
        if source in mapping:
            raise FormatError(f"line {number}: {source} mapped twice")
        mapping[source] = target
    unknown = [name for name in mapping if name not in domain.index]
    if unknown:
        raise FormatError(f"mapped symbols not in the domain: {', '.join(unknown)}")
    try:
        return FactorCode.from_mapping(domain, codomain, mapping)
    except RelentError as e:
        raise FormatError(e.message)


def format_code(code: FactorCode) -> str:
    return "map:\n" + "".join(f"{x} {ARROW} {y}\n" for x, y in code.mapping().items())


def _assignments(body: str, number: int) -> Dict[str, Fraction]:
    out: Dict[str, Fraction] = {}
    for token in body.split():
        if "=" not in token:
            raise FormatError(f"line {number}: expected name=probability, got {token!r}")
        name, value = token.split("=", 1)
        out[name] = _probability(value, number)
    return out


def parse_measure(text: str, base: Sft) -> Union[MarkovMeasure, PeriodicMeasure]:
    rows: Dict[str, Dict[str, Fraction]] = {}
    stationary = None
    kind = None
    in_rows = False
    for number, line in _lines(text):
        if line == "markov":
            kind = "markov"
        elif line.startswith("periodic:"):
            try:
                block = base.parse_word(line[len("periodic:"):])
                return periodic_measure(base, block)
            except RelentError as e:
                raise FormatError(f"line {number}: {e.message}")
        elif line == "rows:":
            in_rows = True
        elif line.startswith("stationary:"):
            stationary = _assignments(line[len("stationary:"):], number)
            in_rows = False
        elif in_rows and ":" in line:
            name, body = line.split(":", 1)
            rows[name.strip()] = _assignments(body, number)
        else:
            raise FormatError(f"line {number}: unexpected {line!r}")
    if kind != "markov":
        raise FormatError("measure files start with 'markov' or 'periodic:'")
    names = set(rows) | {n for row in rows.values() for n in row} | set(stationary or {})
    unknown = sorted(n for n in names if n not in base.index)
    if unknown:
        raise FormatError(f"symbols not in the system: {', '.join(unknown)}")
    missing = [name for name in base.alphabet if name not in rows]
    if missing:
        raise FormatError(f"no row for {', '.join(missing)}")
    matrix = [[rows[a].get(b, Fraction(0)) for b in base.alphabet] for a in base.alphabet]
    pi = None if stationary is None else [stationary.get(a, Fraction(0)) for a in base.alphabet]
    return markov_measure(base, matrix, pi)


def format_measure(measure: Union[MarkovMeasure, PeriodicMeasure]) -> str:
    base = measure.base
    if isinstance(measure, PeriodicMeasure):
        return f"periodic: {' '.join(base.alphabet[s] for s in measure.orbit.period_block)}\n"
    rows = measure.exact_transition if measure.exact else measure.transition.tolist()
    lines = ["markov", "rows:"]
    for i, name in enumerate(base.alphabet):
        cells = [f"{base.alphabet[j]}={rows[i][j]}" for j in range(base.size) if rows[i][j] > 0]
        lines.append(f"{name}: {' '.join(cells)}")
    if measure.exact:
        lines.append("stationary: " + " ".join(f"{a}={p}" for a, p in zip(base.alphabet, measure.exact_stationary)))
    return "\n".join(lines) + "\n"


def read_text(path: Union[str, Path]) -> str:
    path = Path(path)
    LOGGER.debug("Reading %s", path)
    return path.read_text(encoding="utf-8")


def load_sft(path) -> Sft:
    return parse_sft(read_text(path))


def load_code(path, domain: Sft, codomain: Sft) -> FactorCode:
    return parse_code(read_text(path), domain, codomain)


def load_measure(path, base: Sft) -> Union[MarkovMeasure, PeriodicMeasure]:
    return parse_measure(read_text(path), base)
