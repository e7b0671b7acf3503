"""1-block factor codes between SFTs.

Preimage counts are products of the 0/1 transfer matrices M_{bb'} taken in
python integers; everything sampled is seeded through ``utils.workers``.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import entr

from Relent.utils.workers import Tally, run_blocks
from Relent.vars import Var
from .exceptions import (
    DisallowedWord,
    EnumerationCapExceeded,
    ImageMismatch,
    InvalidCode,
    InvalidMeasure,
    InvalidParameter,
    NoFiber,
    ZeroMass,
)
from .measures import (
    MarkovMeasure,
    PeriodicMeasure,
    Probability,
    block_distribution,
    perron,
    sample_windows,
)
from .sft import (
    Diagnostics,
    PeriodicOrbit,
    Sft,
    Word,
    enumerate_words,
    higher_block,
    periodic_orbit,
    strongly_connected_components,
    word_count,
)

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FactorCode:
    domain: Sft
    codomain: Sft
    symbol_map: Tuple[int, ...]

    def __post_init__(self):
        symbol_map = tuple(int(b) for b in self.symbol_map)
        if len(symbol_map) != self.domain.size:
            raise InvalidCode(f"Code maps {len(symbol_map)} symbols, domain has {self.domain.size}")
        if any(b < 0 or b >= self.codomain.size for b in symbol_map):
            raise InvalidCode("Code image outside the codomain alphabet")
        object.__setattr__(self, "symbol_map", symbol_map)

    @classmethod
    def from_mapping(cls, domain: Sft, codomain: Sft, mapping: Mapping[str, str]) -> "FactorCode":
        missing = [name for name in domain.alphabet if name not in mapping]
        if missing:
            raise InvalidCode(f"No image for {', '.join(missing)}")
        return cls(domain, codomain, tuple(codomain.symbol(mapping[name]) for name in domain.alphabet))

    @cached_property
    def images(self) -> np.ndarray:
        return np.asarray(self.symbol_map, dtype=np.int64)

    @cached_property
    def clumps(self) -> Tuple[Tuple[int, ...], ...]:
        """Preimage symbol set of every codomain symbol."""
        return tuple(
            tuple(x for x, b in enumerate(self.symbol_map) if b == y) for y in range(self.codomain.size)
        )

    @cached_property
    def masks(self) -> np.ndarray:
        """masks[y, x] is 1.0 when x lies over y."""
        out = np.zeros((self.codomain.size, self.domain.size))
        out[self.images, np.arange(self.domain.size)] = 1.0
        return out

    def project(self, word: Sequence[int]) -> Word:
        return tuple(self.symbol_map[s] for s in word)

    def mapping(self) -> Dict[str, str]:
        return {self.domain.alphabet[x]: self.codomain.alphabet[y] for x, y in enumerate(self.symbol_map)}


@dataclass(frozen=True, eq=False)
class TransferFamily:
    code: FactorCode
    matrices: Dict[Tuple[int, int], np.ndarray]

    def matrix(self, b: int, b_next: int) -> np.ndarray:
        return self.matrices[(b, b_next)]


@dataclass
class ClumpReport:
    preimages: Dict[str, Tuple[str, ...]]
    singleton_clumps: List[str]
    n_all: int
    higher_block_singletons: List[Tuple[int, str]] = field(default_factory=list)
    k_max: int = 1

    @property
    def first_singleton_order(self) -> Optional[int]:
        if self.singleton_clumps:
            return 1
        return min((k for k, _ in self.higher_block_singletons), default=None)

    def as_dict(self) -> dict:
        return {
            "preimages": {b: list(xs) for b, xs in self.preimages.items()},
            "singleton_clumps": list(self.singleton_clumps),
            "N_all": self.n_all,
            "higher_block_singletons": [[k, w] for k, w in self.higher_block_singletons],
            "k_max": self.k_max,
        }


@dataclass
class ImageReport:
    n: int
    missing: List[str] = field(default_factory=list)
    forbidden_edges: List[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.missing and not self.forbidden_edges

    def as_dict(self) -> dict:
        return {"n": self.n, "clean": self.clean, "missing": self.missing, "forbidden_edges": self.forbidden_edges}


@dataclass(frozen=True)
class RelativeEntropyEstimate:
    n: int
    value: float
    stderr: float
    refined: float
    refined_stderr: float
    by_length: Dict[int, float]
    trials: int
    seed: Optional[int]
    limit: Optional[float] = None

    @property
    def exact(self) -> bool:
        return self.limit is not None


@dataclass(frozen=True)
class PushforwardBracket:
    n: int
    lower: float
    upper: float


def _forbidden_edges(code: FactorCode) -> List[str]:
    x, y = code.domain, code.codomain
    bad = []
    for i, j in x.edges():
        b, b_next = code.symbol_map[i], code.symbol_map[j]
        if not y.adjacency[b, b_next]:
            bad.append(
                f"{x.alphabet[i]}->{x.alphabet[j]} maps to forbidden {y.alphabet[b]}->{y.alphabet[b_next]}"
            )
    return bad


def fiber_counts(code: FactorCode, n: int, cap: Optional[int] = None) -> Iterator[Dict[Word, np.ndarray]]:
    """Yield, for k = 1..n, every allowed codomain k-block with its preimage counts by last symbol."""
    cap = Var.WORD_CAP if cap is None else cap
    total = word_count(code.codomain, n)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} codomain words of length {n} exceed the cap of {cap}")
    adjacency = code.domain.adjacency.astype(object)
    masks = code.masks.astype(np.int64).astype(object)
    level = {w: masks[w[0]].copy() for w in enumerate_words(code.codomain, 1, cap=cap)}
    yield level
    for _ in range(n - 1):
        level = {
            w + (b,): (vector @ adjacency) * masks[b]
            for w, vector in level.items()
            for b in code.codomain.successors(w[-1])
        }
        yield level


def validate_code(code: FactorCode, n_check: int = 8) -> Diagnostics:
    """Edge compatibility, symbol surjectivity and the image check up to ``n_check``."""
    report = Diagnostics()
    for text in _forbidden_edges(code):
        report.fail(f"edge {text}")
    for b, clump in enumerate(code.clumps):
        if not clump:
            report.fail(f"symbol {code.codomain.alphabet[b]} has no preimage")
    if report.valid and n_check > 1:
        image = image_subshift_check(code, n_check)
        for word in image.missing[:20]:
            report.fail(f"word {word} has no preimage")
    return report


def image_subshift_check(code: FactorCode, n: int, cap: Optional[int] = None) -> ImageReport:
    if n < 1:
        raise InvalidParameter(f"Word length must be positive, got {n}")
    report = ImageReport(n, forbidden_edges=_forbidden_edges(code))
    for level in fiber_counts(code, n, cap=cap):
        pass
    report.missing = sorted(code.codomain.spell(w) for w, vector in level.items() if not any(vector))
    return report


def transfer_family(code: FactorCode) -> TransferFamily:
    matrices = {}
    for b, b_next in code.codomain.edges():
        rows, cols = code.clumps[b], code.clumps[b_next]
        matrices[(b, b_next)] = code.domain.adjacency[np.ix_(rows, cols)] if rows and cols else np.zeros(
            (len(rows), len(cols)), dtype=np.int64
        )
    return TransferFamily(code, matrices)


def count_preimages(code: FactorCode, y_word: Sequence[int], family: Optional[TransferFamily] = None) -> int:
    """|π⁻¹[y_0 … y_{n-1}]| as an exact integer."""
    y_word = tuple(y_word)
    if not code.codomain.is_allowed(y_word):
        raise DisallowedWord(f"{y_word!r} is not allowed in the codomain")
    family = family or transfer_family(code)
    vector = np.ones(len(code.clumps[y_word[0]]), dtype=object)
    for b, b_next in zip(y_word, y_word[1:]):
        vector = vector @ family.matrix(b, b_next).astype(object)
    return int(sum(vector))


def preimage_words(code: FactorCode, y_word: Sequence[int], cap: Optional[int] = None) -> List[Word]:
    """All domain words projecting to ``y_word``, lexicographic."""
    cap = Var.WORD_CAP if cap is None else cap
    total = count_preimages(code, y_word)
    if total > cap:
        raise EnumerationCapExceeded(f"{total} preimages exceed the cap of {cap}")
    words: List[Word] = [(x,) for x in code.clumps[y_word[0]]]
    for b in y_word[1:]:
        words = [w + (x,) for w in words for x in code.clumps[b] if code.domain.adjacency[w[-1], x]]
    return words


def recode_code(code: FactorCode, k: int, cap: Optional[int] = None) -> Tuple[FactorCode, Tuple[Word, ...], Tuple[Word, ...]]:
    """The k-block code X^[k] → Y^[k] with the blocks behind both alphabets."""
    x_k, x_blocks = higher_block(code.domain, k, cap=cap)
    y_k, y_blocks = higher_block(code.codomain, k, cap=cap)
    where = {w: i for i, w in enumerate(y_blocks)}
    try:
        symbol_map = tuple(where[code.project(w)] for w in x_blocks)
    except KeyError as e:
        raise InvalidCode(f"Image block {e.args[0]!r} is not a codomain block")
    return FactorCode(x_k, y_k, symbol_map), x_blocks, y_blocks


def singleton_blocks(code: FactorCode, k: int, cap: Optional[int] = None) -> List[Word]:
    """Codomain k-blocks with exactly one preimage k-block."""
    for level in fiber_counts(code, k, cap=cap):
        pass
    return sorted(w for w, vector in level.items() if sum(vector) == 1)


def clump_analysis(code: FactorCode, k_max: Optional[int] = None, cap: Optional[int] = None) -> ClumpReport:
    k_max = Var.CLUMP_KMAX if k_max is None else k_max
    if k_max < 1:
        raise InvalidParameter(f"k_max must be positive, got {k_max}")
    names = code.codomain.alphabet
    preimages = {
        names[b]: tuple(code.domain.alphabet[x] for x in clump) for b, clump in enumerate(code.clumps)
    }
    singles = [names[b] for b, clump in enumerate(code.clumps) if len(clump) == 1]
    report = ClumpReport(preimages, singles, min(len(c) for c in code.clumps), k_max=k_max)
    for k, level in enumerate(fiber_counts(code, k_max, cap=cap), start=1):
        if k == 1:
            continue
        for w in sorted(w for w, vector in level.items() if sum(vector) == 1):
            report.higher_block_singletons.append((k, code.codomain.spell(w)))
    LOGGER.info(
        "Clump analysis to order %d: %d singleton symbols, %d singleton blocks",
        k_max, len(singles), len(report.higher_block_singletons),
    )
    return report


def bound_N(code: FactorCode, nu: Union[MarkovMeasure, PeriodicMeasure]) -> int:
    """N_ν(π): smallest clump over the symbols ν charges."""
    if nu.base != code.codomain:
        raise InvalidMeasure("Measure does not live on the codomain")
    mass = nu.symbol_mass()
    charged = [len(code.clumps[b]) for b in range(code.codomain.size) if mass[b] > 0]
    if not charged:
        raise ZeroMass("Measure charges no symbol")
    return min(charged)


def pushforward_blocks(
    code: FactorCode, mu: MarkovMeasure, n: int, exact: Optional[bool] = None, cap: Optional[int] = None
) -> Dict[Word, Probability]:
    """(πμ)[y] = Σ μ[x] over charged domain n-blocks x with π(x) = y."""
    if mu.base != code.domain:
        raise InvalidMeasure("Measure does not live on the domain")
    image: Dict[Word, Probability] = {}
    for word, p in block_distribution(mu, n, exact=exact, cap=cap).items():
        key = code.project(word)
        image[key] = image.get(key, 0) + p
    return image


def pushforward_entropy_bounds(code: FactorCode, mu: MarkovMeasure, n: int, cap: Optional[int] = None) -> PushforwardBracket:
    """H(y_n | y_0..y_{n-1}, x_0) ≤ h(πμ) ≤ H(y_n | y_0..y_{n-1})."""
    if n < 1:
        raise InvalidParameter(f"Conditioning length must be positive, got {n}")
    joint: Dict[Tuple[int, Word], float] = {}
    for word, p in block_distribution(mu, n + 1, exact=False, cap=cap).items():
        key = (word[0], code.project(word))
        joint[key] = joint.get(key, 0.0) + p

    def _h(groups: Dict) -> float:
        return float(entr(np.fromiter(groups.values(), dtype=float)).sum())

    def _group(keyfunc) -> Dict:
        out: Dict = {}
        for key, p in joint.items():
            k = keyfunc(key)
            out[k] = out.get(k, 0.0) + p
        return out

    h_y_next = _h(_group(lambda key: key[1]))
    h_y = _h(_group(lambda key: key[1][:-1]))
    h_xy_next = _h(joint)
    h_xy = _h(_group(lambda key: (key[0], key[1][:-1])))
    return PushforwardBracket(n, h_xy_next - h_xy, h_y_next - h_y)


def fiber_graph(code: FactorCode, orbit: PeriodicOrbit) -> Tuple[Sft, Tuple[Tuple[int, int], ...]]:
    """Phase-expanded graph of π⁻¹ of a periodic orbit: vertices (x, t) with π(x) = y_t."""
    periodic_orbit(code.codomain, orbit.period_block)
    p = orbit.period
    vertices = tuple((x, t) for t in range(p) for x in code.clumps[orbit.period_block[t]])
    where = {v: i for i, v in enumerate(vertices)}
    matrix = np.zeros((len(vertices), len(vertices)), dtype=np.int64)
    for i, (x, t) in enumerate(vertices):
        t_next = (t + 1) % p
        for x_next in code.clumps[orbit.period_block[t_next]]:
            if code.domain.adjacency[x, x_next]:
                matrix[i, where[(x_next, t_next)]] = 1
    names = tuple(f"{code.domain.alphabet[x]}@{t}" for x, t in vertices)
    return Sft(names, matrix), vertices


def periodic_relative_pressure(code: FactorCode, orbit: PeriodicOrbit) -> float:
    """Exact P(π,0) over a periodic point: the largest component growth rate of its fiber graph."""
    graph, _ = fiber_graph(code, orbit)
    rates = [
        float(np.log(perron(component.sft.adjacency).lam))
        for component in strongly_connected_components(graph)
        if not component.trivial
    ]
    if not rates:
        raise NoFiber(f"No invariant fiber over {code.codomain.spell(orbit.period_block)}")
    return max(rates)


def relative_pressure(code: FactorCode, target: Union[Sequence[int], PeriodicOrbit]) -> float:
    """(1/n) log |π⁻¹[y]| for a word, or its limit when ``target`` is a periodic orbit."""
    if isinstance(target, PeriodicOrbit):
        return periodic_relative_pressure(code, target)
    count = count_preimages(code, target)
    if count == 0:
        raise NoFiber(f"{code.codomain.spell(target)} has no preimage")
    return float(np.log(count)) / len(target)


def equidistributed_lift(
    code: FactorCode, nu: MarkovMeasure, n: int, cap: Optional[int] = None
) -> Dict[Word, Probability]:
    """Spread ν[y] evenly over the domain n-blocks above y."""
    if nu.base != code.codomain:
        raise InvalidMeasure("Measure does not live on the codomain")
    lift: Dict[Word, Probability] = {}
    for y_word, p in block_distribution(nu, n, cap=cap).items():
        words = preimage_words(code, y_word, cap=cap)
        if not words:
            raise NoFiber(f"{code.codomain.spell(y_word)} has no preimage")
        share = p / len(words)
        for x_word in words:
            lift[x_word] = share
    return lift


def periodic_equidistributed_lift(
    code: FactorCode, nu: MarkovMeasure, n: int, cap: Optional[int] = None
) -> Dict[Word, Probability]:
    """Spread ν[y] evenly over the periodic preimages of every repeatable n-block y.

    Keys are the period blocks u of the domain points u u u …, whose images are
    y y y …; masses are renormalised over the repeatable blocks ν charges.
    """
    if nu.base != code.codomain:
        raise InvalidMeasure("Measure does not live on the codomain")
    x_adjacency, y_adjacency = code.domain.adjacency, code.codomain.adjacency
    points: Dict[Word, Probability] = {}
    for y_word, p in block_distribution(nu, n, cap=cap).items():
        if not y_adjacency[y_word[-1], y_word[0]]:
            continue
        words = [w for w in preimage_words(code, y_word, cap=cap) if x_adjacency[w[-1], w[0]]]
        if not words:
            LOGGER.debug("%s has no periodic preimage of period %d", code.codomain.spell(y_word), n)
            continue
        share = p / len(words)
        for x_word in words:
            points[x_word] = share
    total = sum(points.values())
    if not total:
        raise NoFiber(f"ν charges no repeatable {n}-block with a periodic preimage")
    return {word: p / total for word, p in points.items()}


def log_fiber_counts(code: FactorCode, windows: np.ndarray, marks: Sequence[int]) -> np.ndarray:
    """log |π⁻¹[y_0 … y_{t-1}]| for every window row and every length t in ``marks``."""
    adjacency = code.domain.adjacency.astype(float)
    masks = code.masks
    vectors = masks[windows[:, 0]].copy()
    logs = np.zeros(windows.shape[0])
    out = np.empty((windows.shape[0], len(marks)))
    wanted = {t: i for i, t in enumerate(marks)}
    for t in range(1, windows.shape[1] + 1):
        if t > 1:
            vectors = (vectors @ adjacency) * masks[windows[:, t - 1]]
        totals = vectors.sum(axis=1)
        if np.any(totals <= 0):
            raise ImageMismatch("A sampled window has no preimage")
        if t in wanted:
            out[:, wanted[t]] = logs + np.log(totals)
        vectors /= totals[:, None]
        logs += np.log(totals)
    return out


def _marks(n: int) -> List[int]:
    lengths = {1 << i for i in range(n.bit_length()) if (1 << i) <= n} | {n // 2, n}
    return sorted(t for t in lengths if t >= 1)


def _window_columns(code: FactorCode, windows: np.ndarray, n: int) -> np.ndarray:
    """Per window: plain rate, refined rate, then the rate at every length in ``_marks(n)``."""
    marks = _marks(n)
    logs = log_fiber_counts(code, windows, marks)
    half = n // 2
    final = logs[:, marks.index(n)]
    if half >= 1:
        refined = (final - logs[:, marks.index(half)]) / (n - half)
    else:
        refined = final / n
    per_length = logs / np.asarray(marks, dtype=float)[None, :]
    return np.column_stack([final / n, refined, per_length])


@dataclass(frozen=True, eq=False)
class _RelativeEntropyTask:
    code: FactorCode
    nu: MarkovMeasure
    n: int

    def __call__(self, seed: np.random.SeedSequence, size: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return _window_columns(self.code, sample_windows(self.nu, size, self.n, rng), self.n)


def relative_entropy_over_nu(
    code: FactorCode,
    nu: Union[MarkovMeasure, PeriodicMeasure],
    n: int,
    trials: int = 10000,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> RelativeEntropyEstimate:
    """Average (1/n) log |π⁻¹[y_0 … y_{n-1}]| over ν.

    ``refined`` uses the growth between lengths n/2 and n, which cancels the
    window-edge term of the plain average. Periodic ν is averaged exactly over
    phases and carries the exact limit.
    """
    if n < 1:
        raise InvalidParameter(f"Window must be positive, got {n}")
    if nu.base != code.codomain:
        raise InvalidMeasure("Measure does not live on the codomain")
    if isinstance(nu, PeriodicMeasure):
        block = nu.orbit.period_block
        p = nu.orbit.period
        windows = np.array([[block[(phase + t) % p] for t in range(n)] for phase in range(p)], dtype=np.int64)
        mean = _window_columns(code, windows, n).mean(axis=0)
        by_length = {t: float(mean[2 + i]) for i, t in enumerate(_marks(n))}
        return RelativeEntropyEstimate(
            n, float(mean[0]), 0.0, float(mean[1]), 0.0, by_length, p, None,
            limit=periodic_relative_pressure(code, nu.orbit),
        )
    if trials < 2:
        raise InvalidParameter("Need at least two trials for a standard error")
    seed = Var.SEED if seed is None else seed
    tally: Tally = run_blocks(_RelativeEntropyTask(code, nu, n), trials, seed, workers=workers)
    mean, stderr = tally.mean, tally.stderr
    by_length = {t: float(mean[2 + i]) for i, t in enumerate(_marks(n))}
    return RelativeEntropyEstimate(
        n, float(mean[0]), float(stderr[0]), float(mean[1]), float(stderr[1]), by_length, trials, seed
    )
