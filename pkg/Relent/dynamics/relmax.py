"""Relatively maximal measures over Markov and periodic images.

Three constructions are exact: the equidistributed induced measure over a
singleton clump, the fiber graph over a periodic orbit and the closed form for
homogeneous clumps. ``fiber_entropy_optimizer`` is the numerical cross-check.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog
from scipy.special import entr

from Relent.vars import Var
from .exceptions import (
    DisallowedWord,
    EnumerationCapExceeded,
    InfeasibleLift,
    InvalidMeasure,
    InvalidParameter,
    NoFiber,
    NotSingletonClump,
    TruncationTooCoarse,
    ZeroMass,
)
from .factor import FactorCode, fiber_graph, preimage_words
from .measures import (
    MarkovMeasure,
    Probability,
    bernoulli,
    block_distribution,
    entropy,
    markov_measure,
    parry_measure,
    perron,
)
from .sft import (
    PeriodicOrbit,
    Sft,
    Word,
    enumerate_words,
    higher_block,
    strongly_connected_components,
)

LOGGER = logging.getLogger(__name__)

HOMCLUMP_STATES = ("a1 a1", "a1 b1 a1", "a1 a2", "a2 a2", "a2 b2 a2", "a2 a1")


@dataclass(frozen=True)
class Loop:
    word: Word
    probability: Probability
    bands: Tuple[Word, ...]

    @property
    def return_time(self) -> int:
        return len(self.word) - 1


@dataclass(frozen=True, eq=False)
class InducedSystem:
    code: FactorCode
    nu: MarkovMeasure
    clump_symbol: int
    clump_preimage: int
    loops: Tuple[Loop, ...]
    truncation: int
    retained_mass: Probability

    @property
    def clump_mass(self) -> Probability:
        if self.nu.exact:
            return self.nu.exact_stationary[self.clump_symbol]
        return float(self.nu.stationary[self.clump_symbol])


@dataclass(frozen=True, eq=False)
class InducedBernoulli:
    induced: InducedSystem
    weights: Tuple[Tuple[Probability, ...], ...]

    def band_weights(self) -> Dict[Word, Probability]:
        return {
            band: q for loop, qs in zip(self.induced.loops, self.weights) for band, q in zip(loop.bands, qs)
        }


@dataclass(frozen=True)
class AbramovEntropy:
    h_mu: float
    h_rel: float
    h_nu: float
    retained_mass: float
    truncation: int


@dataclass(frozen=True)
class FiberComponent:
    vertices: Tuple[str, ...]
    lam: float
    entropy: float
    symbol_marginal: Dict[str, float]


@dataclass(frozen=True, eq=False)
class FiberSft:
    orbit: PeriodicOrbit
    graph: Sft
    components: Tuple[FiberComponent, ...]
    max_entropy: float
    maximal_count: int

    @property
    def determinate(self) -> bool:
        return self.maximal_count == 1

    def as_dict(self) -> dict:
        return {
            "period": self.orbit.period,
            "components": [
                {
                    "vertices": list(c.vertices),
                    "lam": c.lam,
                    "entropy": c.entropy,
                    "symbol_marginal": c.symbol_marginal,
                }
                for c in self.components
            ],
            "max_entropy": self.max_entropy,
            "maximal_count": self.maximal_count,
            "determinate": self.determinate,
        }


@dataclass(frozen=True, eq=False)
class HomclumpFamily:
    K: float
    x: float
    states: Tuple[str, ...]
    transition: np.ndarray
    fixed_vector: np.ndarray


@dataclass(frozen=True, eq=False)
class InducedCode:
    code: FactorCode
    nu: MarkovMeasure
    x_words: Tuple[Word, ...]
    y_words: Tuple[Word, ...]
    clump_mass: Probability


@dataclass(frozen=True, eq=False)
class FiberOptimum:
    measure: MarkovMeasure
    entropy: float
    order: int
    image_gap: float
    block_masses: Dict[Word, float]
    restart_entropies: Tuple[float, ...]
    seed: int
    label: str = "heuristic: local maximum from projected Newton ascent"


def _clump_symbol(code: FactorCode, a: Union[int, str]) -> int:
    return code.codomain.symbol(a) if isinstance(a, str) else int(a)


def _transition(nu: MarkovMeasure):
    return nu.exact_transition if nu.exact else nu.transition.tolist()


def return_loops(nu: MarkovMeasure, a: int, truncation: int, cap: Optional[int] = None) -> List[Tuple[Word, Probability]]:
    """Return words a C a with C free of a, return time ≤ truncation, with ν_a-probabilities."""
    cap = Var.WORD_CAP if cap is None else cap
    rows = _transition(nu)
    base = nu.base
    found: List[Tuple[Word, Probability]] = []
    one = Fraction(1) if nu.exact else 1.0
    stack: List[Tuple[Word, Probability]] = [((a,), one)]
    while stack:
        word, p = stack.pop()
        for c in base.successors(word[-1]):
            q = p * rows[word[-1]][c]
            if q <= 0:
                continue
            if c == a:
                found.append((word + (a,), q))
            elif len(word) < truncation:
                stack.append((word + (c,), q))
        if len(found) + len(stack) > cap:
            raise EnumerationCapExceeded(f"More than {cap} return words up to time {truncation}")
    found.sort(key=lambda item: (len(item[0]), item[0]))
    return found


def build_induced(
    code: FactorCode,
    nu: MarkovMeasure,
    a: Union[int, str],
    truncation: Optional[int] = None,
    cap: Optional[int] = None,
) -> InducedSystem:
    """The first-return system to a singleton clump, truncated at return time ``truncation``."""
    truncation = Var.TRUNCATION if truncation is None else truncation
    if truncation < 1:
        raise InvalidParameter(f"Truncation must be positive, got {truncation}")
    if nu.base != code.codomain:
        raise InvalidMeasure("Measure does not live on the codomain")
    a = _clump_symbol(code, a)
    clump = code.clumps[a]
    if len(clump) != 1:
        raise NotSingletonClump(
            f"{code.codomain.alphabet[a]} has {len(clump)} preimages: "
            + ", ".join(code.domain.alphabet[x] for x in clump)
        )
    if nu.stationary[a] <= 0:
        raise ZeroMass(f"ν gives no mass to {code.codomain.alphabet[a]}")
    loops = tuple(
        Loop(word, p, tuple(preimage_words(code, word, cap=cap)))
        for word, p in return_loops(nu, a, truncation, cap=cap)
    )
    retained = sum((loop.probability for loop in loops), Fraction(0) if nu.exact else 0.0)
    LOGGER.info(
        "Induced system on %s: %d loops up to time %d, retained mass %.12g",
        code.codomain.alphabet[a], len(loops), truncation, float(retained),
    )
    return InducedSystem(code, nu, a, clump[0], loops, truncation, retained)


def maximal_induced_measure(induced: InducedSystem) -> InducedBernoulli:
    """Equidistribute every loop's mass over its band."""
    weights = []
    for loop in induced.loops:
        if not loop.bands:
            raise NoFiber(f"Loop {induced.code.codomain.spell(loop.word)} has no preimage")
        weights.append(tuple(loop.probability / len(loop.bands) for _ in loop.bands))
    return InducedBernoulli(induced, tuple(weights))


def induced_entropy(weights: Union[InducedBernoulli, Sequence[Sequence[Probability]]]) -> float:
    """-Σ q log q over every band word."""
    if isinstance(weights, InducedBernoulli):
        weights = weights.weights
    flat = np.array([float(q) for qs in weights for q in qs], dtype=float)
    if np.any(flat < 0):
        raise InvalidMeasure("Induced weights must be nonnegative")
    return float(entr(flat).sum())


def abramov_entropy(
    code: FactorCode,
    nu: MarkovMeasure,
    induced_measure: InducedBernoulli,
    threshold: Optional[float] = None,
    override: bool = False,
) -> AbramovEntropy:
    """h(μ) = ν[a] · h(μ_a) and its excess over h(ν)."""
    threshold = Var.RETAINED_MASS if threshold is None else threshold
    induced = induced_measure.induced
    retained = float(induced.retained_mass)
    if retained < threshold and not override:
        raise TruncationTooCoarse(
            f"Retained mass {retained:.3g} below {threshold}; raise the truncation or override"
        )
    h_mu = float(induced.clump_mass) * induced_entropy(induced_measure)
    h_nu = entropy(nu)
    return AbramovEntropy(h_mu, h_mu - h_nu, h_nu, retained, induced.truncation)


def cylinder_probability(
    code: FactorCode, nu: MarkovMeasure, induced_measure: InducedBernoulli, x_word: Sequence[int]
) -> Probability:
    """μ[x] for a word running between clump visits: ν[a] times the product of its band weights."""
    induced = induced_measure.induced
    x_a = induced.clump_preimage
    x_word = tuple(x_word)
    if not x_word or x_word[0] != x_a or x_word[-1] != x_a:
        raise DisallowedWord("Cylinder words must start and end at the clump symbol")
    weights = induced_measure.band_weights()
    value = induced.clump_mass
    start = 0
    for i in range(1, len(x_word)):
        if x_word[i] != x_a:
            continue
        band = x_word[start:i + 1]
        if band not in weights:
            if code.domain.is_allowed(band) and len(band) - 1 > induced.truncation:
                raise TruncationTooCoarse(f"Band {code.domain.spell(band)} exceeds the truncation")
            return value * 0
        value = value * weights[band]
        start = i
    return value


def fiber_periodic(code: FactorCode, orbit: PeriodicOrbit) -> FiberSft:
    """Components of π⁻¹ of a periodic orbit and the maximal (Parry) ones."""
    graph, vertices = fiber_graph(code, orbit)
    components = []
    for component in strongly_connected_components(graph):
        if component.trivial:
            continue
        lam = perron(component.sft.adjacency).lam
        parry = parry_measure(component.sft)
        marginal: Dict[str, float] = {}
        for local, vertex in enumerate(component.symbols):
            name = code.domain.alphabet[vertices[vertex][0]]
            marginal[name] = marginal.get(name, 0.0) + float(parry.stationary[local])
        vertex_names = tuple(graph.alphabet[v] for v in component.symbols)
        components.append(FiberComponent(vertex_names, float(lam), float(np.log(lam)), marginal))
    if not components:
        raise NoFiber(f"No invariant fiber over {code.codomain.spell(orbit.period_block)}")
    best = max(c.entropy for c in components)
    count = sum(1 for c in components if abs(c.entropy - best) <= 1e-12)
    return FiberSft(orbit, graph, tuple(components), best, count)


def homclump_matrix(x: float, y: float) -> np.ndarray:
    return np.array(
        [
            [x, 1 - 2 * x, x, 0, 0, 0],
            [y, 1 - 2 * y, y, 0, 0, 0],
            [0, 0, 0, x, 1 - 2 * x, x],
            [0, 0, 0, x, 1 - 2 * x, x],
            [0, 0, 0, y, 1 - 2 * y, y],
            [x, 1 - 2 * x, x, 0, 0, 0],
        ]
    )


def homclump_fixed_vector(x: float, y: float) -> np.ndarray:
    return np.array([y, 1 - 2 * x, y, y, 1 - 2 * x, y]) / (4 * y + 2 * (1 - 2 * x))


def homclump_family(K: float) -> HomclumpFamily:
    """The relatively maximal induced chain for the homogeneous clump example, x = y = K/(2K+2)."""
    if not K > 0 or not np.isfinite(K):
        raise InvalidParameter(f"K must be a positive real, got {K}")
    x = K / (2 * K + 2)
    transition = homclump_matrix(x, x)
    fixed = homclump_fixed_vector(x, x)
    residual = np.max(np.abs(fixed @ transition - fixed))
    if residual > 1e-12:
        LOGGER.warning("Homogeneous clump fixed vector residual %.3g", residual)
    return HomclumpFamily(float(K), x, HOMCLUMP_STATES, transition, fixed)


def homclump_K(nu: MarkovMeasure, a: str = "a", b: str = "b") -> Probability:
    """K = ν[aa] / ν[aba]."""
    i, j = nu.base.symbol(a), nu.base.symbol(b)
    aba = nu.probability((i, j, i))
    if aba == 0:
        raise ZeroMass(f"ν[{a}{b}{a}] is zero")
    return nu.probability((i, i)) / aba


def induced_code(
    code: FactorCode, nu: MarkovMeasure, a: Union[int, str], max_return: Optional[int] = None
) -> InducedCode:
    """Finite first-return code over the clump π⁻¹(a) when return times are bounded.

    The induced domain has one symbol per return word of X between clump
    symbols; the induced codomain is the full shift on return words of Y and
    carries the Bernoulli measure ν_a.
    """
    max_return = Var.TRUNCATION if max_return is None else max_return
    a = _clump_symbol(code, a)
    if nu.stationary[a] <= 0:
        raise ZeroMass(f"ν gives no mass to {code.codomain.alphabet[a]}")
    loops = return_loops(nu, a, max_return + 1)
    if any(len(word) - 1 > max_return for word, _ in loops):
        raise InvalidParameter(f"Return times to {code.codomain.alphabet[a]} exceed {max_return}")
    y_words = tuple(word for word, _ in loops)
    x_words = tuple(w for word in y_words for w in preimage_words(code, word))
    y_names = tuple(code.codomain.spell(w) for w in y_words)
    x_names = tuple(code.domain.spell(w) for w in x_words)
    ends = np.array([w[-1] for w in x_words])
    starts = np.array([w[0] for w in x_words])
    x_sft = Sft(x_names, (ends[:, None] == starts[None, :]).astype(np.int64))
    y_sft = Sft(y_names, np.ones((len(y_words), len(y_words)), dtype=np.int64))
    where = {w: i for i, w in enumerate(y_words)}
    induced = FactorCode(x_sft, y_sft, tuple(where[code.project(w)] for w in x_words))
    nu_a = bernoulli(y_sft, [p for _, p in loops])
    mass = nu.exact_stationary[a] if nu.exact else float(nu.stationary[a])
    return InducedCode(induced, nu_a, x_words, y_words, mass)


def _block_index(blocks: Sequence[Word]) -> Dict[Word, int]:
    return {w: i for i, w in enumerate(blocks)}


class _ConditionalEntropy:
    """h(m) = H(m) - H(prefixes of m) for a distribution m on (k+1)-blocks."""

    def __init__(self, groups: np.ndarray, group_count: int):
        self.groups = groups
        self.group_count = group_count

    def prefixes(self, m: np.ndarray) -> np.ndarray:
        return np.bincount(self.groups, weights=m, minlength=self.group_count)

    def value(self, m: np.ndarray) -> float:
        return float(entr(m).sum() - entr(self.prefixes(m)).sum())

    def gradient(self, m: np.ndarray) -> np.ndarray:
        return -np.log(m / self.prefixes(m)[self.groups])

    def hessian(self, m: np.ndarray) -> np.ndarray:
        same = (self.groups[:, None] == self.groups[None, :]).astype(float)
        return -np.diag(1.0 / m) + same / self.prefixes(m)[self.groups][:, None]


def _ascend(
    objective: _ConditionalEntropy, basis: np.ndarray, m: np.ndarray, max_iter: int = 200, tol: float = 1e-13
) -> np.ndarray:
    """Projected Newton ascent inside {m > 0} along the constraint null space."""
    value = objective.value(m)
    for _ in range(max_iter):
        g = basis.T @ objective.gradient(m)
        h = basis.T @ objective.hessian(m) @ basis
        try:
            step = np.linalg.solve(-h + 1e-12 * np.eye(h.shape[0]), g)
        except np.linalg.LinAlgError:
            step = g
        if g @ step <= 0:
            step = g
        if g @ step < tol:
            break
        direction = basis @ step
        shrinking = direction < 0
        alpha = 1.0
        if np.any(shrinking):
            alpha = min(1.0, 0.99 * float(np.min(-m[shrinking] / direction[shrinking])))
        while alpha > 1e-16:
            candidate = m + alpha * direction
            if np.all(candidate > 0):
                new_value = objective.value(candidate)
                if new_value >= value + 1e-4 * alpha * float(g @ step):
                    break
            alpha *= 0.5
        else:
            break
        improvement = new_value - value
        m, value = candidate, new_value
        if improvement < tol:
            break
    return m


def fiber_entropy_optimizer(
    code: FactorCode,
    nu: MarkovMeasure,
    order: int = 1,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    cap: Optional[int] = None,
) -> FiberOptimum:
    """Maximise h(μ) over order-``order`` Markov lifts whose image matches ν on (order+1)-blocks.

    Feasible support comes from one linear program per block; restarts begin
    at random convex combinations of those vertices and the best restart wins,
    lowest index first on ties.
    """
    if not 1 <= order <= 3:
        raise InvalidParameter(f"Order must be between 1 and 3, got {order}")
    if nu.base != code.codomain:
        raise InvalidMeasure("Measure does not live on the codomain")
    restarts = Var.RESTARTS if restarts is None else restarts
    seed = Var.SEED if seed is None else seed
    k = order
    blocks = enumerate_words(code.domain, k + 1, cap=cap)
    prefixes = enumerate_words(code.domain, k, cap=cap)
    prefix_index = _block_index(prefixes)
    image_blocks = enumerate_words(code.codomain, k + 1, cap=cap)
    image_index = _block_index(image_blocks)
    target = block_distribution(nu, k + 1, exact=False, cap=cap)

    n = len(blocks)
    rows, rhs = [], []
    shift = np.zeros((len(prefixes), n))
    for i, w in enumerate(blocks):
        shift[prefix_index[w[:-1]], i] += 1.0
        shift[prefix_index[w[1:]], i] -= 1.0
    rows.extend(shift)
    rhs.extend([0.0] * len(prefixes))
    image = np.zeros((len(image_blocks), n))
    for i, w in enumerate(blocks):
        image[image_index[code.project(w)], i] = 1.0
    rows.extend(image)
    rhs.extend(float(target.get(v, 0.0)) for v in image_blocks)
    rows.append(np.ones(n))
    rhs.append(1.0)
    a_eq, b_eq = np.array(rows), np.array(rhs)

    vertices = []
    support = np.zeros(n, dtype=bool)
    for i in range(n):
        cost = np.zeros(n)
        cost[i] = -1.0
        result = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if result.status != 0:
            raise InfeasibleLift(f"No order-{k} Markov lift matches the image constraints")
        if -result.fun > 1e-12:
            support[i] = True
            vertices.append(np.clip(result.x, 0.0, None))
    free = np.flatnonzero(support)
    groups = np.array([prefix_index[blocks[i][:-1]] for i in free], dtype=np.int64)
    objective = _ConditionalEntropy(groups, len(prefixes))
    basis = null_space(a_eq[:, free])
    points = np.array(vertices)[:, free]

    rng = np.random.default_rng(seed)
    results = []
    for r in range(max(restarts, 1)):
        weights = np.full(len(points), 1.0 / len(points)) if r == 0 else rng.dirichlet(np.ones(len(points)))
        start = weights @ points
        m = start if basis.shape[1] == 0 else _ascend(objective, basis, start)
        results.append((objective.value(m), m))
        LOGGER.debug("Restart %d: h = %.15f", r, results[-1][0])
    best_index = 0
    for r, (h, _) in enumerate(results):
        if h > results[best_index][0] + 1e-12:
            best_index = r
    h_best, m_best = results[best_index]

    masses = np.zeros(n)
    masses[free] = m_best
    block_masses = {blocks[i]: float(masses[i]) for i in range(n)}
    measure = _lift_measure(code.domain, k, block_masses)
    gap = _image_gap(code, nu, measure, k, cap)
    LOGGER.info("Order-%d optimum h = %.12f (image gap %.3g)", k, h_best, gap)
    return FiberOptimum(
        measure, float(h_best), k, gap, block_masses, tuple(float(h) for h, _ in results), seed
    )


def _lift_measure(domain: Sft, k: int, block_masses: Dict[Word, float]) -> MarkovMeasure:
    """The k-step chain with these (k+1)-block masses, as a 1-step chain on the k-block presentation."""
    recoded, states = higher_block(domain, k)
    marginal = np.zeros(len(states))
    where = _block_index(states)
    for w, m in block_masses.items():
        marginal[where[w[:-1]]] += m
    rows = np.zeros((len(states), len(states)))
    for i, j in recoded.edges():
        w = states[i] + (states[j][-1],)
        rows[i, j] = block_masses.get(w, 0.0)
    for i in range(len(states)):
        total = rows[i].sum()
        if total > 0:
            rows[i] /= total
        else:
            successors = recoded.successors(i)
            rows[i, list(successors)] = 1.0 / len(successors)
    marginal = marginal / marginal.sum()
    return markov_measure(recoded, rows.tolist(), marginal.tolist())


def _image_gap(code: FactorCode, nu: MarkovMeasure, measure: MarkovMeasure, k: int, cap: Optional[int]) -> float:
    """Largest |πμ[v] - ν[v]| over (k+2)-blocks, read back through the k-block presentation."""
    _, states = higher_block(code.domain, k)
    lifted: Dict[Word, float] = {}
    for word, p in block_distribution(measure, 3, exact=False, cap=cap).items():
        x_word = states[word[0]] + tuple(states[s][-1] for s in word[1:])
        key = code.project(x_word)
        lifted[key] = lifted.get(key, 0.0) + p
    target = block_distribution(nu, k + 2, exact=False, cap=cap)
    keys = set(lifted) | set(target)
    return max(abs(lifted.get(v, 0.0) - float(target.get(v, 0.0))) for v in keys)
