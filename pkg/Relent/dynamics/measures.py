"""Stationary Markov and periodic measures on SFTs, Perron data and entropy.

Block probabilities are exact (``Fraction``) whenever the transition matrix
was given with rational entries; eigenproblems are always binary64.
"""
import logging
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import sympy
from scipy.linalg import null_space
from scipy.special import entr

from Relent.vars import Var
from .exceptions import (
    EnumerationCapExceeded,
    InvalidMeasure,
    InvalidParameter,
    NotConverged,
    ReducibleMatrix,
)
from .sft import PeriodicOrbit, Sft, Word, higher_block, is_irreducible, periodic_orbit

LOGGER = logging.getLogger(__name__)

Probability = Union[float, Fraction]


@dataclass(frozen=True, eq=False)
class SpectralData:
    lam: float
    right: np.ndarray
    left: np.ndarray


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    base: Sft
    transition: np.ndarray
    stationary: np.ndarray
    exact_transition: Optional[Tuple[Tuple[Fraction, ...], ...]] = None
    exact_stationary: Optional[Tuple[Fraction, ...]] = None

    @property
    def exact(self) -> bool:
        return self.exact_transition is not None and self.exact_stationary is not None

    def symbol_mass(self) -> np.ndarray:
        return self.stationary

    def probability(self, word: Sequence[int], exact: Optional[bool] = None) -> Probability:
        """Cylinder probability of a word."""
        exact = self.exact if exact is None else exact
        if exact:
            value = self.exact_stationary[word[0]]
            for a, b in zip(word, word[1:]):
                value *= self.exact_transition[a][b]
            return value
        value = float(self.stationary[word[0]])
        for a, b in zip(word, word[1:]):
            value *= float(self.transition[a, b])
        return value


@dataclass(frozen=True, eq=False)
class PeriodicMeasure:
    base: Sft
    orbit: PeriodicOrbit

    def symbol_mass(self) -> np.ndarray:
        return self.orbit.symbol_counts(self.base.size) / self.orbit.period


@dataclass(frozen=True)
class EntropyBracket:
    n: int
    upper: float
    lower: float
    block_entropy: float
    next_block_entropy: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _support_irreducible(matrix: np.ndarray) -> bool:
    support = (matrix > 0).astype(np.int64)
    if not support.any():
        return False
    return nx.is_strongly_connected(nx.from_numpy_array(support, create_using=nx.DiGraph))


def _power(matrix: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    vector = np.full(matrix.shape[0], 1.0 / matrix.shape[0])
    for _ in range(max_iter):
        image = matrix @ vector
        image /= image.sum()
        if np.max(np.abs(image - vector)) <= tol:
            return image
        vector = image
    raise NotConverged(f"Power iteration did not reach {tol} in {max_iter} iterations")


def perron(matrix, tol: Optional[float] = None, max_iter: Optional[int] = None) -> SpectralData:
    """Perron eigenvalue and positive eigenvectors of an irreducible nonnegative matrix.

    Iterates on A + I from the uniform vector, which converges for irreducible
    matrices of any period. The right vector sums to 1 and l·r = 1.
    """
    tol = Var.PERRON_TOL if tol is None else tol
    max_iter = Var.PERRON_MAX_ITER if max_iter is None else max_iter
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidParameter(f"Expected a nonempty square matrix, got shape {a.shape}")
    if np.any(a < 0):
        raise InvalidParameter("Perron data needs a nonnegative matrix")
    if not _support_irreducible(a):
        raise ReducibleMatrix()
    shifted = a + np.eye(a.shape[0])
    right = _power(shifted, tol, max_iter)
    left = _power(shifted.T, tol, max_iter)
    lam = float((a @ right).sum() / right.sum())
    left = left / float(left @ right)
    return SpectralData(lam, right, left)


def _is_exact(value) -> bool:
    return isinstance(value, Rational) and not isinstance(value, bool)


def _exact_stationary(rows: Sequence[Sequence[Fraction]]) -> Optional[Tuple[Fraction, ...]]:
    n = len(rows)
    matrix = sympy.Matrix(n, n, lambda i, j: sympy.Rational(rows[j][i].numerator, rows[j][i].denominator))
    kernel = (matrix - sympy.eye(n)).nullspace()
    if len(kernel) != 1:
        return None
    vector = kernel[0]
    total = sum(vector)
    return tuple(Fraction(int(sympy.fraction(v / total)[0]), int(sympy.fraction(v / total)[1])) for v in vector)


def _float_stationary(transition: np.ndarray) -> Optional[np.ndarray]:
    n = transition.shape[0]
    kernel = null_space(transition.T - np.eye(n), rcond=1e-10)
    if kernel.shape[1] != 1:
        return None
    vector = kernel[:, 0]
    vector = vector / vector.sum()
    return np.clip(vector, 0.0, None) / np.clip(vector, 0.0, None).sum()


def markov_measure(
    base: Sft,
    rows: Sequence[Sequence[Probability]],
    stationary: Optional[Sequence[Probability]] = None,
    tol: float = 1e-12,
) -> MarkovMeasure:
    """Build a validated Markov measure; exact when every entry is rational."""
    n = base.size
    if len(rows) != n or any(len(row) != n for row in rows):
        raise InvalidMeasure(f"Transition matrix must be {n}x{n}")
    exact = all(_is_exact(v) for row in rows for v in row)
    transition = np.array([[float(v) for v in row] for row in rows], dtype=float)
    if np.any(transition < 0):
        raise InvalidMeasure("Transition probabilities must be nonnegative")
    outside = np.argwhere((transition > 0) & (base.adjacency == 0))
    if len(outside):
        i, j = outside[0]
        raise InvalidMeasure(
            f"Transition {base.alphabet[i]}->{base.alphabet[j]} has mass but is not an edge"
        )
    exact_rows = None
    if exact:
        exact_rows = tuple(tuple(Fraction(v) for v in row) for row in rows)
        bad = [base.alphabet[i] for i, row in enumerate(exact_rows) if sum(row) != 1]
    else:
        bad = [base.alphabet[i] for i in range(n) if abs(transition[i].sum() - 1.0) > tol]
    if bad:
        raise InvalidMeasure(f"Rows do not sum to 1: {', '.join(bad)}")

    exact_pi = None
    if stationary is not None:
        if len(stationary) != n:
            raise InvalidMeasure(f"Stationary vector must have {n} entries")
        pi = np.array([float(v) for v in stationary], dtype=float)
        if exact and all(_is_exact(v) for v in stationary):
            exact_pi = tuple(Fraction(v) for v in stationary)
            balance = [sum(exact_pi[i] * exact_rows[i][j] for i in range(n)) for j in range(n)]
            if sum(exact_pi) != 1 or any(v < 0 for v in exact_pi) or tuple(balance) != exact_pi:
                raise InvalidMeasure("Supplied stationary vector is not stationary")
        elif np.any(pi < 0) or abs(pi.sum() - 1.0) > tol or np.max(np.abs(pi @ transition - pi)) > 1e-10:
            raise InvalidMeasure("Supplied stationary vector is not stationary")
    elif exact:
        exact_pi = _exact_stationary(exact_rows)
        if exact_pi is None:
            raise InvalidMeasure("Stationary vector is not unique; supply one")
        pi = np.array([float(v) for v in exact_pi])
    else:
        pi = _float_stationary(transition)
        if pi is None:
            raise InvalidMeasure("Stationary vector is not unique; supply one")
        if np.max(np.abs(pi @ transition - pi)) > 1e-10:
            raise InvalidMeasure("Stationary vector failed the residual check")
    transition.setflags(write=False)
    pi.setflags(write=False)
    return MarkovMeasure(base, transition, pi, exact_rows, exact_pi)


def bernoulli(sft: Sft, probabilities: Sequence[Probability]) -> MarkovMeasure:
    if not np.all(sft.adjacency == 1):
        raise InvalidMeasure("Bernoulli measures live on full shifts")
    return markov_measure(sft, [list(probabilities)] * sft.size)


def periodic_measure(sft: Sft, block: Sequence[int]) -> PeriodicMeasure:
    return PeriodicMeasure(sft, periodic_orbit(sft, block))


def higher_block_measure(mu: MarkovMeasure, k: int, cap: Optional[int] = None) -> MarkovMeasure:
    """The same process read on the k-block presentation of its base."""
    recoded, blocks = higher_block(mu.base, k, cap=cap)
    n = recoded.size
    exact = mu.exact
    zero = Fraction(0) if exact else 0.0
    rows = [[zero] * n for _ in range(n)]
    for i, j in recoded.edges():
        a, b = blocks[i][-1], blocks[j][-1]
        rows[i][j] = mu.exact_transition[a][b] if exact else float(mu.transition[a, b])
    stationary = [mu.probability(w) for w in blocks]
    return markov_measure(recoded, rows, stationary)


def _equilibrium(sft: Sft, weights: np.ndarray) -> Tuple[float, MarkovMeasure]:
    if not is_irreducible(sft):
        raise ReducibleMatrix("Equilibrium states need an irreducible system")
    spectral = perron(weights)
    r, l = spectral.right, spectral.left
    transition = weights * r[None, :] / (spectral.lam * r[:, None])
    transition = transition / transition.sum(axis=1, keepdims=True)
    stationary = l * r / float(l @ r)
    state = markov_measure(sft, transition.tolist(), stationary.tolist())
    return float(np.log(spectral.lam)), state


def parry_measure(sft: Sft) -> MarkovMeasure:
    """The Shannon-Parry measure of maximal entropy."""
    return _equilibrium(sft, sft.adjacency.astype(float))[1]


def potential_matrix(sft: Sft, potential) -> np.ndarray:
    """A 2-block potential as a matrix: a scalar, a square array, or a mapping keyed by pairs."""
    if np.isscalar(potential):
        return np.where(sft.adjacency == 1, float(potential), 0.0)
    if isinstance(potential, Mapping):
        phi = np.zeros((sft.size, sft.size))
        for (a, b), value in potential.items():
            i = sft.symbol(a) if isinstance(a, str) else int(a)
            j = sft.symbol(b) if isinstance(b, str) else int(b)
            phi[i, j] = float(value)
        return phi
    phi = np.asarray(potential, dtype=float)
    if phi.shape != (sft.size, sft.size):
        raise InvalidParameter(f"Potential must be {sft.size}x{sft.size}")
    return phi


def pressure_equilibrium(sft: Sft, potential) -> Tuple[float, MarkovMeasure]:
    """Pressure and equilibrium state of a locally constant potential on 2-blocks."""
    phi = potential_matrix(sft, potential)
    return _equilibrium(sft, sft.adjacency * np.exp(phi))


def integrate_potential(measure: MarkovMeasure, potential) -> float:
    phi = potential_matrix(measure.base, potential)
    edge_mass = measure.stationary[:, None] * measure.transition
    return float(np.sum(edge_mass * np.where(measure.base.adjacency == 1, phi, 0.0)))


def entropy(measure: Union[MarkovMeasure, PeriodicMeasure]) -> float:
    """Entropy rate in nats."""
    if isinstance(measure, PeriodicMeasure):
        return 0.0
    return float(measure.stationary @ entr(measure.transition).sum(axis=1))


def block_entropy(distribution: Mapping[Word, Probability]) -> float:
    return float(entr(np.array([float(p) for p in distribution.values()], dtype=float)).sum())


def block_distribution(
    measure: MarkovMeasure, n: int, exact: Optional[bool] = None, cap: Optional[int] = None
) -> Dict[Word, Probability]:
    """Probabilities of the charged n-blocks, keyed by word."""
    if n < 1:
        raise InvalidParameter(f"Block length must be positive, got {n}")
    cap = Var.WORD_CAP if cap is None else cap
    exact = measure.exact if exact is None else exact
    if exact and not measure.exact:
        raise InvalidMeasure("Exact block probabilities need rational transitions")
    size = measure.base.size
    if exact:
        start, rows = measure.exact_stationary, measure.exact_transition
    else:
        start, rows = measure.stationary.tolist(), measure.transition.tolist()
    successors = [[(j, rows[i][j]) for j in range(size) if rows[i][j] > 0] for i in range(size)]
    level = {(i,): start[i] for i in range(size) if start[i] > 0}
    for _ in range(n - 1):
        level = {w + (j,): p * q for w, p in level.items() for j, q in successors[w[-1]]}
        if len(level) > cap:
            raise EnumerationCapExceeded(f"More than {cap} charged blocks of length {n}")
    return level


def marginalize(distribution: Mapping[Word, Probability], drop: str = "last") -> Dict[Word, Probability]:
    """Drop the first or the last symbol of every block."""
    out: Dict[Word, Probability] = {}
    for word, p in distribution.items():
        key = word[:-1] if drop == "last" else word[1:]
        out[key] = out.get(key, 0) + p
    return out


def block_entropy_bounds(
    dist_n: Mapping[Word, Probability], dist_next: Mapping[Word, Probability], tol: float = 1e-10
) -> EntropyBracket:
    """Bracket the entropy rate from consecutive block distributions.

    upper is H(n)/n; lower is H(n+1) - H(n), the entropy of the order-n
    Markov approximation, exact for Markov measures of order at most n.
    """
    if not dist_n or not dist_next:
        raise InvalidParameter("Block distributions must be nonempty")
    n = len(next(iter(dist_n)))
    if len(next(iter(dist_next))) != n + 1:
        raise InvalidParameter("Second distribution must be over blocks one symbol longer")
    reduced = marginalize(dist_next, "last")
    keys = set(reduced) | set(dist_n)
    worst = max(abs(float(reduced.get(k, 0)) - float(dist_n.get(k, 0))) for k in keys)
    if worst > tol:
        raise InvalidParameter(f"Inconsistent marginals (max deviation {worst:.3g})")
    h_n = block_entropy(dist_n)
    h_next = block_entropy(dist_next)
    return EntropyBracket(n, h_n / n, h_next - h_n, h_n, h_next)


def weighted_entropy(mu: Union[MarkovMeasure, float], nu_entropy: float, alpha: float) -> float:
    """(h(mu) + alpha * h(pi mu)) / (alpha + 1)."""
    if alpha < 0:
        raise InvalidParameter(f"alpha must be nonnegative, got {alpha}")
    h_mu = entropy(mu) if isinstance(mu, (MarkovMeasure, PeriodicMeasure)) else float(mu)
    return (h_mu + alpha * nu_entropy) / (alpha + 1.0)


def _sampling_table(probabilities: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row cumulative sums, row totals and the last charged column of every row.

    A uniform draw is scaled by the row total and the pick is capped at the
    last charged column, so zero-probability entries are never returned.
    """
    rows = np.atleast_2d(np.asarray(probabilities, dtype=float))
    cumulative = np.cumsum(rows, axis=1)
    last = rows.shape[1] - 1 - np.argmax(rows[:, ::-1] > 0, axis=1)
    return cumulative, cumulative[:, -1], last


def sample_path(measure: Union[MarkovMeasure, PeriodicMeasure], length: int, rng: np.random.Generator) -> np.ndarray:
    """One stationary path; a plain loop because every step depends on the last."""
    if isinstance(measure, PeriodicMeasure):
        block = np.asarray(measure.orbit.period_block, dtype=np.int64)
        phase = int(rng.integers(measure.orbit.period))
        return np.resize(np.roll(block, -phase), length)
    start, start_total, start_last = _sampling_table(measure.stationary)
    cumulative, totals, last = _sampling_table(measure.transition)
    rows, totals, last = cumulative.tolist(), totals.tolist(), last.tolist()
    draws = rng.random(length).tolist()
    state = min(bisect_right(start[0].tolist(), draws[0] * start_total[0]), int(start_last[0]))
    path = [state]
    for u in draws[1:]:
        state = min(bisect_right(rows[state], u * totals[state]), last[state])
        path.append(state)
    return np.asarray(path, dtype=np.int64)


def sample_windows(
    measure: Union[MarkovMeasure, PeriodicMeasure], count: int, length: int, rng: np.random.Generator
) -> np.ndarray:
    """``count`` independent stationary windows, vectorised across windows."""
    if isinstance(measure, PeriodicMeasure):
        block = np.asarray(measure.orbit.period_block, dtype=np.int64)
        phases = rng.integers(measure.orbit.period, size=count)
        positions = (phases[:, None] + np.arange(length)[None, :]) % measure.orbit.period
        return block[positions]
    start, start_total, start_last = _sampling_table(measure.stationary)
    cumulative, totals, last = _sampling_table(measure.transition)
    windows = np.empty((count, length), dtype=np.int64)
    first = np.searchsorted(start[0], rng.random(count) * start_total[0], side="right")
    windows[:, 0] = np.minimum(first, start_last[0])
    for t in range(1, length):
        previous = windows[:, t - 1]
        u = rng.random(count) * totals[previous]
        windows[:, t] = np.minimum((u[:, None] >= cumulative[previous]).sum(axis=1), last[previous])
    return windows
