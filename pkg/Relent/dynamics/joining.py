"""Fiber posteriors, relatively independent joinings and the interleaving map.

Lifts of a sampled image word are drawn by forward filtering, backward
sampling over the fiber; every sampler is batched across trials with numpy.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import entr

from Relent.utils.workers import Tally, run_blocks, split_seeds
from Relent.vars import Var
from .exceptions import (
    DisallowedWord,
    ImageMismatch,
    InsufficientData,
    InvalidMeasure,
    InvalidParameter,
    PushforwardMismatch,
    ZeroProbabilityWindow,
)
from .factor import FactorCode, pushforward_blocks
from .measures import MarkovMeasure, PeriodicMeasure, block_distribution, entropy, sample_path, sample_windows

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    y_window: Tuple[int, ...]
    marginals: np.ndarray
    pairs: np.ndarray
    log_probability: float
    probability: Optional[Fraction] = None

    def as_dict(self, code: FactorCode) -> dict:
        return {
            "window": code.codomain.spell(self.y_window),
            "log_probability": self.log_probability,
            "marginals": [
                {code.domain.alphabet[s]: float(row[s]) for s in range(len(row)) if row[s] > 0}
                for row in self.marginals
            ],
        }


@dataclass(frozen=True, eq=False)
class JoiningSample:
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def coincidence(self) -> np.ndarray:
        return self.u == self.v


@dataclass(frozen=True)
class JoiningEstimate:
    n: int
    center: int
    coincidence: float
    stderr: float
    overlap: float
    overlap_stderr: float
    trials: int
    seed: int


@dataclass(frozen=True, eq=False)
class InterleaveSample:
    u: np.ndarray
    v: np.ndarray
    r: np.ndarray
    initial: int
    w: np.ndarray
    switches: np.ndarray


@dataclass(frozen=True, eq=False)
class EntropyEstimate:
    n_max: int
    samples: int
    conditional: np.ndarray
    conditional_ci: Tuple[np.ndarray, np.ndarray]
    block_rate: np.ndarray
    block_rate_ci: Tuple[np.ndarray, np.ndarray]

    @property
    def estimate(self) -> float:
        return float(self.conditional[-1])

    def as_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "samples": self.samples,
            "estimate": self.estimate,
            "conditional": self.conditional.tolist(),
            "conditional_ci": [self.conditional_ci[0].tolist(), self.conditional_ci[1].tolist()],
            "block_rate": self.block_rate.tolist(),
            "block_rate_ci": [self.block_rate_ci[0].tolist(), self.block_rate_ci[1].tolist()],
        }


@dataclass(frozen=True)
class InterleaveEntropy:
    estimate: EntropyEstimate
    h_nu: Optional[float]
    length: int
    seed: int

    @property
    def gain(self) -> Optional[float]:
        if self.h_nu is None:
            return None
        return self.estimate.estimate - self.h_nu


@dataclass(frozen=True)
class MarkovGapReport:
    n: int
    m: int
    conditional: Tuple[float, ...]
    gaps: Tuple[float, ...]

    @property
    def gap(self) -> float:
        return self.gaps[-1]


def _check_lift(mu: MarkovMeasure, code: FactorCode) -> None:
    if mu.base != code.domain:
        raise InvalidMeasure("Lift does not live on the domain of the code")


def posterior(mu: MarkovMeasure, code: FactorCode, y_window: Sequence[int], exact: bool = False) -> PosteriorTable:
    """Forward-backward marginals of x_t given the window, with pairwise posteriors."""
    _check_lift(mu, code)
    y = tuple(int(b) for b in y_window)
    if not code.codomain.is_allowed(y):
        raise DisallowedWord(f"{y!r} is not allowed in the codomain")
    if exact:
        return _exact_posterior(mu, code, y)
    masks, transition = code.masks, mu.transition
    n = len(y)
    alpha = np.zeros((n, code.domain.size))
    scale = np.zeros(n)
    alpha[0] = mu.stationary * masks[y[0]]
    for t in range(n):
        if t:
            alpha[t] = (alpha[t - 1] @ transition) * masks[y[t]]
        scale[t] = alpha[t].sum()
        if scale[t] <= 0:
            raise ZeroProbabilityWindow(f"Window {code.codomain.spell(y)} has zero probability")
        alpha[t] /= scale[t]
    beta = np.ones((n, code.domain.size))
    for t in range(n - 2, -1, -1):
        beta[t] = transition @ (beta[t + 1] * masks[y[t + 1]])
        beta[t] /= beta[t].sum()
    marginals = alpha * beta
    marginals /= marginals.sum(axis=1, keepdims=True)
    pairs = np.zeros((max(n - 1, 0), code.domain.size, code.domain.size))
    for t in range(n - 1):
        joint = alpha[t][:, None] * transition * (masks[y[t + 1]] * beta[t + 1])[None, :]
        pairs[t] = joint / joint.sum()
    return PosteriorTable(y, marginals, pairs, float(np.log(scale).sum()))


def _exact_posterior(mu: MarkovMeasure, code: FactorCode, y: Tuple[int, ...]) -> PosteriorTable:
    if not mu.exact:
        raise InvalidMeasure("Exact posteriors need rational transitions")
    size, n = code.domain.size, len(y)
    rows, start = mu.exact_transition, mu.exact_stationary
    inside = [[code.symbol_map[s] == b for s in range(size)] for b in range(code.codomain.size)]
    zero = Fraction(0)
    alpha = [[start[s] if inside[y[0]][s] else zero for s in range(size)]]
    for t in range(1, n):
        alpha.append([
            sum((alpha[-1][r] * rows[r][s] for r in range(size)), zero) if inside[y[t]][s] else zero
            for s in range(size)
        ])
    beta = [[Fraction(1)] * size for _ in range(n)]
    for t in range(n - 2, -1, -1):
        beta[t] = [
            sum((rows[s][r] * beta[t + 1][r] for r in range(size) if inside[y[t + 1]][r]), zero)
            for s in range(size)
        ]
    total = sum(alpha[-1])
    if total == 0:
        raise ZeroProbabilityWindow(f"Window {code.codomain.spell(y)} has zero probability")
    marginals = np.array([[alpha[t][s] * beta[t][s] / total for s in range(size)] for t in range(n)], dtype=object)
    pairs = np.array(
        [
            [
                [alpha[t][r] * rows[r][s] * beta[t + 1][s] / total if inside[y[t + 1]][s] else zero for s in range(size)]
                for r in range(size)
            ]
            for t in range(n - 1)
        ],
        dtype=object,
    ).reshape(max(n - 1, 0), size, size)
    return PosteriorTable(y, marginals, pairs, math.log(total.numerator) - math.log(total.denominator), total)


def _filter(mu: MarkovMeasure, code: FactorCode, windows: np.ndarray) -> np.ndarray:
    """Normalised forward vectors for a batch of image windows."""
    masks, transition = code.masks, mu.transition
    rows, n = windows.shape
    alpha = np.empty((rows, n, code.domain.size))
    alpha[:, 0] = mu.stationary[None, :] * masks[windows[:, 0]]
    for t in range(n):
        if t:
            alpha[:, t] = (alpha[:, t - 1] @ transition) * masks[windows[:, t]]
        totals = alpha[:, t].sum(axis=1)
        if np.any(totals <= 0):
            raise ZeroProbabilityWindow("A sampled window has zero probability under the lift")
        alpha[:, t] /= totals[:, None]
    return alpha


def _smooth(mu: MarkovMeasure, code: FactorCode, windows: np.ndarray, alpha: np.ndarray, t: int) -> np.ndarray:
    """Posterior marginal of x_t for every window."""
    masks, transition = code.masks, mu.transition
    beta = np.ones((windows.shape[0], code.domain.size))
    for s in range(windows.shape[1] - 2, t - 1, -1):
        beta = (beta * masks[windows[:, s + 1]]) @ transition.T
        beta /= beta.sum(axis=1, keepdims=True)
    marginal = alpha[:, t] * beta
    return marginal / marginal.sum(axis=1, keepdims=True)


def _choose(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cumulative = np.cumsum(weights, axis=1)
    u = rng.random(weights.shape[0]) * cumulative[:, -1]
    return np.minimum((u[:, None] >= cumulative).sum(axis=1), weights.shape[1] - 1)


def _sample_back(
    mu: MarkovMeasure, alpha: np.ndarray, rng: np.random.Generator, last: Optional[np.ndarray] = None
) -> np.ndarray:
    """Backward sampling through filtered vectors; ``last`` pins the final state."""
    rows, n, _ = alpha.shape
    path = np.empty((rows, n), dtype=np.int64)
    path[:, -1] = _choose(alpha[:, -1], rng) if last is None else last
    for t in range(n - 2, -1, -1):
        path[:, t] = _choose(alpha[:, t] * mu.transition[:, path[:, t + 1]].T, rng)
    return path


def lift_windows(mu: MarkovMeasure, code: FactorCode, windows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One μ-lift per image window, conditioned on that window only."""
    _check_lift(mu, code)
    return _sample_back(mu, _filter(mu, code, windows), rng)


def lift_stream(
    mu: MarkovMeasure, code: FactorCode, y: np.ndarray, rng: np.random.Generator, block: int = 1024
) -> np.ndarray:
    """A μ-lift of one long image word, conditioned on all of it.

    Block transfer matrices carry the filter across blocks; block end states
    are sampled backwards first, then every block interior is filled in
    between its pinned end states, all blocks at once.
    """
    _check_lift(mu, code)
    y = np.asarray(y, dtype=np.int64)
    length = y.shape[0]
    size = code.domain.size
    masks, transition = code.masks, mu.transition
    bounds = list(range(0, length, block)) + [length]
    segments = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]

    transfers = np.empty((len(segments), size, size))
    for group in _by_length(segments):
        windows = np.stack([y[a:b] for a, b in (segments[i] for i in group)])
        carry = np.broadcast_to(np.eye(size), (len(group), size, size)).copy()
        for t in range(windows.shape[1]):
            carry = (carry @ transition) * masks[windows[:, t]][:, None, :]
            carry /= carry.sum(axis=(1, 2), keepdims=True)
        transfers[group] = carry

    forward = np.empty((len(segments), size))
    state = mu.stationary
    for j in range(len(segments)):
        state = state @ transfers[j]
        total = state.sum()
        if total <= 0:
            raise ZeroProbabilityWindow("The image word has no lift")
        forward[j] = state = state / total
    ends = np.empty(len(segments), dtype=np.int64)
    ends[-1] = _choose(forward[-1][None, :], rng)[0]
    for j in range(len(segments) - 2, -1, -1):
        ends[j] = _choose((forward[j] * transfers[j + 1][:, ends[j + 1]])[None, :], rng)[0]

    path = np.empty(length, dtype=np.int64)
    for group in _by_length(segments):
        windows = np.stack([y[a:b] for a, b in (segments[i] for i in group)])
        starts = np.array([transition[ends[i - 1]] if i else mu.stationary for i in group])
        alpha = np.empty((len(group), windows.shape[1], size))
        alpha[:, 0] = starts * masks[windows[:, 0]]
        alpha[:, 0] /= alpha[:, 0].sum(axis=1, keepdims=True)
        for t in range(1, windows.shape[1]):
            alpha[:, t] = (alpha[:, t - 1] @ transition) * masks[windows[:, t]]
            alpha[:, t] /= alpha[:, t].sum(axis=1, keepdims=True)
        filled = _sample_back(mu, alpha, rng, last=ends[group])
        for row, i in enumerate(group):
            a, b = segments[i]
            path[a:b] = filled[row]
    return path


def _by_length(segments: Sequence[Tuple[int, int]], chunk: int = 256) -> List[np.ndarray]:
    """Indices of equal-length segments, at most ``chunk`` per group."""
    lengths = np.array([b - a for a, b in segments])
    groups = []
    for size in np.unique(lengths):
        same = np.flatnonzero(lengths == size)
        groups.extend(same[i:i + chunk] for i in range(0, same.size, chunk))
    return groups


def check_pushforwards(
    mu1: MarkovMeasure,
    mu2: MarkovMeasure,
    code: FactorCode,
    nu: Optional[MarkovMeasure] = None,
    length: int = 8,
    tol: float = 1e-9,
) -> None:
    """Raise unless πμ₁, πμ₂ and ν agree on blocks of ``length``; ν defaults to πμ₁."""
    exact = mu1.exact and mu2.exact and (nu is None or nu.exact)
    if nu is None:
        target = pushforward_blocks(code, mu1, length, exact=exact)
    else:
        target = block_distribution(nu, length, exact=exact)
    for name, mu in (("first", mu1), ("second", mu2)):
        image = pushforward_blocks(code, mu, length, exact=exact)
        keys = set(image) | set(target)
        worst = max(abs(float(image.get(k, 0)) - float(target.get(k, 0))) for k in keys)
        if (exact and any(image.get(k, 0) != target.get(k, 0) for k in keys)) or worst > tol:
            raise PushforwardMismatch(f"The {name} lift differs from ν on {length}-blocks by {worst:.3g}")


def sample_image(
    code: FactorCode,
    nu: Optional[Union[MarkovMeasure, PeriodicMeasure]],
    mu: MarkovMeasure,
    size: int,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Image windows drawn from ν, or as images of μ-windows when ν is not given."""
    if nu is None:
        return code.images[sample_windows(mu, size, n, rng)]
    return sample_windows(nu, size, n, rng)


def _draw_joinings(
    mu1: MarkovMeasure,
    mu2: MarkovMeasure,
    code: FactorCode,
    nu: Optional[MarkovMeasure],
    n: int,
    size: int,
    rng: np.random.Generator,
):
    y = sample_image(code, nu, mu1, size, n, rng)
    alpha1 = _filter(mu1, code, y)
    alpha2 = _filter(mu2, code, y)
    u = _sample_back(mu1, alpha1, rng)
    v = _sample_back(mu2, alpha2, rng)
    center = n // 2
    overlap = (_smooth(mu1, code, y, alpha1, center) * _smooth(mu2, code, y, alpha2, center)).sum(axis=1)
    return y, u, v, overlap


@dataclass(frozen=True, eq=False)
class _JoiningTask:
    mu1: MarkovMeasure
    mu2: MarkovMeasure
    code: FactorCode
    nu: Optional[MarkovMeasure]
    n: int

    def __call__(self, seed: np.random.SeedSequence, size: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        _, u, v, overlap = _draw_joinings(self.mu1, self.mu2, self.code, self.nu, self.n, size, rng)
        center = self.n // 2
        return np.column_stack([(u[:, center] == v[:, center]).astype(float), overlap])


def sample_joining(
    mu1: MarkovMeasure,
    mu2: MarkovMeasure,
    code: FactorCode,
    nu: Optional[MarkovMeasure],
    n: int,
    trials: int,
    seed: Optional[int] = None,
    check_length: int = 8,
    workers: Optional[int] = None,
) -> JoiningEstimate:
    """Estimate (μ₁ ⊗_ν μ₂){u_c = v_c} at the window center c = n // 2.

    ``coincidence`` averages the sampled indicator; ``overlap`` averages
    Σ_s P₁(x_c = s | y) P₂(x_c = s | y) over the same image windows.
    """
    if n < 1 or trials < 2:
        raise InvalidParameter("Need a positive window and at least two trials")
    _check_lift(mu1, code)
    _check_lift(mu2, code)
    check_pushforwards(mu1, mu2, code, nu, check_length)
    seed = Var.SEED if seed is None else seed
    tally: Tally = run_blocks(_JoiningTask(mu1, mu2, code, nu, n), trials, seed, workers=workers)
    mean, stderr = tally.mean, tally.stderr
    LOGGER.info("Coincidence at n=%d: %.6f ± %.6f", n, mean[0], stderr[0])
    return JoiningEstimate(n, n // 2, float(mean[0]), float(stderr[0]), float(mean[1]), float(stderr[1]), trials, seed)


def joining_samples(
    mu1: MarkovMeasure,
    mu2: MarkovMeasure,
    code: FactorCode,
    nu: Optional[MarkovMeasure],
    n: int,
    count: int,
    seed: Optional[int] = None,
) -> Iterator[JoiningSample]:
    """The draws behind ``sample_joining``, one joined pair at a time."""
    seed = Var.SEED if seed is None else seed
    sizes = [min(Var.BLOCK_TRIALS, count - start) for start in range(0, count, Var.BLOCK_TRIALS)]
    for child, size in zip(split_seeds(seed, len(sizes)), sizes):
        y, u, v, _ = _draw_joinings(mu1, mu2, code, nu, n, size, np.random.default_rng(child))
        for row in range(size):
            yield JoiningSample(y[row], u[row], v[row])


def interleave(code: FactorCode, u: Sequence[int], v: Sequence[int], r: Sequence[int], initial: int) -> InterleaveSample:
    """w_k = u_k when the coin at the last coincidence before k is 1, else v_k.

    Before the first coincidence the coin ``initial`` decides.
    """
    u, v, r = (np.asarray(a, dtype=np.int64) for a in (u, v, r))
    if u.shape != v.shape or u.shape != r.shape or u.ndim != 1:
        raise InvalidParameter("u, v and r must be words of one common length")
    if not np.all(np.isin(r, (1, 2))) or initial not in (1, 2):
        raise InvalidParameter("Coins take the values 1 and 2")
    images = code.images
    if not np.array_equal(images[u], images[v]):
        raise ImageMismatch("u and v have different images")
    positions = np.arange(u.shape[0])
    marks = np.where(u == v, positions, -1)
    latest = np.maximum.accumulate(marks)
    before = np.concatenate(([-1], latest[:-1]))
    coins = np.where(before >= 0, r[np.clip(before, 0, None)], initial)
    w = np.where(coins == 1, u, v)
    if w.shape[0] > 1 and not np.all(code.domain.adjacency[w[:-1], w[1:]]):
        raise DisallowedWord("Interleaved word is not allowed")
    switches = np.flatnonzero(coins[1:] != coins[:-1]) + 1
    return InterleaveSample(u, v, r, int(initial), w, switches)


def _gram_codes(samples: np.ndarray, order: int, size: int) -> np.ndarray:
    rows = samples if samples.ndim == 2 else samples[None, :]
    if rows.shape[1] < order:
        raise InsufficientData(f"Rows of length {rows.shape[1]} are shorter than {order}")
    codes = np.zeros((rows.shape[0], rows.shape[1] - order + 1), dtype=np.int64)
    for i in range(order):
        codes = codes * size + rows[:, i:rows.shape[1] - order + 1 + i]
    return codes


def _entropies(counts: np.ndarray, maps: Sequence[np.ndarray], sizes: Sequence[int]) -> np.ndarray:
    total = counts.sum()
    return np.array([
        entr(np.bincount(index, weights=counts, minlength=size) / total).sum()
        for index, size in zip(maps, sizes)
    ])


def empirical_entropy(
    samples: np.ndarray,
    n_max: int,
    alphabet_size: Optional[int] = None,
    batches: int = 20,
    replicates: int = 200,
    seed: Optional[int] = None,
) -> EntropyEstimate:
    """Plug-in H(x_0 | x_1 … x_n) for n = 0..n_max and H_n / n for n = 1..n_max+1.

    All values are marginals of one (n_max+1)-gram table, so the conditional
    sequence is nonincreasing. Intervals come from resampling contiguous batches.
    """
    samples = np.asarray(samples, dtype=np.int64)
    if n_max < 0:
        raise InvalidParameter(f"n_max must be nonnegative, got {n_max}")
    size = int(samples.max()) + 1 if alphabet_size is None else alphabet_size
    order = n_max + 1
    if size ** order >= 2 ** 62:
        raise InvalidParameter(f"{size}^{order} grams do not fit in 64-bit codes")
    codes = _gram_codes(samples, order, size)
    flat = codes.ravel()
    vocabulary, inverse = np.unique(flat, return_inverse=True)
    if flat.size < 10 * vocabulary.size:
        raise InsufficientData(
            f"{flat.size} grams for {vocabulary.size} distinct contexts; need ten times as many"
        )

    maps, sizes = [], []

    def _marginal(keys: np.ndarray) -> None:
        values, index = np.unique(keys, return_inverse=True)
        maps.append(index)
        sizes.append(values.size)

    for k in range(1, order + 1):
        _marginal(vocabulary // size ** (order - k))
    for k in range(1, order):
        _marginal((vocabulary // size ** (order - k - 1)) % size ** k)

    def _summary(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        block = h[:order]
        suffix = np.concatenate(([0.0], h[order:]))
        conditional = block - suffix
        rate = block / np.arange(1, order + 1)
        return conditional, rate

    counts = np.bincount(inverse, minlength=vocabulary.size).astype(float)
    conditional, rate = _summary(_entropies(counts, maps, sizes))

    rng = np.random.default_rng(Var.SEED if seed is None else seed)
    batch_of = (np.arange(flat.size) * batches) // flat.size
    per_batch = np.bincount(
        batch_of * vocabulary.size + inverse.ravel(), minlength=batches * vocabulary.size
    ).reshape(batches, vocabulary.size).astype(float)
    draws_c, draws_r = [], []
    for _ in range(replicates):
        weights = np.bincount(rng.integers(batches, size=batches), minlength=batches)
        c, r = _summary(_entropies(weights @ per_batch, maps, sizes))
        draws_c.append(c)
        draws_r.append(r)
    draws_c, draws_r = np.array(draws_c), np.array(draws_r)
    return EntropyEstimate(
        n_max,
        int(flat.size),
        conditional,
        (np.percentile(draws_c, 2.5, axis=0), np.percentile(draws_c, 97.5, axis=0)),
        rate,
        (np.percentile(draws_r, 2.5, axis=0), np.percentile(draws_r, 97.5, axis=0)),
    )


def interleave_entropy(
    mu1: MarkovMeasure,
    mu2: MarkovMeasure,
    code: FactorCode,
    nu: Optional[MarkovMeasure],
    length: int,
    n_max: int,
    seed: Optional[int] = None,
) -> InterleaveEntropy:
    """Sample y from ν, lift it under μ₁ and μ₂, interleave with fresh coins and estimate entropy."""
    check_pushforwards(mu1, mu2, code, nu)
    seed = Var.SEED if seed is None else seed
    y_seed, u_seed, v_seed, coin_seed, boot_seed = split_seeds(seed, 5)
    if nu is None:
        y = code.images[sample_path(mu1, length, np.random.default_rng(y_seed))]
    else:
        y = sample_path(nu, length, np.random.default_rng(y_seed))
    LOGGER.info("Sampled an image word of length %d", length)
    u = lift_stream(mu1, code, y, np.random.default_rng(u_seed))
    v = lift_stream(mu2, code, y, np.random.default_rng(v_seed))
    coins = np.random.default_rng(coin_seed)
    r = coins.integers(1, 3, size=length)
    initial = int(coins.integers(1, 3))
    w = interleave(code, u, v, r, initial).w
    bootstrap = int(np.random.default_rng(boot_seed).integers(2 ** 31))
    estimate = empirical_entropy(w, n_max, alphabet_size=code.domain.size, seed=bootstrap)
    return InterleaveEntropy(estimate, None if nu is None else entropy(nu), length, seed)


def relative_markov_diagnostic(
    mu: MarkovMeasure,
    code: FactorCode,
    n: int,
    m: int,
    partition: Optional[Union[Sequence[int], Mapping[str, str]]] = None,
    cap: Optional[int] = None,
) -> MarkovGapReport:
    """gap(k, m) = H(a_0 | a_1, W) - H(a_0 | a_1 … a_k, W) for k = 1..n.

    a_t is the partition label of x_t and W the image window y_{-(m-1)} … y_{m-1}
    (empty when m = 0).
    """
    _check_lift(mu, code)
    if n < 1 or m < 0:
        raise InvalidParameter("Need n ≥ 1 and m ≥ 0")
    labels = _labels(mu, partition)
    back = max(m - 1, 0)
    ahead = max(n, m - 1)
    joint = block_distribution(mu, back + ahead + 1, exact=False, cap=cap)

    def _h(key) -> float:
        groups: Dict = {}
        for word, p in joint.items():
            k = key(word)
            groups[k] = groups.get(k, 0.0) + p
        return float(entr(np.fromiter(groups.values(), dtype=float)).sum())

    def _window(word):
        if m == 0:
            return ()
        return tuple(code.symbol_map[s] for s in word[back - (m - 1): back + m])

    conditional = []
    for k in range(1, n + 1):
        future = lambda word, k=k: tuple(labels[s] for s in word[back + 1: back + 1 + k])
        with_now = _h(lambda word: (labels[word[back]], future(word), _window(word)))
        without = _h(lambda word: (future(word), _window(word)))
        conditional.append(with_now - without)
    gaps = tuple(conditional[0] - c for c in conditional)
    return MarkovGapReport(n, m, tuple(conditional), gaps)


def _labels(mu: MarkovMeasure, partition) -> Tuple:
    if partition is None:
        return tuple(range(mu.base.size))
    if isinstance(partition, Mapping):
        return tuple(partition[name] for name in mu.base.alphabet)
    if len(partition) != mu.base.size:
        raise InvalidParameter("Partition must label every domain symbol")
    return tuple(partition)
