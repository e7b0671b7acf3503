import math
from fractions import Fraction

import numpy as np
import pytest

from Relent.dynamics.exceptions import InvalidMeasure, ReducibleMatrix
from Relent.dynamics.measures import (
    bernoulli,
    block_distribution,
    block_entropy_bounds,
    entropy,
    higher_block_measure,
    integrate_potential,
    marginalize,
    markov_measure,
    parry_measure,
    periodic_measure,
    perron,
    pressure_equilibrium,
    sample_path,
    sample_windows,
    weighted_entropy,
)
from Relent.dynamics.sft import Sft

from conftest import geometric_nu

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


def test_perron_golden_mean(golden):
    spectral = perron(golden.adjacency)
    assert spectral.lam == pytest.approx(GOLDEN_RATIO, abs=1e-10)
    a = golden.adjacency.astype(float)
    assert np.allclose(a @ spectral.right, spectral.lam * spectral.right, atol=1e-10)
    assert np.allclose(spectral.left @ a, spectral.lam * spectral.left, atol=1e-10)
    assert spectral.left @ spectral.right == pytest.approx(1.0)


def test_perron_full_shift_and_cycle(full2):
    spectral = perron(full2.adjacency)
    assert spectral.lam == pytest.approx(2.0)
    assert np.allclose(spectral.right, [0.5, 0.5])
    assert perron(np.array([[0, 1], [1, 0]])).lam == pytest.approx(1.0)


def test_perron_rejects_reducible_matrix():
    with pytest.raises(ReducibleMatrix):
        perron(np.array([[1, 1], [0, 1]]))


def test_parry_measure_attains_log_lambda(golden, full2):
    assert entropy(parry_measure(golden)) == pytest.approx(math.log(GOLDEN_RATIO), abs=1e-9)
    assert np.allclose(parry_measure(full2).transition, 0.5)


def test_random_markov_measures_stay_below_topological_entropy(golden):
    rng = np.random.default_rng(7)
    bound = math.log(GOLDEN_RATIO) + 1e-9
    for p in rng.random(100):
        mu = markov_measure(golden, [[p, 1 - p], [1.0, 0.0]])
        assert entropy(mu) <= bound


def test_exact_stationary_vector(abk):
    nu = abk.measures["nu"]
    assert nu.exact
    assert nu.exact_stationary == (Fraction(1, 3), Fraction(2, 3))
    assert entropy(nu) == pytest.approx(2 / 3 * math.log(2))


def test_markov_measure_validation(golden):
    with pytest.raises(InvalidMeasure):
        markov_measure(golden, [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(InvalidMeasure):
        markov_measure(golden, [[Fraction(1, 2), Fraction(1, 3)], [Fraction(1), Fraction(0)]])
    with pytest.raises(InvalidMeasure):
        markov_measure(golden, [[0.5, 0.5], [1.0, 0.0]], stationary=[0.5, 0.5])


def test_block_distribution_is_exact(abk):
    nu = abk.measures["nu"]
    blocks = block_distribution(nu, 5)
    assert sum(blocks.values()) == 1
    a, b = nu.base.symbol("a"), nu.base.symbol("b")
    assert blocks[(a, b, b, b, a)] == Fraction(1, 3) * Fraction(1, 8)


def test_block_bracket_of_a_markov_measure(golden):
    mu = parry_measure(golden)
    bracket = block_entropy_bounds(block_distribution(mu, 3), block_distribution(mu, 4))
    assert bracket.lower == pytest.approx(entropy(mu), abs=1e-12)
    assert bracket.upper >= bracket.lower
    assert bracket.width >= 0


def test_higher_block_measure_keeps_entropy(full2):
    base = bernoulli(full2, [Fraction(7, 10), Fraction(3, 10)])
    lifted = higher_block_measure(base, 2)
    assert lifted.exact
    assert entropy(lifted) == pytest.approx(entropy(base))


def test_xor_lift_matches_gallery_file(xor):
    mu = xor.measures["mu_p70"]
    assert entropy(mu) == pytest.approx(-(0.7 * math.log(0.7) + 0.3 * math.log(0.3)))
    ones = xor.X.parse_word("11")
    assert mu.probability((ones[0],)) == Fraction(49, 100)


def test_periodic_measure(abk):
    y = abk.Y
    orbit = periodic_measure(y, y.parse_word("a b b"))
    assert entropy(orbit) == 0.0
    assert np.allclose(orbit.symbol_mass(), [1 / 3, 2 / 3])


def test_pressure_of_zero_potential_is_topological_entropy(golden):
    pressure, state = pressure_equilibrium(golden, 0.0)
    assert pressure == pytest.approx(math.log(GOLDEN_RATIO))
    assert np.allclose(state.transition, parry_measure(golden).transition)


def test_equilibrium_states_satisfy_the_variational_identity(golden, abk):
    rng = np.random.default_rng(12)
    for sft in (golden, abk.X):
        for _ in range(20):
            phi = rng.normal(size=(sft.size, sft.size))
            pressure, state = pressure_equilibrium(sft, phi)
            assert pressure == pytest.approx(entropy(state) + integrate_potential(state, phi), abs=1e-9)


def test_constant_potential_shifts_pressure(golden):
    pressure, state = pressure_equilibrium(golden, 0.7)
    assert pressure == pytest.approx(math.log(GOLDEN_RATIO) + 0.7, abs=1e-10)
    assert np.allclose(state.transition, parry_measure(golden).transition)


def test_pressure_of_a_weighted_self_loop(golden):
    pressure, state = pressure_equilibrium(golden, {("0", "0"): 1.0})
    lam = (math.e + math.sqrt(math.e ** 2 + 4)) / 2
    assert pressure == pytest.approx(math.log(lam), abs=1e-10)
    assert integrate_potential(state, {("0", "0"): 1.0}) == pytest.approx(pressure - entropy(state), abs=1e-10)


def test_block_marginals_are_consistent(abk, golden):
    nu = abk.measures["nu"]
    shorter = block_distribution(nu, 5)
    longer = block_distribution(nu, 6)
    assert marginalize(longer, "last") == shorter
    assert marginalize(longer, "first") == shorter
    mu = parry_measure(golden)
    shorter = block_distribution(mu, 4)
    for drop in ("first", "last"):
        reduced = marginalize(block_distribution(mu, 5), drop)
        assert set(reduced) == set(shorter)
        assert all(reduced[w] == pytest.approx(p, abs=1e-14) for w, p in shorter.items())


def test_weighted_entropy(abk):
    nu = abk.measures["nu"]
    assert weighted_entropy(1.0, 0.5, 1.0) == pytest.approx(0.75)
    assert weighted_entropy(nu, entropy(nu), 3.0) == pytest.approx(entropy(nu))


def test_sampling_follows_stationary_distribution(abk):
    nu = geometric_nu(abk.Y, Fraction(1, 2))
    rng = np.random.default_rng(3)
    windows = sample_windows(nu, 20000, 4, rng)
    assert np.all(nu.base.adjacency[windows[:, :-1], windows[:, 1:]])
    a = nu.base.symbol("a")
    assert np.mean(windows == a) == pytest.approx(1 / 3, abs=0.01)
    path = sample_path(nu, 50000, rng)
    assert np.mean(path == a) == pytest.approx(1 / 3, abs=0.01)
    assert np.all(nu.base.adjacency[path[:-1], path[1:]])


class _HighDraws:
    """Draws 0.1 once, then values just below 1."""

    def __init__(self):
        self.first = True

    def random(self, size):
        draws = np.full(size, 1 - 1e-15)
        if self.first:
            draws[0] = 0.1
            self.first = False
        return draws


def test_sampling_never_takes_an_uncharged_edge():
    full3 = Sft.from_edges(["0", "1", "2"], [(a, b) for a in "012" for b in "012"])
    short = 0.5 - 1e-13
    mu = markov_measure(full3, [[0.5, short, 0.0], [0.5, 0.5, 0.0], [0.5, 0.5, 0.0]])
    path = sample_path(mu, 6, _HighDraws())
    assert path[0] == 0
    assert np.all(mu.transition[path[:-1], path[1:]] > 0)
    windows = sample_windows(mu, 4, 6, _HighDraws())
    assert windows[0, 0] == 0
    assert np.all(mu.transition[windows[:, :-1], windows[:, 1:]] > 0)
