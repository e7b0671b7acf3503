import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from Relent.dynamics.exceptions import DisallowedWord, InvalidParameter, NotSingletonClump, TruncationTooCoarse
from Relent.dynamics.factor import FactorCode, fiber_graph
from Relent.dynamics.measures import entropy, markov_measure, parry_measure
from Relent.dynamics.relmax import (
    HOMCLUMP_STATES,
    abramov_entropy,
    build_induced,
    cylinder_probability,
    fiber_entropy_optimizer,
    fiber_periodic,
    homclump_family,
    homclump_fixed_vector,
    homclump_K,
    induced_code,
    induced_entropy,
    maximal_induced_measure,
)
from Relent.dynamics.sft import periodic_orbit, periodic_orbits

ABK_RELATIVE_ENTROPY = sum(0.5 ** k * math.log(k + 1) for k in range(1, 200)) / 3


@pytest.fixture(scope="module")
def abk_induced(abk):
    induced = build_induced(abk.code, abk.measures["nu"], "a", truncation=40)
    return induced, maximal_induced_measure(induced)


def test_loops_carry_exact_return_probabilities(abk_induced):
    induced, maximal = abk_induced
    assert induced.loops[0].return_time == 2
    for loop, weights in zip(induced.loops, maximal.weights):
        k = loop.return_time - 1
        assert loop.probability == Fraction(1, 2 ** k)
        assert len(loop.bands) == k + 1
        assert sum(weights) == loop.probability
    assert induced.retained_mass == 1 - Fraction(1, 2 ** len(induced.loops))


def test_abramov_entropy_of_abk(abk, abk_induced):
    _, maximal = abk_induced
    result = abramov_entropy(abk.code, abk.measures["nu"], maximal)
    assert result.h_rel == pytest.approx(ABK_RELATIVE_ENTROPY, abs=1e-6)
    assert result.h_nu == pytest.approx(2 / 3 * math.log(2))
    assert result.h_mu == pytest.approx(result.h_nu + result.h_rel)
    assert induced_entropy(maximal) * float(maximal.induced.clump_mass) == pytest.approx(result.h_mu)


def test_coarse_truncation_needs_override(abk):
    induced = build_induced(abk.code, abk.measures["nu"], "a", truncation=5)
    maximal = maximal_induced_measure(induced)
    with pytest.raises(TruncationTooCoarse):
        abramov_entropy(abk.code, abk.measures["nu"], maximal)
    assert abramov_entropy(abk.code, abk.measures["nu"], maximal, override=True).truncation == 5


def test_cylinder_probability_is_a_product_of_band_weights(abk, abk_induced):
    _, maximal = abk_induced
    word = abk.X.parse_word("a b1 b2 a b2 a")
    assert cylinder_probability(abk.code, abk.measures["nu"], maximal, word) == Fraction(1, 144)
    short = abk.X.parse_word("a b1 a")
    assert cylinder_probability(abk.code, abk.measures["nu"], maximal, short) == Fraction(1, 12)
    with pytest.raises(DisallowedWord):
        cylinder_probability(abk.code, abk.measures["nu"], maximal, abk.X.parse_word("b1 a"))


def test_build_induced_needs_a_singleton_clump(abk):
    with pytest.raises(NotSingletonClump):
        build_induced(abk.code, abk.measures["nu"], "b")


def test_fiber_over_ab_is_determinate(abk):
    orbit = periodic_orbit(abk.Y, abk.Y.parse_word("a b"))
    fiber = fiber_periodic(abk.code, orbit)
    assert len(fiber.components) == 1
    assert fiber.max_entropy == pytest.approx(0.5 * math.log(2), abs=1e-9)
    assert fiber.determinate
    assert fiber.components[0].symbol_marginal == pytest.approx({"a": 0.5, "b1": 0.25, "b2": 0.25})
    assert fiber.components[0].lam == pytest.approx(math.sqrt(2), abs=1e-10)
    assert fiber.as_dict()["components"][0]["lam"] == fiber.components[0].lam


def test_fiber_over_b_has_two_maximal_components(abk):
    orbit = periodic_orbit(abk.Y, abk.Y.parse_word("b"))
    fiber = fiber_periodic(abk.code, orbit)
    assert fiber.maximal_count == 2
    assert not fiber.determinate
    assert fiber.as_dict()["determinate"] is False


def test_fiber_components_match_networkx(entries):
    for entry in entries.values():
        for orbit in periodic_orbits(entry.Y, 6):
            graph, _ = fiber_graph(entry.code, orbit)
            g = graph.graph()
            expected = sum(
                1
                for members in nx.strongly_connected_components(g)
                if len(members) > 1 or any(g.has_edge(v, v) for v in members)
            )
            assert len(fiber_periodic(entry.code, orbit).components) == expected, (entry.name, orbit)


def test_homclump_family_fixed_vector():
    for K in (0.25, 1.0, 3.0):
        family = homclump_family(K)
        assert family.x == pytest.approx(K / (2 * K + 2))
        assert np.allclose(family.transition.sum(axis=1), 1.0)
        assert np.allclose(family.fixed_vector @ family.transition, family.fixed_vector, atol=1e-12)
    with pytest.raises(InvalidParameter):
        homclump_family(0.0)


def test_homclump_K(homc):
    assert homclump_K(homc.measures["nu"]) == 1


def _homc_nu(homc, stay: Fraction):
    rows = [[stay, 1 - stay], [Fraction(1), Fraction(0)]]
    return markov_measure(homc.Y, rows)


@pytest.mark.parametrize("stay", [Fraction(1, 5), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(4, 5)])
def test_optimizer_recovers_homogeneous_clump_chain(homc, stay):
    nu = _homc_nu(homc, stay)
    K = float(homclump_K(nu))
    assert K == pytest.approx(float(stay / (1 - stay)))
    induced = induced_code(homc.code, nu, "a")
    assert sorted(induced.code.domain.alphabet) == sorted(HOMCLUMP_STATES)
    optimum = fiber_entropy_optimizer(induced.code, induced.nu, order=1, restarts=16, seed=1)
    names = list(optimum.measure.base.alphabet)
    order = [names.index(state) for state in HOMCLUMP_STATES]
    found = optimum.measure.transition[np.ix_(order, order)]
    family = homclump_family(K)
    assert np.max(np.abs(found - family.transition)) < 1e-6
    stationary = optimum.measure.stationary[order]
    assert np.allclose(stationary, homclump_fixed_vector(family.x, family.x), atol=1e-10)
    assert optimum.image_gap < 1e-9


def test_optimizer_on_identity_code_returns_nu(golden):
    code = FactorCode(golden, golden, (0, 1))
    nu = parry_measure(golden)
    optimum = fiber_entropy_optimizer(code, nu, order=1, restarts=2, seed=0)
    assert optimum.entropy == pytest.approx(entropy(nu), abs=1e-9)
    assert optimum.image_gap < 1e-9
    assert optimum.label.startswith("heuristic")


def test_optimizer_is_reproducible(abk):
    first = fiber_entropy_optimizer(abk.code, abk.measures["nu"], order=1, restarts=4, seed=3)
    second = fiber_entropy_optimizer(abk.code, abk.measures["nu"], order=1, restarts=4, seed=3)
    assert first.restart_entropies == second.restart_entropies
    assert first.entropy >= entropy(abk.measures["nu"]) - 1e-9


def test_fiber_verdicts_do_not_depend_on_phase(entries):
    for entry in entries.values():
        for orbit in periodic_orbits(entry.Y, 4):
            fiber = fiber_periodic(entry.code, orbit)
            for shift in range(1, orbit.period):
                rotated = fiber_periodic(entry.code, orbit.rotate(shift))
                assert rotated.maximal_count == fiber.maximal_count, (entry.name, orbit, shift)
                assert rotated.max_entropy == pytest.approx(fiber.max_entropy, abs=1e-12)
                assert sorted(c.lam for c in rotated.components) == pytest.approx(
                    sorted(c.lam for c in fiber.components), abs=1e-10
                )


def test_equidistributed_band_weights_beat_redistributions(abk_induced):
    _, maximal = abk_induced
    weights = [[float(q) for q in qs] for qs in maximal.weights]
    best = induced_entropy(weights)
    rng = np.random.default_rng(9)
    for _ in range(100):
        i = int(rng.integers(6))
        delta = rng.normal(size=len(weights[i]))
        delta -= delta.mean()
        moved = [list(qs) for qs in weights]
        moved[i] = list(np.asarray(weights[i]) + 0.5 * weights[i][0] * delta / np.max(np.abs(delta)))
        assert sum(moved[i]) == pytest.approx(sum(weights[i]))
        assert induced_entropy(moved) < best


def test_optimizer_reaches_image_entropy_over_a_finite_to_one_code(xor):
    nu = xor.measures["nu"]
    optimum = fiber_entropy_optimizer(xor.code, nu, order=1, restarts=4, seed=0)
    assert optimum.entropy == pytest.approx(entropy(nu), abs=1e-8)


def test_optimizer_over_abk_is_bounded_by_its_relaxation(abk, abk_induced):
    nu = abk.measures["nu"]
    first = fiber_entropy_optimizer(abk.code, nu, order=1, restarts=4, seed=0)
    second = fiber_entropy_optimizer(abk.code, nu, order=2, restarts=4, seed=0)
    # order 1 only fixes the mass of a, so it finds the best measure with mu[a] = 1/3
    golden_ratio = (1 + math.sqrt(5)) / 2
    assert first.entropy == pytest.approx(5 / 3 * math.log(golden_ratio), abs=1e-8)
    assert entropy(nu) - 1e-9 <= second.entropy <= first.entropy + 1e-9
    abramov = abramov_entropy(abk.code, nu, abk_induced[1])
    assert first.entropy > abramov.h_mu
