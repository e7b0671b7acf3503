import math
from fractions import Fraction

import numpy as np
import pytest

from Relent.dynamics.exceptions import DisallowedWord, InvalidCode
from Relent.dynamics.factor import (
    FactorCode,
    bound_N,
    clump_analysis,
    count_preimages,
    equidistributed_lift,
    fiber_counts,
    fiber_graph,
    image_subshift_check,
    periodic_equidistributed_lift,
    preimage_words,
    pushforward_blocks,
    pushforward_entropy_bounds,
    recode_code,
    relative_entropy_over_nu,
    relative_pressure,
    singleton_blocks,
    transfer_family,
    validate_code,
)
from Relent.dynamics.measures import block_distribution, block_entropy, entropy, periodic_measure
from Relent.dynamics.relmax import abramov_entropy, build_induced, maximal_induced_measure
from Relent.dynamics.sft import enumerate_words, periodic_orbit, periodic_orbits

from conftest import brute_count


@pytest.fixture(scope="module")
def abk_abramov(abk):
    induced = build_induced(abk.code, abk.measures["nu"], "a", truncation=40)
    return abramov_entropy(abk.code, abk.measures["nu"], maximal_induced_measure(induced)).h_rel


def test_abk_counts_grow_linearly(abk):
    y = abk.Y
    a, b = y.symbol("a"), y.symbol("b")
    for k in range(1, 21):
        assert count_preimages(abk.code, (a,) + (b,) * k + (a,)) == k + 1


def test_transfer_counts_match_brute_force(entries):
    for entry in entries.values():
        for n in range(1, 9):
            for word in enumerate_words(entry.Y, n):
                assert count_preimages(entry.code, word) == brute_count(entry.code, word), (entry.name, word)


def test_fiber_counts_agree_with_count_preimages(homcplus):
    for n, level in enumerate(fiber_counts(homcplus.code, 5), start=1):
        for word, vector in level.items():
            assert len(word) == n
            assert sum(vector) == count_preimages(homcplus.code, word)


def test_count_rejects_disallowed_word(abk):
    with pytest.raises(DisallowedWord):
        count_preimages(abk.code, abk.Y.parse_word("a a"))


def test_preimage_words(abk):
    words = preimage_words(abk.code, abk.Y.parse_word("a b b a"))
    assert [abk.X.spell(w) for w in words] == ["a b1 b1 a", "a b1 b2 a", "a b2 b2 a"]


def test_validate_code_flags_forbidden_edges(abk):
    bad = FactorCode.from_mapping(abk.X, abk.Y, {"a": "a", "b1": "a", "b2": "b"})
    report = validate_code(bad)
    assert not report.valid
    assert any("b1->b1" in e for e in report.errors)
    with pytest.raises(InvalidCode):
        FactorCode.from_mapping(abk.X, abk.Y, {"a": "a"})


def test_gallery_images_are_the_whole_codomain(entries):
    for entry in entries.values():
        assert image_subshift_check(entry.code, 6).clean


def test_clump_analysis_of_homcplus(homcplus):
    report = clump_analysis(homcplus.code, k_max=4)
    assert report.singleton_clumps == []
    assert report.n_all == 2
    assert (2, "bb") in report.higher_block_singletons
    assert (4, "abba") in report.higher_block_singletons
    assert report.first_singleton_order == 2
    assert singleton_blocks(homcplus.code, 2) == [homcplus.Y.parse_word("bb")]


def test_clump_analysis_of_abk(abk):
    report = clump_analysis(abk.code, k_max=3)
    assert report.singleton_clumps == ["a"]
    assert report.preimages == {"a": ("a",), "b": ("b1", "b2")}
    assert report.as_dict()["N_all"] == 1


def test_recoded_code_counts(abk):
    recoded, x_blocks, y_blocks = recode_code(abk.code, 2)
    assert len(x_blocks) == int(np.count_nonzero(abk.X.adjacency))
    for i, y_block in enumerate(y_blocks):
        above = sum(1 for w in x_blocks if abk.code.project(w) == y_block)
        assert len(recoded.clumps[i]) == above


def test_bound(abk, xor):
    assert bound_N(abk.code, abk.measures["nu"]) == 1
    assert bound_N(xor.code, xor.measures["nu"]) == 2
    only_b = periodic_measure(abk.Y, abk.Y.parse_word("b"))
    assert bound_N(abk.code, only_b) == 2


def test_xor_lifts_have_one_image(xor):
    for n in range(1, 13):
        first = pushforward_blocks(xor.code, xor.measures["mu_p70"], n, exact=True)
        second = pushforward_blocks(xor.code, xor.measures["mu_p30"], n, exact=True)
        assert first == second
        assert all(isinstance(p, Fraction) for p in first.values())


def test_pushforward_bracket_contains_image_entropy(abk):
    bracket = pushforward_entropy_bounds(abk.code, abk.measures["lift_b1"], 6)
    h_nu = entropy(abk.measures["nu"])
    assert bracket.lower - 1e-12 <= h_nu <= bracket.upper + 1e-12


def test_relative_pressure(abk):
    word = abk.Y.parse_word("a b b a")
    assert relative_pressure(abk.code, word) == pytest.approx(math.log(3) / 4)
    orbit = periodic_orbit(abk.Y, abk.Y.parse_word("a b"))
    assert relative_pressure(abk.code, orbit) == pytest.approx(0.5 * math.log(2), abs=1e-9)


def test_fiber_graph_over_a_periodic_point(abk):
    orbit = periodic_orbit(abk.Y, abk.Y.parse_word("a b"))
    graph, vertices = fiber_graph(abk.code, orbit)
    assert graph.alphabet == ("a@0", "b1@1", "b2@1")
    assert int(graph.adjacency.sum()) == 4


def test_periodic_relative_entropy_is_exact(abk):
    nu = periodic_measure(abk.Y, abk.Y.parse_word("a b"))
    estimate = relative_entropy_over_nu(abk.code, nu, 64)
    assert estimate.exact
    assert estimate.limit == pytest.approx(0.5 * math.log(2), abs=1e-9)
    assert estimate.refined == pytest.approx(0.5 * math.log(2), abs=0.02)


def test_relative_entropy_over_markov_nu(abk, abk_abramov):
    estimate = relative_entropy_over_nu(abk.code, abk.measures["nu"], 64, trials=4000, seed=11)
    assert not estimate.exact
    assert abs(estimate.refined - abk_abramov) <= 3 * estimate.refined_stderr + 0.005
    assert sorted(estimate.by_length) == [1, 2, 4, 8, 16, 32, 64]


def test_relative_entropy_is_reproducible(abk):
    first = relative_entropy_over_nu(abk.code, abk.measures["nu"], 16, trials=500, seed=5)
    second = relative_entropy_over_nu(abk.code, abk.measures["nu"], 16, trials=500, seed=5)
    assert first == second


def test_equidistributed_lift_pushes_forward_to_nu(abk):
    nu = abk.measures["nu"]
    lift = equidistributed_lift(abk.code, nu, 5)
    assert sum(lift.values()) == 1
    image = {}
    for word, p in lift.items():
        key = abk.code.project(word)
        image[key] = image.get(key, 0) + p
    assert image == block_distribution(nu, 5)


def test_preimage_counts_are_submultiplicative(entries):
    for entry in entries.values():
        family = transfer_family(entry.code)
        counts = {}

        def count(word):
            if word not in counts:
                counts[word] = count_preimages(entry.code, word, family)
            return counts[word]

        for n in range(2, 8):
            for word in enumerate_words(entry.Y, n):
                for cut in range(1, n):
                    assert count(word) <= count(word[:cut]) * count(word[cut:]), (entry.name, word, cut)


def test_bound_does_not_grow_with_support(entries):
    for entry in entries.values():
        charged = []
        for orbit in periodic_orbits(entry.Y, 4):
            nu = periodic_measure(entry.Y, orbit.period_block)
            charged.append((frozenset(orbit.period_block), bound_N(entry.code, nu)))
        for nu in entry.measures.values():
            if nu.base == entry.Y:
                support = frozenset(int(b) for b in np.flatnonzero(nu.symbol_mass() > 0))
                charged.append((support, bound_N(entry.code, nu)))
        for small, small_bound in charged:
            for large, large_bound in charged:
                if small <= large:
                    assert large_bound <= small_bound, entry.name


def test_pushforward_bracket_tightens(xor):
    brackets = [pushforward_entropy_bounds(xor.code, xor.measures["mu_p70"], n) for n in range(1, 8)]
    for shorter, longer in zip(brackets, brackets[1:]):
        assert longer.upper <= shorter.upper + 1e-12
        assert longer.lower >= shorter.lower - 1e-12
    assert brackets[-1].upper - brackets[-1].lower < brackets[0].upper - brackets[0].lower


def test_equidistributed_lift_beats_redistributions(abk):
    lift = {w: float(p) for w, p in equidistributed_lift(abk.code, abk.measures["nu"], 5).items()}
    fibers = {}
    for word in lift:
        fibers.setdefault(abk.code.project(word), []).append(word)
    crowded = [words for words in fibers.values() if len(words) > 1]
    best = block_entropy(lift)
    rng = np.random.default_rng(4)
    for _ in range(100):
        words = crowded[rng.integers(len(crowded))]
        delta = rng.normal(size=len(words))
        delta -= delta.mean()
        scale = 0.5 * lift[words[0]] / np.max(np.abs(delta))
        moved = dict(lift)
        for word, d in zip(words, delta):
            moved[word] += scale * d
        assert sum(moved.values()) == pytest.approx(1.0)
        assert block_entropy(moved) < best


def test_periodic_lift_over_abk(abk):
    points = periodic_equidistributed_lift(abk.code, abk.measures["nu"], 2)
    assert {abk.X.spell(w): p for w, p in points.items()} == {
        name: Fraction(1, 6) for name in ("a b1", "a b2", "b1 a", "b2 a", "b1 b1", "b2 b2")
    }


def test_periodic_lift_follows_nu_on_repeatable_blocks(abk):
    nu = abk.measures["nu"]
    points = periodic_equidistributed_lift(abk.code, nu, 4)
    assert sum(points.values()) == 1
    assert all(abk.X.adjacency[w[-1], w[0]] for w in points)
    images = {}
    for word, p in points.items():
        key = abk.code.project(word)
        images[key] = images.get(key, 0) + p
    blocks = block_distribution(nu, 4)
    total = sum(blocks[y] for y in images)
    assert all(images[y] == blocks[y] / total for y in images)


@pytest.mark.slow
def test_relative_entropy_agrees_with_abramov(abk, abk_abramov):
    estimate = relative_entropy_over_nu(abk.code, abk.measures["nu"], 64, trials=10 ** 5, seed=0)
    assert abs(estimate.refined - abk_abramov) <= 3 * estimate.refined_stderr
