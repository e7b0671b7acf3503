import logging

import numpy as np

from Relent.cli import Cli, arg
from Relent.cli import inputs
from Relent.dynamics.exceptions import ConfigError
from Relent.dynamics.factor import equidistributed_lift, periodic_equidistributed_lift
from Relent.dynamics.measures import block_distribution
from Relent.dynamics.relmax import (
    abramov_entropy,
    build_induced,
    cylinder_probability,
    fiber_entropy_optimizer,
    fiber_periodic,
    homclump_family,
    homclump_K,
    induced_code,
    maximal_induced_measure,
)
from Relent.dynamics.sft import periodic_orbit
from Relent.utils.config_parser import bounded, parse_count, parse_nonnegative, parse_positive
from Relent.utils.render_report import nats

logger = logging.getLogger(__name__)


@Cli.on_command(
    "relmax", "singleton",
    help="relatively maximal lift over a singleton clump and its Abramov entropy",
    arguments=inputs.CODE_ARGS
    + (
        inputs.measure_arg("--nu", "image"),
        arg("--clump", "--symbol", dest="symbol", default="a", help="image symbol with a singleton clump (default: a)"),
        arg(
            "--L", "--truncation", dest="truncation", type=parse_count, default=None,
            help="longest return time kept (default: RELENT_TRUNCATION)",
        ),
        arg("--override", action="store_true", help="report even when the retained mass is below threshold"),
        arg("--cylinder", help="domain word between clump visits whose probability to report"),
        arg("--loops", type=parse_nonnegative, default=8, help="loops listed in the report (default: 8)"),
    ),
)
def singleton_command(config):
    code = inputs.code(config)
    nu = inputs.markov(config, config.nu, code.codomain)
    induced = build_induced(code, nu, config.symbol, truncation=config.truncation)
    maximal = maximal_induced_measure(induced)
    abramov = abramov_entropy(code, nu, maximal, override=config.override)
    result = {
        "h_mu": nats(abramov.h_mu),
        "h_nu": nats(abramov.h_nu),
        "h_rel": nats(abramov.h_rel),
        "retained_mass": abramov.retained_mass,
        "truncation": abramov.truncation,
        "clump_mass": induced.clump_mass,
        "loops": [
            {
                "word": code.codomain.spell(loop.word),
                "probability": loop.probability,
                "preimages": len(loop.bands),
                "weight": weights[0] if weights else 0,
            }
            for loop, weights in list(zip(induced.loops, maximal.weights))[: config.loops]
        ],
    }
    if config.cylinder:
        word = code.domain.parse_word(config.cylinder)
        result["cylinder"] = {
            "word": code.domain.spell(word),
            "probability": cylinder_probability(code, nu, maximal, word),
        }
    return result


@Cli.on_command(
    "relmax", "periodic",
    help="components of the fiber over a periodic image point",
    arguments=inputs.CODE_ARGS + (arg("--orbit", required=True, help="period block, e.g. 'a b'"),),
)
def periodic_command(config):
    code = inputs.code(config)
    orbit = periodic_orbit(code.codomain, code.codomain.parse_word(config.orbit))
    fiber = fiber_periodic(code, orbit)
    report = fiber.as_dict()
    report["orbit"] = code.codomain.spell(orbit.period_block)
    report["max_entropy"] = nats(fiber.max_entropy)
    for component in report["components"]:
        component["entropy"] = nats(component["entropy"])
    return report


@Cli.on_command(
    "relmax", "homclump",
    help="closed-form relatively maximal induced chain for homogeneous clumps",
    arguments=inputs.CODE_ARGS
    + (
        arg("--K", dest="K", type=parse_positive, help="ratio nu[aa]/nu[aba]; read from --nu when omitted"),
        inputs.measure_arg("--nu", "image"),
        arg("--check", action="store_true", help="cross-check with the fiber-entropy optimizer"),
        arg("--restarts", type=parse_count, default=None, help="optimizer restarts (default: RELENT_RESTARTS)"),
    ),
    seeded=True,
)
def homclump_command(config):
    if config.K is None and config.nu is None:
        raise ConfigError("Give --K or --nu")
    nu = None
    if config.nu is not None:
        nu = inputs.markov(config, config.nu, inputs.code(config).codomain)
    K = config.K if config.K is not None else float(homclump_K(nu))
    family = homclump_family(K)
    result = {
        "K": family.K,
        "x": family.x,
        "y": family.x,
        "states": list(family.states),
        "transition": family.transition,
        "fixed_vector": family.fixed_vector,
    }
    if config.check:
        if nu is None:
            raise ConfigError("--check needs --nu")
        induced = induced_code(inputs.code(config), nu, "a")
        optimum = fiber_entropy_optimizer(induced.code, induced.nu, order=1, restarts=config.restarts, seed=config.seed)
        found = _state_matrix(induced, optimum, family.states)
        result["check"] = {
            "entropy": nats(optimum.entropy),
            "transition": found,
            "max_deviation": float(np.max(np.abs(found - family.transition))),
            "image_gap": optimum.image_gap,
            "label": optimum.label,
        }
    return result


def _state_matrix(induced, optimum, states) -> np.ndarray:
    """The optimizer's transition matrix reordered to ``states``."""
    names = list(induced.code.domain.alphabet)
    order = [names.index(state) for state in states]
    return optimum.measure.transition[np.ix_(order, order)]


@Cli.on_command(
    "relmax", "optimize",
    help="maximise entropy over low-order Markov lifts of nu (heuristic)",
    arguments=inputs.CODE_ARGS
    + (
        inputs.measure_arg("--nu", "image"),
        arg("--order", type=bounded(parse_count, 3), default=1, help="Markov order of the lift (default: 1)"),
        arg("--restarts", type=parse_count, default=None, help="random restarts (default: RELENT_RESTARTS)"),
    ),
    seeded=True,
)
def optimize_command(config):
    code = inputs.code(config)
    nu = inputs.markov(config, config.nu, code.codomain)
    optimum = fiber_entropy_optimizer(code, nu, order=config.order, restarts=config.restarts, seed=config.seed)
    return {
        "entropy": nats(optimum.entropy),
        "order": optimum.order,
        "image_gap": optimum.image_gap,
        "label": optimum.label,
        "restart_entropies": nats(optimum.restart_entropies),
        "states": list(optimum.measure.base.alphabet),
        "transition": optimum.measure.transition,
        "seed": optimum.seed,
    }


@Cli.on_command(
    "relmax", "equidistribute",
    help="spread nu of every image n-block evenly over its preimages (or its periodic preimages)",
    arguments=inputs.CODE_ARGS
    + (
        inputs.measure_arg("--nu", "image"),
        arg("--n", type=bounded(parse_count, 16), default=4, help="block length (default: 4)"),
        arg(
            "--method", choices=("blocks", "periodic"), default="blocks",
            help="blocks: all preimage n-blocks; periodic: periodic points over repeatable n-blocks",
        ),
    ),
)
def equidistribute_command(config):
    code = inputs.code(config)
    nu = inputs.markov(config, config.nu, code.codomain)
    if config.method == "periodic":
        points = periodic_equidistributed_lift(code, nu, config.n)
        return {"n": config.n, "points": {code.domain.spell(w): p for w, p in sorted(points.items())}}
    lift = equidistributed_lift(code, nu, config.n)
    image = {}
    for word, p in lift.items():
        key = code.project(word)
        image[key] = image.get(key, 0) + p
    target = block_distribution(nu, config.n)
    return {
        "n": config.n,
        "blocks": {code.domain.spell(w): p for w, p in sorted(lift.items())},
        "pushforward_matches": set(image) == set(target)
        and all(abs(float(image[k]) - float(p)) <= 1e-12 for k, p in target.items()),
    }
