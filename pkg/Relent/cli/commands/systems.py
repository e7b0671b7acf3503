import logging

import numpy as np

from Relent.cli import Cli, arg
from Relent.cli import inputs
from Relent.dynamics.exceptions import ConfigError
from Relent.dynamics.factor import image_subshift_check, pushforward_blocks, pushforward_entropy_bounds, validate_code
from Relent.dynamics.measures import (
    MarkovMeasure,
    block_distribution,
    block_entropy_bounds,
    entropy,
    parry_measure,
    perron,
)
from Relent.dynamics.sft import is_irreducible, strongly_connected_components, validate, word_count
from Relent.utils.config_parser import parse_count
from Relent.utils.render_report import nats

logger = logging.getLogger(__name__)


@Cli.on_command(
    "validate",
    help="check a system (and a code when given) for structural problems",
    arguments=inputs.SYSTEM_ARGS + (inputs.DOMAIN, inputs.IMAGE, inputs.CODE),
)
def validate_command(config):
    has_code = config.gallery or config.code is not None
    result = {}
    if config.system is not None or config.gallery:
        sft = inputs.system(config)
        result["system"] = _describe(sft)
    if has_code:
        code = inputs.code(config)
        result["domain"] = _describe(code.domain)
        result["image"] = _describe(code.codomain)
        result["code"] = validate_code(code).as_dict()
        result["image_check"] = image_subshift_check(code, 8).as_dict()
    if not result:
        raise ConfigError("Give --system, --gallery or --domain/--image/--code")
    return result


def _describe(sft) -> dict:
    report = validate(sft).as_dict()
    report["symbols"] = list(sft.alphabet)
    report["irreducible"] = bool(report["valid"] and is_irreducible(sft))
    report["components"] = [
        [sft.alphabet[s] for s in component.symbols]
        for component in strongly_connected_components(sft)
        if not component.trivial
    ]
    return report


@Cli.on_command("parry", help="Perron data and the measure of maximal entropy", arguments=inputs.SYSTEM_ARGS)
def parry_command(config):
    sft = inputs.system(config)
    spectral = perron(sft.adjacency)
    measure = parry_measure(sft)
    logger.info("Parry measure of %r: lambda = %.15f", sft, spectral.lam)
    return {
        "lambda": spectral.lam,
        "entropy": nats(entropy(measure)),
        "log_lambda": nats(float(np.log(spectral.lam))),
        "right": spectral.right,
        "left": spectral.left,
        "transition": measure.transition,
        "stationary": measure.stationary,
        "symbols": list(sft.alphabet),
        "word_counts": {str(n): word_count(sft, n) for n in (1, 2, 4, 8, 16)},
    }


@Cli.on_command(
    "entropy",
    help="entropy rate of a Markov or periodic measure with its block bracket",
    arguments=inputs.SYSTEM_ARGS
    + (
        inputs.measure_arg("--measure", "system"),
        arg("--n", type=parse_count, default=4, help="block length of the bracket (default: 4)"),
    ),
)
def entropy_command(config):
    found = inputs.entry(config)
    if found is not None and config.measure in found.measures:
        measure = found.measures[config.measure]
    else:
        measure = inputs.measure(config, config.measure, inputs.system(config))
    result = {"entropy": nats(entropy(measure)), "symbol_mass": measure.symbol_mass()}
    if isinstance(measure, MarkovMeasure):
        bracket = block_entropy_bounds(
            block_distribution(measure, config.n, exact=False),
            block_distribution(measure, config.n + 1, exact=False),
        )
        result["exact"] = measure.exact
        result["bracket"] = {
            "n": bracket.n,
            "upper": nats(bracket.upper),
            "lower": nats(bracket.lower),
            "width": nats(bracket.width),
        }
    return result


@Cli.on_command(
    "pushforward",
    help="bracket the entropy of the image of a Markov lift",
    arguments=inputs.CODE_ARGS
    + (
        inputs.measure_arg("--mu", "domain"),
        arg("--n", type=parse_count, default=6, help="conditioning length (default: 6)"),
    ),
)
def pushforward_command(config):
    code = inputs.code(config)
    mu = inputs.markov(config, config.mu, code.domain)
    bracket = pushforward_entropy_bounds(code, mu, config.n)
    image = pushforward_blocks(code, mu, min(config.n, 4), exact=mu.exact)
    return {
        "n": bracket.n,
        "lower": nats(bracket.lower),
        "upper": nats(bracket.upper),
        "lift_entropy": nats(entropy(mu)),
        "image_blocks": {code.codomain.spell(w): p for w, p in sorted(image.items())},
    }
