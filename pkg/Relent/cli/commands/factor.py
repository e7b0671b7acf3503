import logging

from Relent.cli import Cli, arg
from Relent.cli import inputs
from Relent.dynamics.exceptions import ConfigError
from Relent.dynamics.factor import (
    bound_N,
    clump_analysis,
    count_preimages,
    preimage_words,
    relative_entropy_over_nu,
    relative_pressure,
)
from Relent.dynamics.sft import periodic_orbit
from Relent.utils.config_parser import bounded, parse_count
from Relent.utils.render_report import nats

logger = logging.getLogger(__name__)


@Cli.on_command(
    "count",
    help="exact number of domain words above an image word",
    arguments=inputs.CODE_ARGS
    + (
        arg("--word", required=True, help="image word, e.g. 'a b b a' or abba"),
        arg("--list", action="store_true", help="also list the preimage words"),
    ),
)
def count_command(config):
    code = inputs.code(config)
    word = code.codomain.parse_word(config.word)
    result = {"word": code.codomain.spell(word), "length": len(word), "count": count_preimages(code, word)}
    if config.list:
        result["preimages"] = [code.domain.spell(w) for w in preimage_words(code, word)]
    return result


@Cli.on_command(
    "clumps",
    help="clump structure and singleton blocks up to an order",
    arguments=inputs.CODE_ARGS
    + (arg("--k-max", dest="k_max", type=bounded(parse_count, 24), default=None, help="highest block order (default: RELENT_CLUMP_KMAX)"),),
)
def clumps_command(config):
    return clump_analysis(inputs.code(config), k_max=config.k_max).as_dict()


@Cli.on_command(
    "bound",
    help="N_nu: the smallest clump over symbols charged by nu",
    arguments=inputs.CODE_ARGS + (inputs.measure_arg("--nu", "image"),),
)
def bound_command(config):
    code = inputs.code(config)
    nu = inputs.measure(config, config.nu, code.codomain)
    return {"N": bound_N(code, nu)}


@Cli.on_command(
    "relpressure",
    help="relative pressure over a word, a periodic orbit, or averaged over nu",
    arguments=inputs.CODE_ARGS
    + (
        arg("--word", help="image word: (1/n) log of its preimage count"),
        arg("--orbit", help="period block of a periodic image point: exact limit"),
        inputs.measure_arg("--nu", "image"),
        arg("--n", type=parse_count, default=64, help="window length when averaging over nu (default: 64)"),
        inputs.TRIALS,
    ),
    seeded=True,
)
def relpressure_command(config):
    code = inputs.code(config)
    chosen = [flag for flag in ("word", "orbit", "nu") if getattr(config, flag) is not None]
    if len(chosen) != 1:
        raise ConfigError("Give exactly one of --word, --orbit, --nu")
    if config.word is not None:
        word = code.codomain.parse_word(config.word)
        return {"word": code.codomain.spell(word), "value": nats(relative_pressure(code, word)), "exact": False}
    if config.orbit is not None:
        orbit = periodic_orbit(code.codomain, code.codomain.parse_word(config.orbit))
        return {
            "orbit": code.codomain.spell(orbit.period_block),
            "value": nats(relative_pressure(code, orbit)),
            "exact": True,
        }
    nu = inputs.measure(config, config.nu, code.codomain)
    estimate = relative_entropy_over_nu(code, nu, config.n, trials=config.trials, seed=config.seed)
    return {
        "n": estimate.n,
        "value": nats(estimate.value),
        "stderr": nats(estimate.stderr),
        "refined": nats(estimate.refined),
        "refined_stderr": nats(estimate.refined_stderr),
        "by_length": {str(t): nats(v) for t, v in estimate.by_length.items()},
        "limit": nats(estimate.limit),
        "exact": estimate.exact,
        "trials": estimate.trials,
        "seed": estimate.seed,
    }
