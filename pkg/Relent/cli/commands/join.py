import logging

from Relent.cli import Cli, arg
from Relent.cli import inputs
from Relent.dynamics.exceptions import ConfigError
from Relent.dynamics.joining import interleave_entropy, posterior, relative_markov_diagnostic, sample_joining
from Relent.utils.config_parser import bounded, parse_count, parse_nonnegative
from Relent.utils.render_report import nats

logger = logging.getLogger(__name__)

LIFTS = (
    inputs.measure_arg("--mu1", "domain"),
    inputs.measure_arg("--mu2", "domain"),
    inputs.measure_arg("--nu", "image (default: the image of --mu1)"),
)


def _lifts(config):
    code = inputs.code(config)
    if config.mu1 is None or config.mu2 is None:
        raise ConfigError("Give --mu1 and --mu2")
    mu1 = inputs.markov(config, config.mu1, code.domain)
    mu2 = inputs.markov(config, config.mu2, code.domain)
    nu = inputs.markov(config, config.nu, code.codomain, required=False)
    return code, mu1, mu2, nu


@Cli.on_command(
    "join", "orthogonality",
    help="center coincidence of the relatively independent joining over growing windows",
    arguments=inputs.CODE_ARGS
    + LIFTS
    + (
        arg("--n", type=parse_count, nargs="+", default=[8, 16, 32, 64], help="window lengths (default: 8 16 32 64)"),
        inputs.TRIALS,
    ),
    seeded=True,
)
def orthogonality_command(config):
    code, mu1, mu2, nu = _lifts(config)
    rows = []
    for n in config.n:
        estimate = sample_joining(mu1, mu2, code, nu, n, config.trials, seed=config.seed)
        rows.append(
            {
                "n": estimate.n,
                "center": estimate.center,
                "coincidence": estimate.coincidence,
                "stderr": estimate.stderr,
                "overlap": estimate.overlap,
                "overlap_stderr": estimate.overlap_stderr,
            }
        )
    return {"trials": config.trials, "seed": config.seed, "windows": rows}


@Cli.on_command(
    "join", "interleave-entropy",
    help="entropy of the coin-interleaved lifts of one long image word",
    arguments=inputs.CODE_ARGS
    + LIFTS
    + (
        arg("--length", type=parse_count, default=10 ** 6, help="stream length, e.g. 10^7 (default: 10^6)"),
        arg("--nmax", "--n-max", dest="n_max", type=bounded(parse_nonnegative, 24), default=8, help="longest context (default: 8)"),
    ),
    seeded=True,
)
def interleave_entropy_command(config):
    code, mu1, mu2, nu = _lifts(config)
    found = interleave_entropy(mu1, mu2, code, nu, config.length, config.n_max, seed=config.seed)
    estimate = found.estimate.as_dict()
    for key in ("estimate", "conditional", "conditional_ci", "block_rate", "block_rate_ci"):
        estimate[key] = nats(estimate[key])
    return {
        "length": found.length,
        "seed": found.seed,
        "h_nu": nats(found.h_nu),
        "gain": nats(found.gain),
        "entropy": estimate,
    }


@Cli.on_command(
    "join", "posterior",
    help="posterior marginals of the lift along an image window",
    arguments=inputs.CODE_ARGS
    + (
        inputs.measure_arg("--mu", "domain"),
        arg("--window", required=True, help="image window, e.g. 'a b b a'"),
        arg("--exact", action="store_true", help="rational arithmetic (needs rational transitions)"),
    ),
)
def posterior_command(config):
    code = inputs.code(config)
    mu = inputs.markov(config, config.mu, code.domain)
    table = posterior(mu, code, code.codomain.parse_word(config.window), exact=config.exact)
    report = table.as_dict(code)
    if table.probability is not None:
        report["probability"] = table.probability
    return report


@Cli.on_command(
    "join", "markov-gap",
    help="how far a lift is from relatively Markov: gap(k, m) for k up to n",
    arguments=inputs.CODE_ARGS
    + (
        inputs.measure_arg("--mu", "domain"),
        arg("--n", type=bounded(parse_count, 12), default=4, help="longest future context (default: 4)"),
        arg("--m", type=bounded(parse_nonnegative, 12), default=4, help="image window half-width (default: 4)"),
    ),
)
def markov_gap_command(config):
    code = inputs.code(config)
    mu = inputs.markov(config, config.mu, code.domain)
    report = relative_markov_diagnostic(mu, code, config.n, config.m)
    return {
        "n": report.n,
        "m": report.m,
        "conditional": nats(report.conditional),
        "gaps": nats(report.gaps),
        "gap": nats(report.gap),
    }
