"""Resolve command-line inputs: files in the text formats or gallery entries."""
import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

from Relent.dynamics import gallery
from Relent.dynamics.exceptions import ConfigError, InvalidMeasure
from Relent.dynamics.factor import FactorCode
from Relent.dynamics.measures import MarkovMeasure, PeriodicMeasure
from Relent.dynamics.sft import Sft
from Relent.utils.config_parser import parse_count
from Relent.utils.text_format import load_code, load_measure, load_sft

from . import arg

LOGGER = logging.getLogger(__name__)

GALLERY = arg("--gallery", metavar="NAME", help="built-in system: " + ", ".join(gallery.names()))
SYSTEM = arg("--system", type=Path, metavar="FILE", help="system file (.sft)")
DOMAIN = arg("--domain", type=Path, metavar="FILE", help="domain system file (.sft)")
IMAGE = arg("--image", type=Path, metavar="FILE", help="image system file (.sft)")
CODE = arg("--code", type=Path, metavar="FILE", help="1-block code file (.map)")
CODE_ARGS = (GALLERY, DOMAIN, IMAGE, CODE)
SYSTEM_ARGS = (GALLERY, SYSTEM)
TRIALS = arg("--trials", type=parse_count, default=10000, help="Monte-Carlo trials, e.g. 10^5 (default: 10000)")


def measure_arg(flag: str, where: str) -> tuple:
    return arg(flag, metavar="FILE|NAME", help=f"measure on the {where}: a .mkv file or a gallery measure name")


def entry(config) -> Optional[gallery.GalleryEntry]:
    name = getattr(config, "gallery", None)
    return _load(name.strip().upper()) if name else None


def system(config) -> Sft:
    found = entry(config)
    if found is not None:
        return found.X
    if getattr(config, "system", None) is None:
        raise ConfigError("Give --system FILE or --gallery NAME")
    return load_sft(config.system)


def code(config) -> FactorCode:
    found = entry(config)
    if found is not None:
        return found.code
    missing = [flag for flag in ("domain", "image", "code") if getattr(config, flag, None) is None]
    if missing:
        raise ConfigError("Give --gallery NAME or all of " + ", ".join(f"--{m}" for m in missing))
    x = load_sft(config.domain)
    y = load_sft(config.image)
    return load_code(config.code, x, y)


def measure(config, value: Optional[str], base: Sft, required: bool = True) -> Optional[Union[MarkovMeasure, PeriodicMeasure]]:
    """Load ``value`` on ``base``: a gallery measure name when --gallery is given, else a file."""
    if value is None:
        if required:
            raise ConfigError("A measure is required")
        return None
    found = entry(config)
    if found is not None and value in found.measures:
        chosen = found.measures[value]
        if chosen.base != base:
            raise ConfigError(f"Gallery measure {value!r} does not live on the required system")
        return chosen
    return load_measure(Path(value), base)


@lru_cache(maxsize=None)
def _load(name: str) -> gallery.GalleryEntry:
    return gallery.load(name)


def markov(config, value: Optional[str], base: Sft, required: bool = True) -> Optional[MarkovMeasure]:
    chosen = measure(config, value, base, required)
    if chosen is not None and not isinstance(chosen, MarkovMeasure):
        raise InvalidMeasure(f"{value} is periodic; this command needs a Markov measure")
    return chosen
