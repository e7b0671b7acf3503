import argparse
import importlib
import logging
import sys
import time
from dataclasses import dataclass, field
from glob import glob
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from Relent import __version__
from Relent.dynamics.exceptions import ConfigError, RelentError
from Relent.utils.config_parser import parse_nonnegative
from Relent.utils.render_report import FORMATS, render_error, render_report
from Relent.utils.time_format import get_readable_time
from Relent.vars import Var

LOGGER = logging.getLogger(__name__)

# namespace keys that are not echoed as parameters (command* keys are routing state)
_INTERNAL = ("command_path", "format", "bits", "seed")


def arg(*flags: str, **options: Any) -> Tuple[Tuple[str, ...], Dict[str, Any]]:
    return flags, options


@dataclass
class Command:
    path: Tuple[str, ...]
    handler: Callable[["RunConfig"], Any]
    help: str
    arguments: Sequence[Tuple[Tuple[str, ...], Dict[str, Any]]] = ()
    seeded: bool = False


@dataclass
class RunConfig:
    command: Tuple[str, ...]
    parameters: Dict[str, Any] = field(default_factory=dict)
    fmt: str = "json"
    bits: bool = False
    seed: Optional[int] = None

    @classmethod
    def from_namespace(cls, namespace: argparse.Namespace) -> "RunConfig":
        values = vars(namespace)
        parameters = {k: v for k, v in values.items() if k not in _INTERNAL and not k.startswith("command")}
        return cls(
            tuple(values["command_path"]),
            parameters,
            values.get("format") or Var.REPORT_FORMAT,
            bool(values.get("bits")),
            values.get("seed"),
        )

    def __getattr__(self, name: str) -> Any:
        try:
            return self.__dict__["parameters"][name]
        except KeyError:
            raise AttributeError(name)

    def echo(self) -> Dict[str, Any]:
        echo = {k: (str(v) if isinstance(v, Path) else v) for k, v in self.parameters.items()}
        if self.seed is not None:
            echo["seed"] = self.seed
        return echo


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(message)


class CommandRouter:
    """Subcommand registry; plugins register handlers with :meth:`on_command`."""

    def __init__(self, prog: str):
        self.prog = prog
        self.commands: Dict[Tuple[str, ...], Command] = {}

    def on_command(self, *path: str, help: str = "", arguments=(), seeded: bool = False):
        def decorator(func):
            self.commands[path] = Command(path, func, help, tuple(arguments), seeded)
            return func

        return decorator

    def parser(self) -> argparse.ArgumentParser:
        root = _Parser(prog=self.prog, description="Relatively maximal measures over factor maps of SFTs.")
        root.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        groups: Dict[Tuple[str, ...], Any] = {(): root.add_subparsers(dest="command", metavar="COMMAND")}
        for path in sorted(self.commands):
            command = self.commands[path]
            for depth in range(1, len(path)):
                prefix = path[:depth]
                if prefix not in groups:
                    group_parser = groups[path[:depth - 1]].add_parser(prefix[-1], help=f"{prefix[-1]} commands")
                    groups[prefix] = group_parser.add_subparsers(dest=f"command_{depth}", metavar="COMMAND")
            sub = groups[path[:-1]].add_parser(path[-1], help=command.help, description=command.help)
            for flags, options in command.arguments:
                sub.add_argument(*flags, **options)
            sub.add_argument("--format", choices=FORMATS, default=None, help="report format (default: json)")
            sub.add_argument("--bits", action="store_true", help="report entropies in bits instead of nats")
            if command.seeded:
                sub.add_argument(
                    "--seed", type=parse_nonnegative, default=Var.SEED, help="random seed (default: RELENT_SEED)"
                )
            sub.set_defaults(command_path=path)
        return root

    def parse(self, argv: Sequence[str]) -> "RunConfig":
        namespace = self.parser().parse_args(list(argv))
        if getattr(namespace, "command_path", None) is None:
            raise ConfigError("No command given; see --help")
        return RunConfig.from_namespace(namespace)

    def run(self, config: RunConfig, out: Optional[TextIO] = None) -> int:
        out = out or sys.stdout
        name = " ".join(config.command)
        fmt = config.fmt if config.fmt in FORMATS else "json"
        command = self.commands.get(config.command)
        if command is None:
            out.write(render_error(name, "ConfigError", f"Unknown command {name!r}", fmt))
            return 2
        started = time.time()
        try:
            result = command.handler(config)
        except RelentError as e:
            LOGGER.error("%s failed: %s", name, e.message)
            out.write(render_error(name, type(e).__name__, e.message, fmt))
            return 2
        except OSError as e:
            LOGGER.error("%s failed: %s", name, e)
            out.write(render_error(name, type(e).__name__, str(e), fmt))
            return 3
        except Exception as e:
            logging.critical(e, exc_info=True)
            out.write(render_error(name, type(e).__name__, str(e), fmt))
            return 1
        LOGGER.info("%s finished in %s", name, get_readable_time(time.time() - started))
        out.write(render_report(name, config.echo(), result, fmt, config.bits))
        return 0

    def main(self, argv: Optional[Iterable[str]] = None, out: Optional[TextIO] = None) -> int:
        argv = sys.argv[1:] if argv is None else list(argv)
        out = out or sys.stdout
        try:
            config = self.parse(argv)
        except ConfigError as e:
            out.write(render_error(self.prog, "ConfigError", e.message))
            return 2
        return self.run(config, out)


Cli = CommandRouter("relent")

COMMANDS_DIR = Path(__file__).resolve().parent / "commands"


def load_commands() -> List[str]:
    """Import every plugin in ``cli/commands`` so its handlers register on ``Cli``."""
    loaded = []
    for name in sorted(glob(str(COMMANDS_DIR / "*.py"))):
        stem = Path(name).stem
        if stem.startswith("_"):
            continue
        importlib.import_module(f"Relent.cli.commands.{stem}")
        LOGGER.debug("Imported => %s", stem)
        loaded.append(stem)
    return loaded
