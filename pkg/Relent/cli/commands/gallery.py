import logging
from pathlib import Path

from Relent.cli import Cli, arg
from Relent.dynamics import gallery

logger = logging.getLogger(__name__)


@Cli.on_command("gallery", "list", help="built-in systems")
def list_command(config):
    entries = []
    for name in gallery.names():
        entry = gallery.load(name, check=False)
        entries.append(
            {
                "name": name,
                "domain": list(entry.X.alphabet),
                "image": list(entry.Y.alphabet),
                "measures": sorted(entry.measures),
                "notes": entry.notes,
            }
        )
    return {"entries": entries}


@Cli.on_command(
    "gallery", "check",
    help="re-derive the documented facts of gallery entries",
    arguments=(arg("--name", help="one entry (default: all)"),),
)
def check_command(config):
    chosen = [config.name.strip().upper()] if config.name else list(gallery.names())
    reports = []
    for name in chosen:
        entry = gallery.load(name, check=False)
        reports.append(gallery.self_check(entry).as_dict())
    return {"passed": all(r["passed"] for r in reports), "reports": reports}


@Cli.on_command(
    "gallery", "export",
    help="write an entry in the text formats for editing",
    arguments=(
        arg("--name", required=True, help="entry to export"),
        arg("--out", type=Path, required=True, help="target directory"),
    ),
)
def export_command(config):
    entry = gallery.load(config.name)
    written = gallery.export(entry, config.out)
    logger.info("Exported %s to %s", entry.name, config.out)
    return {"name": entry.name, "files": sorted(path.name for path in written)}
