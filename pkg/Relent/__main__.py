import logging
import sys

from Relent.cli import Cli, load_commands
from Relent.utils.render_report import report_schema_version
from Relent.vars import Var

# Setup logging
logging.basicConfig(
    level=getattr(logging, Var.LOG_LEVEL, logging.WARNING),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    stream=sys.stderr,
)

# Set specific loggers to ERROR
logging.getLogger("concurrent.futures").setLevel(logging.ERROR)


def main(argv=None) -> int:
    logging.info("Importing Commands...")
    loaded = load_commands()
    logging.info("Imported %d command modules", len(loaded))
    logging.info("Report schema %s", report_schema_version())
    return Cli.main(argv)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logging.info("Stopped")
        sys.exit(130)
