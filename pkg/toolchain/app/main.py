import logging
import logging.config
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from .cli import RunConfig, UsageError, build_parser
from .config import get_settings
from .errors import LutCompilerError

logger = logging.getLogger("app")

LOG_FORMAT = "%(levelname)-5.5s [%(name)s] %(message)s"
REPO_ROOT = Path(__file__).resolve().parent.parent.parent


def configure_logging(verbose: bool = False) -> None:
    settings = get_settings()
    path = Path(settings.log_config)
    if not path.is_absolute() and not path.exists():
        path = REPO_ROOT / path
    if path.exists():
        logging.config.fileConfig(path, disable_existing_loggers=False)
    else:
        logging.basicConfig(level=settings.log_level, format=LOG_FORMAT, stream=sys.stderr)
    logger.setLevel(logging.DEBUG if verbose else settings.log_level.upper())


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = RunConfig.from_args(args)
        return args.handler(config)
    except UsageError as e:
        print(f"lutc {args.command}: error: {e}", file=sys.stderr)
        return 1
    except ValidationError as e:
        print(f"lutc {args.command}: error: {e}", file=sys.stderr)
        return 1
    except LutCompilerError as e:
        logger.error("%s: %s", type(e).__name__, e.message)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
