from . import cost, emit, tables, train, verify
from .base import CliParser, RunConfig, UsageError, add_common_arguments

COMMANDS = [cost, train, tables, emit, verify]


def build_parser() -> CliParser:
    parser = CliParser(prog="lutc", description="Compile sparse quantized networks into LUT netlists")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    # One subparser per command module
    for command in COMMANDS:
        sub = subparsers.add_parser(command.NAME, help=command.HELP, description=command.run.__doc__)
        add_common_arguments(sub)
        sub.set_defaults(handler=command.run)
    return parser


__all__ = ["COMMANDS", "CliParser", "RunConfig", "UsageError", "build_parser"]
