import argparse
import sys
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator
from pydantic_core import to_json

from ..config import get_settings
from ..errors import InvalidSpecError, ModelFormatError
from ..services.netlist import Style


USAGE_EXIT = 1
STYLE_ALIASES = {"comb": "combinational", "combinational": "combinational", "pipelined": "pipelined"}


class UsageError(Exception):
    """Bad command-line usage; exits with status 1."""


class CliParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


class RunConfig(BaseModel):
    """Resolved options of one CLI invocation."""

    command: str
    config: Optional[Path] = None
    model: Optional[Path] = None
    data_dir: Optional[Path] = None
    out: Path
    seed: int
    samples: int = Field(ge=1)
    style: Style = "combinational"
    label_column: str = "label"
    json_output: bool = False
    verbose: bool = False

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_paths(self) -> "RunConfig":
        if self.config is not None and not self.config.is_file():
            raise InvalidSpecError(f"config file {self.config} does not exist")
        if self.model is not None and not self.model.is_file():
            raise ModelFormatError(f"model file {self.model} does not exist")
        if self.data_dir is not None and not self.data_dir.exists():
            raise InvalidSpecError(f"data path {self.data_dir} does not exist")
        return self

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        settings = get_settings()
        if args.samples is not None and args.samples < 1:
            raise UsageError("--samples must be at least 1")
        return cls(
            command=args.command,
            config=args.config,
            model=args.model,
            data_dir=args.data_dir,
            out=args.out or Path(settings.output_dir),
            seed=settings.default_seed if args.seed is None else args.seed,
            samples=settings.verify_samples if args.samples is None else args.samples,
            style=STYLE_ALIASES[args.style],
            label_column=args.label_column,
            json_output=args.json,
            verbose=args.verbose,
        )

    def require(self, *names: str) -> None:
        missing = [f"--{name.replace('_', '-')}" for name in names if getattr(self, name) is None]
        if missing:
            raise UsageError(f"{self.command} needs {', '.join(missing)}")


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="topology config JSON")
    parser.add_argument("--model", type=Path, help="trained model JSON")
    parser.add_argument("--data-dir", type=Path, help="MNIST IDX directory or CSV file")
    parser.add_argument("--label-column", default="label", help="label column of a CSV dataset (default: %(default)s)")
    parser.add_argument("--out", type=Path, help="output directory (default: LUTC_OUTPUT_DIR)")
    parser.add_argument("--seed", type=int, help="random seed (default: LUTC_DEFAULT_SEED)")
    parser.add_argument("--samples", type=int, help="random verification inputs (default: LUTC_VERIFY_SAMPLES)")
    parser.add_argument(
        "--style", choices=sorted(STYLE_ALIASES), default="comb", help="netlist style (default: %(default)s)"
    )
    parser.add_argument("--json", action="store_true", help="print machine-readable JSON")
    parser.add_argument("--verbose", action="store_true", help="debug logging")


def print_json(data: Any) -> None:
    sys.stdout.write(to_json(data, indent=1).decode() + "\n")
