# Period Calculus - CLI Application Module
"""Command-line app with OOP principles."""

import logging
import sys
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Optional

import click
from pydantic import ValidationError

from .config import Config
from .exceptions import BadConfig, PeriodCalculusError
from .logger import get_logger
from .models import COMMANDS, FIXTURES, RunConfig
from .output_writer import JSONWriter, dumps
from .pipeline_orchestrator import PipelineOrchestrator

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

_OPTIONS = [
    click.option("--config", "config_path", default="application.yml", show_default=True, help="YAML configuration file."),
    click.option("--fixture", type=click.Choice(FIXTURES), default=None, help="Analytic fixture surface."),
    click.option("--input", "input_path", type=click.Path(path_type=Path), default=None, help="OFF, OBJ or .ext mesh."),
    click.option("--tau", default=None, help="Flat torus modulus, e.g. 0.5+0.8i."),
    click.option("--N", "n", type=int, default=None, help="Grid resolution."),
    click.option("--R", "big_r", type=float, default=None, help="Torus of revolution: center radius."),
    click.option("--r", "small_r", type=float, default=None, help="Torus of revolution: tube radius."),
    click.option("--amplitude", type=float, default=None, help="Clifford torus radial bump amplitude."),
    click.option("--genus", type=int, default=None, help="Expected genus of the input."),
    click.option("--eps", type=float, multiple=True, help="Probe radii (repeatable)."),
    click.option("--profile", default=None, help="Probe bump profile."),
    click.option("--step", type=float, default=None),
    click.option("--max-steps", type=int, default=None),
    click.option("--tol", type=float, default=None),
    click.option("--energy", type=click.Choice(["willmore", "frame", "area"]), default="willmore", show_default=True),
    click.option("--tolerance", "tolerance_overrides", multiple=True, help="Override as name=value (repeatable)."),
    click.option("--output", type=click.Path(path_type=Path), default=None, help="Report or artifact path."),
    click.option("--seed", type=int, default=None),
    click.option("--debug", is_flag=True, help="Debug logging."),
    click.option("--log-dir", type=click.Path(path_type=Path), default=None, help="Also log to a file here."),
]


def _with_options(func: Callable[..., Any]) -> Callable[..., Any]:
    for option in reversed(_OPTIONS):
        func = option(func)
    return func


def _parse_overrides(items: tuple[str, ...]) -> dict[str, float]:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise BadConfig(f"Tolerance override must look like name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError as e:
            raise BadConfig(f"Tolerance {name} is not a number: {value!r}") from e
    return out


class BaseApp(ABC):  # Abstraction
    def __init__(self):
        self._logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod  # Abstraction
    def run(self, args: Optional[list[str]] = None) -> None:
        pass


class CLIApp(BaseApp):  # Inheritance
    def __init__(self):
        super().__init__()
        self._cli = self._create_cli()  # Encapsulation

    @property
    def cli(self) -> click.Group:
        return self._cli

    def _create_cli(self) -> click.Group:  # Encapsulation
        @click.group(help="Period matrices of discrete surfaces and their variations.")
        def cli() -> None:
            pass

        for name in COMMANDS:
            cli.add_command(self._make_command(name))
        return cli

    def _make_command(self, name: str) -> click.Command:  # Encapsulation
        @click.command(name=name)
        @_with_options
        def command(**options: Any) -> int:
            return self._execute(name, options)

        return command

    def _build_run_config(self, name: str, options: dict[str, Any], config: Config) -> RunConfig:
        fixture, flow, probe = config.fixture, config.flow, config.probe

        def pick(flag: Any, default: Any) -> Any:
            return default if flag is None else flag

        values = {
            "command": name,
            "input": options["input_path"],
            "fixture": options["fixture"],
            "tau": pick(options["tau"], fixture["tau"]),
            "N": pick(options["n"], fixture["N"]),
            "R": pick(options["big_r"], fixture["R"]),
            "r": pick(options["small_r"], fixture["r"]),
            "amplitude": pick(options["amplitude"], fixture["amplitude"]),
            "genus": options["genus"],
            "tolerances": _parse_overrides(options["tolerance_overrides"]),
            "eps": list(options["eps"]) or list(probe["eps"]),
            "profile": pick(options["profile"], probe["profile"]),
            "step": pick(options["step"], flow["step"]),
            "max_steps": pick(options["max_steps"], flow["max_steps"]),
            "tol": pick(options["tol"], flow["tol"]),
            "energy": options["energy"],
            "output": options["output"],
            "seed": pick(options["seed"], config.seed),
        }
        try:
            return RunConfig(**values)
        except ValidationError as e:
            raise BadConfig(f"Invalid run configuration: {e.errors()[0].get('msg', e)}") from e

    def _execute(self, name: str, options: dict[str, Any]) -> int:
        get_logger("", options["log_dir"], options["debug"])
        try:
            config = Config(options["config_path"])
            run = self._build_run_config(name, options, config)
            report = PipelineOrchestrator(run, config.tolerances).run()
        except PeriodCalculusError as e:
            return self._fail(e.to_dict(), e.exit_code)
        except FileNotFoundError as e:
            return self._fail({"error": "FileNotFound", "message": str(e), "details": {}}, EXIT_USAGE)
        data = report.to_json_dict()
        click.echo(dumps(data))
        if run.output is not None and run.output.suffix.lower() == ".json":
            JSONWriter(run.output).write(data)
        return EXIT_OK if report.passed else EXIT_TOLERANCE

    def _fail(self, payload: dict[str, Any], code: int) -> int:
        self._logger.error(f"{payload['error']}: {payload['message']}")
        click.echo(dumps(payload), err=True)
        return code

    def run(self, args: Optional[list[str]] = None) -> None:  # Polymorphism
        try:
            code = self._cli.main(args=args, standalone_mode=False)
        except click.exceptions.Exit as e:
            code = e.exit_code
        except click.ClickException as e:
            e.show()
            code = EXIT_USAGE
        except Exception as e:
            self._logger.error(f"Application execution failed: {e}")
            click.echo(dumps({"error": e.__class__.__name__, "message": str(e), "details": {}}), err=True)
            code = EXIT_NUMERICAL
        sys.exit(code if isinstance(code, int) else EXIT_OK)


def main():
    CLIApp().run()  # Factory pattern + Polymorphism
