# Period Calculus - CLI Tests
"""Command-line surface, configuration and output tests with OOP principles."""

import csv
import json

import numpy as np
import pytest

from src.app import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, CLIApp
from src.config import Config
from src.exceptions import BadConfig
from src.models import RunConfig, parse_complex, to_jsonable
from src.output_writer import JSONLWriter, WriterFactory, dumps


def _invoke(args: list[str]) -> int:
    with pytest.raises(SystemExit) as exc:
        CLIApp().run(args)
    return exc.value.code


def test_periods_command(fixture_factory, tmp_path, capsys):
    config = fixture_factory.create("config", tmp_path)
    code = _invoke(["periods", "--config", str(config), "--fixture", "flat-torus"])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["command"] == "periods" and report["passed"]
    re, im = report["pi1_normalized"][0][0]
    assert abs(complex(re, im) - (0.5 + 0.8j)) <= 1e-2


def test_report_file(fixture_factory, tmp_path, capsys):
    config = fixture_factory.create("config", tmp_path)
    output = tmp_path / "out" / "periods.json"
    code = _invoke(["periods", "--config", str(config), "--fixture", "flat-torus", "--output", str(output)])
    assert code == EXIT_OK
    assert json.loads(output.read_text()) == json.loads(capsys.readouterr().out)


def test_fixtures_command_writes_mesh(fixture_factory, tmp_path):
    config = fixture_factory.create("config", tmp_path)
    output = tmp_path / "flat.json"
    assert _invoke(["fixtures", "--config", str(config), "--fixture", "flat-torus", "--N", "8", "--output", str(output)]) == EXIT_OK
    assert (tmp_path / "flat.ext").read_text().startswith("EXT 4 64 128")


def test_willmore_command_writes_fields(fixture_factory, tmp_path):
    config = fixture_factory.create("config", tmp_path)
    output = tmp_path / "fields.csv"
    args = ["willmore", "--config", str(config), "--fixture", "revolution-torus", "--N", "16", "--output", str(output)]
    assert _invoke(args) == EXIT_OK
    with open(output, newline="") as f:
        header = next(csv.reader(f))
    assert header[0] == "index" and "dual_area" in header and "nz" in header


def test_isothermic_command_gates_on_l_field(fixture_factory, tmp_path, capsys):
    config = fixture_factory.create("config", tmp_path)
    code = _invoke(["isothermic", "--config", str(config), "--fixture", "revolution-torus", "--N", "48"])
    assert code == EXIT_OK
    payload = json.loads(capsys.readouterr().out)["payload"]
    assert payload["isothermic"] and payload["l_field_residual"] <= 5e-2
    assert payload["checks"]["l_field_residual"]["bound"] == 5e-2


def test_usage_errors(fixture_factory, tmp_path, capsys):
    config = fixture_factory.create("config", tmp_path)
    assert _invoke(["periods", "--config", str(fixture_factory.create("broken-config", tmp_path)), "--fixture", "flat-torus"]) == EXIT_USAGE
    assert _invoke(["periods", "--config", str(config), "--input", str(tmp_path / "missing.off")]) == EXIT_USAGE
    assert _invoke(["periods", "--config", str(config), "--fixture", "flat-torus", "--N", "4"]) == EXIT_USAGE
    assert _invoke(["periods", "--config", str(config), "--fixture", "flat-torus", "--tolerance", "period"]) == EXIT_USAGE
    assert _invoke(["periods", "--config", str(config)]) == EXIT_USAGE
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "BadConfig"


def test_genus_zero_input_is_numerical_failure(fixture_factory, tmp_path):
    config = fixture_factory.create("config", tmp_path)
    mesh = fixture_factory.create("tetra-off", tmp_path)
    assert _invoke(["periods", "--config", str(config), "--input", str(mesh)]) == EXIT_NUMERICAL


def test_config_defaults_and_overrides(fixture_factory, tmp_path):
    config = Config(str(fixture_factory.create("config", tmp_path)))
    assert config.fixture["N"] == 16
    assert config.flow["max_steps"] == 5 and config.flow["step"] == 1.0
    assert config.tolerances["conformal"] == 1e-14
    with pytest.raises(BadConfig):
        Config(str(fixture_factory.create("broken-config", tmp_path)))


def test_run_config_validation():
    run = RunConfig(command="probe", fixture="clifford-torus", tau="0.5+0.8i")
    assert run.tau == 0.5 + 0.8j
    for bad in ({"command": "draw"}, {"command": "periods", "tau": "0.5-0.8i"}, {"command": "probe", "eps": [1.5]}):
        with pytest.raises(ValueError):
            RunConfig(**bad)


def test_complex_parsing_and_json():
    assert parse_complex("1-2i") == 1 - 2j
    assert parse_complex([0.5, 0.25]) == 0.5 + 0.25j
    assert to_jsonable({"z": np.array([1 + 2j])}) == {"z": [[1.0, 2.0]]}
    assert dumps({"b": 1, "a": 2}) == '{"a": 2, "b": 1}'


def test_writers(tmp_path):
    path = tmp_path / "trajectory.jsonl"
    writer = JSONLWriter(path)
    writer.append({"step": 1, "W": 2.0})
    writer.append({"step": 2, "W": 1.5})
    assert [json.loads(line)["step"] for line in path.read_text().splitlines()] == [1, 2]
    with pytest.raises(ValueError):
        WriterFactory.create(tmp_path / "table.xlsx")
