"""Command-line interface: the synth one-shot, the stagewise chain on a
small city, the JSON error envelope, and the report renderer."""

import json

import pytest
from click.testing import CliRunner

from schooljam.cli import main
from schooljam.pipeline import ARTIFACT_NAMES, MANIFEST_NAME


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory, runner):
    out = tmp_path_factory.mktemp("cli_synth")
    result = runner.invoke(
        main,
        [
            "synth",
            "--out-dir",
            str(out),
            "--seed",
            "5",
            "--n-obs",
            "15000",
            "--grid-nodes",
            "8",
            "--n-schools",
            "120",
        ],
    )
    assert result.exit_code == 0, result.output
    return out


def test_synth_writes_city_and_artifacts(synth_dir):
    for name in ("roads.geojson", "schools.csv", "observations.csv"):
        assert (synth_dir / "city" / name).exists()
    for name in ARTIFACT_NAMES:
        assert (synth_dir / "artifacts" / name).exists(), name
    assert (synth_dir / "artifacts" / MANIFEST_NAME).exists()


def test_stagewise_chain_matches_cli_contract(tmp_path, runner, synth_dir):
    city = str(synth_dir / "city")
    out = tmp_path / "arts"
    out.mkdir()
    steps = [
        ["ingest", "--input-dir", city, "--out-dir", str(out), "--seed", "5"],
        ["scenescape", "--input-dir", city, "--out-dir", str(out), "--seed", "5"],
        ["features", "--input-dir", city, "--out-dir", str(out), "--seed", "5"],
        ["fit-m1", "--input-dir", city, "--out-dir", str(out), "--seed", "5"],
        ["fit-m2", "--out-dir", str(out), "--seed", "5"],
        ["shap", "--out-dir", str(out), "--seed", "5"],
        ["score", "--out-dir", str(out), "--seed", "5"],
        ["report", "--out-dir", str(out)],
    ]
    for argv in steps:
        result = runner.invoke(main, argv)
        assert result.exit_code == 0, (argv[0], result.output)
    for name in ARTIFACT_NAMES:
        assert (out / name).exists(), name
    report = (out / "report.md").read_text()
    assert report.startswith("# School-run congestion study")
    assert "Frequency regression" in report


def test_out_of_order_stage_gives_json_error(tmp_path, runner):
    out = tmp_path / "empty"
    out.mkdir()
    result = runner.invoke(main, ["fit-m2", "--out-dir", str(out), "--seed", "1"])
    assert result.exit_code == 2
    payload = json.loads(result.output.strip().splitlines()[-1])
    assert payload["error"] == "MissingArtifact"
    assert "panel.csv" in payload["message"]


def test_report_needs_artifacts(tmp_path, runner):
    out = tmp_path / "empty"
    out.mkdir()
    result = runner.invoke(main, ["report", "--out-dir", str(out)])
    assert result.exit_code == 2
    payload = json.loads(result.output.strip().splitlines()[-1])
    assert payload["error"] == "MissingArtifact"


def test_config_file_rejects_unknown_keys(tmp_path, runner):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"radius_m": 400, "banana": 1}))
    out = tmp_path / "o"
    out.mkdir()
    result = runner.invoke(
        main,
        ["fit-m2", "--out-dir", str(out), "--config", str(cfg)],
    )
    assert result.exit_code != 0
    assert "banana" in result.output


def test_config_file_applies(tmp_path, runner, synth_dir):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"radius_m": 400.0, "seed": 5}))
    out = tmp_path / "arts"
    out.mkdir()
    result = runner.invoke(
        main,
        [
            "ingest",
            "--input-dir",
            str(synth_dir / "city"),
            "--out-dir",
            str(out),
            "--config",
            str(cfg),
        ],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads((out / "neighborhoods.json").read_text())
    assert doc["radius_m"] == 400.0


def test_synth_rejects_bad_grid(tmp_path, runner):
    result = runner.invoke(
        main,
        ["synth", "--out-dir", str(tmp_path / "x"), "--grid-nodes", "2"],
    )
    assert result.exit_code == 2
    payload = json.loads(result.output.strip().splitlines()[-1])
    assert payload["error"] == "SpecInfeasible"


def test_help_lists_all_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for cmd in (
        "ingest",
        "scenescape",
        "features",
        "fit-m1",
        "fit-m2",
        "shap",
        "score",
        "report",
        "synth",
        "serve",
    ):
        assert cmd in result.output
