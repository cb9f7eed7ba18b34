#!/usr/bin/env python3
"""
Tests for the verification pipelines, report emission and the command line
"""

import json
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

import app.components.pipelines as pipelines
from app.components.pipelines import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_INTERNAL,
    EXIT_NOT_CONVERGED,
    EXIT_PASS,
    FAIL,
    NOT_CONVERGED,
    PASS,
    exit_code_for,
    run,
)
from app.components.report import emit_report, human_report, to_jsonable, write_csv
from app.config import PIPELINES, parse_config
from app.main import main

from conftest import create_config_text

KOTTLER_TEXT = create_config_text("kottler", 1.0, {"mass": 1.0}, ["mass", "q-matrices"])
SLOW_DECAY_TEXT = create_config_text(
    "perturbation", 1.0, {"epsilon": 0.01, "tau": 2.0, "rate": 1.6}, ["clifford", "decay", "mass", "q-matrices"]
)


def _without_timing(payload: bytes) -> dict:
    data = json.loads(payload)
    data["provenance"].pop("timing")
    return data


@pytest.fixture(scope="module")
def kottler_run():
    return run(parse_config(KOTTLER_TEXT))


def test_exit_code_precedence():
    assert exit_code_for([]) == EXIT_PASS
    assert exit_code_for([PASS, NOT_CONVERGED]) == EXIT_NOT_CONVERGED
    assert exit_code_for([NOT_CONVERGED, FAIL, PASS]) == EXIT_FAIL
    assert exit_code_for([FAIL, "error"]) == 4


def test_to_jsonable_encodes_complex_and_nonfinite():
    value = {"z": 1 + 2j, "arr": np.array([1.0, np.inf]), "flag": np.bool_(True), 3: np.int64(4)}
    assert to_jsonable(value) == {"z": [1.0, 2.0], "arr": [1.0, None], "flag": True, "3": 4}


@pytest.mark.slow
def test_ads_passes_every_pipeline():
    report, code = run(parse_config(create_config_text("ads", 1.0)))
    assert code == EXIT_PASS, {k: v["status"] for k, v in report.pipelines.items()}
    assert list(report.pipelines) == list(PIPELINES)
    assert np.all(np.asarray(report.pipelines["mass"]["E"]) == 0.0)
    assert all(report.pipelines["rigidity"]["forced_by_vanishing_matrix"].values())


def test_kottler_mass_and_matrices(kottler_run):
    report, code = kottler_run
    assert code == EXIT_PASS
    mass = report.pipelines["mass"]
    assert mass["E"][0] == pytest.approx(2.0, rel=1e-2)
    q = report.pipelines["q-matrices"]
    assert q["Q1"]["verdict"] == "positive_definite"
    assert q["Q"]["verdict"] == "positive_definite"
    assert q["corollaries"] == {"energy_momentum": True, "energy": True}
    assert isinstance(report.tables["per_radius"], pd.DataFrame)


def test_slow_decay_fails_and_mass_does_not_converge():
    report, code = run(parse_config(SLOW_DECAY_TEXT))
    assert code == EXIT_FAIL
    assert report.pipelines["clifford"]["status"] == PASS
    assert report.pipelines["decay"]["status"] == FAIL
    assert report.pipelines["mass"]["status"] == NOT_CONVERGED
    assert report.pipelines["q-matrices"]["status"] == NOT_CONVERGED


def test_structured_report_is_deterministic(kottler_run):
    report, _ = kottler_run
    again, _ = run(parse_config(KOTTLER_TEXT))
    assert _without_timing(emit_report(report)) == _without_timing(emit_report(again))

    data = json.loads(emit_report(report))
    entry = data["pipelines"]["q-matrices"]["Q1"]["matrix"][0][1]
    assert isinstance(entry, list) and len(entry) == 2
    assert set(data) == {"config", "pipelines", "provenance", "exit_code"}
    assert len(data["provenance"]["config_sha256"]) == 64


def test_human_report_prints_matrices(kottler_run):
    report, _ = kottler_run
    text = human_report(report)
    assert "== q-matrices: pass ==" in text
    assert "Q1 (positive_definite)" in text
    assert "eigenvalues (ascending)" in text
    assert text.rstrip().endswith(report.provenance["config_sha256"])
    with pytest.raises(ValueError):
        emit_report(report, "yaml")


def test_empty_pipeline_selection():
    report, code = run(parse_config(create_config_text("ads", 1.0, pipelines=[])))
    assert code == EXIT_PASS
    assert report.pipelines == {}
    assert "versions" in report.provenance


def test_csv_has_one_row_per_radius(kottler_run, tmp_path):
    report, _ = kottler_run
    path = tmp_path / "per_radius.csv"
    write_csv(report, str(path))
    frame = pd.read_csv(path, index_col="r")
    assert list(frame.index) == [3.0, 4.0, 5.0, 6.0]
    assert frame["E0"].iloc[-1] == pytest.approx(report.tables["per_radius"]["E0"].iloc[-1], rel=1e-15)


def test_main_lists_families(capsysbinary):
    assert main(["families", "--format", "structured"]) == EXIT_PASS
    rows = json.loads(capsysbinary.readouterr().out)
    assert {row["family"] for row in rows} == {"ads", "kottler", "perturbation"}


def test_main_mass_writes_outputs(tmp_path, capsysbinary):
    csv_path = tmp_path / "radii.csv"
    config = tmp_path / "run.toml"
    config.write_text(create_config_text(
        "kottler", 1.0, {"mass": 0.5}, extra=f'[output]\ncsv = "{csv_path.as_posix()}"'
    ))
    out = tmp_path / "report.json"

    code = main(["mass", "--config", str(config), "--format", "structured", "--out", str(out)])
    assert code == EXIT_PASS
    assert capsysbinary.readouterr().out == b""
    data = json.loads(out.read_bytes())
    assert list(data["pipelines"]) == ["mass", "q-matrices"]
    assert data["pipelines"]["mass"]["E"][0] == pytest.approx(1.0, rel=1e-2)
    assert csv_path.exists()

    assert main(["report", str(out)]) == EXIT_PASS
    assert b"== mass: pass ==" in capsysbinary.readouterr().out


def test_main_verify_returns_run_code(tmp_path, capsysbinary):
    config = tmp_path / "slow.toml"
    config.write_text(SLOW_DECAY_TEXT)
    assert main(["verify", "--config", str(config), "--seed", "3"]) == EXIT_FAIL
    assert b"== decay: fail ==" in capsysbinary.readouterr().out


@pytest.mark.parametrize("text", [
    'family = "ads"\nkappa = 1.0\nunknown = 1\n',
    'family = "kottler"\nkappa = 1.0\n[parameters]\nmass = -1.0\n',
])
def test_main_config_errors(tmp_path, text):
    config = tmp_path / "bad.toml"
    config.write_text(text)
    assert main(["verify", "--config", str(config)]) == EXIT_CONFIG
    assert main(["verify", "--config", str(tmp_path / "missing.toml")]) == EXIT_CONFIG
    assert main(["verify", "--config", str(config), "--threads", "0"]) == EXIT_CONFIG


def test_report_subcommand_rejects_bad_input(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["report", str(broken)]) == EXIT_CONFIG
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"config": {}}))
    assert main(["report", str(partial)]) == EXIT_CONFIG


def test_rigidity_alone_computes_matrices():
    report, code = run(parse_config(create_config_text("ads", 1.0, pipelines=["rigidity"])))
    assert code == EXIT_PASS
    rigidity = report.pipelines["rigidity"]
    assert rigidity["forced_by_vanishing_matrix"] == {"e0": True, "imaginary": True}
    assert list(report.pipelines) == ["rigidity"]


def test_rigidity_fails_on_forced_residuals(monkeypatch):
    monkeypatch.setattr(
        pipelines, "rigidity_from_geometry",
        lambda geom, kappa, variant: SimpleNamespace(res_gauss=1.0, res_codazzi=1.0),
    )
    report, code = run(parse_config(create_config_text("ads", 1.0, pipelines=["rigidity"])))
    assert code == EXIT_FAIL
    assert report.pipelines["rigidity"]["status"] == FAIL
    assert not any(v["holds"] for v in report.pipelines["rigidity"]["residuals"].values())


@pytest.mark.parametrize("fd_step, consistent", [(1e-4, True), (0.5, False)])
def test_energy_conditions_checks_finite_differences(fd_step, consistent):
    text = create_config_text(
        "perturbation", 1.0, {"epsilon": 0.5, "mode": "tangential"}, ["energy-conditions"],
        extra=f"[steps]\nfd_step = {fd_step!r}",
    )
    report, code = run(parse_config(text))
    result = report.pipelines["energy-conditions"]
    assert result["fd_step"] == fd_step
    assert result["fd_consistent"] is consistent
    assert (result["fd_residual"] <= result["fd_tolerance"]) is consistent
    if not consistent:
        assert result["status"] == FAIL
        assert code == EXIT_FAIL


def test_main_unwritable_output_is_internal_error(tmp_path, capsysbinary):
    config = tmp_path / "run.toml"
    config.write_text(create_config_text("ads", 1.0, pipelines=["clifford"]))
    out = tmp_path / "nodir" / "report.json"
    assert main(["verify", "--config", str(config), "--out", str(out)]) == EXIT_INTERNAL
    assert b"nodir" in capsysbinary.readouterr().err
    assert not out.exists()
