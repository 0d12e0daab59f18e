"""
Command-line and manifest tests: reports, CSV tables, exit codes and output files.
"""
import csv
import io
import json

import pytest


def run_cli(capsys, *argv):
    from src.cli import main
    code = main(list(argv))
    return code, capsys.readouterr().out


# ─── Single commands ──────────────────────────────────────────────────────────

def test_exchange_json(capsys):
    code, out = run_cli(capsys, "exchange", "--N", "2", "--a", "0.5")
    assert code == 0
    report = json.loads(out)
    assert report["N1"] == pytest.approx(3.0)
    assert report["residual_overlap"] == pytest.approx(0.75, abs=1e-12)
    assert report["output_fidelity"] == pytest.approx(1.0, abs=1e-10)
    assert report["state"] is None


def test_exchange_dump_state(capsys):
    code, out = run_cli(capsys, "exchange", "--N", "1", "--dump-state")
    assert code == 0
    state = json.loads(out)["state"]
    assert state["layout"] == [["S", 3], ["T", 3]]
    assert len(state["amplitudes"]) == 9


def test_exchange_gram_matrix_export(capsys):
    code, out = run_cli(capsys, "exchange", "--N", "3", "--a", "0.5", "--backend", "gram", "--dump-state")
    assert code == 0
    (matrix,) = json.loads(out)["gram_matrix"]
    assert len(matrix) == 3 and all(len(row) == 3 for row in matrix)
    assert matrix[0][0] == [1.0, 0.0]
    assert matrix[0][2] == pytest.approx([0.25, 0.0])
    assert matrix[2][1] == pytest.approx([0.5, 0.0])


def test_exchange_gram_matrix_per_stage(capsys):
    code, out = run_cli(
        capsys, "exchange", "--N", "2", "--method", "intermediate", "--backend", "gram", "--dump-state"
    )
    assert code == 0
    stages = json.loads(out)["gram_matrix"]
    assert len(stages) == 2
    for matrix in stages:
        assert matrix[0][0] == [1.0, 0.0]
        assert matrix[0][1] == pytest.approx([0.0, 0.0], abs=1e-12)


def test_dense_exchange_has_no_gram_matrix(capsys):
    code, out = run_cli(capsys, "exchange", "--N", "1", "--dump-state")
    assert code == 0
    assert json.loads(out)["gram_matrix"] is None


def test_game_play_gram(capsys):
    code, out = run_cli(capsys, "game", "play", "--N", "1000000")
    assert code == 0
    report = json.loads(out)
    assert report["win_probability"] == pytest.approx(1 - 1 / 2_000_000, abs=1e-12)
    assert report["d"] == "3^(1000001)"


def test_game_play_dense_reports_entropy_deficit(capsys):
    code, out = run_cli(capsys, "game", "play", "--N", "2", "--backend", "dense")
    assert code == 0
    report = json.loads(out)
    assert report["entropy_deficit"] == pytest.approx(1.0, abs=1e-10)
    code, out = run_cli(capsys, "game", "play", "--N", "2")
    assert json.loads(out)["entropy_deficit"] is None


def test_game_play_csv(capsys):
    code, out = run_cli(capsys, "game", "play", "--N", "2", "--backend", "dense", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert float(rows[0]["win_probability"]) == pytest.approx(0.75, abs=1e-10)


def test_game_bound(capsys):
    code, out = run_cli(capsys, "game", "bound", "--d", "1")
    assert code == 0
    report = json.loads(out)
    assert report["upper_bound"] == pytest.approx(0.98756, abs=1e-5)
    assert report["non_closure_N"] == 41


def test_game_optimize(capsys):
    code, out = run_cli(capsys, "game", "optimize", "--d", "1", "--restarts", "2", "--max-iters", "20")
    assert code == 0
    report = json.loads(out)
    assert report["value_kind"] == "best-found"
    assert report["best_value"] <= report["upper_bound"]
    assert len(report["trajectories"]) == 2


def test_optimize_dump_strategy_alias(capsys):
    code, out = run_cli(capsys, "game", "optimize", "--d", "1", "--restarts", "1", "--max-iters", "5", "--dump-strategy")
    assert code == 0
    strategy = json.loads(out)["strategy"]
    assert strategy["d"] == 1
    assert len(strategy["alice"]) == 6


def test_chain_check(capsys):
    code, out = run_cli(capsys, "game", "chain-check", "--d", "2", "--draws", "5", "--seed", "4")
    assert code == 0
    report = json.loads(out)
    assert report["draws"] == 5
    assert report["max_overlap_minus_fidelity"] <= 1e-9
    assert report["min_entropy_deficit"] == pytest.approx(1.0, abs=1e-10)


def test_completeness(capsys):
    code, out = run_cli(capsys, "completeness", "--c", "0.5", "--N", "1", "--m", "2")
    assert code == 0
    assert json.loads(out)["acceptance"] == pytest.approx(0.5, abs=1e-12)


def test_embezzle(capsys):
    code, out = run_cli(capsys, "embezzle", "--N", "10", "--epsilon", "0.5", "--target", "bell")
    assert code == 0
    report = json.loads(out)
    assert report["fidelity"] >= report["guarantee"] - 1e-9


def test_output_file(tmp_path, capsys):
    target = tmp_path / "nested" / "exchange.json"
    code, out = run_cli(capsys, "exchange", "--N", "3", "--backend", "gram", "--out", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["backend"] == "gram"


# ─── Exit codes ───────────────────────────────────────────────────────────────

def test_invalid_parameters_exit_2(capsys):
    code, _ = run_cli(capsys, "exchange", "--N", "0")
    assert code == 2


def test_identical_states_take_phase_only_path(capsys):
    code, out = run_cli(capsys, "exchange", "--N", "2", "--a", "1.0", "--theta", "0.3")
    assert code == 0
    report = json.loads(out)
    assert report["method"] == "phase_only"
    assert report["backend"] == "phase"
    assert report["residual_overlap"] == 1.0
    assert report["N1"] is None
    assert report["theta"] == pytest.approx(0.3)
    assert report["output_fidelity"] == pytest.approx(1.0, abs=1e-12)


def test_out_of_range_overlap_exit_2(capsys):
    code, _ = run_cli(capsys, "exchange", "--N", "2", "--a", "1.5")
    assert code == 2


def test_dense_too_large_exit_2(capsys):
    code, _ = run_cli(capsys, "game", "play", "--N", "12", "--backend", "dense")
    assert code == 2


def test_bound_violation_exit_3(capsys, monkeypatch):
    from src.errors import BoundViolation
    from src.managers import experiment_manager

    def broken(params, seed, dump_state=False):
        raise BoundViolation("forced")

    monkeypatch.setitem(experiment_manager.EXPERIMENTS, "game-bound", broken)
    code, _ = run_cli(capsys, "game", "bound", "--d", "1")
    assert code == 3


# ─── Tables ───────────────────────────────────────────────────────────────────

def test_exchange_table_log_steps(capsys):
    code, out = run_cli(capsys, "table", "exchange", "--N", "1..1000000", "--log-steps", "7")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(row["N"]) for row in rows] == [1, 10, 100, 1000, 10000, 100000, 1000000]
    assert all(float(row["abs_diff"]) <= 1e-12 for row in rows)


def test_game_table(capsys):
    code, out = run_cli(capsys, "table", "game", "--N", "1..4")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(row["win_prob"]) for row in rows] == pytest.approx([0.5, 0.75, 5 / 6, 0.875])


def test_completeness_table(capsys):
    code, out = run_cli(capsys, "table", "completeness", "--c", "0.5,0.9", "--N", "1..3", "--m", "1..2")
    assert code == 0
    assert len(list(csv.DictReader(io.StringIO(out)))) == 12


def test_parse_int_range():
    from src.managers.table_builder import parse_int_range
    from src.errors import DomainError
    assert parse_int_range("2..4") == [2, 3, 4]
    assert parse_int_range("1,5,9") == [1, 5, 9]
    with pytest.raises(DomainError):
        parse_int_range("4..2")
    with pytest.raises(DomainError):
        parse_int_range("x")


# ─── Manifests ────────────────────────────────────────────────────────────────

MANIFEST = {
    "workers": 2,
    "experiments": [
        {"kind": "exchange", "parameters": {"N": 2, "a": 0.5}, "seed": 0, "output": "out/exchange.json"},
        {"kind": "game-play", "parameters": {"N": 3}, "seed": 0, "output": "out/play.json"},
        {"kind": "completeness", "parameters": {"c": 0.5, "N": 1}, "seed": 1, "output": "out/completeness.json"},
    ],
    "tables": [{"kind": "bound", "d": "1..3", "output": "out/bound.csv"}],
}


def test_run_manifest(tmp_path, capsys):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps(MANIFEST))
    code, _ = run_cli(capsys, "run", str(manifest), "--out", str(tmp_path))
    assert code == 0
    assert json.loads((tmp_path / "out" / "play.json").read_text())["win_probability"] == pytest.approx(5 / 6)
    assert json.loads((tmp_path / "out" / "completeness.json").read_text())["acceptance"] == pytest.approx(0.5)
    rows = list(csv.DictReader(io.StringIO((tmp_path / "out" / "bound.csv").read_text())))
    assert [int(row["d"]) for row in rows] == [1, 2, 3]


def test_manifest_outputs_are_deterministic(tmp_path):
    from src.managers.experiment_manager import ExperimentManager
    from src.models.experiment import ExperimentManifest
    manifest = ExperimentManifest.model_validate(MANIFEST)
    ExperimentManager(manifest, base_dir=str(tmp_path / "a"), workers=1).run()
    ExperimentManager(manifest, base_dir=str(tmp_path / "b"), workers=3).run()
    for name in ("exchange.json", "play.json", "completeness.json", "bound.csv"):
        assert (tmp_path / "a" / "out" / name).read_bytes() == (tmp_path / "b" / "out" / name).read_bytes()


def test_manifest_with_invalid_record(tmp_path):
    from src.managers.experiment_manager import ExperimentManager
    from src.models.experiment import ExperimentManifest
    data = dict(MANIFEST)
    data["experiments"] = MANIFEST["experiments"] + [
        {"kind": "exchange", "parameters": {"N": -1}, "seed": 0, "output": "out/bad.json"}
    ]
    manager = ExperimentManager(ExperimentManifest.model_validate(data), base_dir=str(tmp_path))
    assert manager.run() == 2
    assert (tmp_path / "out" / "exchange.json").exists()
    assert not (tmp_path / "out" / "bad.json").exists()
    assert not (tmp_path / "out" / "bound.csv").exists()


def test_manifest_requires_parameters():
    from pydantic import ValidationError
    from src.models.experiment import ExperimentRecord
    with pytest.raises(ValidationError):
        ExperimentRecord(kind="completeness", parameters={"c": 0.5}, seed=0, output="x.json")


def test_malformed_manifest_exit_2(tmp_path, capsys):
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"experiments": [{"kind": "nope", "seed": 0, "output": "x"}]}))
    code, _ = run_cli(capsys, "run", str(manifest))
    assert code == 2
