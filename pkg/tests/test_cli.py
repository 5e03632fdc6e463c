"""CLI contract: happy paths over a scripted roster, JSON error records.

These run the real sandbox worker, so rosters and round counts stay small;
the per-module logic behind each subcommand has its own test file.
"""

import json
import os
import subprocess
import sys

import pytest

from puzzleduel.cli import main

CONFIG = """
rounds_per_side = 1
seed = 3

[limits]
time_limit_ms = 5000
memory_limit_mb = 256

[[roster]]
id = "coop"
kind = "scripted"
script = "cooperative"

[[roster]]
id = "stump"
kind = "scripted"
script = "stumper"

[[roster]]
id = "clum"
kind = "scripted"
script = "clumsy"
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text(CONFIG, encoding="utf-8")
    return str(path)


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def error_record(err):
    (line,) = [l for l in err.splitlines() if l.strip()]
    return json.loads(line)


# ---------------------------------------------------------------------------
# verify

def test_verify_bundled_fixture(capsys):
    code, out, _ = run_cli(
        ["verify", "--puzzle", "ascii_square_sum", "--candidate", '"d"'], capsys
    )
    assert code == 0
    assert out.strip() == "verdict: true"


def test_verify_wrong_candidate(capsys):
    code, out, _ = run_cli(
        ["verify", "--puzzle", "ascii_square_sum", "--candidate", '"e"'], capsys
    )
    assert code == 0
    assert out.strip() == "verdict: false"


def test_verify_reports_error_kind_and_detail(capsys):
    code, out, _ = run_cli(
        ["verify", "--puzzle", "ascii_square_sum", "--candidate", "1 +"], capsys
    )
    assert code == 0
    assert out.startswith("verdict: error (value_parse)")
    assert " - " in out


def test_verify_puzzle_from_file(tmp_path, capsys):
    puzzle = tmp_path / "p.py"
    puzzle.write_text("def mystery(x):\n    return x == 5\n", encoding="utf-8")
    code, out, _ = run_cli(["verify", "--puzzle", str(puzzle), "--candidate", "5"], capsys)
    assert code == 0 and out.strip() == "verdict: true"


def test_verify_unknown_fixture_name(capsys):
    code, _, err = run_cli(["verify", "--puzzle", "nope", "--candidate", "1"], capsys)
    assert code == 2
    record = error_record(err)
    assert record["error"] == "no_such_puzzle"
    assert "ascii_square_sum" in record["message"]  # lists what is bundled


def test_console_script_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "puzzleduel.cli", "verify",
         "--puzzle", "letter_product_42", "--candidate", '"Aaabcg"'],
        capture_output=True, text=True, timeout=60,
    )
    assert result.returncode == 0
    assert result.stdout.strip() == "verdict: true"


# ---------------------------------------------------------------------------
# duel / tournament

def test_duel_writes_log_and_index(config_path, tmp_path, capsys):
    out_dir = str(tmp_path / "logs")
    code, out, _ = run_cli(
        ["duel", "--config", config_path, "--pair", "coop,stump", "--out", out_dir], capsys
    )
    assert code == 0
    path = out.strip()
    assert path == os.path.join(out_dir, "coop__vs__stump.json")
    assert os.path.exists(path)
    index = json.loads(open(os.path.join(out_dir, "index.json")).read())
    assert index["duels"] == ["coop__vs__stump"]


def test_duel_rejects_malformed_pair(config_path, tmp_path, capsys):
    code, _, err = run_cli(
        ["duel", "--config", config_path, "--pair", "coop",
         "--out", str(tmp_path / "logs")], capsys
    )
    assert code == 2
    assert error_record(err)["error"] == "config"


def test_duel_rejects_unknown_model(config_path, tmp_path, capsys):
    code, _, err = run_cli(
        ["duel", "--config", config_path, "--pair", "coop,ghost",
         "--out", str(tmp_path / "logs")], capsys
    )
    assert code == 2
    record = error_record(err)
    assert record["error"] == "config" and "ghost" in record["message"]


def test_missing_config_file(tmp_path, capsys):
    code, _, err = run_cli(
        ["duel", "--config", str(tmp_path / "absent.toml"), "--pair", "a,b"], capsys
    )
    assert code == 2
    assert error_record(err)["error"] == "config"


def test_tournament_fit_report_regrade_pipeline(config_path, tmp_path, capsys):
    logs = str(tmp_path / "logs")
    code, out, _ = run_cli(["tournament", "--config", config_path, "--out", logs], capsys)
    assert code == 0 and out.strip() == logs
    files = sorted(os.listdir(logs))
    assert files == [
        "clum__vs__coop.json", "clum__vs__stump.json", "coop__vs__clum.json",
        "coop__vs__stump.json", "index.json", "stump__vs__clum.json",
        "stump__vs__coop.json",
    ]

    code, out, _ = run_cli(["fit", "--logs", logs], capsys)
    assert code == 0
    ratings_path = out.strip()
    doc = json.loads(open(ratings_path).read())
    assert set(doc["ratings"]) == {"coop", "stump", "clum"}
    assert doc["anchor_value"] == 1000.0
    assert doc["ratings"][doc["anchor_id"]] == 1000.0
    # coop and stump trade proposer points (1-1 draws) and both beat clum
    # twice: identical records, so equal ratings above the all-losses anchor
    assert doc["ratings"]["coop"] == pytest.approx(doc["ratings"]["stump"])
    assert doc["ratings"]["coop"] > 1000.0
    assert doc["diagnostics"]["degenerate_models"] == ["clum"]
    assert os.path.exists(os.path.join(logs, "ratings.csv"))

    bench = tmp_path / "bench.csv"
    bench.write_text(
        "model_id,score\ncoop,50.0\nstump,80.0\nclum,10.0\n", encoding="utf-8"
    )
    report_dir = str(tmp_path / "report")
    code, out, _ = run_cli(
        ["report", "--logs", logs, "--out", report_dir, "--benchmarks", str(bench)],
        capsys,
    )
    assert code == 0
    written = {os.path.basename(p) for p in out.strip().splitlines()}
    assert {"summary.csv", "correlations.csv", "report.md"} <= written

    corpus_path = str(tmp_path / "corpus.json")
    code, out, _ = run_cli(
        ["regrade", "--config", config_path, "--logs", logs,
         "--graders", "coop", "--corpus", corpus_path, "--out", str(tmp_path)],
        capsys,
    )
    assert code == 0
    assert os.path.exists(corpus_path)
    regrade_csv = out.strip()
    header = open(regrade_csv).readline().strip()
    assert header == "proposer,attempted,solved_by_coop"


def test_fit_empty_log_dir(tmp_path, capsys):
    logs = tmp_path / "logs"
    logs.mkdir()
    code, _, err = run_cli(["fit", "--logs", str(logs)], capsys)
    assert code == 2
    assert error_record(err)["error"] == "no_outcomes"


def test_fit_missing_log_dir(tmp_path, capsys):
    code, _, err = run_cli(["fit", "--logs", str(tmp_path / "nope")], capsys)
    assert code == 2
    assert error_record(err)["error"] == "config"


def test_fit_corrupt_record(tmp_path, capsys):
    logs = tmp_path / "logs"
    logs.mkdir()
    (logs / "a__vs__b.json").write_text("{ garbage", encoding="utf-8")
    code, _, err = run_cli(["fit", "--logs", str(logs)], capsys)
    assert code == 2
    assert error_record(err)["error"] == "bad_record"


def test_report_benchmark_coverage_gap(config_path, tmp_path, capsys):
    logs = str(tmp_path / "logs")
    run_cli(["tournament", "--config", config_path, "--out", logs], capsys)
    bench = tmp_path / "bench.csv"
    bench.write_text("model_id,score\ncoop,50.0\n", encoding="utf-8")
    code, _, err = run_cli(
        ["report", "--logs", logs, "--benchmarks", str(bench)], capsys
    )
    assert code == 2
    record = error_record(err)
    assert record["error"] == "invalid"
    assert "lacks scores" in record["message"]


def test_argparse_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2
