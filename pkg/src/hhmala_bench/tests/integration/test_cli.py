from unittest.mock import patch

import pytest

from hhmala_bench.main import build_parser, main
from hhmala_bench.services.checks import CheckResult

CONFIG = """
target = tailored_gaussian
K = 1
scheme = eigen, none
dims = 6
iterations = 250
repetitions = 1
m = 2
alpha_pca = 0.7
seed = 3
timing = false
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "exp.conf"
    path.write_text(CONFIG)
    return path


def test_run_writes_all_artifacts(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(config_file), "--out", str(out)]) == 0

    for name in ("results.csv", "traces.csv", "manifest.json", "ess_boxplot.svg", "sin2_trace.svg"):
        assert (out / name).exists(), name
    assert len((out / "results.csv").read_text().splitlines()) == 3


def test_run_twice_gives_identical_csv(config_file, tmp_path):
    main(["run", str(config_file), "--out", str(tmp_path / "a")])
    main(["run", str(config_file), "--out", str(tmp_path / "b"), "--threads", "2"])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_flags_override_file(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(config_file), "--out", str(out), "--dims", "6,7", "--scheme", "none", "--set", "trace_every=0"]) == 0
    rows = (out / "results.csv").read_text().splitlines()[1:]
    assert [row.split(",")[1:3] for row in rows] == [["none", "6"], ["none", "7"]]
    assert not (out / "traces.csv").exists()


def test_config_errors_exit_with_two(config_file, tmp_path):
    config_file.write_text(CONFIG + "shceme = eigen\n")
    assert main(["run", str(config_file), "--out", str(tmp_path)]) == 2
    assert main(["run", str(tmp_path / "missing.conf")]) == 2
    assert main(["run", str(config_file), "--set", "no_equals_sign"]) == 2


def test_failed_cell_exits_with_one(config_file, tmp_path):
    with patch("hhmala_bench.services.runner.make_target", side_effect=ValueError("bad target")):
        assert main(["run", str(config_file), "--out", str(tmp_path / "out")]) == 1
    assert "failed" in (tmp_path / "out" / "results.csv").read_text()


def test_check_exit_code_follows_results():
    with patch("hhmala_bench.main.run_checks", return_value=[CheckResult("a", True, "")]):
        assert main(["check"]) == 0
    with patch("hhmala_bench.main.run_checks", return_value=[CheckResult("a", True, ""), CheckResult("b", False, "")]):
        assert main(["check"]) == 1


def test_plot_redraws_from_csv(config_file, tmp_path):
    main(["run", str(config_file), "--out", str(tmp_path / "run")])
    assert main(["plot", str(tmp_path / "run" / "results.csv"), "--out", str(tmp_path / "plots")]) == 0
    assert (tmp_path / "plots" / "ess_boxplot.svg").exists()
    assert (tmp_path / "plots" / "sin2_trace.svg").exists()


def test_help_documents_config_keys():
    text = build_parser().format_help()
    for key in ("target", "scheme", "dims", "iterations", "burn_in", "alpha_pca", "vi_batch_size"):
        assert key in text
    assert "timing = false" in text
    assert "byte-identical" in text
