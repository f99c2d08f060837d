import json

import pytest

from hhmala_bench.schemas import CSV_COLUMNS, ExperimentConfig, RunRecord
from hhmala_bench.services.reporting import emit_plots, read_records, write_csv, write_manifest, write_traces


def _record(scheme="eigen", d=10, seed=1, ess=123.456789012345, trace=None, **extra):
    values = dict(
        config_hash="abc", target="tailored_gaussian", scheme=scheme, d=d, seed=seed, median_ess=ess,
        wall_seconds=2.0, ess_per_second=ess / 2.0, acceptance_rate=0.57, final_sin2=0.01, trace=trace,
    )
    values.update(extra)
    return RunRecord(**values)


def _grid():
    records = []
    for scheme in ("eigen", "none"):
        for d in (10, 20):
            for seed in range(3):
                trace = [(10, 0.5), (20, 2.0 ** -(seed + 2)), (30, 0.0)]
                records.append(_record(scheme, d, seed, ess=50.0 * (seed + 1) + d, trace=trace))
    return records


# --- Tests for write_csv ---
def test_single_record_gives_header_and_row(tmp_path):
    path = write_csv([_record()], tmp_path / "results.csv")
    lines = path.read_text().splitlines()

    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("tailored_gaussian,eigen,10,1,123.456789,")


def test_missing_values_written_as_empty_fields(tmp_path):
    record = _record(median_ess=None, wall_seconds=None, ess_per_second=None, final_sin2=None, status="stuck")
    line = write_csv([record], tmp_path / "results.csv").read_text().splitlines()[1]
    assert line == "tailored_gaussian,eigen,10,1,,,,0.57,,stuck"


def test_empty_records_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_csv([], tmp_path / "results.csv")
    assert not (tmp_path / "results.csv").exists()


def test_csv_round_trip(tmp_path):
    records = _grid()
    csv_path = write_csv(records, tmp_path / "results.csv")
    traces_path = write_traces(records, tmp_path / "traces.csv")

    loaded = read_records(csv_path, traces_path)

    assert len(loaded) == len(records)
    for original, back in zip(records, loaded):
        assert (back.scheme, back.d, back.seed, back.status) == (original.scheme, original.d, original.seed, original.status)
        assert back.median_ess == pytest.approx(original.median_ess, rel=1e-9)
        assert back.trace == original.trace


def test_read_rejects_foreign_csv(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_records(path)


def test_no_traces_no_file(tmp_path):
    assert write_traces([_record()], tmp_path / "traces.csv") is None


# --- Tests for emit_plots ---
def test_plots_written_for_grid_with_traces(tmp_path):
    written = emit_plots(_grid(), tmp_path)
    names = sorted(p.name for p in written)

    assert names == ["ess_boxplot.svg", "sin2_trace.svg"]
    for path in written:
        text = path.read_text()
        assert text.startswith("<?xml")
        assert "xlink:href=\"http" not in text


def test_plots_are_byte_deterministic(tmp_path):
    first = emit_plots(_grid(), tmp_path / "a")
    second = emit_plots(_grid(), tmp_path / "b")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


def test_failed_records_only_plot_nothing(tmp_path):
    records = [_record(status="failed", median_ess=None, ess_per_second=None)]
    assert emit_plots(records, tmp_path) == []


def test_plots_need_records(tmp_path):
    with pytest.raises(ValueError):
        emit_plots([], tmp_path)


# --- Tests for write_manifest ---
def test_manifest_echoes_resolved_config(tmp_path):
    config = ExperimentConfig(target="tailored_gaussian", scheme=["eigen"], dims=[10])
    records = [
        _record(vi_summary={"iterations": 5, "min_delta": 0.5}),
        _record(status="failed", error="boom"),
    ]
    manifest = json.loads(write_manifest(config, records, tmp_path / "manifest.json").read_text())

    assert manifest["config_hash"] == config.config_hash()
    assert manifest["config"]["iterations"] == "500*sqrt(d)"
    assert manifest["status_counts"] == {"ok": 1, "stuck": 0, "failed": 1}
    assert manifest["vi"][0]["min_delta"] == 0.5
    assert manifest["errors"] == [{"scheme": "eigen", "d": 10, "seed": 1, "error": "boom"}]
