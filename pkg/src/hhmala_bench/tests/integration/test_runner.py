from unittest.mock import patch

import numpy as np

from hhmala.errors import StuckChainError
from hhmala_bench.schemas import ExperimentConfig
from hhmala_bench.services.reporting import write_csv
from hhmala_bench.services.runner import cell_seed, run_cell, run_experiment, target_seed


def _config(**overrides):
    values = dict(
        target="tailored_gaussian", K=1, scheme=["eigen", "none"], dims=[8], iterations="300",
        repetitions=2, chains=2, seed=7, m=2, alpha_pca=0.7, timing=False,
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def test_small_grid_runs_in_order():
    config = _config()
    records = run_experiment(config)

    assert [(r.scheme, r.d) for r in records] == [("eigen", 8), ("eigen", 8), ("none", 8), ("none", 8)]
    for r in records:
        assert r.status == "ok"
        assert r.config_hash == config.config_hash()
        assert 0.0 <= r.acceptance_rate <= 1.0
        assert r.median_ess > 0
        assert 0.0 <= r.final_sin2 <= 1.0
        assert len(r.trace) == 30
        assert r.wall_seconds is None and r.ess_per_second is None
    assert len({r.seed for r in records}) == 4


def test_timing_columns_when_enabled():
    record = run_cell(_config(timing=True), "eigen", 8, 0)
    assert record.wall_seconds > 0
    assert record.ess_per_second == record.median_ess / record.wall_seconds


def test_schemes_share_targets_but_not_streams():
    config = _config()
    assert target_seed(config, 8, 0).generate_state(4).tolist() == target_seed(config, 8, 0).generate_state(4).tolist()
    assert cell_seed(config, "eigen", 8, 0).generate_state(1)[0] != cell_seed(config, "none", 8, 0).generate_state(1)[0]
    assert cell_seed(config, "eigen", 8, 0).generate_state(1)[0] != cell_seed(config, "eigen", 8, 1).generate_state(1)[0]


def test_identical_configs_give_identical_csv_at_any_thread_count(tmp_path):
    config = _config()
    serial = write_csv(run_experiment(config), tmp_path / "serial.csv")
    again = write_csv(run_experiment(config), tmp_path / "again.csv")
    parallel = write_csv(run_experiment(config, threads=2), tmp_path / "parallel.csv")

    assert serial.read_bytes() == again.read_bytes()
    assert serial.read_bytes() == parallel.read_bytes()


def test_vi_scheme_records_summary():
    config = _config(scheme=["diagonal_plus_LR"], vi_iterations=50, repetitions=1)
    record = run_cell(config, "diagonal_plus_LR", 8, 0)

    assert record.status == "ok"
    assert record.vi_summary["iterations"] == 50
    assert record.vi_summary["min_delta"] > 0
    assert record.vi_summary["rank"] == 2


def test_vi_rank_follows_lr_rank_not_m():
    config = _config(scheme=["diagonal_plus_LR"], vi_iterations=20, repetitions=1, m=1, lr_rank=3)
    record = run_cell(config, "diagonal_plus_LR", 8, 0)

    assert record.status == "ok"
    assert record.vi_summary["rank"] == 3


def test_mode_initialised_targets():
    logistic = run_cell(_config(target="logistic_regression", scheme=["dense"]), "dense", 6, 0)
    xy = run_cell(_config(target="xy_mean_field", scheme=["eigen_identity"], beta=1.0), "eigen_identity", 6, 0)

    assert logistic.status == "ok" and logistic.final_sin2 is None and logistic.trace is None
    assert xy.status == "ok"


def test_target_failure_aborts_only_that_cell():
    with patch("hhmala_bench.services.runner.make_target", side_effect=ValueError("bad target")):
        record = run_cell(_config(), "eigen", 8, 0)
    assert record.status == "failed"
    assert record.error == "bad target"
    assert record.median_ess is None


def test_stuck_chain_recorded_not_raised():
    with patch("hhmala_bench.services.runner.median_over_coordinates", side_effect=StuckChainError("frozen")):
        records = run_experiment(_config(scheme=["none"], repetitions=1))
    assert records[0].status == "stuck"
    assert records[0].error == "frozen"


def test_equilibrium_start_uses_exact_draws():
    config = _config(scheme=["none"], iterations="200", trace_every=0)
    record = run_cell(config, "none", 8, 0)
    assert record.trace is None
    assert np.isfinite(record.median_ess)


# --- Tests for the slow Oja rate warning ---

def _warnings_for(config):
    with patch("hhmala_bench.services.runner.run_cell") as mock_cell, \
            patch("hhmala_bench.services.runner.logger") as mock_logger:
        mock_cell.return_value.status = "ok"
        run_experiment(config)
    return [str(c.args[0]) for c in mock_logger.warning.call_args_list]


def test_low_alpha_pca_warns_for_eigen_schemes():
    messages = _warnings_for(_config(alpha_pca=0.1))
    assert any("alpha_pca" in m for m in messages)


def test_default_preset_alpha_pca_does_not_warn():
    assert _warnings_for(_config(alpha_pca=0.7)) == []


def test_low_alpha_pca_ignored_without_eigen_schemes():
    assert _warnings_for(_config(alpha_pca=0.1, scheme=["none", "diagonal"])) == []
