import math

import pytest
from pydantic import ValidationError

from hhmala_bench.schemas import ExperimentConfig, RunRecord
from hhmala_bench.schemas.experiment import SCHEME_CODES, TARGET_CODES


def _config(**overrides):
    values = {"target": "tailored_gaussian", "scheme": ["eigen", "none"], "dims": [50, 100]}
    values.update(overrides)
    return ExperimentConfig(**values)


def test_iterations_expressions():
    assert _config().iterations_for(50) == math.ceil(500 * math.sqrt(50))
    assert _config(iterations="1000*sqrt(d)").iterations_for(100) == 10_000
    assert _config(iterations="2.5 sqrt(d)").iterations_for(4) == 5
    assert _config(iterations=300).iterations_for(100) == 300


@pytest.mark.parametrize("bad", ["sqrt(n)", "abc", "-5", "500*d"])
def test_bad_iteration_expressions_rejected(bad):
    with pytest.raises(ValidationError):
        _config(iterations=bad)


def test_grid_validation():
    with pytest.raises(ValidationError):
        _config(dims=[0, 10])
    with pytest.raises(ValidationError):
        _config(repetitions=0)
    with pytest.raises(ValidationError):
        _config(alpha_pca=0.0)
    with pytest.raises(ValidationError):
        _config(target="xy_mean_field", dims=[10, 60])
    with pytest.raises(ValidationError):
        _config(chain=3)


def test_init_mode_follows_target():
    assert _config().init_mode() == "equilibrium"
    assert _config(target="logistic_regression").init_mode() == "mode"
    assert _config(target="xy_mean_field", dims=[10]).init_mode() == "mode"
    assert _config(init="mode").init_mode() == "mode"


def test_cells_in_grid_order():
    cells = _config(repetitions=2).cells()
    assert cells[:3] == [("eigen", 50, 0), ("eigen", 50, 1), ("eigen", 100, 0)]
    assert len(cells) == 8


def test_derived_library_configs():
    config = _config(m=5, alpha_pca=0.7, vi_iterations=10, vi_batch_size=4)
    adapt = config.adapt_config("eigen_identity")
    vi = config.vi_config()

    assert (adapt.m, adapt.alpha_pca, adapt.scheme) == (5, 0.7, "eigen_identity")
    assert (vi.iterations, vi.batch_size) == (10, 4)


def test_low_rank_rank_is_separate_from_m():
    assert _config(m=5).vi_rank() == 5
    assert _config(m=10, lr_rank=32).vi_rank() == 32
    assert _config(m=10, lr_rank=32).adapt_config("eigen").m == 10
    with pytest.raises(ValidationError):
        _config(lr_rank=0)


def test_config_hash_is_stable_and_sensitive():
    assert _config().config_hash() == _config().config_hash()
    assert _config().config_hash() != _config(seed=1).config_hash()
    assert len(_config().config_hash()) == 16


def test_seed_codes_are_injective():
    assert len(set(TARGET_CODES.values())) == len(TARGET_CODES)
    assert len(set(SCHEME_CODES.values())) == len(SCHEME_CODES)


def test_run_record_bounds_acceptance_rate():
    with pytest.raises(ValidationError):
        RunRecord(config_hash="x", target="t", scheme="eigen", d=2, seed=0, acceptance_rate=1.2)
    with pytest.raises(ValidationError):
        RunRecord(config_hash="x", target="t", scheme="eigen", d=2, seed=0, status="crashed")
