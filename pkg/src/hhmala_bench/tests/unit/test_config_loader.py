import pytest

from hhmala.config import AdaptConfig, Config
from hhmala.errors import ConfigError
from hhmala_bench.services.config_loader import library_defaults, parse_config, read_config_file


def _write(tmp_path, text, name="exp.conf"):
    path = tmp_path / name
    path.write_text(text)
    return path


MINIMAL = """
# minimal experiment
target = tailored_gaussian
K = 3
scheme = eigen
dims = 50
seed = 1
"""


def test_minimal_config_gets_documented_defaults(tmp_path):
    config = parse_config(_write(tmp_path, MINIMAL))

    assert config.target == "tailored_gaussian"
    assert config.scheme == ["eigen"]
    assert config.dims == [50]
    assert config.seed == 1
    assert config.chains == 2
    assert config.repetitions == 15
    assert config.burn_in == 0.5
    assert config.iterations == "500*sqrt(d)"
    assert config.timing is True


def test_lists_and_comments(tmp_path):
    path = _write(tmp_path, "target = tailored_gaussian  # family\nscheme = eigen, none,diagonal\ndims = 10, 20\n")
    config = parse_config(path)
    assert config.scheme == ["eigen", "none", "diagonal"]
    assert config.dims == [10, 20]


def test_unknown_key_is_named(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(_write(tmp_path, MINIMAL + "shceme = eigen\n"))
    assert exc.value.key == "shceme"
    assert "shceme" in str(exc.value)


def test_missing_required_key_is_named(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(_write(tmp_path, "target = tailored_gaussian\nscheme = eigen\n"))
    assert exc.value.key == "dims"
    assert "Missing" in str(exc.value)


def test_type_mismatch_is_named(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(_write(tmp_path, MINIMAL.replace("dims = 50", "dims = fifty")))
    assert exc.value.key == "dims"

    with pytest.raises(ConfigError) as exc:
        parse_config(_write(tmp_path, MINIMAL + "burn_in = 1.5\n"))
    assert exc.value.key == "burn_in"


def test_flags_override_file(tmp_path):
    config = parse_config(_write(tmp_path, MINIMAL), overrides={"dims": "50,100", "seed": "9", "timing": "false"})
    assert config.dims == [50, 100]
    assert config.seed == 9
    assert config.timing is False


def test_overrides_alone_are_enough():
    config = parse_config(None, {"target": "xy_mean_field", "scheme": "none", "dims": "10"})
    assert config.target == "xy_mean_field"


def test_library_defaults_sit_below_file_values(tmp_path):
    library = Config(adaptation=AdaptConfig(alpha_pca=0.7, m=4))
    config = parse_config(_write(tmp_path, MINIMAL + "m = 2\n"), defaults=library_defaults(library))

    assert config.alpha_pca == 0.7
    assert config.m == 2
    assert "sigma0" not in library_defaults(library)


def test_eigen_count_and_low_rank_rank_set_separately(tmp_path):
    config = parse_config(_write(tmp_path, MINIMAL + "m = 1\nlr_rank = 3\n"))
    assert (config.m, config.lr_rank, config.vi_rank()) == (1, 3, 3)


def test_duplicate_and_malformed_lines_rejected(tmp_path):
    with pytest.raises(ConfigError) as exc:
        read_config_file(_write(tmp_path, "seed = 1\nseed = 2\n"))
    assert exc.value.key == "seed"
    with pytest.raises(ConfigError):
        read_config_file(_write(tmp_path, "just some words\n"))


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/nonexistent/experiment.conf")
