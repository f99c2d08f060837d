import pytest
from pydantic import ValidationError

from hhmala.config import AdaptConfig, Config, VIConfig


def test_defaults():
    config = Config()
    assert config.adaptation.m == 3
    assert config.adaptation.alpha_pca == 0.1
    assert config.adaptation.alpha_star == 0.574
    assert config.adaptation.sigma0 is None
    assert config.vi.batch_size == 10
    assert config.vi.iterations == 5000
    assert config.logging.level == "INFO"


def test_from_yaml(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("adaptation:\n  m: 5\n  alpha_pca: 0.7\nvi:\n  iterations: 100\n")

    config = Config.from_yaml(str(path))

    assert config.adaptation.m == 5
    assert config.adaptation.alpha_pca == 0.7
    assert config.vi.iterations == 100
    assert config.vi.gamma_mu == 1e-3


def test_from_yaml_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        Config.from_yaml(str(tmp_path / "absent.yaml"))


def test_from_env(monkeypatch):
    monkeypatch.setenv("HHMALA_M", "7")
    monkeypatch.setenv("HHMALA_SCHEME", "eigen_identity")
    monkeypatch.setenv("HHMALA_SIGMA0", "0.4")
    monkeypatch.setenv("HHMALA_VI_BATCH_SIZE", "32")

    config = Config.from_env()

    assert config.adaptation.m == 7
    assert config.adaptation.scheme == "eigen_identity"
    assert config.adaptation.sigma0 == 0.4
    assert config.vi.batch_size == 32


def test_from_env_logging_uses_prefix(monkeypatch):
    monkeypatch.setenv("HHMALA_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("HHMALA_LOG_FORMAT", "{level} {message}")
    monkeypatch.setenv("LOG_LEVEL", "ERROR")

    config = Config.from_env()

    assert config.logging.level == "DEBUG"
    assert config.logging.format == "{level} {message}"


@pytest.mark.parametrize("field", ["alpha_pca", "alpha_general", "alpha_star"])
@pytest.mark.parametrize("value", [0.0, 1.5])
def test_exponents_must_lie_in_unit_interval(field, value):
    with pytest.raises(ValidationError):
        AdaptConfig(**{field: value})


def test_invalid_values_rejected():
    with pytest.raises(ValidationError):
        AdaptConfig(m=0)
    with pytest.raises(ValidationError):
        AdaptConfig(scheme="banana")
    with pytest.raises(ValidationError):
        VIConfig(batch_size=0)
