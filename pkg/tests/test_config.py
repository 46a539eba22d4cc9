import pytest

from config import OptimizationConfig, load_optimization_config, settings
from models.errors import FormatError


class TestOptimizationConfig:
    def test_defaults_follow_settings(self):
        config = OptimizationConfig()
        assert config.restarts == settings.DEFAULT_RESTARTS
        assert config.seed == settings.DEFAULT_SEED
        assert config.symmetric_parties

    def test_file_with_overrides(self, tmp_path):
        path = tmp_path / "opt.env"
        path.write_text("RESTARTS=5\nSEED=11\n# comment\nSYMMETRIC_PARTIES=false\n")
        config = load_optimization_config(path, seed=99, threads=None)
        assert config.restarts == 5
        assert config.seed == 99
        assert config.threads == settings.THREADS
        assert not config.symmetric_parties

    def test_no_file(self):
        assert load_optimization_config(restarts=3).restarts == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError, match="not found"):
            load_optimization_config(tmp_path / "absent.env")

    @pytest.mark.parametrize("text", ["RESTARTS=0\n", "TOLERANCE=-1\n", "RESTARTS=many\n", "COLOUR=blue\n"])
    def test_invalid_values(self, tmp_path, text):
        path = tmp_path / "opt.env"
        path.write_text(text)
        with pytest.raises(FormatError):
            load_optimization_config(path)
