import pytest

from config import RunConfig, load_run_config, read_config_file, settings, split_ratios
from storage.files import atomic_write_text
from utils.errors import ConfigError

INI = """\
[paths]
manifest = data/manifest.txt
output_root = out

[protocol]
seed = 11
ratios = 0.25, 0.5, 0.25   # train, dev, test

[morphing]
alphas = 0.5

[mad]
extractors = lbp, hog
apcer_targets = 10, 1
"""


@pytest.fixture
def ini(tmp_path):
    return atomic_write_text(tmp_path / "run.ini", INI)


class TestConfigFile:
    def test_values_and_relative_paths(self, ini, tmp_path):
        cfg = load_run_config(ini)
        assert cfg.manifest == tmp_path / "data" / "manifest.txt"
        assert cfg.output_root == tmp_path / "out"
        assert cfg.seed == 11
        assert cfg.ratios == (0.25, 0.5, 0.25)
        assert cfg.alphas == (0.5,)
        assert cfg.extractors == ("lbp", "hog")
        assert cfg.apcer_targets == (1.0, 10.0)

    def test_defaults_fill_the_rest(self, ini):
        cfg = load_run_config(ini)
        assert cfg.vuln_far_target == settings.VULN_FAR_TARGET
        assert cfg.probe_sessions == (settings.PROBE_SESSION,)
        assert cfg.mode == "intra"

    def test_flags_override_file(self, ini):
        cfg = load_run_config(ini, seed=3, alphas=(0.3, 0.7), output_root=None)
        assert cfg.seed == 3
        assert cfg.alphas == (0.3, 0.7)
        assert cfg.output_root.name == "out"

    def test_unknown_key(self, tmp_path):
        path = atomic_write_text(tmp_path / "bad.ini", "[protocol]\nsplit = 0.5\n")
        with pytest.raises(ConfigError, match="unknown key"):
            read_config_file(path)

    def test_unknown_section(self, tmp_path):
        path = atomic_write_text(tmp_path / "bad.ini", "[telemetry]\nenabled = yes\n")
        with pytest.raises(ConfigError, match="unknown section"):
            read_config_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            read_config_file(tmp_path / "nope.ini")


class TestValidation:
    @pytest.mark.parametrize("overrides", [
        {"alphas": (0.5, 1.2)},
        {"alphas": ()},
        {"ratios": (0.5, 0.5, 0.5)},
        {"vuln_far_target": 0.0},
        {"apcer_targets": (150.0,)},
        {"max_pairs_per_subject": 0},
        {"extractors": ("sift",)},
        {"lbp_mode": "riu2"},
        {"mode": "cross"},
        {"colour": "red"},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError):
            load_run_config(None, **overrides)

    def test_cross_with_two_manifests(self, tmp_path):
        cfg = load_run_config(None, mode="cross", manifest=tmp_path / "a.txt", cross_manifest=tmp_path / "b.txt")
        assert cfg.mode == "cross"

    def test_check_paths(self, tmp_path):
        with pytest.raises(ConfigError, match="manifest not found"):
            RunConfig(manifest=tmp_path / "missing.txt").check_paths()

    def test_frozen(self):
        with pytest.raises(Exception):
            RunConfig().seed = 1

    def test_split_ratios(self):
        assert split_ratios("0.5,0.25,0.25") == (0.5, 0.25, 0.25)
        with pytest.raises(ConfigError):
            split_ratios("0.5,0.5")
