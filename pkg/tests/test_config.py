import json
import math

import pytest

from simmatch import (
    ConfigKeyError,
    ConfigValueError,
    ExperimentConfig,
    FileFormatError,
    NetworkSection,
    RegularizerKind,
    calibrate_alpha,
    read_config,
    read_document,
)

HEAD = [6.0, 5.0, 4.0, 2.0]


@pytest.mark.parametrize("name", ["stationary", "nonstationary"])
def test_dict_round_trip(name):
    cfg = ExperimentConfig.preset(name)
    assert ExperimentConfig.from_dict(cfg.asdict()) == cfg


@pytest.mark.parametrize("suffix", [".yaml", ".toml", ".json"])
def test_file_round_trip(tmp_path, suffix):
    cfg = ExperimentConfig.preset("nonstationary")
    path = tmp_path / f"cfg{suffix}"
    cfg.save(path)
    assert read_config(path) == cfg


def test_format_detection_without_suffix(tmp_path):
    path = tmp_path / "cfg.conf"
    ExperimentConfig.preset("stationary").save(path, "yaml")
    assert read_config(path) == ExperimentConfig()
    with pytest.raises(FileFormatError):
        ExperimentConfig().save(tmp_path / "cfg.ini", "ini")


def test_non_mapping_document(tmp_path):
    path = tmp_path / "list.json"
    path.write_text(json.dumps([1, 2]), encoding="utf-8")
    with pytest.raises(FileFormatError):
        read_document(path)


def test_defaults():
    cfg = ExperimentConfig.from_dict({})
    assert cfg == ExperimentConfig()
    assert cfg.kinds() == list(RegularizerKind)
    assert cfg.stream.iterations == 10000
    assert cfg.metrics.window == 1000


def test_nonstationary_preset():
    cfg = ExperimentConfig.preset("nonstationary")
    assert cfg.stream.segments == ((0, 1.0), (1000, 2.0), (6000, 1.0))
    assert cfg.networks["io"].beta == pytest.approx(math.exp(-1e-3))
    with pytest.raises(ConfigValueError):
        ExperimentConfig.preset("bursty")


@pytest.mark.parametrize(
    "data",
    [
        {"seed": 1},
        {"stream": {"dims": 3}},
        {"networks": {"scale": {"gamma": 1.0}}},
        {"networks": {"lasso": {}}},
        {"stream": {"segments": [{"start": 0, "factor": 2.0}]}},
    ],
)
def test_unknown_keys(data):
    with pytest.raises(ConfigKeyError):
        ExperimentConfig.from_dict(data)


@pytest.mark.parametrize(
    "data",
    [
        {"stream": {"dim": "64"}},
        {"stream": {"dim": True}},
        {"networks": {"io": {"alpha": "x"}}},
        {"stream": {"tail_range": [0.0]}},
        {"stream": {"segments": [[0, 1.0, 2.0]]}},
        {"threshold": float("nan")},
        {"metrics": []},
    ],
)
def test_wrong_values(data):
    with pytest.raises(ConfigValueError):
        ExperimentConfig.from_dict(data)


def test_network_aliases_and_subsets():
    cfg = ExperimentConfig.from_dict({"networks": {"squared-output": {"alpha": 0.5}}})
    assert cfg.kinds() == [RegularizerKind.SQUARED_OUTPUT]
    assert cfg.networks["squared"] == NetworkSection(alpha=0.5)


def test_calibrate_alpha():
    assert calibrate_alpha("scale", HEAD, 2.0, 4) == 2.0
    assert calibrate_alpha("io", HEAD, 2.0, 4) == pytest.approx(2 / 17)
    assert calibrate_alpha("squared", HEAD, 2.0, 4) == pytest.approx(2 / 9)
    with pytest.raises(ConfigValueError):
        calibrate_alpha("squared", [1.0, 0.5], 2.0, 2)


def test_resolve_alpha():
    cfg = ExperimentConfig.from_dict({"networks": {"scale": {"alpha": 0.3}, "io": {}}})
    assert cfg.resolve_alpha(RegularizerKind.SCALE_DEPENDENT, HEAD) == (0.3, "given")
    alpha, note = cfg.resolve_alpha(RegularizerKind.INPUT_OUTPUT, HEAD)
    assert alpha == pytest.approx(2 / 17)
    assert note.startswith("alpha = threshold / sum(eigenvalues)")


def test_overrides():
    cfg = ExperimentConfig().with_overrides(seed=7, output_dir="elsewhere")
    assert cfg.stream.seed == 7
    assert cfg.output_dir == "elsewhere"
    assert ExperimentConfig().with_overrides() == ExperimentConfig()


def test_network_config():
    net = NetworkSection(k=3, tol=1e-8).network_config("io", 10, 0.2)
    assert (net.n, net.k, net.alpha, net.dynamics_tol) == (10, 3, 0.2, 1e-8)
    assert net.kind is RegularizerKind.INPUT_OUTPUT
