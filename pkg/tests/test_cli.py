import pytest
from click.testing import CliRunner

import simmatch.core
import simmatch.metrics
from simmatch import (
    ExperimentConfig,
    MetricsLog,
    NumericalFailureError,
    StreamError,
    __version__,
    load_stream,
)
from simmatch.cli import run


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_path(tmp_path, small_config):
    path = tmp_path / "small.yaml"
    small_config.save(path)
    return path


def test_version(runner):
    result = runner.invoke(run, ["-V"])
    assert result.exit_code == 0
    assert __version__ in result.output


@pytest.mark.parametrize(
    "args, expected",
    [
        (["--kind", "squared", "--spectrum", "6,5,4", "--alpha", "1", "-k", "3"],
         "2.25 1.25 0.25 (rank 3)"),
        (["--kind", "scale", "--spectrum", "6,5,4", "--alpha", "0", "-k", "3"],
         "6 5 4 (rank 3)"),
        (["--kind", "scale-dependent", "--spectrum", "5, 1", "--alpha", "2", "-k", "2"],
         "3 0 (rank 1)"),
    ],
)
def test_offline(runner, args, expected):
    result = runner.invoke(run, ["offline", *args])
    assert result.exit_code == 0, result.output
    assert result.output == expected + "\n"


@pytest.mark.parametrize(
    "args",
    [
        ["--kind", "scale", "--spectrum", "6,x", "--alpha", "1", "-k", "1"],
        ["--kind", "scale", "--spectrum", "6,-1", "--alpha", "1", "-k", "1"],
        ["--kind", "scale", "--spectrum", "6", "--alpha", "-1", "-k", "1"],
        ["--kind", "lasso", "--spectrum", "6", "--alpha", "1", "-k", "1"],
    ],
)
def test_offline_bad_arguments(runner, args):
    assert runner.invoke(run, ["offline", *args]).exit_code == 2


def test_write_config(runner, tmp_path):
    path = tmp_path / "ns.toml"
    result = runner.invoke(run, ["config", "nonstationary", str(path)])
    assert result.exit_code == 0
    assert ExperimentConfig.read(path) == ExperimentConfig.preset("nonstationary")


def test_bad_config(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("stream:\n  dims: 3\n", encoding="utf-8")
    result = runner.invoke(run, ["experiment", "--config", str(path)])
    assert result.exit_code == 2
    assert "dims" in result.output


def test_stream_dump(runner, tmp_path, config_path):
    out = tmp_path / "s.csv"
    result = runner.invoke(
        run, ["stream", "--config", str(config_path), "--count", "5", "-o", str(out)]
    )
    assert result.exit_code == 0, result.output
    samples = load_stream(out)
    assert [s.t for s in samples] == list(range(5))
    assert len(samples[0].x) == 8


def test_stream_network_replay(runner, tmp_path, config_path):
    data = tmp_path / "s.csv"
    runner.invoke(run, ["stream", "--config", str(config_path), "-o", str(data)])
    out = tmp_path / "log.csv"
    args = ["stream", "--config", str(config_path), "--network", "io", "-o", str(out)]
    result = runner.invoke(run, [*args, "--input", str(data)])
    assert result.exit_code == 0, result.output
    assert out.read_text(encoding="utf-8").startswith("# kind: io\n")


def test_experiment_is_deterministic(runner, tmp_path, config_path):
    outputs = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        result = runner.invoke(
            run, ["experiment", "--config", str(config_path), "--out-dir", str(out_dir)]
        )
        assert result.exit_code == 0, result.output
        outputs.append(
            {p.name: p.read_bytes() for p in sorted(out_dir.glob("*.csv"))}
        )
    assert sorted(outputs[0]) == ["small_io.csv", "small_scale.csv", "small_squared.csv"]
    assert outputs[0] == outputs[1]
    header = outputs[0]["small_squared.csv"].decode().splitlines()
    assert "# kind: squared" in header
    assert "# seed: 3" in header


def test_experiment_failure_writes_partial_results(runner, tmp_path, config_path, monkeypatch):
    def fail(*args, **kwargs):
        raise StreamError(7, MetricsLog(100), "weights became non-finite")

    monkeypatch.setattr(simmatch.core, "run_stream", fail)
    out_dir = tmp_path / "failed"
    result = runner.invoke(
        run, ["experiment", "--config", str(config_path), "--out-dir", str(out_dir)]
    )
    assert result.exit_code == 1
    assert "iteration 7" in result.output
    text = (out_dir / "small_scale.csv").read_text(encoding="utf-8")
    assert "# failed_at: 7" in text


def test_experiment_snapshot_failure_writes_partial_results(
    runner, tmp_path, config_path, monkeypatch
):
    def fail(*args, **kwargs):
        raise NumericalFailureError("Jacobi rotations did not converge")

    monkeypatch.setattr(simmatch.metrics, "sym_eig", fail)
    out_dir = tmp_path / "failed"
    result = runner.invoke(
        run, ["experiment", "--config", str(config_path), "--out-dir", str(out_dir)]
    )
    assert result.exit_code == 1
    assert "iteration 49" in result.output
    for kind in ("scale", "io", "squared"):
        text = (out_dir / f"small_{kind}.csv").read_text(encoding="utf-8")
        assert "# failed_at: 49" in text


def test_phase(runner, tmp_path):
    result = runner.invoke(
        run, ["phase", "--step", "0.1", "--kind", "scale", "--kind", "io",
              "--out-dir", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[0] == "scale: none"
    assert lines[1].startswith("io: ")
    assert (tmp_path / "fractions.csv").exists()
    assert runner.invoke(run, ["phase", "--step", "0.3", "--out-dir", str(tmp_path)]).exit_code == 2
