from pathlib import Path

from simmatch import run_experiment, run_phase


def test_experiment_figures(small_config):
    result = run_experiment(small_config, plot=True)
    out_dir = Path(small_config.output_dir)
    assert [p.name for p in result.figures] == ["small_spectra.svg", "small_errors.svg"]
    assert all((out_dir / p.name).stat().st_size > 0 for p in result.figures)


def test_phase_figures_are_reproducible(tmp_path):
    first = run_phase(step=0.1, out_dir=tmp_path / "a", plot=True)
    second = run_phase(step=0.1, out_dir=tmp_path / "b", plot=True)
    names = [p.name for p in first.paths]
    assert names == ["fractions.csv", "phase.csv", "fractions.svg", "phase.svg"]
    for a, b in zip(first.paths, second.paths):
        assert a.read_bytes() == b.read_bytes()
