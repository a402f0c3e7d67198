import hypothesis
import numpy as np
import pytest

from simmatch import ExperimentConfig, MetricsSection, NetworkSection, StreamSection

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)
hypothesis.settings.load_profile("default")


@pytest.fixture
def small_config(tmp_path):
    """A short experiment on an 8-dimensional stream."""
    return ExperimentConfig(
        scenario="small",
        stream=StreamSection(
            dim=8, head=(3.0, 2.0, 1.5, 0.5), tail_count=4, tail_range=(0.0, 0.1),
            seed=3, iterations=400,
        ),
        networks={
            "scale": NetworkSection(k=3),
            "io": NetworkSection(k=3),
            "squared": NetworkSection(k=3),
        },
        metrics=MetricsSection(window=100, snapshot_every=50),
        threshold=1.0,
        output_dir=str(tmp_path / "out"),
    )
