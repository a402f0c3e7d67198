import numpy as np
import pytest

from simmatch import (
    ColoredStream,
    DimensionMismatchError,
    MetricsLog,
    MetricsRecord,
    MetricsRecorder,
    NetworkState,
    Reference,
    SlidingGram,
    SpectrumSpec,
    StreamSchedule,
    eigenvalue_error,
    learned_basis,
    make_rng,
    random_orthonormal,
    subspace_error,
    windowed_spectrum,
)


def test_eigenvalue_error():
    assert eigenvalue_error([3.0, 1.0], [3.0, 1.0]) == 0.0
    assert eigenvalue_error([3.0, 0.0], [2.0, 1.0]) == 2.0
    assert eigenvalue_error([0.0, 3.0], [2.0, 1.0]) == 2.0
    assert eigenvalue_error([1.0], [1.0, 0.0, 0.0]) == 0.0


def test_subspace_error():
    e = np.eye(3)
    assert subspace_error(e[:, :2], e[:, :2]) == 0.0
    assert subspace_error(e[:, :1], e[:, 1:2]) == pytest.approx(2.0)
    rotated = e[:, :2] @ random_orthonormal(2, make_rng(0))
    assert subspace_error(rotated, e[:, :2]) == pytest.approx(0.0, abs=1e-12)


def test_subspace_error_range():
    rng = make_rng(1)
    for r in range(1, 4):
        a = random_orthonormal(6, rng)[:, :r]
        b = random_orthonormal(6, rng)[:, :r]
        assert 0.0 <= subspace_error(a, b) <= 2 * r + 1e-12


def test_subspace_error_dimensions():
    with pytest.raises(DimensionMismatchError):
        subspace_error(np.eye(3)[:, :1], np.eye(4)[:, :1])
    with pytest.raises(DimensionMismatchError):
        subspace_error(np.eye(3)[:, :1], np.eye(3)[:, :2])


def test_windowed_spectrum_of_constant_vectors():
    spec = windowed_spectrum(np.tile([1.0, 0.0, 0.0], (20, 1)), window=20)
    np.testing.assert_allclose(spec.eigenvalues, [1.0, 0.0, 0.0], atol=1e-12)
    assert not spec.partial
    assert windowed_spectrum(np.ones((5, 2)), window=10).partial


def test_windowed_spectrum_of_gaussian_stream():
    base = SpectrumSpec((6.0, 5.0, 4.0, 2.0), tail_count=4, tail_range=(0.0, 0.2))
    stream = ColoredStream(StreamSchedule(8, base, seed=4))
    spec = windowed_spectrum(stream.take(10000), window=10000)
    np.testing.assert_allclose(spec.eigenvalues[:4], [6.0, 5.0, 4.0, 2.0], rtol=0.05)


def test_window_straddling_a_change():
    base = SpectrumSpec((4.0, 1.0))
    stream = ColoredStream(StreamSchedule(2, base, ((0, 1.0), (1000, 2.0)), seed=1))
    x = stream.take(2000)
    top = windowed_spectrum(x[500:1500], window=1000).eigenvalues[0]
    assert 4.0 < top < 8.0


def test_sliding_gram_keeps_the_last_window():
    x = make_rng(2).standard_normal((23, 3))
    gram = SlidingGram(3, window=5)
    for row in x:
        gram.push(row)
    assert len(gram) == 5 and gram.full
    recent = x[-5:]
    np.testing.assert_allclose(gram.matrix(), recent.T @ recent / 5, atol=1e-12)
    with pytest.raises(DimensionMismatchError):
        gram.push(np.zeros(4))


def test_cumulative_gram():
    x = make_rng(3).standard_normal((10, 2))
    gram = SlidingGram(2)
    np.testing.assert_array_equal(gram.matrix(), np.zeros((2, 2)))
    for row in x:
        gram.push(row)
    np.testing.assert_allclose(gram.matrix(), x.T @ x / 10, atol=1e-12)


def test_learned_basis():
    state = NetworkState(np.eye(4)[:2], np.zeros((2, 2)), np.ones(2))
    basis = learned_basis(state, np.eye(2), 2)
    assert subspace_error(basis, np.eye(4)[:, :2]) == pytest.approx(0.0, abs=1e-12)
    assert learned_basis(state, np.eye(2), 0).shape == (4, 0)


def test_reference_per_segment():
    base = SpectrumSpec((6.0, 5.0, 4.0, 2.0), tail_count=60, tail_range=(0.0, 0.2))
    stream = ColoredStream(StreamSchedule(64, base, ((0, 1.0), (1000, 2.0)), seed=0))
    ref = Reference.for_stream(stream, "scale", 2.0, 4)
    np.testing.assert_allclose(ref.optimal_at(0), [4.0, 3.0, 2.0, 0.0])
    np.testing.assert_allclose(ref.optimal_at(1000), [10.0, 8.0, 6.0, 2.0])
    assert ref.optimal_rank(999) == 3
    assert ref.optimal_rank(1000) == 4
    assert ref.true_basis(2).shape == (64, 2)


def test_recorder_without_learned_modes():
    ref = Reference([0], [np.array([1.0, 0.0])], np.eye(3))
    recorder = MetricsRecorder(3, 2, reference=ref)
    state = NetworkState(np.zeros((2, 3)), np.zeros((2, 2)), np.ones(2))
    recorder.observe(0, np.ones(3), np.zeros(2))
    record = recorder.snapshot(0, state)
    assert record.rank == 0
    assert record.subspace_error == 1.0
    assert record.eigenvalue_error == pytest.approx(1.0)


def test_log_ordering_and_values():
    log = MetricsLog()
    log.append(MetricsRecord(5, np.ones(2), np.ones(2)))
    with pytest.raises(ValueError):
        log.append(MetricsRecord(5, np.ones(2), np.ones(2)))
    with pytest.raises(ValueError):
        log.append(MetricsRecord(6, np.ones(2), np.ones(2), eigenvalue_error=-1.0))
    with pytest.raises(ValueError):
        log.append(MetricsRecord(6, np.ones(2), np.ones(2), subspace_error=np.nan))
    assert log.at(5).t == 5
    with pytest.raises(KeyError):
        log.at(4)
    assert np.isnan(log.errors("eigenvalue_error")[0])


def test_log_csv(tmp_path):
    log = MetricsLog(window=10)
    log.append(MetricsRecord(9, np.array([2.0, 0.5]), np.array([3.0]), 0.25, None, 2, True))
    path = tmp_path / "log.csv"
    log.to_csv(path, header={"kind": "scale"})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines == [
        "# kind: scale",
        "t,y_1,y_2,x_1,eigenvalue_error,subspace_error,rank,partial",
        "9,2,0.5,3,0.25,,2,1",
    ]
