import itertools
import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import simmatch.metrics
from simmatch import (
    HebbianNetwork,
    InvariantViolationError,
    NetworkConfig,
    NetworkState,
    NumericalFailureError,
    RegularizerKind,
    StreamError,
    beta_for_timescale,
    effective_timescale,
    init_state,
    load_state,
    make_rng,
    neural_dynamics,
    run_stream,
    save_state,
    sym_eig,
    update_weights,
    with_alpha,
)

KINDS = list(RegularizerKind)


def _state(w_yx, w_yy=None, mu=None):
    w_yx = np.atleast_2d(np.asarray(w_yx, dtype=float))
    k = w_yx.shape[0]
    return NetworkState(
        w_yx,
        np.zeros((k, k)) if w_yy is None else np.asarray(w_yy, dtype=float),
        np.ones(k) if mu is None else np.asarray(mu, dtype=float),
    )


def _lateral(rng, k, radius):
    a = rng.standard_normal((k, k))
    a = (a + a.T) / 2
    np.fill_diagonal(a, 0.0)
    return a * radius / max(np.max(np.abs(np.linalg.eigvalsh(a))), 1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        NetworkConfig(4, 2, alpha=-1.0)
    with pytest.raises(ValueError):
        NetworkConfig(4, 2, alpha=1.0, eta=0.0)
    with pytest.raises(ValueError):
        NetworkConfig(4, 2, alpha=1.0, beta=1.5)
    assert NetworkConfig(4, 2, 1.0, kind="io").kind is RegularizerKind.INPUT_OUTPUT
    assert with_alpha(NetworkConfig(4, 2, 1.0), 3.0).alpha == 3.0


def test_init_state():
    cfg = NetworkConfig(16, 3, 1.0, init_seed=4)
    state = init_state(cfg)
    assert state.w_yx.shape == (3, 16)
    assert np.all(np.abs(state.w_yx) <= 0.25)
    np.testing.assert_array_equal(state.w_yy, 0.0)
    np.testing.assert_array_equal(state.mu, 1.0)
    assert state == init_state(cfg)


def test_dynamics_identity_filter():
    cfg = NetworkConfig(3, 3, 0.0)
    x = np.array([1.0, -0.5, 0.25])
    result = neural_dynamics(_state(np.eye(3)), x, cfg)
    assert result.converged
    np.testing.assert_allclose(result.y, x, atol=1e-4)


def test_dynamics_single_neuron():
    result = neural_dynamics(_state([[0.5]]), np.array([2.0]), NetworkConfig(1, 1, 0.0))
    assert result.y[0] == pytest.approx(1.0, abs=1e-4)


def test_dynamics_matches_linear_solve():
    rng = make_rng(8)
    cfg = NetworkConfig(6, 4, 0.0, dynamics_tol=1e-12, dynamics_max_iters=5000)
    state = _state(rng.standard_normal((4, 6)), _lateral(rng, 4, 0.5))
    x = rng.standard_normal(6)
    result = neural_dynamics(state, x, cfg)
    assert result.converged
    np.testing.assert_allclose(result.y, state.filter() @ x, atol=1e-8)


@given(st.integers(0, 2**32))
def test_dynamics_fixed_point_residual(seed):
    rng = make_rng(seed)
    cfg = NetworkConfig(5, 3, 0.0, dynamics_tol=1e-9, dynamics_max_iters=5000)
    lateral = _lateral(rng, 3, 0.4)
    state = _state(rng.uniform(-1, 1, (3, 5)), lateral)
    x = rng.standard_normal(5)
    result = neural_dynamics(state, x, cfg)
    assert result.converged
    residual = (np.eye(3) + lateral) @ result.y - state.w_yx @ x
    assert np.max(np.abs(residual)) <= 10 * cfg.dynamics_tol + 1e-12


def test_dynamics_cap_and_failures():
    cfg = NetworkConfig(2, 2, 0.0, dynamics_max_iters=1)
    result = neural_dynamics(_state(np.eye(2)), np.ones(2), cfg)
    assert not result.converged
    assert result.dynamics_iters == 1
    with pytest.raises(ValueError):
        neural_dynamics(_state(np.eye(2)), np.ones(3), cfg)
    with pytest.raises(NumericalFailureError):
        neural_dynamics(_state(np.eye(2)), np.array([np.nan, 0.0]), cfg)


def test_update_example():
    cfg = NetworkConfig(2, 2, 0.5)
    e1 = np.array([1.0, 0.0])
    new = update_weights(_state(np.zeros((2, 2))), e1, e1, cfg)
    np.testing.assert_allclose(new.mu, [2.5, 1.5])
    assert new.w_yx[0, 0] == pytest.approx(0.4)
    assert new.t == 1


@pytest.mark.parametrize("kind", KINDS)
def test_zero_output_only_grows_mu(kind):
    cfg = NetworkConfig(3, 2, 0.5, kind=kind, beta=0.9)
    state = _state(np.ones((2, 3)), [[0.0, 0.2], [0.2, 0.0]])
    new = update_weights(state, np.zeros(3), np.zeros(2), cfg)
    if kind is RegularizerKind.SCALE_DEPENDENT:
        np.testing.assert_allclose(new.mu, 0.81 + 0.5)
        np.testing.assert_allclose(new.w_yx, state.w_yx * (1 - 0.5 / 1.31))
    else:
        np.testing.assert_allclose(new.mu, 0.81)
        np.testing.assert_array_equal(new.w_yx, state.w_yx)
        np.testing.assert_array_equal(new.w_yy, state.w_yy)


def test_input_output_equals_scale_on_unit_inputs():
    x = np.array([0.0, 1.0])
    y = np.array([0.3, -0.1])
    state = _state([[0.1, 0.2], [0.3, 0.4]])
    a = update_weights(state, x, y, NetworkConfig(2, 2, 0.7, kind="scale"))
    b = update_weights(state, x, y, NetworkConfig(2, 2, 0.7, kind="io"))
    assert a == b


@pytest.mark.parametrize("kind", KINDS)
def test_learning_invariants(kind):
    rng = make_rng(2)
    cfg = NetworkConfig(5, 3, 0.2, kind=kind)
    net = HebbianNetwork(cfg)
    previous = net.state.mu
    for _ in range(300):
        net.step(rng.standard_normal(5))
        assert np.all(np.diag(net.state.w_yy) == 0.0)
        assert np.all(net.state.mu >= previous)
        previous = net.state.mu


def test_forgetting_bounds_mu():
    rng = make_rng(2)
    cfg = NetworkConfig(3, 2, 1.0, beta=beta_for_timescale(10))
    net = HebbianNetwork(cfg)
    gain = 0.0
    for _ in range(500):
        y = net.step(rng.uniform(-1, 1, 3)).y
        gain = max(gain, cfg.alpha + float(np.max(y * y)))
    assert np.all(net.state.mu <= 1 + gain / (1 - cfg.beta**2))


@pytest.mark.parametrize("kind", KINDS)
def test_no_forgetting_paths_are_identical(kind):
    rng = make_rng(6)
    cfg = NetworkConfig(4, 2, 0.3, kind=kind)
    a = b = init_state(cfg)
    for _ in range(200):
        x = rng.standard_normal(4)
        y = neural_dynamics(a, x, cfg).y
        a = update_weights(a, x, y, cfg, discounted=True)
        b = update_weights(b, x, y, cfg, discounted=False)
        assert a == b


def test_negative_mu_is_rejected():
    with pytest.raises(InvariantViolationError):
        update_weights(
            _state(np.eye(2), mu=[-10.0, 1.0]), np.ones(2), np.zeros(2), NetworkConfig(2, 2, 0.1)
        )


def test_timescale():
    assert effective_timescale(0.999) == pytest.approx(999.5, abs=0.01)
    assert effective_timescale(1.0) == math.inf
    assert effective_timescale(beta_for_timescale(1000)) == pytest.approx(1000)
    assert NetworkConfig(2, 1, 0.0, beta=1.0).timescale == math.inf


def test_checkpoint_round_trip(tmp_path):
    rng = make_rng(9)
    cfg = NetworkConfig(4, 2, 0.5)
    net = HebbianNetwork(cfg)
    for _ in range(50):
        net.step(rng.standard_normal(4))
    path = tmp_path / "net.npz"
    net.save(path)
    restored = HebbianNetwork.load(cfg, path)
    assert restored.state == net.state
    x = rng.standard_normal(4)
    np.testing.assert_array_equal(restored.step(x).y, net.step(x).y)


def test_checkpoint_version(tmp_path):
    path = tmp_path / "bad.npz"
    with open(path, "wb") as f:
        np.savez(
            f, version=np.array(99), w_yx=np.eye(2), w_yy=np.zeros((2, 2)),
            mu=np.ones(2), t=np.array(0),
        )
    with pytest.raises(ValueError, match="version"):
        load_state(path)
    save_state(_state(np.eye(2)), path)
    assert load_state(path).t == 0


def test_run_stream_snapshots_and_determinism():
    cfg = NetworkConfig(4, 2, 0.1)
    data = make_rng(1).standard_normal((25, 4))
    log = run_stream(cfg, data, window=10, snapshot_every=10, keep_outputs=True)
    assert log.t.tolist() == [9, 19, 24]
    assert len(log.outputs) == 25
    assert log.final_state.t == 25
    again = run_stream(cfg, data, window=10, snapshot_every=10)
    np.testing.assert_array_equal(log.output_spectra(), again.output_spectra())


def test_run_stream_empty():
    log = run_stream(NetworkConfig(4, 2, 0.1), np.empty((0, 4)))
    assert len(log) == 0
    assert log.nonconverged == 0


def test_run_stream_failure_keeps_partial_log():
    data = make_rng(1).standard_normal((10, 3))
    data[5, 0] = np.nan
    with pytest.raises(StreamError) as info:
        run_stream(NetworkConfig(3, 2, 0.1), data, snapshot_every=2)
    assert info.value.t == 5
    assert [r.t for r in info.value.log] == [1, 3]


def _failing_after(calls):
    count = itertools.count()

    def eig(*args, **kwargs):
        if next(count) >= calls:
            raise NumericalFailureError("Jacobi rotations did not converge")
        return sym_eig(*args, **kwargs)

    return eig


def test_run_stream_wraps_snapshot_failures(monkeypatch):
    data = make_rng(1).standard_normal((10, 3))
    monkeypatch.setattr(simmatch.metrics, "sym_eig", _failing_after(2))
    with pytest.raises(StreamError) as info:
        run_stream(NetworkConfig(3, 2, 0.1), data, snapshot_every=2)
    assert info.value.t == 3
    assert [r.t for r in info.value.log] == [1]


def test_run_stream_wraps_final_snapshot_failure(monkeypatch):
    data = make_rng(1).standard_normal((5, 3))
    monkeypatch.setattr(simmatch.metrics, "sym_eig", _failing_after(0))
    with pytest.raises(StreamError) as info:
        run_stream(NetworkConfig(3, 2, 0.1), data, snapshot_every=10)
    assert info.value.t == 4
    assert len(info.value.log) == 0


def test_nonconvergence_is_reported(caplog, monkeypatch):
    online_logger = logging.getLogger("simmatch.online")
    monkeypatch.setattr(online_logger, "handlers", [*online_logger.handlers, caplog.handler])
    cfg = NetworkConfig(3, 2, 0.1, dynamics_max_iters=1)
    log = run_stream(cfg, make_rng(0).standard_normal((5, 3)))
    assert log.nonconverged == 5
    assert "did not converge on 5 of 5" in caplog.text
