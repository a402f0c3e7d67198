"""
Contains the Hebbian/anti-Hebbian network: neural_dynamics(), update_weights(), etc.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Self

import loggings
import numpy as np

from .datagen import Sample
from .metrics import MetricsLog, MetricsRecorder
from .offline import InvariantViolationError, RegularizerKind
from .spectral import NumericalFailureError, make_rng

if TYPE_CHECKING:
    from .metrics import Reference

__all__ = [
    "CHECKPOINT_VERSION",
    "NetworkConfig",
    "NetworkState",
    "StepResult",
    "HebbianNetwork",
    "init_state",
    "neural_dynamics",
    "update_weights",
    "run_stream",
    "save_state",
    "load_state",
    "effective_timescale",
    "beta_for_timescale",
    "with_alpha",
    "StreamError",
]

logger = loggings.get_logger(__name__)

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    """
    Hyper-parameters of one online network.

    Parameters
    ----------
    n : int
        Input dimensionality.
    k : int
        Number of output neurons.
    alpha : float
        Regularization coefficient, at least 0.
    eta : float, optional
        Weight of the Jacobi iteration, in (0, 1], by default 0.1.
    beta : float, optional
        Discount factor in (0, 1], by default 1.0 (no forgetting).
    kind : RegularizerKind, optional
        Regularizer, by default scale-dependent.
    dynamics_tol : float, optional
        Stop the dynamics once no output changes by more than this, by
        default 1e-6.
    dynamics_max_iters : int, optional
        Iteration cap of the dynamics, by default 500.
    init_seed : int, optional
        Seed of the initial feedforward weights, by default 0.

    Raises
    ------
    ValueError
        Raised if any parameter is out of range.

    """

    n: int
    k: int
    alpha: float
    eta: float = 0.1
    beta: float = 1.0
    kind: RegularizerKind = RegularizerKind.SCALE_DEPENDENT
    dynamics_tol: float = 1e-6
    dynamics_max_iters: int = 500
    init_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RegularizerKind.parse(self.kind))
        if self.n < 1 or self.k < 1:
            raise ValueError(f"dimensions must be positive: n={self.n}, k={self.k}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative: {self.alpha}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1]: {self.eta}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1]: {self.beta}")
        if self.dynamics_tol <= 0:
            raise ValueError(f"dynamics_tol must be positive: {self.dynamics_tol}")
        if self.dynamics_max_iters < 1:
            raise ValueError("dynamics_max_iters must be at least 1")

    @property
    def timescale(self) -> float:
        """Effective forgetting time scale -1/ln β (inf without forgetting)."""
        return effective_timescale(self.beta)


@dataclass(frozen=True, eq=False)
class NetworkState:
    """
    Synaptic state of a network.

    Parameters
    ----------
    w_yx : np.ndarray
        k×n feedforward weights.
    w_yy : np.ndarray
        k×k lateral weights with a zero diagonal.
    mu : np.ndarray
        Cumulative activity of each output neuron, strictly positive.
    t : int, optional
        Number of updates applied, by default 0.

    """

    w_yx: np.ndarray
    w_yy: np.ndarray
    mu: np.ndarray
    t: int = 0

    def __repr__(self) -> str:
        k, n = self.w_yx.shape
        return f"simmatch.NetworkState(k={k}, n={n}, t={self.t})"

    def __eq__(self, other: object, /) -> bool:
        return (
            isinstance(other, NetworkState)
            and self.t == other.t
            and np.array_equal(self.w_yx, other.w_yx)
            and np.array_equal(self.w_yy, other.w_yy)
            and np.array_equal(self.mu, other.mu)
        )

    def filter(self) -> np.ndarray:
        """The k×n map x -> y at the fixed point, (I + W^YY)^-1 W^YX."""
        k = self.w_yy.shape[0]
        return np.linalg.solve(np.eye(k) + self.w_yy, self.w_yx)


@dataclass(frozen=True, eq=False)
class StepResult:
    """Output of the neural dynamics for one input."""

    y: np.ndarray
    dynamics_iters: int
    converged: bool
    residual: float


def init_state(cfg: NetworkConfig, /) -> NetworkState:
    """
    Initial state: W^YX uniform in [-1/√n, 1/√n], W^YY = 0 and μ = 1.

    """
    rng = make_rng(cfg.init_seed)
    bound = 1.0 / math.sqrt(cfg.n)
    return NetworkState(
        w_yx=rng.uniform(-bound, bound, size=(cfg.k, cfg.n)),
        w_yy=np.zeros((cfg.k, cfg.k)),
        mu=np.ones(cfg.k),
    )


def neural_dynamics(
    state: NetworkState, x: np.ndarray, cfg: NetworkConfig, /
) -> StepResult:
    """
    Run the weighted Jacobi iteration y <- (1-η) y + η (W^YX x - W^YY y)
    from y = 0.

    Parameters
    ----------
    state : NetworkState
        Current weights.
    x : np.ndarray
        Input vector of length n.
    cfg : NetworkConfig
        Network configuration.

    Returns
    -------
    StepResult
        The output and whether the iteration met `cfg.dynamics_tol`
        before `cfg.dynamics_max_iters`.

    Raises
    ------
    ValueError
        Raised if x has the wrong length.
    NumericalFailureError
        Raised if the iteration produces non-finite values.

    """
    x = np.asarray(x, dtype=float)
    if x.shape != (cfg.n,):
        raise ValueError(f"expected an input of length {cfg.n}, got {x.shape}")
    eta, w_yy = cfg.eta, state.w_yy
    drive = eta * (state.w_yx @ x)
    y = np.zeros(cfg.k)
    delta = math.inf
    for it in range(1, cfg.dynamics_max_iters + 1):
        y_new = (1 - eta) * y + drive - eta * (w_yy @ y)
        delta = float(np.max(np.abs(y_new - y)))
        y = y_new
        if not math.isfinite(delta):
            raise NumericalFailureError(
                f"neural dynamics diverged after {it} iterations"
            )
        if delta <= cfg.dynamics_tol:
            return StepResult(y, it, True, delta)
    logger.debug(
        "dynamics stopped at the cap of %d iterations (last change %.3g)",
        cfg.dynamics_max_iters,
        delta,
    )
    return StepResult(y, cfg.dynamics_max_iters, False, delta)


def update_weights(
    state: NetworkState,
    x: np.ndarray,
    y: np.ndarray,
    cfg: NetworkConfig,
    /,
    discounted: bool | None = None,
) -> NetworkState:
    """
    Apply the local learning rules of the configured regularizer.

    With r = α (scale-dependent), α||x||^2 (input-output) or α||y||^2
    (squared-output):

    * μ_i <- β^2 μ_i + r + y_i^2
    * W^YX_ij <- W^YX_ij + (y_i x_j - (r + y_i^2) W^YX_ij) / μ_i
    * W^YY_ij <- W^YY_ij + (y_i y_j - (r + y_i^2) W^YY_ij) / μ_i, i != j

    Parameters
    ----------
    state : NetworkState
        State the output was computed with.
    x : np.ndarray
        Input vector.
    y : np.ndarray
        Output of `neural_dynamics()` for x.
    cfg : NetworkConfig
        Network configuration.
    discounted : bool | None, optional
        Whether μ decays by β^2, by default only when β < 1. With β = 1
        both paths give bitwise identical states.

    Returns
    -------
    NetworkState
        The updated state.

    Raises
    ------
    InvariantViolationError
        Raised if some μ_i is not positive after the update.
    NumericalFailureError
        Raised if the weights become non-finite.

    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    match cfg.kind:
        case RegularizerKind.SCALE_DEPENDENT:
            r = cfg.alpha
        case RegularizerKind.INPUT_OUTPUT:
            r = cfg.alpha * float(x @ x)
        case RegularizerKind.SQUARED_OUTPUT:
            r = cfg.alpha * float(y @ y)
    if discounted is None:
        discounted = cfg.beta < 1
    gain = r + y * y
    if discounted:
        mu = cfg.beta**2 * state.mu + gain
    else:
        mu = state.mu + gain
    if np.any(mu <= 0):
        raise InvariantViolationError(f"cumulative activity must stay positive: {mu}")

    rate = 1.0 / mu[:, None]
    w_yx = state.w_yx + (np.outer(y, x) - gain[:, None] * state.w_yx) * rate
    w_yy = state.w_yy + (np.outer(y, y) - gain[:, None] * state.w_yy) * rate
    np.fill_diagonal(w_yy, 0.0)
    if not (np.all(np.isfinite(w_yx)) and np.all(np.isfinite(w_yy))):
        raise NumericalFailureError(f"weights became non-finite at t={state.t}")
    return NetworkState(w_yx, w_yy, mu, state.t + 1)


class HebbianNetwork:
    """
    A network bound to its configuration and mutable state.

    Parameters
    ----------
    cfg : NetworkConfig
        Network configuration.
    state : NetworkState | None, optional
        Starting state, by default `init_state(cfg)`.

    """

    def __init__(self, cfg: NetworkConfig, state: NetworkState | None = None) -> None:
        self.cfg = cfg
        self.state = init_state(cfg) if state is None else state
        self.nonconverged = 0

    def __repr__(self) -> str:
        return (
            f"simmatch.HebbianNetwork(kind={self.cfg.kind}, alpha={self.cfg.alpha!r}, "
            f"t={self.state.t})"
        )

    def step(self, x: np.ndarray, /) -> StepResult:
        """Compute the output for x, then learn from it."""
        result = neural_dynamics(self.state, x, self.cfg)
        if not result.converged:
            self.nonconverged += 1
        self.state = update_weights(self.state, x, result.y, self.cfg)
        return result

    def save(self, path: str | Path, /) -> None:
        """Save the state. See `save_state()` for more details."""
        save_state(self.state, path)

    @classmethod
    def load(cls, cfg: NetworkConfig, path: str | Path, /) -> Self:
        """Restore a network from a checkpoint."""
        return cls(cfg, load_state(path))


def run_stream(
    cfg: NetworkConfig,
    stream: Iterable[Sample] | np.ndarray,
    /,
    window: int = 0,
    snapshot_every: int = 100,
    reference: "Reference | None" = None,
    rank_tol: float = 1e-3,
    input_eigs: int = 4,
    keep_outputs: bool = False,
    state: NetworkState | None = None,
) -> MetricsLog:
    """
    Feed a stream through a network, alternating neural dynamics and
    weight updates, and record metric snapshots.

    Parameters
    ----------
    cfg : NetworkConfig
        Network configuration.
    stream : Iterable[Sample] | np.ndarray
        Samples in order, or a T×n array of inputs.
    window : int, optional
        Length T0 of the sliding window for spectra, by default 0
        (cumulative).
    snapshot_every : int, optional
        Record metrics every this many samples, by default 100. The last
        sample is always recorded.
    reference : Reference | None, optional
        Offline optimum and ground truth for the error metrics, by
        default None (errors are not computed).
    rank_tol : float, optional
        Output eigenvalues above this count towards the learned rank, by
        default 1e-3.
    input_eigs : int, optional
        Number of leading input eigenvalues to record, by default 4.
    keep_outputs : bool, optional
        Whether to keep every output vector in the log, by default False.
    state : NetworkState | None, optional
        Starting state, by default `init_state(cfg)`.

    Returns
    -------
    MetricsLog
        The snapshots (and outputs, if requested).

    Raises
    ------
    StreamError
        Raised on a numerical failure, carrying the offending iteration
        and the log recorded so far.

    """
    net = HebbianNetwork(cfg, state)
    recorder = MetricsRecorder(
        cfg.n,
        cfg.k,
        window=window,
        reference=reference,
        rank_tol=rank_tol,
        input_eigs=input_eigs,
        keep_outputs=keep_outputs,
    )
    last_t = None
    for item in stream:
        t, x = (item.t, item.x) if isinstance(item, Sample) else (net.state.t, item)
        try:
            result = net.step(x)
            recorder.observe(t, x, result.y)
            last_t = t
            if (t + 1) % snapshot_every == 0:
                recorder.snapshot(t, net.state)
        except (NumericalFailureError, InvariantViolationError) as e:
            raise StreamError(t, recorder.log, str(e)) from e
    if last_t is not None and (not recorder.log.records or recorder.log.t[-1] != last_t):
        try:
            recorder.snapshot(last_t, net.state)
        except (NumericalFailureError, InvariantViolationError) as e:
            raise StreamError(last_t, recorder.log, str(e)) from e
    if net.nonconverged:
        logger.warning(
            "%s network: dynamics did not converge on %d of %d samples",
            cfg.kind,
            net.nonconverged,
            net.state.t,
        )
    recorder.log.nonconverged = net.nonconverged
    recorder.log.final_state = net.state
    return recorder.log


def save_state(state: NetworkState, path: str | Path, /) -> None:
    """
    Write a versioned `.npz` checkpoint of (w_yx, w_yy, mu, t). Arrays
    are stored in binary, so loading gives back the exact state.

    """
    with open(path, "wb") as f:
        np.savez(
            f,
            version=np.array(CHECKPOINT_VERSION),
            w_yx=state.w_yx,
            w_yy=state.w_yy,
            mu=state.mu,
            t=np.array(state.t),
        )


def load_state(path: str | Path, /) -> NetworkState:
    """
    Read a checkpoint written by `save_state()`.

    Raises
    ------
    ValueError
        Raised if the checkpoint version is not supported.

    """
    with np.load(path) as data:
        if (version := int(data["version"])) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {version}")
        return NetworkState(
            data["w_yx"].copy(), data["w_yy"].copy(), data["mu"].copy(), int(data["t"])
        )


def effective_timescale(beta: float, /) -> float:
    """Forgetting time scale -1/ln β."""
    return math.inf if beta >= 1 else -1.0 / math.log(beta)


def beta_for_timescale(timescale: float, /) -> float:
    """Discount factor β = exp(-1/timescale)."""
    return 1.0 if math.isinf(timescale) else math.exp(-1.0 / timescale)


class StreamError(RuntimeError):
    """Raised when a stream run fails; carries the iteration and the partial log."""

    def __init__(self, t: int, log: MetricsLog, message: str) -> None:
        super().__init__(f"iteration {t}: {message}")
        self.t = t
        self.log = log


def with_alpha(cfg: NetworkConfig, alpha: float, /) -> NetworkConfig:
    """Copy of `cfg` with another regularization coefficient."""
    return replace(cfg, alpha=alpha)
