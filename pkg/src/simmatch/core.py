"""
Contains the experiment runners: run_experiment(), run_phase(), etc.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import loggings
import numpy as np

from ._version import __version__
from .analysis import (
    AlphaRange,
    FractionPoint,
    fraction_curve,
    phase_diagram,
    sweep_alphas,
    two_level_grid,
    universal_alphas,
    write_fraction_csv,
    write_phase_csv,
)
from .config import ExperimentConfig
from .datagen import ColoredStream, Sample, dump_stream
from .metrics import MetricsLog, Reference, format_float
from .offline import OfflineProblem, OfflineSolution, RegularizerKind, solve
from .online import NetworkConfig, StreamError, run_stream
from .spectral import SymmetricSpectrum

__all__ = [
    "NetworkRun",
    "ExperimentResult",
    "PhaseResult",
    "run_offline",
    "materialize",
    "run_network",
    "run_experiment",
    "run_phase",
    "export_stream",
    "ExperimentError",
]

logger = loggings.get_logger(__name__)


def run_offline(
    spectrum: Sequence[float],
    k: int,
    alpha: float,
    kind: RegularizerKind,
    /,
    T: int = 1,
) -> OfflineSolution:
    """
    Solve an offline problem given by its input spectrum.

    Parameters
    ----------
    spectrum : Sequence[float]
        Input eigenvalues, in any order.
    k : int
        Output dimensionality.
    alpha : float
        Regularization coefficient.
    kind : RegularizerKind
        Regularizer, or one of its names.
    T : int, optional
        Number of samples, by default 1.

    Returns
    -------
    OfflineSolution
        The optimal output spectrum and its rank.

    """
    return solve(OfflineProblem(np.asarray(spectrum, dtype=float), k, alpha, kind, T))


@dataclass
class NetworkRun:
    """One network of an experiment and what it produced."""

    kind: RegularizerKind
    config: NetworkConfig
    alpha_note: str
    log: MetricsLog
    error: StreamError | None = None
    path: Path | None = None

    @property
    def failed(self) -> bool:
        """Whether the run stopped on a numerical failure."""
        return self.error is not None


@dataclass
class ExperimentResult:
    """All networks of one experiment, fed the same recorded stream."""

    config: ExperimentConfig
    truth: SymmetricSpectrum
    runs: dict[RegularizerKind, NetworkRun] = field(default_factory=dict)
    figures: list[Path] = field(default_factory=list)

    def __getitem__(self, kind: RegularizerKind | str) -> NetworkRun:
        return self.runs[RegularizerKind.parse(kind)]


@dataclass
class PhaseResult:
    """Fraction curves, phase diagrams and universal α values per regularizer."""

    curves: dict[RegularizerKind, list[FractionPoint]] = field(default_factory=dict)
    diagrams: dict[RegularizerKind, list[tuple[float, AlphaRange]]] = field(
        default_factory=dict
    )
    universal: dict[RegularizerKind, list[float]] = field(default_factory=dict)
    paths: list[Path] = field(default_factory=list)


def materialize(cfg: ExperimentConfig, /) -> tuple[ColoredStream, list[Sample]]:
    """Realize the stream of a config and draw all of its samples."""
    stream = ColoredStream(cfg.stream.schedule())
    samples = [stream.next_sample(t) for t in range(cfg.stream.iterations)]
    return stream, samples


def run_network(
    net_cfg: NetworkConfig,
    samples: Iterable[Sample] | np.ndarray,
    cfg: ExperimentConfig,
    /,
    reference: Reference | None = None,
) -> tuple[MetricsLog, StreamError | None]:
    """
    Run one network with the metric settings of `cfg`. A numerical
    failure is returned together with the partial log instead of raised.

    """
    m = cfg.metrics
    logger.info(
        "%s network: alpha=%.6g, beta=%.6g, starting", net_cfg.kind, net_cfg.alpha, net_cfg.beta
    )
    try:
        log = run_stream(
            net_cfg,
            samples,
            window=m.window,
            snapshot_every=m.snapshot_every,
            reference=reference,
            rank_tol=m.rank_tol,
            input_eigs=m.input_eigs,
        )
    except StreamError as e:
        logger.error("%s network failed: %s", net_cfg.kind, e)
        return e.log, e
    done = log.records[-1].t + 1 if log.records else 0
    logger.info("%s network: finished after %d samples", net_cfg.kind, done)
    return log, None


def run_experiment(
    cfg: ExperimentConfig,
    /,
    write: bool = True,
    plot: bool = False,
    max_workers: int | None = None,
) -> ExperimentResult:
    """
    Run every network of a config on one recorded stream.

    The networks run concurrently on separate threads; each has its own
    state and its own csv file `<output_dir>/<scenario>_<kind>.csv`.

    Parameters
    ----------
    cfg : ExperimentConfig
        What to run.
    write : bool, optional
        Whether to write the csv files, by default True.
    plot : bool, optional
        Whether to also write svg figures, by default False.
    max_workers : int | None, optional
        Thread count, by default one per network.

    Returns
    -------
    ExperimentResult
        Logs of all networks.

    Raises
    ------
    ExperimentError
        Raised after all csv files (partial ones included) are written if
        any network failed.

    """
    stream, samples = materialize(cfg)
    truth = stream.spectrum
    result = ExperimentResult(cfg, truth)
    jobs = {}
    for kind in cfg.kinds():
        alpha, note = cfg.resolve_alpha(kind, truth.eigenvalues)
        net_cfg = cfg.networks[str(kind)].network_config(kind, cfg.stream.dim, alpha)
        reference = Reference.for_stream(stream, kind, alpha, net_cfg.k)
        jobs[kind] = (net_cfg, note, reference)

    with ThreadPoolExecutor(max_workers=max_workers or max(len(jobs), 1)) as pool:
        futures = {
            kind: pool.submit(run_network, net_cfg, samples, cfg, reference=ref)
            for kind, (net_cfg, _, ref) in jobs.items()
        }
        for kind, fut in futures.items():
            log, err = fut.result()
            net_cfg, note, _ = jobs[kind]
            result.runs[kind] = NetworkRun(kind, net_cfg, note, log, err)

    if write:
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for kind, run in result.runs.items():
            run.path = out_dir / f"{cfg.scenario}_{kind}.csv"
            run.log.to_csv(run.path, header=_provenance(cfg, run))
        if plot:
            from . import plotting

            result.figures = plotting.plot_experiment(result, out_dir)

    if failed := [r for r in result.runs.values() if r.failed]:
        first = failed[0]
        raise ExperimentError(first.kind, first.error.t, result)
    return result


def run_phase(
    kinds: Iterable[RegularizerKind] = tuple(RegularizerKind),
    /,
    step: float = 0.01,
    multiplicities: tuple[int, int] = (1, 1),
    ratios: Sequence[float] | None = None,
    out_dir: str | Path | None = None,
    plot: bool = False,
) -> PhaseResult:
    """
    Sweep α over the (a, b) grid for each regularizer.

    Parameters
    ----------
    kinds : Iterable[RegularizerKind], optional
        Regularizers, by default all three.
    step : float, optional
        Grid step, by default 0.01 (5050 pairs).
    multiplicities : tuple[int, int], optional
        (n1, n2), by default (1, 1).
    ratios : Sequence[float] | None, optional
        Noise ratios b/a of the phase diagram, by default 0.01..0.99.
    out_dir : str | Path | None, optional
        Where to write `fractions.csv` and `phase.csv` (and svg figures),
        by default None (nothing is written).
    plot : bool, optional
        Whether to also write svg figures, by default False.

    Returns
    -------
    PhaseResult
        Curves, diagrams and universal α values.

    """
    kinds = [RegularizerKind.parse(k) for k in kinds]
    grid = two_level_grid(step)
    if ratios is None:
        ratios = np.arange(1, 100) / 100

    def sweep(kind: RegularizerKind) -> list[FractionPoint]:
        alphas = sweep_alphas(kind, grid, multiplicities)
        logger.info("%s: sweeping %d alpha values over %d pairs", kind, len(alphas), len(grid))
        return fraction_curve(kind, grid, multiplicities, alphas)

    result = PhaseResult()
    with ThreadPoolExecutor(max_workers=max(len(kinds), 1)) as pool:
        curves = dict(zip(kinds, pool.map(sweep, kinds)))
    for kind in kinds:
        result.curves[kind] = curves[kind]
        result.universal[kind] = universal_alphas(curves[kind])
        result.diagrams[kind] = phase_diagram(kind, ratios, multiplicities)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_fraction_csv(out_dir / "fractions.csv", result.curves)
        write_phase_csv(out_dir / "phase.csv", result.diagrams)
        result.paths += [out_dir / "fractions.csv", out_dir / "phase.csv"]
        if plot:
            from . import plotting

            result.paths += plotting.plot_phase(result, out_dir)
    return result


def export_stream(cfg: ExperimentConfig, path: str | Path, /, count: int | None = None) -> int:
    """Write the first `count` samples (all by default) of a config's stream to csv."""
    stream = ColoredStream(cfg.stream.schedule())
    count = cfg.stream.iterations if count is None else count
    return dump_stream((stream.next_sample(t) for t in range(count)), path)


def _provenance(cfg: ExperimentConfig, run: NetworkRun) -> dict[str, Any]:
    header = {
        "simmatch": __version__,
        "scenario": cfg.scenario,
        "kind": str(run.kind),
        "alpha": format_float(run.config.alpha),
        "alpha_source": run.alpha_note,
        "threshold": format_float(cfg.threshold),
        "seed": cfg.stream.seed,
        "iterations": cfg.stream.iterations,
        "k": run.config.k,
        "eta": format_float(run.config.eta),
        "beta": format_float(run.config.beta),
        "window": cfg.metrics.window,
        "nonconverged": run.log.nonconverged,
    }
    if run.error is not None:
        header["failed_at"] = run.error.t
    return header


class ExperimentError(RuntimeError):
    """Raised when a network of an experiment fails; carries the partial result."""

    def __init__(self, kind: RegularizerKind, t: int, result: ExperimentResult) -> None:
        super().__init__(f"{kind} network failed at iteration {t}")
        self.kind = kind
        self.t = t
        self.result = result
