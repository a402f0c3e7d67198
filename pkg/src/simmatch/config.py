"""
Contains the experiment config: ExperimentConfig, calibrate_alpha(), etc.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import TYPE_CHECKING, Any, Self

import loggings
import numpy as np

from .datagen import Segment, SpectrumSpec, StreamSchedule
from .offline import RegularizerKind
from .online import NetworkConfig, beta_for_timescale
from .reader import read_document
from .saver import ConfigSaver
from .spectral import soft_threshold

if TYPE_CHECKING:
    from ._typing import ConfigFileFormat, ScenarioName

__all__ = [
    "StreamSection",
    "NetworkSection",
    "MetricsSection",
    "ExperimentConfig",
    "calibrate_alpha",
    "read_config",
    "ConfigKeyError",
    "ConfigValueError",
]

logger = loggings.get_logger(__name__)


def calibrate_alpha(
    kind: RegularizerKind, eigenvalues: np.ndarray, threshold: float, k: int, /
) -> float:
    """
    The α for which the k leading input eigenvalues are shrunk by
    `threshold`.

    * scale-dependent: θ
    * input-output: θ / Σ λ
    * squared-output: θ / Σ_{i<=k} ST(λ_i, θ), so that the implicit
      threshold α Σ d^Y equals θ at the optimum

    Raises
    ------
    ConfigValueError
        Raised if no α reaches the threshold.

    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    match RegularizerKind.parse(kind):
        case RegularizerKind.SCALE_DEPENDENT:
            return float(threshold)
        case RegularizerKind.INPUT_OUTPUT:
            denom = float(lam.sum())
        case RegularizerKind.SQUARED_OUTPUT:
            denom = float(np.sum(soft_threshold(lam[:k], threshold)))
    if denom <= 0:
        raise ConfigValueError(
            f"cannot calibrate {kind}: no eigenvalue exceeds the threshold {threshold}"
        )
    return threshold / denom


@dataclass(frozen=True)
class StreamSection:
    """Input stream of an experiment."""

    dim: int = 64
    head: tuple[float, ...] = (6.0, 5.0, 4.0, 2.0)
    tail_count: int = 60
    tail_range: tuple[float, float] = (0.0, 0.2)
    segments: tuple[tuple[int, float], ...] = ((0, 1.0),)
    seed: int = 0
    iterations: int = 10000

    @classmethod
    def from_dict(cls, data: dict[str, Any], /) -> Self:
        """Parse a mapping; see `ExperimentConfig.from_dict()`."""
        _check_keys(cls, data, "stream")
        kwargs: dict[str, Any] = {}
        for key in ("dim", "tail_count", "seed", "iterations"):
            if key in data:
                kwargs[key] = _int(data[key], f"stream.{key}")
        if "head" in data:
            kwargs["head"] = _floats(data["head"], "stream.head")
        if "tail_range" in data:
            kwargs["tail_range"] = _floats(data["tail_range"], "stream.tail_range", 2)
        if "segments" in data:
            kwargs["segments"] = tuple(
                _segment(s, f"stream.segments[{i}]")
                for i, s in enumerate(_list(data["segments"], "stream.segments"))
            )
        return cls(**kwargs)

    def asdict(self) -> dict[str, Any]:
        """Canonical mapping of the section."""
        return {
            "dim": self.dim,
            "head": list(self.head),
            "tail_count": self.tail_count,
            "tail_range": list(self.tail_range),
            "segments": [{"start": s, "scale": c} for s, c in self.segments],
            "seed": self.seed,
            "iterations": self.iterations,
        }

    def schedule(self) -> StreamSchedule:
        """The stream schedule this section describes."""
        return StreamSchedule(
            self.dim,
            SpectrumSpec(self.head, self.tail_count, self.tail_range),
            tuple(Segment(s, c) for s, c in self.segments),
            self.seed,
        )


@dataclass(frozen=True)
class NetworkSection:
    """One online network of an experiment; a null alpha is calibrated."""

    k: int = 4
    alpha: float | None = None
    eta: float = 0.1
    beta: float = 1.0
    tol: float = 1e-6
    max_iters: int = 500
    init_seed: int = 0

    @classmethod
    def from_dict(cls, data: dict[str, Any], /, where: str = "network") -> Self:
        """Parse a mapping; see `ExperimentConfig.from_dict()`."""
        _check_keys(cls, data, where)
        kwargs: dict[str, Any] = {}
        for key in ("k", "max_iters", "init_seed"):
            if key in data:
                kwargs[key] = _int(data[key], f"{where}.{key}")
        for key in ("eta", "beta", "tol"):
            if key in data:
                kwargs[key] = _float(data[key], f"{where}.{key}")
        if data.get("alpha") is not None:
            kwargs["alpha"] = _float(data["alpha"], f"{where}.alpha")
        return cls(**kwargs)

    def asdict(self) -> dict[str, Any]:
        """Canonical mapping of the section."""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def network_config(self, kind: RegularizerKind, n: int, alpha: float) -> NetworkConfig:
        """The network configuration with a resolved α."""
        return NetworkConfig(
            n=n,
            k=self.k,
            alpha=alpha,
            eta=self.eta,
            beta=self.beta,
            kind=kind,
            dynamics_tol=self.tol,
            dynamics_max_iters=self.max_iters,
            init_seed=self.init_seed,
        )


@dataclass(frozen=True)
class MetricsSection:
    """Metric snapshots of an experiment."""

    window: int = 1000
    snapshot_every: int = 100
    rank_tol: float = 1e-3
    input_eigs: int = 4

    @classmethod
    def from_dict(cls, data: dict[str, Any], /) -> Self:
        """Parse a mapping; see `ExperimentConfig.from_dict()`."""
        _check_keys(cls, data, "metrics")
        kwargs: dict[str, Any] = {}
        for key in ("window", "snapshot_every", "input_eigs"):
            if key in data:
                kwargs[key] = _int(data[key], f"metrics.{key}")
        if "rank_tol" in data:
            kwargs["rank_tol"] = _float(data["rank_tol"], "metrics.rank_tol")
        return cls(**kwargs)

    def asdict(self) -> dict[str, Any]:
        """Canonical mapping of the section."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _default_networks() -> dict[str, NetworkSection]:
    return {str(kind): NetworkSection() for kind in RegularizerKind}


@dataclass(frozen=True)
class ExperimentConfig(ConfigSaver):
    """
    A complete experiment: stream, one network per regularizer, metrics
    and where to write the results.

    Parameters
    ----------
    scenario : str, optional
        Name of the protocol, by default "stationary".
    stream : StreamSection, optional
        Input stream.
    networks : dict[str, NetworkSection], optional
        Networks keyed by regularizer name ("scale", "io", "squared"), by
        default all three with default settings.
    metrics : MetricsSection, optional
        Metric snapshots.
    threshold : float, optional
        Target eigenvalue threshold for calibrated α values, by default 2.
    output_dir : str, optional
        Directory of the csv (and svg) files, by default "out".

    """

    scenario: str = "stationary"
    stream: StreamSection = field(default_factory=StreamSection)
    networks: dict[str, NetworkSection] = field(default_factory=_default_networks)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    threshold: float = 2.0
    output_dir: str = "out"

    def __post_init__(self) -> None:
        for name in self.networks:
            try:
                RegularizerKind.parse(name)
            except ValueError as e:
                raise ConfigKeyError(f"networks.{name}: {e}") from e

    @classmethod
    def from_dict(cls, data: dict[str, Any], /) -> Self:
        """
        Build a config from a mapping.

        Missing keys take their defaults.

        Raises
        ------
        ConfigKeyError
            Raised on unknown keys.
        ConfigValueError
            Raised on values of the wrong type.

        """
        if not isinstance(data, dict):
            raise ConfigValueError("config document must be a mapping")
        _check_keys(cls, data, "config")
        kwargs: dict[str, Any] = {}
        if "scenario" in data:
            kwargs["scenario"] = _str(data["scenario"], "scenario")
        if "output_dir" in data:
            kwargs["output_dir"] = _str(data["output_dir"], "output_dir")
        if "threshold" in data:
            kwargs["threshold"] = _float(data["threshold"], "threshold")
        if "stream" in data:
            kwargs["stream"] = StreamSection.from_dict(_mapping(data["stream"], "stream"))
        if "metrics" in data:
            kwargs["metrics"] = MetricsSection.from_dict(
                _mapping(data["metrics"], "metrics")
            )
        if "networks" in data:
            nets = {}
            for name, sec in _mapping(data["networks"], "networks").items():
                where = f"networks.{name}"
                try:
                    key = str(RegularizerKind.parse(name))
                except ValueError as e:
                    raise ConfigKeyError(f"{where}: {e}") from e
                nets[key] = NetworkSection.from_dict(_mapping(sec or {}, where), where)
            kwargs["networks"] = nets
        return cls(**kwargs)

    def unwrap(self) -> dict[str, Any]:
        return self.asdict()

    def asdict(self) -> dict[str, Any]:
        """
        Canonical mapping of the config; `from_dict(asdict(c)) == c`.

        """
        return {
            "scenario": self.scenario,
            "stream": self.stream.asdict(),
            "networks": {k: v.asdict() for k, v in self.networks.items()},
            "metrics": self.metrics.asdict(),
            "threshold": self.threshold,
            "output_dir": self.output_dir,
        }

    @classmethod
    def read(
        cls,
        path: str | Path,
        fileformat: "ConfigFileFormat | None" = None,
        /,
        encoding: str | None = None,
    ) -> Self:
        """Read a config file. See `read_config()` for more details."""
        return cls.from_dict(read_document(path, fileformat, encoding=encoding))

    @classmethod
    def preset(cls, name: "ScenarioName", /) -> Self:
        """
        Built-in protocols.

        * "stationary": 10^4 samples of one fixed covariance, no
          forgetting.
        * "nonstationary": eigenvalues doubled from iteration 1000 and
          restored at 6000, forgetting time scale 1000, 14000 samples.

        Raises
        ------
        ConfigValueError
            Raised if the preset does not exist.

        """
        match name:
            case "stationary":
                return cls()
            case "nonstationary":
                beta = beta_for_timescale(1000.0)
                return cls(
                    scenario="nonstationary",
                    stream=StreamSection(
                        segments=((0, 1.0), (1000, 2.0), (6000, 1.0)), iterations=14000
                    ),
                    networks={
                        str(kind): NetworkSection(beta=beta) for kind in RegularizerKind
                    },
                )
            case _:
                raise ConfigValueError(f"unknown preset: {name!r}")

    def kinds(self) -> list[RegularizerKind]:
        """Regularizers with a network in this config, in canonical order."""
        return [k for k in RegularizerKind if str(k) in self.networks]

    def resolve_alpha(
        self, kind: RegularizerKind, eigenvalues: np.ndarray, /
    ) -> tuple[float, str]:
        """
        The α of a network and a one-line note on where it comes from.

        """
        sec = self.networks[str(kind)]
        if sec.alpha is not None:
            return sec.alpha, "given"
        alpha = calibrate_alpha(kind, eigenvalues, self.threshold, sec.k)
        match kind:
            case RegularizerKind.SCALE_DEPENDENT:
                note = f"alpha = threshold = {self.threshold:g}"
            case RegularizerKind.INPUT_OUTPUT:
                note = f"alpha = threshold / sum(eigenvalues) = {alpha:.12g}"
            case RegularizerKind.SQUARED_OUTPUT:
                note = (
                    f"alpha = threshold / sum(ST(top {sec.k} eigenvalues, threshold))"
                    f" = {alpha:.12g}"
                )
        logger.debug("%s: %s", kind, note)
        return alpha, note

    def with_overrides(
        self, seed: int | None = None, output_dir: str | None = None
    ) -> Self:
        """Copy with the stream seed and/or output directory replaced."""
        cfg = self
        if seed is not None:
            cfg = replace(cfg, stream=replace(cfg.stream, seed=seed))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        return cfg


def read_config(
    path: str | Path,
    fileformat: "ConfigFileFormat | None" = None,
    /,
    encoding: str | None = None,
) -> ExperimentConfig:
    """
    Read an experiment config file. The format and encoding of the file
    are automatically detected if not specified.

    Parameters
    ----------
    path : str | Path
        File path.
    fileformat : ConfigFileFormat | None, optional
        File format, by default None.
    encoding : str | None, optional
        The name of the encoding used to decode the file, by default None.

    Returns
    -------
    ExperimentConfig
        The parsed config.

    """
    return ExperimentConfig.read(path, fileformat, encoding=encoding)


def _check_keys(cls: type, data: dict[str, Any], where: str) -> None:
    names = {f.name for f in fields(cls)}
    if unknown := sorted(set(map(str, data)) - names):
        raise ConfigKeyError(f"unknown keys in {where}: {', '.join(unknown)}")


def _mapping(value: Any, where: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigValueError(f"{where}: expected a mapping, got {value!r}")
    return value


def _list(value: Any, where: str) -> list[Any]:
    if not isinstance(value, (list, tuple)):
        raise ConfigValueError(f"{where}: expected a list, got {value!r}")
    return list(value)


def _str(value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise ConfigValueError(f"{where}: expected a string, got {value!r}")
    return value


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValueError(f"{where}: expected an integer, got {value!r}")
    return value


def _float(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValueError(f"{where}: expected a number, got {value!r}")
    if math.isnan(value):
        raise ConfigValueError(f"{where}: NaN is not allowed")
    return float(value)


def _floats(value: Any, where: str, length: int | None = None) -> tuple[float, ...]:
    items = _list(value, where)
    if length is not None and len(items) != length:
        raise ConfigValueError(f"{where}: expected {length} numbers, got {len(items)}")
    return tuple(_float(v, f"{where}[{i}]") for i, v in enumerate(items))


def _segment(value: Any, where: str) -> tuple[int, float]:
    if isinstance(value, dict):
        if unknown := sorted(set(value) - {"start", "scale"}):
            raise ConfigKeyError(f"unknown keys in {where}: {', '.join(unknown)}")
        return _int(value.get("start", 0), f"{where}.start"), _float(
            value.get("scale", 1.0), f"{where}.scale"
        )
    items = _list(value, where)
    if len(items) != 2:
        raise ConfigValueError(f"{where}: expected [start, scale], got {value!r}")
    start, scale = items
    return _int(start, f"{where}.start"), _float(scale, f"{where}.scale")


class ConfigKeyError(KeyError):
    """Raised when a config document holds an unknown key."""


class ConfigValueError(ValueError):
    """Raised when a config value has the wrong type or is not allowed."""
