"""
Contains the synthetic input streams: realize_covariance(), ColoredStream, etc.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

import bisect
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import loggings
import numpy as np

from .spectral import (
    SeededRng,
    SymMatrix,
    SymmetricSpectrum,
    make_rng,
    random_orthonormal,
)

__all__ = [
    "SpectrumSpec",
    "Segment",
    "StreamSchedule",
    "Sample",
    "ColoredStream",
    "realize_covariance",
    "next_sample",
    "dump_stream",
    "load_stream",
    "InvalidSpecError",
]

logger = loggings.get_logger(__name__)


@dataclass(frozen=True)
class SpectrumSpec:
    """
    Eigenvalues of a generating covariance: an explicit head plus a tail
    drawn uniformly from `tail_range`.

    Parameters
    ----------
    head : tuple[float, ...]
        Leading eigenvalues, descending.
    tail_count : int, optional
        Number of tail eigenvalues, by default 0.
    tail_range : tuple[float, float], optional
        Interval the tail is drawn from, by default (0.0, 0.0).

    Raises
    ------
    InvalidSpecError
        Raised if the head is not descending or any value is negative.

    """

    head: tuple[float, ...]
    tail_count: int = 0
    tail_range: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        head = tuple(float(x) for x in self.head)
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail_range", tuple(map(float, self.tail_range)))
        low, high = self.tail_range
        if any(x < 0 for x in head) or low < 0:
            raise InvalidSpecError("eigenvalues must be non-negative")
        if any(x < y for x, y in zip(head, head[1:])):
            raise InvalidSpecError(f"head must be descending: {head}")
        if low > high:
            raise InvalidSpecError(f"empty tail range: {self.tail_range}")
        if self.tail_count < 0:
            raise InvalidSpecError(f"negative tail count: {self.tail_count}")

    @property
    def dim(self) -> int:
        """Total number of eigenvalues."""
        return len(self.head) + self.tail_count


@dataclass(frozen=True)
class Segment:
    """A piece of a schedule: from `start` on, eigenvalues are scaled by `scale`."""

    start: int
    scale: float = 1.0


@dataclass(frozen=True)
class StreamSchedule:
    """
    Generative description of a (possibly non-stationary) colored
    Gaussian stream.

    Parameters
    ----------
    dim : int
        Input dimensionality n.
    base : SpectrumSpec
        Spectrum of the base covariance.
    segments : tuple[Segment, ...], optional
        Eigenvalue scales by start iteration, by default a single
        unscaled segment.
    seed : int, optional
        Seed of the realization, by default 0.

    Raises
    ------
    InvalidSpecError
        Raised if the segments are not strictly increasing from 0 or a
        scale is not positive.

    """

    dim: int
    base: SpectrumSpec
    segments: tuple[Segment, ...] = (Segment(0, 1.0),)
    seed: int = 0
    _starts: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        segments = tuple(
            s if isinstance(s, Segment) else Segment(*s) for s in self.segments
        )
        object.__setattr__(self, "segments", segments)
        starts = tuple(s.start for s in segments)
        if not starts or starts[0] != 0:
            raise InvalidSpecError("the first segment must start at iteration 0")
        if any(x >= y for x, y in zip(starts, starts[1:])):
            raise InvalidSpecError(f"segment starts must increase strictly: {starts}")
        if any(s.scale <= 0 for s in segments):
            raise InvalidSpecError("segment scales must be positive")
        object.__setattr__(self, "_starts", starts)

    def scale_at(self, t: int) -> float:
        """Eigenvalue scale of the segment active at iteration t."""
        return self.segments[bisect.bisect_right(self._starts, t) - 1].scale


@dataclass(frozen=True, eq=False)
class Sample:
    """One input vector x_t of a stream."""

    t: int
    x: np.ndarray


def realize_covariance(
    spec: SpectrumSpec, dim: int, rng: SeededRng, /
) -> tuple[SymMatrix, SymmetricSpectrum]:
    """
    Realize a covariance C = Q Λ Q^T with the given spectrum and a random
    orthonormal eigenbasis Q.

    Parameters
    ----------
    spec : SpectrumSpec
        Head and tail description of Λ.
    dim : int
        Expected dimension; must equal `len(head) + tail_count`.
    rng : SeededRng
        Generator for the tail values and the eigenbasis.

    Returns
    -------
    tuple[SymMatrix, SymmetricSpectrum]
        The covariance and its ground-truth spectrum.

    Raises
    ------
    InvalidSpecError
        Raised if the spectrum does not have `dim` values.

    """
    if spec.dim != dim:
        raise InvalidSpecError(
            f"spectrum has {spec.dim} eigenvalues but the stream has dim {dim}"
        )
    low, high = spec.tail_range
    tail = np.sort(rng.uniform(low, high, size=spec.tail_count))[::-1]
    values = np.concatenate([np.asarray(spec.head, dtype=float), tail])
    basis = random_orthonormal(dim, rng)
    order = np.argsort(-values, kind="stable")
    truth = SymmetricSpectrum(values[order], basis[:, order])
    return SymMatrix(truth.reconstruct()), truth


class ColoredStream:
    """
    A sequential realization of a StreamSchedule.

    The covariance and the samples use two independent children of the
    schedule's seed, so the draws only depend on the seed and on how
    many samples have been consumed.

    Parameters
    ----------
    schedule : StreamSchedule
        What to generate.

    """

    def __init__(self, schedule: StreamSchedule) -> None:
        self.schedule = schedule
        cov_seed, sample_seed = np.random.SeedSequence(schedule.seed).spawn(2)
        self.covariance, self.spectrum = realize_covariance(
            schedule.base, schedule.dim, make_rng(cov_seed)
        )
        self._root = self.spectrum.eigenvectors * np.sqrt(self.spectrum.eigenvalues)
        self._rng = make_rng(sample_seed)
        self.consumed = 0

    def __repr__(self) -> str:
        return f"simmatch.ColoredStream(dim={self.dim}, consumed={self.consumed})"

    def __iter__(self) -> Iterator[Sample]:
        t = self.consumed
        while True:
            yield self.next_sample(t)
            t += 1

    @property
    def dim(self) -> int:
        """Input dimensionality."""
        return self.schedule.dim

    def spectrum_at(self, t: int) -> SymmetricSpectrum:
        """Ground-truth spectrum of the covariance active at iteration t."""
        return self.spectrum.scaled(self.schedule.scale_at(t))

    def next_sample(self, t: int) -> Sample:
        """Draw x_t ~ N(0, s(t) C) from the next values of the generator."""
        if t < 0:
            raise ValueError(f"iteration must be non-negative: {t}")
        z = self._rng.standard_normal(self.dim)
        self.consumed += 1
        x = np.sqrt(self.schedule.scale_at(t)) * (self._root @ z)
        return Sample(t, x)

    def take(self, count: int, /) -> np.ndarray:
        """Draw the next `count` samples as a count×n array."""
        start = self.consumed
        out = np.empty((count, self.dim))
        for i in range(count):
            out[i] = self.next_sample(start + i).x
        return out


def next_sample(stream: ColoredStream, t: int, /) -> Sample:
    """Draw the sample for iteration t from a stream realization."""
    return stream.next_sample(t)


def dump_stream(samples: Iterable[Sample], path: str | Path, /) -> int:
    """
    Write samples to a csv file, one row `t, x_1, ..., x_n` per sample.
    Values keep 17 significant digits so a replay is exact.

    Returns
    -------
    int
        Number of rows written.

    """
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        for s in samples:
            if rows == 0:
                writer.writerow(["t"] + [f"x_{i + 1}" for i in range(len(s.x))])
            writer.writerow([s.t] + [format(v, ".17g") for v in s.x])
            rows += 1
    logger.info("wrote %d samples to %s", rows, path)
    return rows


def load_stream(path: str | Path, /) -> list[Sample]:
    """Read samples written by `dump_stream()`."""
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            return []
        if header[0] != "t":
            raise InvalidSpecError(f"not a stream file: '{path}'")
        return [
            Sample(int(row[0]), np.array([float(v) for v in row[1:]]))
            for row in reader
        ]


class InvalidSpecError(ValueError):
    """Raised when a stream or spectrum description is inconsistent."""
