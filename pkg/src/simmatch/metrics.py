"""
Contains the evaluation metrics: eigenvalue_error(), subspace_error(), etc.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

CSV schema of `MetricsLog.to_csv()`: optional `# key: value` provenance
lines, then a header `t, y_1..y_k, x_1..x_m, eigenvalue_error,
subspace_error, rank, partial` and one row per snapshot. Floats carry 12
significant digits; errors that were not computed are left empty.

"""

import bisect
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterator, Self

import loggings
import numpy as np

from .offline import OfflineProblem, RegularizerKind, output_eigenvalues
from .spectral import SymMatrix, sym_eig

if TYPE_CHECKING:
    from .datagen import ColoredStream
    from .online import NetworkState

__all__ = [
    "WindowedSpectrum",
    "SlidingGram",
    "Reference",
    "MetricsRecord",
    "MetricsLog",
    "MetricsRecorder",
    "eigenvalue_error",
    "subspace_error",
    "windowed_spectrum",
    "learned_basis",
    "format_float",
    "DimensionMismatchError",
]

logger = loggings.get_logger(__name__)


def format_float(value: float, /) -> str:
    """Format a float with 12 significant digits."""
    return format(float(value), ".12g")


def eigenvalue_error(output_spectrum: np.ndarray, optimal_spectrum: np.ndarray) -> float:
    """
    Sum of squared differences between two spectra.

    Both are sorted descending and zero-padded to a common length first.

    Parameters
    ----------
    output_spectrum : np.ndarray
        Eigenvalues of the output similarity matrix.
    optimal_spectrum : np.ndarray
        Eigenvalues of the offline optimum.

    Returns
    -------
    float
        Σ_i (λ_i - λ*_i)^2.

    """
    a = np.sort(np.asarray(output_spectrum, dtype=float).ravel())[::-1]
    b = np.sort(np.asarray(optimal_spectrum, dtype=float).ravel())[::-1]
    size = max(len(a), len(b))
    a = np.pad(a, (0, size - len(a)))
    b = np.pad(b, (0, size - len(b)))
    return float(np.sum((a - b) ** 2))


def subspace_error(learned_basis: np.ndarray, true_basis: np.ndarray) -> float:
    """
    Squared Frobenius distance between the orthogonal projectors onto two
    subspaces, ||B_1 B_1^T - B_2 B_2^T||_F^2.

    Parameters
    ----------
    learned_basis : np.ndarray
        n×r column-orthonormal basis.
    true_basis : np.ndarray
        n×r column-orthonormal basis.

    Returns
    -------
    float
        A value in [0, 2r].

    Raises
    ------
    DimensionMismatchError
        Raised if the ambient dimensions or the column counts differ.

    """
    b1 = np.atleast_2d(np.asarray(learned_basis, dtype=float))
    b2 = np.atleast_2d(np.asarray(true_basis, dtype=float))
    if b1.shape[0] != b2.shape[0]:
        raise DimensionMismatchError(
            f"ambient dimensions differ: {b1.shape[0]} != {b2.shape[0]}"
        )
    if b1.shape[1] != b2.shape[1]:
        raise DimensionMismatchError(
            f"bases have {b1.shape[1]} and {b2.shape[1]} columns; "
            "truncate both to the smaller rank first"
        )
    diff = b1 @ b1.T - b2 @ b2.T
    return float(np.sum(diff * diff))


@dataclass(frozen=True, eq=False)
class WindowedSpectrum:
    """Eigenvalues of (1/T0) Σ v v^T; `partial` if fewer than T0 vectors were seen."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    count: int
    partial: bool


def windowed_spectrum(vectors: np.ndarray, window: int = 0) -> WindowedSpectrum:
    """
    Spectrum of the second-moment matrix of the last `window` vectors.

    Parameters
    ----------
    vectors : np.ndarray
        T×d array, one vector per row, oldest first.
    window : int, optional
        Window length T0, by default 0 (use every vector).

    Returns
    -------
    WindowedSpectrum
        Descending eigenvalues. With fewer than T0 vectors the average
        runs over the available ones and the result is flagged partial.

    """
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    gram = SlidingGram(v.shape[1], window)
    recent = v if window == 0 else v[-window:]
    for row in recent:
        gram.push(row)
    return gram.spectrum()


class SlidingGram:
    """
    Running second-moment matrix of a vector stream.

    With a window T0 > 0 the last T0 vectors are kept in a ring buffer and
    the matrix is rebuilt from it on request; with T0 = 0 the outer
    products accumulate over the whole stream.

    Parameters
    ----------
    dim : int
        Vector dimension.
    window : int, optional
        Window length T0, by default 0 (cumulative).

    """

    def __init__(self, dim: int, window: int = 0) -> None:
        if window < 0:
            raise ValueError(f"window must be non-negative: {window}")
        self.dim = dim
        self.window = window
        self.seen = 0
        if window:
            self._buffer = np.zeros((window, dim))
        else:
            self._sum = np.zeros((dim, dim))

    def __repr__(self) -> str:
        return f"simmatch.SlidingGram(dim={self.dim}, window={self.window})"

    def __len__(self) -> int:
        return min(self.seen, self.window) if self.window else self.seen

    @property
    def full(self) -> bool:
        """Whether a whole window has been seen (always true when cumulative)."""
        return self.window == 0 or self.seen >= self.window

    def push(self, v: np.ndarray, /) -> None:
        """Add one vector."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(f"expected length {self.dim}, got {v.shape}")
        if self.window:
            self._buffer[self.seen % self.window] = v
        else:
            self._sum += np.outer(v, v)
        self.seen += 1

    def matrix(self) -> np.ndarray:
        """The averaged second-moment matrix (zero before any push)."""
        count = len(self)
        if count == 0:
            return np.zeros((self.dim, self.dim))
        if self.window:
            rows = self._buffer[:count]
            return rows.T @ rows / count
        return self._sum / count

    def spectrum(self) -> WindowedSpectrum:
        """Eigendecomposition of `matrix()`."""
        spec = sym_eig(SymMatrix(self.matrix()))
        return WindowedSpectrum(
            np.maximum(spec.eigenvalues, 0.0),
            spec.eigenvectors,
            len(self),
            not self.full,
        )


def learned_basis(
    state: "NetworkState", output_vectors: np.ndarray, rank: int, /
) -> np.ndarray:
    """
    Orthonormal basis of the input subspace a network transmits.

    The fixed-point map x -> y is F = (I + W^YY)^-1 W^YX. The `rank`
    leading output directions U_r (eigenvectors of the windowed output
    covariance) are pulled back through F, and F^T U_r is orthonormalized.

    Parameters
    ----------
    state : NetworkState
        Current weights.
    output_vectors : np.ndarray
        k×k eigenvectors of the output covariance, leading first.
    rank : int
        Number of directions to keep.

    Returns
    -------
    np.ndarray
        n×rank column-orthonormal basis.

    """
    f = state.filter()
    if rank == 0:
        return np.zeros((f.shape[1], 0))
    q, _ = np.linalg.qr(f.T @ output_vectors[:, :rank])
    return q


class Reference:
    """
    Ground truth for the error metrics of one network on one stream: the
    offline optimum for each segment and the input eigenbasis.

    Parameters
    ----------
    starts : list[int]
        Start iteration of each segment.
    optima : list[np.ndarray]
        Optimal output eigenvalues (length k) per segment.
    basis : np.ndarray
        n×n ground-truth eigenvectors, leading first.

    """

    def __init__(
        self, starts: list[int], optima: list[np.ndarray], basis: np.ndarray
    ) -> None:
        self.starts = list(starts)
        self.optima = [np.asarray(o, dtype=float) for o in optima]
        self.basis = np.asarray(basis, dtype=float)

    def __repr__(self) -> str:
        return f"simmatch.Reference(segments={len(self.starts)})"

    @classmethod
    def for_stream(
        cls, stream: "ColoredStream", kind: RegularizerKind, alpha: float, k: int
    ) -> Self:
        """
        Solve the offline problem (per-sample covariance, T = 1) of every
        segment of a stream.

        """
        starts, optima = [], []
        for seg in stream.schedule.segments:
            spec = stream.spectrum_at(seg.start)
            problem = OfflineProblem(spec.eigenvalues, k, alpha, kind)
            starts.append(seg.start)
            optima.append(output_eigenvalues(problem))
        return cls(starts, optima, stream.spectrum.eigenvectors)

    def optimal_at(self, t: int, /) -> np.ndarray:
        """Optimal output eigenvalues of the segment active at iteration t."""
        return self.optima[bisect.bisect_right(self.starts, t) - 1]

    def optimal_rank(self, t: int, /) -> int:
        """Number of strictly positive optimal eigenvalues at iteration t."""
        return int(np.count_nonzero(self.optimal_at(t) > 0))

    def true_basis(self, rank: int, /) -> np.ndarray:
        """The `rank` leading ground-truth eigenvectors."""
        return self.basis[:, :rank]


@dataclass(frozen=True, eq=False)
class MetricsRecord:
    """One snapshot of a run."""

    t: int
    output_spectrum: np.ndarray
    input_spectrum: np.ndarray
    eigenvalue_error: float | None = None
    subspace_error: float | None = None
    rank: int = 0
    partial: bool = False


@dataclass
class MetricsLog:
    """
    Snapshots of a run, in strictly increasing t.

    Parameters
    ----------
    window : int, optional
        Sliding window length T0, by default 0 (cumulative).

    """

    window: int = 0
    records: list[MetricsRecord] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)
    nonconverged: int = 0
    final_state: "NetworkState | None" = None

    def __repr__(self) -> str:
        return f"simmatch.MetricsLog(window={self.window}, records={len(self)})"

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[MetricsRecord]:
        return iter(self.records)

    def append(self, record: MetricsRecord, /) -> None:
        """
        Add a snapshot.

        Raises
        ------
        ValueError
            Raised if t does not increase or an error is negative or not
            finite.

        """
        if self.records and record.t <= self.records[-1].t:
            raise ValueError(
                f"snapshots must increase in t: {record.t} after {self.records[-1].t}"
            )
        for err in (record.eigenvalue_error, record.subspace_error):
            if err is not None and not (np.isfinite(err) and err >= 0):
                raise ValueError(f"invalid error value at t={record.t}: {err}")
        self.records.append(record)

    @property
    def t(self) -> np.ndarray:
        """Snapshot iterations."""
        return np.array([r.t for r in self.records], dtype=int)

    def output_spectra(self) -> np.ndarray:
        """Snapshot output spectra, one row per snapshot."""
        return np.array([r.output_spectrum for r in self.records])

    def input_spectra(self) -> np.ndarray:
        """Snapshot input spectra, one row per snapshot."""
        return np.array([r.input_spectrum for r in self.records])

    def errors(self, name: str, /) -> np.ndarray:
        """The `eigenvalue_error` or `subspace_error` column, NaN where missing."""
        return np.array(
            [np.nan if (v := getattr(r, name)) is None else v for r in self.records]
        )

    def at(self, t: int, /) -> MetricsRecord:
        """The snapshot taken at iteration t."""
        i = bisect.bisect_left(self.t.tolist(), t)
        if i == len(self.records) or self.records[i].t != t:
            raise KeyError(t)
        return self.records[i]

    def to_csv(self, path: str | Path, /, header: dict[str, Any] | None = None) -> None:
        """
        Write the snapshots as csv, preceded by `# key: value` lines for
        each item of `header`.

        """
        k = len(self.records[0].output_spectrum) if self.records else 0
        m = len(self.records[0].input_spectrum) if self.records else 0
        with open(path, "w", newline="", encoding="utf-8") as f:
            for key, value in (header or {}).items():
                f.write(f"# {key}: {value}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(
                ["t"]
                + [f"y_{i + 1}" for i in range(k)]
                + [f"x_{i + 1}" for i in range(m)]
                + ["eigenvalue_error", "subspace_error", "rank", "partial"]
            )
            for r in self.records:
                writer.writerow(
                    [r.t]
                    + [format_float(v) for v in r.output_spectrum]
                    + [format_float(v) for v in r.input_spectrum]
                    + [
                        "" if r.eigenvalue_error is None else format_float(r.eigenvalue_error),
                        "" if r.subspace_error is None else format_float(r.subspace_error),
                        r.rank,
                        int(r.partial),
                    ]
                )
        logger.info("wrote %d snapshots to %s", len(self), path)


class MetricsRecorder:
    """
    Collects inputs and outputs of a run and turns them into snapshots.

    Parameters
    ----------
    n : int
        Input dimension.
    k : int
        Output dimension.
    window : int, optional
        Sliding window length T0, by default 0 (cumulative).
    reference : Reference | None, optional
        Ground truth for the errors, by default None.
    rank_tol : float, optional
        Output eigenvalues above this count towards the learned rank, by
        default 1e-3.
    input_eigs : int, optional
        Number of leading input eigenvalues to record, by default 4.
    keep_outputs : bool, optional
        Whether to keep every output vector, by default False.

    """

    def __init__(
        self,
        n: int,
        k: int,
        window: int = 0,
        reference: Reference | None = None,
        rank_tol: float = 1e-3,
        input_eigs: int = 4,
        keep_outputs: bool = False,
    ) -> None:
        self.inputs = SlidingGram(n, window)
        self.outputs = SlidingGram(k, window)
        self.reference = reference
        self.rank_tol = rank_tol
        self.input_eigs = input_eigs
        self.keep_outputs = keep_outputs
        self.log = MetricsLog(window)

    def observe(self, t: int, x: np.ndarray, y: np.ndarray, /) -> None:
        """Add one (input, output) pair."""
        self.inputs.push(x)
        self.outputs.push(y)
        if self.keep_outputs:
            self.log.outputs.append(np.array(y, dtype=float))

    def snapshot(self, t: int, state: "NetworkState", /) -> MetricsRecord:
        """Compute the spectra and errors at iteration t and log them."""
        out = self.outputs.spectrum()
        inp = self.inputs.spectrum()
        rank = int(np.count_nonzero(out.eigenvalues > self.rank_tol))
        eig_err = sub_err = None
        if self.reference is not None:
            eig_err = eigenvalue_error(out.eigenvalues, self.reference.optimal_at(t))
            optimal_rank = self.reference.optimal_rank(t)
            r = min(rank, optimal_rank)
            if r == 0:
                sub_err = float(optimal_rank)
            else:
                sub_err = subspace_error(
                    learned_basis(state, out.eigenvectors, r),
                    self.reference.true_basis(r),
                )
        record = MetricsRecord(
            t,
            out.eigenvalues,
            inp.eigenvalues[: self.input_eigs],
            eig_err,
            sub_err,
            rank,
            out.partial,
        )
        self.log.append(record)
        return record


class DimensionMismatchError(ValueError):
    """Raised when vectors or bases of incompatible dimensions are combined."""
