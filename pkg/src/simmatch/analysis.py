"""
Contains the two-level spectrum analysis: alpha_range(), fraction_curve(), etc.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

CSV schemas:

* fraction curves: `kind, alpha, signal_fraction, noise_transmitted_fraction,
  noise_rejected_fraction`
* phase diagram: `kind, ratio, alpha_low, alpha_high` (unbounded edges are
  written as `inf`)

"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import loggings
import numpy as np

from .metrics import format_float
from .offline import RegularizerKind, batch_output_eigenvalues

__all__ = [
    "DegenerateCase",
    "AlphaRange",
    "FractionPoint",
    "alpha_range",
    "top_output_eigenvalue",
    "transmission",
    "two_level_grid",
    "fraction_curve",
    "phase_diagram",
    "universal_alphas",
    "sweep_alphas",
    "write_fraction_csv",
    "write_phase_csv",
    "DomainError",
]

logger = loggings.get_logger(__name__)


@dataclass(frozen=True)
class DegenerateCase:
    """
    A two-level spectrum: n1 signal eigenvalues a and n2 noise
    eigenvalues b.

    Raises
    ------
    DomainError
        Raised unless a > b >= 0 and n1, n2 >= 1.

    """

    a: float
    b: float
    n1: int = 1
    n2: int = 1

    def __post_init__(self) -> None:
        if not self.a > self.b >= 0:
            raise DomainError(f"expected a > b >= 0, got a={self.a}, b={self.b}")
        if self.n1 < 1 or self.n2 < 1:
            raise DomainError(f"multiplicities must be positive: {self.n1}, {self.n2}")

    @property
    def total(self) -> float:
        """Eigenvalue sum n1 a + n2 b."""
        return self.n1 * self.a + self.n2 * self.b

    def spectrum(self) -> np.ndarray:
        """The n1 + n2 eigenvalues, descending."""
        return np.array([self.a] * self.n1 + [self.b] * self.n2, dtype=float)


@dataclass(frozen=True)
class AlphaRange:
    """
    Interval of α that transmits all signal and rejects all noise.

    The lower edge is always closed. The upper edge is closed only if
    `closed_high` is True; an infinite `high` means unbounded.

    """

    low: float
    high: float = math.inf
    closed_high: bool = False

    def __post_init__(self) -> None:
        if self.low < 0 or self.low > self.high:
            raise DomainError(f"invalid range: [{self.low}, {self.high}]")

    def __contains__(self, alpha: float) -> bool:
        if alpha < self.low:
            return False
        return alpha <= self.high if self.closed_high else alpha < self.high

    def __str__(self) -> str:
        right = "]" if self.closed_high else ")"
        return f"[{self.low:.12g}, {self.high:.12g}{right}"

    @property
    def width(self) -> float:
        """Length of the interval (inf if unbounded)."""
        return self.high - self.low

    @property
    def bounded(self) -> bool:
        """Whether the upper edge is finite."""
        return math.isfinite(self.high)


@dataclass(frozen=True)
class FractionPoint:
    """Fractions of grid pairs for one α."""

    alpha: float
    signal: float
    noise_transmitted: float
    noise_rejected: float


def alpha_range(case: DegenerateCase, kind: RegularizerKind, /) -> AlphaRange:
    """
    The α values for which exactly the n1 signal modes are transmitted.

    * scale-dependent: [b, a)
    * input-output: [b / (n1 a + n2 b), a / (n1 a + n2 b))
    * squared-output: [b / ((a - b) n1), inf)

    Modes whose output eigenvalue is exactly 0 count as rejected, hence
    the open upper edges.

    """
    match RegularizerKind.parse(kind):
        case RegularizerKind.SCALE_DEPENDENT:
            return AlphaRange(case.b, case.a)
        case RegularizerKind.INPUT_OUTPUT:
            return AlphaRange(case.b / case.total, case.a / case.total)
        case RegularizerKind.SQUARED_OUTPUT:
            return AlphaRange(case.b / ((case.a - case.b) * case.n1))


def top_output_eigenvalue(
    case: DegenerateCase, kind: RegularizerKind, alpha: float, /
) -> float:
    """
    Top output eigenvalue for an α inside `alpha_range()`.

    Raises
    ------
    DomainError
        Raised if alpha lies outside the range.

    """
    kind = RegularizerKind.parse(kind)
    if alpha not in (rng := alpha_range(case, kind)):
        raise DomainError(f"alpha={alpha} lies outside {rng} for {kind}")
    match kind:
        case RegularizerKind.SCALE_DEPENDENT:
            return case.a - alpha
        case RegularizerKind.INPUT_OUTPUT:
            return case.a - alpha * case.total
        case RegularizerKind.SQUARED_OUTPUT:
            return case.a / (1 + alpha * case.n1)


def transmission(
    case: DegenerateCase, kind: RegularizerKind, alpha: float, /
) -> tuple[bool, bool, bool]:
    """
    Decide with the offline solver which modes pass.

    Returns
    -------
    tuple[bool, bool, bool]
        Whether all signal is transmitted, all noise is transmitted and
        all noise is rejected.

    """
    out = batch_output_eigenvalues(kind, case.spectrum()[None, :], alpha)[0]
    signal, noise = out[: case.n1], out[case.n1 :]
    return bool(np.all(signal > 0)), bool(np.all(noise > 0)), bool(np.all(noise <= 0))


def two_level_grid(step: float = 0.01) -> np.ndarray:
    """
    All pairs (a, b) with a >= b on the grid step, 2 step, ..., 1.

    The default step gives 5050 pairs. Values are computed as i/N, so the
    grid is exact up to one rounding per value.

    Returns
    -------
    np.ndarray
        m×2 array of (a, b) rows, ordered by a, then b.

    Raises
    ------
    DomainError
        Raised if 1/step is not a positive integer.

    """
    count = round(1 / step)
    if count < 1 or not math.isclose(count * step, 1.0, rel_tol=1e-9):
        raise DomainError(f"1/step must be a positive integer: {step}")
    values = np.arange(1, count + 1) / count
    ia, ib = np.tril_indices(count)
    return np.column_stack([values[ia], values[ib]])


def fraction_curve(
    kind: RegularizerKind,
    grid: np.ndarray,
    multiplicities: tuple[int, int] = (1, 1),
    alphas: Iterable[float] = (),
) -> list[FractionPoint]:
    """
    Fractions of grid pairs for which all signal is transmitted, all noise
    is transmitted and all noise is rejected, per α.

    Pairs with a == b are no two-level spectra and are left out of the
    denominators.

    Parameters
    ----------
    kind : RegularizerKind
        Regularizer.
    grid : np.ndarray
        m×2 array of (a, b) pairs, see `two_level_grid()`.
    multiplicities : tuple[int, int], optional
        (n1, n2), by default (1, 1).
    alphas : Iterable[float], optional
        Regularization coefficients, positive and ascending.

    Returns
    -------
    list[FractionPoint]
        One point per α.

    Raises
    ------
    DomainError
        Raised if the grid has no pair with a > b.

    """
    grid = np.asarray(grid, dtype=float)
    pairs = grid[grid[:, 0] > grid[:, 1]]
    if len(pairs) == 0:
        raise DomainError("grid has no pair with a > b")
    n1, n2 = multiplicities
    top = np.column_stack([np.repeat(pairs[:, :1], n1, 1), np.repeat(pairs[:, 1:], n2, 1)])
    points = []
    for alpha in alphas:
        out = batch_output_eigenvalues(kind, top, alpha)
        signal, noise = out[:, :n1], out[:, n1:]
        points.append(
            FractionPoint(
                float(alpha),
                float(np.mean(np.all(signal > 0, axis=1))),
                float(np.mean(np.all(noise > 0, axis=1))),
                float(np.mean(np.all(noise <= 0, axis=1))),
            )
        )
    return points


def phase_diagram(
    kind: RegularizerKind,
    noise_ratios: Iterable[float],
    multiplicities: tuple[int, int] = (1, 1),
) -> list[tuple[float, AlphaRange]]:
    """
    The successful α interval for each noise ratio b/a, with a = 1.

    Raises
    ------
    DomainError
        Raised if a ratio lies outside (0, 1).

    """
    n1, n2 = multiplicities
    out = []
    for ratio in noise_ratios:
        if not 0 < ratio < 1:
            raise DomainError(f"noise ratio must lie in (0, 1): {ratio}")
        out.append((float(ratio), alpha_range(DegenerateCase(1.0, ratio, n1, n2), kind)))
    return out


def universal_alphas(points: Iterable[FractionPoint]) -> list[float]:
    """The α values that transmit all signal and reject all noise on every pair."""
    return [p.alpha for p in points if p.signal == 1.0 and p.noise_rejected == 1.0]


def sweep_alphas(
    kind: RegularizerKind,
    grid: np.ndarray,
    multiplicities: tuple[int, int] = (1, 1),
    low: float = 1e-3,
    high: float = 1e3,
    per_decade: int = 20,
) -> np.ndarray:
    """
    The α values to sweep: a log grid over [low, high], the range
    endpoints of every pair, and a point inside the intersection of all
    ranges when it is non-empty.

    Returns
    -------
    np.ndarray
        Sorted unique positive values.

    """
    decades = math.log10(high / low)
    candidates = [np.logspace(math.log10(low), math.log10(high), round(decades * per_decade) + 1)]
    n1, n2 = multiplicities
    ranges = [
        alpha_range(DegenerateCase(a, b, n1, n2), kind)
        for a, b in np.asarray(grid, dtype=float)
        if a > b
    ]
    if ranges:
        lows = np.array([r.low for r in ranges])
        highs = np.array([r.high for r in ranges])
        candidates.append(lows)
        candidates.append(highs[np.isfinite(highs)])
        lo, hi = lows.max(), highs.min()
        if lo < hi:
            inner = (lo + hi) / 2 if math.isfinite(hi) else 2 * lo
            candidates.append(np.array([inner]))
            logger.debug("%s: common alpha range [%.6g, %.6g)", kind, lo, hi)
    alphas = np.unique(np.concatenate(candidates))
    return alphas[alphas > 0]


def write_fraction_csv(
    path: str | Path, curves: dict[RegularizerKind, list[FractionPoint]], /
) -> None:
    """Write fraction curves of one or more regularizers to a csv file."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            [
                "kind",
                "alpha",
                "signal_fraction",
                "noise_transmitted_fraction",
                "noise_rejected_fraction",
            ]
        )
        for kind, points in curves.items():
            for p in points:
                writer.writerow(
                    [
                        str(kind),
                        format_float(p.alpha),
                        format_float(p.signal),
                        format_float(p.noise_transmitted),
                        format_float(p.noise_rejected),
                    ]
                )


def write_phase_csv(
    path: str | Path, diagrams: dict[RegularizerKind, list[tuple[float, AlphaRange]]], /
) -> None:
    """Write phase diagrams of one or more regularizers to a csv file."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["kind", "ratio", "alpha_low", "alpha_high"])
        for kind, rows in diagrams.items():
            for ratio, rng in rows:
                writer.writerow(
                    [str(kind), format_float(ratio), format_float(rng.low), format_float(rng.high)]
                )


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a closed form."""
