"""
Contains the exact offline solvers: solve_scale_dependent(), nnls_bruteforce(), etc.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Self

import numpy as np

from .spectral import (
    SeededRng,
    SymMatrix,
    SymmetricSpectrum,
    random_orthonormal,
    soft_threshold,
    sym_eig,
)

if TYPE_CHECKING:
    from ._typing import RegularizerName

__all__ = [
    "NNLS_MAX_SIZE",
    "RegularizerKind",
    "OfflineProblem",
    "OfflineSolution",
    "solve",
    "solve_scale_dependent",
    "solve_input_output",
    "solve_squared_output",
    "output_eigenvalues",
    "batch_output_eigenvalues",
    "nnls_bruteforce",
    "objective",
    "alignment_gap",
    "SizeLimitError",
    "InvariantViolationError",
]

NNLS_MAX_SIZE = 12
# Output eigenvalues within this fraction of the largest input eigenvalue are zero.
ZERO_TOL = 1e-12


class RegularizerKind(Enum):
    """Which rank-penalizing regularizer is added to the similarity matching cost."""

    SCALE_DEPENDENT = "scale"
    INPUT_OUTPUT = "io"
    SQUARED_OUTPUT = "squared"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: "RegularizerName | RegularizerKind", /) -> Self:
        """Look up a kind by its short or long name."""
        if isinstance(name, cls):
            return name
        match str(name).lower().replace("_", "-"):
            case "scale" | "scale-dependent" | "ty":
                return cls.SCALE_DEPENDENT
            case "io" | "input-output" | "xy":
                return cls.INPUT_OUTPUT
            case "squared" | "squared-output" | "yy":
                return cls.SQUARED_OUTPUT
            case _:
                raise ValueError(f"invalid regularizer kind: {name!r}")


@dataclass(frozen=True, eq=False)
class OfflineProblem:
    """
    A regularized similarity matching problem, stated on the spectrum of
    the input similarity matrix.

    Parameters
    ----------
    eigenvalues : np.ndarray
        Eigenvalues of X^T X (equivalently the nonzero ones of X X^T),
        descending.
    k : int
        Output dimensionality.
    alpha : float
        Regularization coefficient, at least 0.
    kind : RegularizerKind
        Regularizer.
    T : int, optional
        Number of samples, by default 1 (per-sample spectra).
    basis : np.ndarray | None, optional
        Eigenvectors paired with `eigenvalues`, by default None.

    Raises
    ------
    ValueError
        Raised if k < 1, alpha < 0 or T < 1.

    """

    eigenvalues: np.ndarray
    k: int
    alpha: float
    kind: RegularizerKind
    T: int = 1
    basis: np.ndarray | None = None

    def __post_init__(self) -> None:
        eig = np.asarray(self.eigenvalues, dtype=float).ravel()
        if self.k < 1:
            raise ValueError(f"k must be at least 1: {self.k}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative: {self.alpha}")
        if self.T < 1:
            raise ValueError(f"T must be at least 1: {self.T}")
        if np.any(eig[:-1] < eig[1:]):
            order = np.argsort(-eig, kind="stable")
            eig = eig[order]
            if self.basis is not None:
                object.__setattr__(self, "basis", np.asarray(self.basis)[:, order])
        object.__setattr__(self, "eigenvalues", eig)
        object.__setattr__(self, "kind", RegularizerKind.parse(self.kind))

    @classmethod
    def from_spectrum(
        cls,
        spectrum: SymmetricSpectrum,
        k: int,
        alpha: float,
        kind: RegularizerKind,
        T: int = 1,
    ) -> Self:
        """Build a problem from a ready eigendecomposition."""
        return cls(spectrum.eigenvalues, k, alpha, kind, T, spectrum.eigenvectors)

    @classmethod
    def from_gram(
        cls, gram: SymMatrix, k: int, alpha: float, kind: RegularizerKind
    ) -> Self:
        """Build a problem from the T×T Gram matrix X^T X."""
        return cls.from_spectrum(sym_eig(gram), k, alpha, kind, T=gram.dim)

    @classmethod
    def from_data(
        cls, data: np.ndarray, k: int, alpha: float, kind: RegularizerKind
    ) -> Self:
        """
        Build a problem from an n×T data matrix. The n×n matrix X X^T is
        decomposed instead of the T×T Gram; both share their nonzero
        eigenvalues.

        """
        x = np.asarray(data, dtype=float)
        return cls.from_spectrum(
            sym_eig(SymMatrix.from_data(x)), k, alpha, kind, T=x.shape[1]
        )

    def padded(self) -> np.ndarray:
        """Eigenvalues padded with zeros to at least k entries."""
        eig = self.eigenvalues
        if len(eig) >= self.k:
            return eig
        return np.concatenate([eig, np.zeros(self.k - len(eig))])


@dataclass(frozen=True, eq=False)
class OfflineSolution:
    """
    The optimal output, up to the rotation U_k: the spectrum of Y^T Y and
    the principal input basis it lives on.

    """

    output_eigenvalues: np.ndarray
    principal_basis: np.ndarray | None
    rank: int

    def __repr__(self) -> str:
        eig = " ".join(format(v, ".12g") for v in self.output_eigenvalues)
        return f"{eig} (rank {self.rank})"

    def output_matrix(self) -> np.ndarray:
        """Returns Y = diag(√d) V_k^T, i.e. the solution with U_k = I."""
        if self.principal_basis is None:
            raise ValueError("solution was computed without an eigenbasis")
        basis = self.principal_basis[:, : len(self.output_eigenvalues)]
        return np.sqrt(self.output_eigenvalues)[:, None] * basis.T

    def output_gram(self) -> np.ndarray:
        """Returns Y^T Y, which does not depend on U_k."""
        y = self.output_matrix()
        return y.T @ y


def solve(problem: OfflineProblem, /) -> OfflineSolution:
    """Solve with the solver matching `problem.kind`."""
    match problem.kind:
        case RegularizerKind.SCALE_DEPENDENT:
            return solve_scale_dependent(problem)
        case RegularizerKind.INPUT_OUTPUT:
            return solve_input_output(problem)
        case RegularizerKind.SQUARED_OUTPUT:
            return solve_squared_output(problem)
        case _:
            raise ValueError(f"invalid regularizer kind: {problem.kind!r}")


def solve_scale_dependent(problem: OfflineProblem, /) -> OfflineSolution:
    """
    Output eigenvalue i is ST(λ_i, αT) for the k leading input
    eigenvalues.

    """
    _check_kind(problem, RegularizerKind.SCALE_DEPENDENT)
    return _solution(problem, output_eigenvalues(problem))


def solve_input_output(problem: OfflineProblem, /) -> OfflineSolution:
    """
    Output eigenvalue i is ST(λ_i, α Tr(X^T X)) for the k leading input
    eigenvalues.

    """
    _check_kind(problem, RegularizerKind.INPUT_OUTPUT)
    return _solution(problem, output_eigenvalues(problem))


def solve_squared_output(problem: OfflineProblem, /) -> OfflineSolution:
    """
    Shrink the p leading eigenvalues by (I - α/(1+αp) 1 1^T), with p the
    largest integer in 1..k for which every shrunk value is non-negative.

    Raises
    ------
    InvariantViolationError
        Raised if no p qualifies, which can only happen for invalid
        (negative) inputs.

    """
    _check_kind(problem, RegularizerKind.SQUARED_OUTPUT)
    return _solution(problem, output_eigenvalues(problem))


def output_eigenvalues(problem: OfflineProblem, /) -> np.ndarray:
    """Optimal output eigenvalues of a problem, length k."""
    top = problem.padded()[None, : problem.k]
    total = np.array([problem.eigenvalues.sum()])
    return batch_output_eigenvalues(
        problem.kind, top, problem.alpha, T=problem.T, totals=total
    )[0]


def batch_output_eigenvalues(
    kind: RegularizerKind,
    top: np.ndarray,
    alpha: float,
    /,
    T: int = 1,
    totals: np.ndarray | None = None,
) -> np.ndarray:
    """
    Optimal output eigenvalues for a batch of spectra at once.

    Values within `ZERO_TOL` times the largest input eigenvalue of their
    row are set to exactly 0, so boundary cases count as rejected.

    Parameters
    ----------
    kind : RegularizerKind
        Regularizer.
    top : np.ndarray
        m×k array, row i holding the k leading input eigenvalues of
        spectrum i in descending order.
    alpha : float
        Regularization coefficient.
    T : int, optional
        Number of samples, by default 1.
    totals : np.ndarray | None, optional
        Full eigenvalue sums Tr(X^T X) per spectrum, by default the row
        sums of `top`.

    Returns
    -------
    np.ndarray
        m×k array of output eigenvalues.

    """
    top = np.atleast_2d(np.asarray(top, dtype=float))
    if totals is None:
        totals = top.sum(axis=1)
    match RegularizerKind.parse(kind):
        case RegularizerKind.SCALE_DEPENDENT:
            out = soft_threshold(top, alpha * T)
        case RegularizerKind.INPUT_OUTPUT:
            out = soft_threshold(top, alpha * np.asarray(totals)[:, None])
        case RegularizerKind.SQUARED_OUTPUT:
            out = _squared_output_batch(top, alpha)
    out[np.abs(out) <= _zero_tol(top)] = 0.0
    return out


def _zero_tol(top: np.ndarray) -> np.ndarray:
    return ZERO_TOL * np.max(np.abs(top), axis=1, keepdims=True)


def _squared_output_batch(top: np.ndarray, alpha: float) -> np.ndarray:
    m, k = top.shape
    out = np.zeros_like(top)
    done = np.zeros(m, dtype=bool)
    sums = np.cumsum(top, axis=1)
    tol = _zero_tol(top)
    for p in range(k, 0, -1):
        shrunk = top[:, :p] - (alpha / (1 + alpha * p)) * sums[:, p - 1 : p]
        take = ~done & np.all(shrunk >= -tol, axis=1)
        out[take, :p] = shrunk[take]
        done |= take
    if not np.all(done):
        raise InvariantViolationError(
            "no feasible support found for the squared-output solution"
        )
    return out


def nnls_bruteforce(d_x: np.ndarray, alpha: float, /) -> np.ndarray:
    """
    Minimize ||d_x - d_y||^2 + α (Σ d_y)^2 over d_y >= 0 by trying every
    support.

    On a fixed support S the problem is an unconstrained quadratic whose
    system matrix I + α 1 1^T has the Sherman-Morrison inverse
    I - α/(1+α|S|) 1 1^T.

    Parameters
    ----------
    d_x : np.ndarray
        Input eigenvalues.
    alpha : float
        Regularization coefficient, at least 0.

    Returns
    -------
    np.ndarray
        The minimizer.

    Raises
    ------
    SizeLimitError
        Raised if `d_x` has more than `NNLS_MAX_SIZE` entries.

    """
    d_x = np.asarray(d_x, dtype=float).ravel()
    n = len(d_x)
    if n > NNLS_MAX_SIZE:
        raise SizeLimitError(
            f"brute-force search is limited to {NNLS_MAX_SIZE} entries, got {n}"
        )
    best, best_cost = np.zeros(n), _nnls_cost(d_x, np.zeros(n), alpha)
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            idx = list(support)
            sub = d_x[idx]
            d = sub - alpha / (1 + alpha * size) * sub.sum()
            if np.any(d < 0):
                continue
            candidate = np.zeros(n)
            candidate[idx] = d
            if (cost := _nnls_cost(d_x, candidate, alpha)) < best_cost:
                best, best_cost = candidate, cost
    return best


def objective(
    kind: RegularizerKind,
    input_eigenvalues: np.ndarray,
    output_eigenvalues: np.ndarray,
    alpha: float,
    /,
    T: int = 1,
) -> float:
    """
    The regularized cost in eigenvalue coordinates, with Y^T Y aligned to
    the input eigenbasis. Coefficients follow each cost as stated: 2αT
    and 2α Tr(X^T X) on Tr(Y^T Y), and α on [Tr(Y^T Y)]^2.

    """
    lam = np.asarray(input_eigenvalues, dtype=float)
    d = np.zeros_like(lam)
    out = np.asarray(output_eigenvalues, dtype=float)
    d[: len(out)] = out
    fit = float(np.sum((lam - d) ** 2))
    match RegularizerKind.parse(kind):
        case RegularizerKind.SCALE_DEPENDENT:
            return fit + 2 * alpha * T * d.sum()
        case RegularizerKind.INPUT_OUTPUT:
            return fit + 2 * alpha * lam.sum() * d.sum()
        case RegularizerKind.SQUARED_OUTPUT:
            return fit + alpha * d.sum() ** 2


def alignment_gap(
    lam: np.ndarray, lam_hat: np.ndarray, rng: SeededRng, /, trials: int = 1000
) -> float:
    """
    Largest excess of Tr(Λ O Λ̂ O^T) over Tr(Λ Λ̂) across random
    orthogonal O, for descending diagonals Λ and Λ̂. Non-positive up to
    rounding when the identity is an optimal alignment.

    """
    lam = np.sort(np.asarray(lam, dtype=float))[::-1]
    lam_hat = np.sort(np.asarray(lam_hat, dtype=float))[::-1]
    aligned = float(lam @ lam_hat)
    gap = -np.inf
    for _ in range(trials):
        o = random_orthonormal(len(lam), rng)
        value = float(np.sum(lam[:, None] * o**2 * lam_hat[None, :]))
        gap = max(gap, value - aligned)
    return gap


def _nnls_cost(d_x: np.ndarray, d_y: np.ndarray, alpha: float) -> float:
    return float(np.sum((d_x - d_y) ** 2) + alpha * d_y.sum() ** 2)


def _solution(problem: OfflineProblem, values: np.ndarray) -> OfflineSolution:
    basis = None if problem.basis is None else problem.basis[:, : problem.k]
    return OfflineSolution(values, basis, int(np.count_nonzero(values > 0)))


def _check_kind(problem: OfflineProblem, kind: RegularizerKind) -> None:
    if problem.kind is not kind:
        raise ValueError(f"expected a {kind.name} problem, got {problem.kind.name}")


class SizeLimitError(ValueError):
    """Raised when an exhaustive search is asked to go beyond desk scale."""


class InvariantViolationError(RuntimeError):
    """Raised when an internal invariant does not hold."""
