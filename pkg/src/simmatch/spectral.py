"""
Contains the numeric substrate: sym_eig(), soft_threshold(), etc.

NOTE: this module is private. All functions and objects are available in the main
`simmatch` namespace - use that instead.

"""

from dataclasses import dataclass
from typing import Self

import loggings
import numpy as np

__all__ = [
    "EIG_TOL",
    "ORTHO_TOL",
    "RECON_TOL",
    "MAX_SWEEPS",
    "SymMatrix",
    "SymmetricSpectrum",
    "SeededRng",
    "make_rng",
    "sym_eig",
    "soft_threshold",
    "random_orthonormal",
    "InvalidInputError",
    "NumericalFailureError",
]

logger = loggings.get_logger(__name__)

# Relative off-diagonal norm at which a Jacobi sweep stops.
EIG_TOL = 1e-14
# Column orthonormality of eigenvector bases and random orthonormal matrices.
ORTHO_TOL = 1e-10
# Reconstruction error relative to max(1, ||m||_F).
RECON_TOL = 1e-8
MAX_SWEEPS = 100

SeededRng = np.random.Generator


def make_rng(seed: int | np.random.SeedSequence) -> SeededRng:
    """
    Create the deterministic generator used everywhere in simmatch.

    The bit generator is always PCG64, so an identical seed yields an
    identical stream of draws across runs and platforms.

    Parameters
    ----------
    seed : int | np.random.SeedSequence
        A non-negative integer below 2**64, or a spawned seed sequence.

    Returns
    -------
    SeededRng
        A numpy Generator backed by PCG64.

    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if not 0 <= int(seed) < 2**64:
        raise InvalidInputError(f"seed must be a 64-bit unsigned integer: {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """
    A dense real symmetric matrix.

    The entries are symmetrized on construction, so `entries[i, j]` and
    `entries[j, i]` are always bitwise equal.

    Parameters
    ----------
    entries : np.ndarray
        Square array-like of real values.

    Raises
    ------
    InvalidInputError
        Raised if the entries are not a non-empty square matrix.

    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidInputError(f"expected a non-empty square matrix: {a.shape}")
        a = (a + a.T) / 2
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    def __repr__(self) -> str:
        return f"simmatch.SymMatrix(dim={self.dim})"

    @property
    def dim(self) -> int:
        """Matrix dimension."""
        return self.entries.shape[0]

    def trace(self) -> float:
        """Sum of the diagonal entries."""
        return float(np.trace(self.entries))

    @classmethod
    def from_data(cls, data: np.ndarray, /, gram: bool = False) -> Self:
        """
        Build X X^T (n×n) from an n×T data matrix, or X^T X (T×T) if
        `gram` is True.

        """
        x = np.asarray(data, dtype=float)
        if x.ndim != 2:
            raise InvalidInputError(f"expected an n×T data matrix: {x.shape}")
        return cls(x.T @ x if gram else x @ x.T)


@dataclass(frozen=True, eq=False)
class SymmetricSpectrum:
    """
    Eigenvalues sorted descending, with column i of `eigenvectors`
    paired with eigenvalue i.

    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __repr__(self) -> str:
        return f"simmatch.SymmetricSpectrum({np.array2string(self.eigenvalues)})"

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return self.eigenvectors.shape[0]

    def top(self, k: int) -> Self:
        """Keep the k leading eigenpairs."""
        return self.__class__(self.eigenvalues[:k], self.eigenvectors[:, :k])

    def scaled(self, factor: float) -> Self:
        """Multiply every eigenvalue by `factor`, keeping the basis."""
        return self.__class__(self.eigenvalues * factor, self.eigenvectors)

    def reconstruct(self) -> np.ndarray:
        """Returns V diag(λ) V^T."""
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def sym_eig(m: SymMatrix | np.ndarray, /) -> SymmetricSpectrum:
    """
    Full eigendecomposition of a symmetric matrix by cyclic Jacobi
    rotations.

    Each sweep visits every (p, q) pair once using round-robin ordering:
    within a round the pairs are disjoint, so their rotations commute and
    are applied together as one orthogonal matrix.

    Parameters
    ----------
    m : SymMatrix | np.ndarray
        The matrix to decompose. Arrays are symmetrized first.

    Returns
    -------
    SymmetricSpectrum
        Eigenvalues in descending order (ties keep their original
        order) and the matching orthonormal eigenvectors.

    Raises
    ------
    InvalidInputError
        Raised if the matrix has non-finite entries.
    NumericalFailureError
        Raised if the rotations do not converge within `MAX_SWEEPS`.

    """
    if not isinstance(m, SymMatrix):
        m = SymMatrix(m)
    a = m.entries.copy()
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    n = m.dim
    v = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(a)))
    rounds = _round_robin(n)

    for sweep in range(MAX_SWEEPS):
        if _off_norm(a) <= EIG_TOL * scale:
            break
        for p, q in rounds:
            _rotate(a, v, p, q)
    else:
        sweep = MAX_SWEEPS
        if _off_norm(a) > EIG_TOL * scale:
            raise NumericalFailureError(
                f"Jacobi rotations did not converge for a {n}×{n} matrix "
                f"within {MAX_SWEEPS} sweeps"
            )
    logger.debug("%d×%d matrix: %d Jacobi sweeps", n, n, sweep)

    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return SymmetricSpectrum(w[order], v[:, order])


def soft_threshold(a: float | np.ndarray, b: float | np.ndarray) -> float | np.ndarray:
    """
    Soft-thresholding, ST(a, b) = max(a - b, 0). Works elementwise on
    arrays.

    """
    out = np.maximum(np.subtract(a, b), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def random_orthonormal(dim: int, rng: SeededRng, /) -> np.ndarray:
    """
    Draw a random dim×dim orthogonal matrix.

    A standard Gaussian matrix is orthonormalized by QR; each column is
    then flipped so that its first nonzero entry is positive.

    Parameters
    ----------
    dim : int
        Matrix dimension, at least 1.
    rng : SeededRng
        Generator to draw from.

    Returns
    -------
    np.ndarray
        A column-orthonormal matrix.

    """
    if dim < 1:
        raise InvalidInputError(f"dim must be positive: {dim}")
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    first = np.argmax(q != 0.0, axis=0)
    signs = np.sign(q[first, np.arange(dim)])
    return q * signs


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    players = list(range(n + n % 2))
    m = len(players)
    rounds = []
    for _ in range(max(m - 1, 0)):
        pairs = [
            (players[i], players[m - 1 - i])
            for i in range(m // 2)
            if max(players[i], players[m - 1 - i]) < n
        ]
        if pairs:
            p, q = np.array(pairs).T
            rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _rotate(a: np.ndarray, v: np.ndarray, p: np.ndarray, q: np.ndarray) -> None:
    apq = a[p, q]
    active = np.abs(apq) > np.finfo(float).tiny
    if not np.any(active):
        return
    p, q, apq = p[active], q[active], apq[active]
    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
    t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
    t[theta == 0.0] = 1.0
    c = 1.0 / np.hypot(t, 1.0)
    s = t * c

    rot = np.eye(a.shape[0])
    rot[p, p] = c
    rot[q, q] = c
    rot[p, q] = s
    rot[q, p] = -s
    a[:] = rot.T @ a @ rot
    a[:] = (a + a.T) / 2
    a[p, q] = 0.0
    a[q, p] = 0.0
    v[:] = v @ rot


class InvalidInputError(ValueError):
    """Raised when a numeric input is malformed or non-finite."""


class NumericalFailureError(ArithmeticError):
    """Raised when an iterative numeric routine fails."""
