"""Dense complex matrix arithmetic and Hermitian projections.

Everything is a plain complex128 ``numpy.ndarray`` at small fixed dimension
(n = 2..8 at desk scale); there is no sparse or blocked structure.  The one
structured value is :class:`HermitianProjection`, which is re-validated on
every construction because a projection that silently fails pi^2 = pi or
pi = pi* corrupts every downstream transformation formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficientError, SingularError

# Scale-free independence threshold for spanning columns.
RANK_TOL_FACTOR = 1e-10
# Hard validation tolerance for projection residuals.
PROJECTION_TOL = 1e-12
# Linear solves refuse above this condition estimate.
COND_MAX = 1e13


def cmat(data) -> np.ndarray:
    """Coerce to a finite complex128 array."""
    a = np.asarray(data, dtype=complex)
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("matrix entries must be finite")
    return a


def adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def max_abs(a) -> float:
    """Entrywise max-norm; the residual norm used everywhere."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def star_reduce(xi: np.ndarray) -> np.ndarray:
    """Zero the diagonal of a square matrix, keeping off-diagonal entries."""
    xi = np.asarray(xi)
    if xi.ndim != 2 or xi.shape[0] != xi.shape[1]:
        raise ValueError(f"star_reduce expects a square matrix, got {xi.shape}")
    out = xi.copy()
    np.fill_diagonal(out, 0)
    return out


def solve_linear(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A X = B for a small well-conditioned square A.

    Raises :class:`SingularError` when the SVD condition estimate exceeds
    ``COND_MAX`` (covers exactly singular pivots as well).
    """
    A = cmat(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"solve_linear expects a square matrix, got {A.shape}")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] == 0.0 or s[0] / s[-1] > COND_MAX:
        raise SingularError(f"matrix condition {s[0] / max(s[-1], 1e-300):.3e} exceeds {COND_MAX:.1e}")
    return np.linalg.solve(A, np.asarray(B, dtype=complex))


@dataclass(frozen=True, eq=False)
class HermitianProjection:
    """An n x n complex matrix pi with pi^2 = pi and pi = pi*.

    ``span`` holds an orthonormal basis of the image; transported images are
    computed by mapping the span and re-projecting, which is numerically
    stabler than conjugating the matrix itself.
    """

    matrix: np.ndarray
    rank: int
    is_real: bool
    span: np.ndarray = field(repr=False)

    def __post_init__(self):
        pi = self.matrix
        n = pi.shape[0]
        if pi.shape != (n, n):
            raise ValueError("projection matrix must be square")
        idem = max_abs(pi @ pi - pi)
        herm = max_abs(pi - adjoint(pi))
        if idem >= PROJECTION_TOL or herm >= PROJECTION_TOL:
            raise RankDeficientError(
                f"projection validation failed: |pi^2-pi|={idem:.2e}, |pi-pi*|={herm:.2e}"
            )
        if self.is_real and max_abs(pi.imag) >= PROJECTION_TOL:
            raise RankDeficientError(f"projection marked real has |Im pi|={max_abs(pi.imag):.2e}")
        if self.rank != int(round(float(pi.trace().real))):
            raise RankDeficientError("projection rank disagrees with trace")
        if self.span.shape != (n, self.rank):
            raise ValueError("span must be n x rank")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def complement(self) -> np.ndarray:
        return np.eye(self.n) - self.matrix

    def conjugate(self) -> "HermitianProjection":
        """The projection onto the conjugated image (pi bar)."""
        return HermitianProjection(self.matrix.conj(), self.rank, self.is_real, self.span.conj())

    @staticmethod
    def zero(n: int) -> "HermitianProjection":
        return HermitianProjection(np.zeros((n, n), dtype=complex), 0, True, np.zeros((n, 0), dtype=complex))

    @staticmethod
    def identity(n: int) -> "HermitianProjection":
        return HermitianProjection(np.eye(n, dtype=complex), n, True, np.eye(n, dtype=complex))


def project_onto_span(V: np.ndarray) -> HermitianProjection:
    """Hermitian projection onto the column span of V, i.e. V (V*V)^-1 V*.

    Computed through an SVD orthonormal basis Q as Q Q*, which agrees with the
    Gram form to machine precision and is invariant under right-multiplication
    of V by any invertible matrix.  Raises :class:`RankDeficientError` when
    sigma_min(V) <= RANK_TOL_FACTOR * sigma_max(V).
    """
    V = cmat(V)
    if V.ndim == 1:
        V = V[:, None]
    n, k = V.shape
    if k == 0:
        return HermitianProjection.zero(n)
    if k > n:
        raise RankDeficientError(f"{k} columns cannot be independent in dimension {n}")
    Q, s, _ = np.linalg.svd(V, full_matrices=False)
    if s[-1] <= RANK_TOL_FACTOR * s[0]:
        raise RankDeficientError(
            f"spanning columns are dependent: sigma_min/sigma_max = {s[-1] / s[0]:.2e}"
        )
    pi = Q @ adjoint(Q)
    pi = 0.5 * (pi + adjoint(pi))  # enforce Hermitian symmetry exactly up to roundoff
    is_real = max_abs(pi.imag) < PROJECTION_TOL
    if is_real:
        pi = pi.real.astype(complex)
    return HermitianProjection(pi, k, is_real, Q)


def projection_distance(p: HermitianProjection, q: HermitianProjection) -> float:
    """Max-norm distance between two projections (equality threshold 1e-9)."""
    return max_abs(p.matrix - q.matrix)
