"""Symmetric-matrix primitives: eigen truncation, soft thresholding, PSD projection.

Every routine treats its input as a dense symmetric ``(n, n)`` array.  Only the
lower triangle is read by the eigensolvers, so callers are expected to pass
matrices that are already symmetric (see :func:`symmetrize`).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .exceptions import BudgetExceeded, InvalidInput, NumericalFailure

__all__ = [
    "EigenPair",
    "symmetrize",
    "soft_threshold_svd",
    "soft_threshold_eig",
    "truncate_rank",
    "hollow_frobenius",
    "eigen_truncated",
    "psd_project",
    "numerical_rank",
    "order_by_magnitude",
    "RANK_TOL",
]

RANK_TOL = 1e-8
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class EigenPair:
    """Eigenvectors (columns) with their signed eigenvalues.

    Values are stored by decreasing absolute value; on ties the positive
    eigenvalue comes first.
    """

    vectors: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if vectors.ndim != 2 or vectors.shape[1] != values.size:
            raise InvalidInput(
                f"eigenvector block {vectors.shape} does not match {values.size} values"
            )
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "values", values)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((n, 0)), np.zeros(0))

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def rank(self):
        return self.values.size

    @property
    def signature(self):
        """``(p, q)``: counts of positive and negative stored eigenvalues."""
        return int(np.sum(self.values > 0)), int(np.sum(self.values < 0))

    @property
    def nuclear_norm(self):
        return float(np.sum(np.abs(self.values)))

    def to_matrix(self):
        V = self.vectors
        M = (V * self.values) @ V.T
        # exact symmetry regardless of rounding in the product
        return (M + M.T) / 2


def symmetrize(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {M.shape}")
    return (M + M.T) / 2


def _check_square(M, allow_nonfinite=False):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {M.shape}")
    if not allow_nonfinite and not np.all(np.isfinite(M)):
        raise InvalidInput("matrix has non-finite entries")
    return M


def order_by_magnitude(values):
    """Permutation sorting ``values`` by decreasing ``|value|``.

    Near-ties (relative 1e-12) put the positive value first; otherwise the
    incoming order is kept.
    """
    values = np.asarray(values, dtype=float)
    order = list(np.argsort(-np.abs(values), kind="stable"))
    # single bubble pass is enough: ties are pairs (+g, -g) at most
    for i in range(len(order) - 1):
        a, b = values[order[i]], values[order[i + 1]]
        if a < 0 < b and abs(abs(a) - abs(b)) <= _TIE_RTOL * max(1.0, abs(a)):
            order[i], order[i + 1] = order[i + 1], order[i]
    return np.asarray(order, dtype=int)


def _full_eigh(M):
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    idx = order_by_magnitude(w)
    return w[idx], V[:, idx]


def _leading_eigh(M, k):
    """Leading ``k`` eigenpairs by magnitude (fewer only if ``k >= n``)."""
    n = M.shape[0]
    if k >= n or 3 * k >= n or not np.any(M):
        w, V = _full_eigh(M)
        return w[:k], V[:, :k]
    # fixed start vector keeps ARPACK deterministic across calls
    v0 = np.random.RandomState(0).standard_normal(n)
    try:
        w, V = scipy.sparse.linalg.eigsh(M, k=k, which="LM", v0=v0, tol=0)
    except scipy.sparse.linalg.ArpackError:
        # ARPACK can stall on highly degenerate spectra; LAPACK is exact
        w, V = _full_eigh(M)
        return w[:k], V[:, :k]
    idx = order_by_magnitude(w)
    return w[idx], V[:, idx]


def soft_threshold_eig(M, T, budget=None):
    """Eigen form of :func:`soft_threshold_svd`; zero eigenvalues are dropped."""
    M = _check_square(M)
    if T < 0:
        raise InvalidInput(f"threshold must be non-negative, got {T}")
    n = M.shape[0]
    if budget is None or budget >= n:
        w, V = _full_eigh(M)
    else:
        if budget < 1:
            raise InvalidInput(f"budget must be >= 1, got {budget}")
        w, V = _leading_eigh(M, budget + 1)
        keep = np.abs(w[:budget]) > T
        if np.abs(w[budget]) > T:
            raise BudgetExceeded(budget, int(np.sum(keep)))
        w, V = w[:budget], V[:, :budget]
    keep = np.abs(w) > T
    shrunk = np.sign(w[keep]) * (np.abs(w[keep]) - T)
    return EigenPair(V[:, keep], shrunk)


def soft_threshold_svd(M, T, budget=None):
    """Proximal map of ``T * nuclear norm`` at a symmetric matrix.

    Eigenvalues are moved toward zero by ``T`` and clipped at zero, which for a
    symmetric matrix coincides with soft thresholding its singular values.

    Parameters
    ----------
    M : (n, n) array_like
        Symmetric input.
    T : float
        Non-negative threshold.
    budget : int, optional
        Compute only the leading ``budget`` eigenpairs.  Raises
        :class:`BudgetExceeded` when eigenpair ``budget + 1`` would survive the
        threshold, so the caller can retry with a larger budget.

    Returns
    -------
    ndarray
        The thresholded symmetric matrix.
    """
    M = _check_square(M)
    if T == 0 and budget is None:
        return M.copy()
    return soft_threshold_eig(M, T, budget).to_matrix()


def truncate_rank(M, d):
    """Best rank-``d`` approximation, keeping the ``d`` largest ``|eigenvalues|``."""
    M = _check_square(M)
    n = M.shape[0]
    if d < 0 or d > n:
        raise InvalidInput(f"rank {d} outside [0, {n}]")
    if d == 0:
        return np.zeros_like(M)
    return eigen_truncated(M, d).to_matrix()


def hollow_frobenius(M):
    """Frobenius norm over the off-diagonal entries."""
    M = np.asarray(M, dtype=float)
    off = ~np.eye(M.shape[0], dtype=bool)
    return float(np.linalg.norm(M[off]))


def eigen_truncated(M, d):
    """Leading ``d`` eigenpairs of ``M`` ordered by ``|eigenvalue|``."""
    M = _check_square(M)
    n = M.shape[0]
    if d < 1 or d > n:
        raise InvalidInput(f"dimension {d} outside [1, {n}]")
    w, V = _leading_eigh(M, d)
    resid = np.linalg.norm(M @ V - V * w, axis=0)
    if np.any(resid > 1e-8 * max(1.0, float(np.abs(w).max()))):
        raise NumericalFailure("eigensolver returned inaccurate eigenpairs")
    return EigenPair(V, w)


def psd_project(M):
    """Nearest positive semi-definite matrix in Frobenius norm."""
    M = _check_square(M)
    w, V = np.linalg.eigh(M)
    w = np.clip(w, 0.0, None)
    out = (V * w) @ V.T
    return (out + out.T) / 2


def numerical_rank(M, tol=RANK_TOL):
    """Number of eigenvalues with ``|value| > tol * max(1, |leading value|)``."""
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    M = _check_square(M)
    w = np.abs(np.linalg.eigvalsh(M))
    if w.size == 0:
        return 0
    return int(np.sum(w > tol * max(1.0, w.max())))
