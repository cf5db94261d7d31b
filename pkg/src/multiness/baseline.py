"""Reference estimators: oracle alternating truncation and single-layer SVT imputation."""

import logging
import warnings

import numpy as np

from .exceptions import ConvergenceWarning, ImputationUnderdetermined, InvalidInput
from .linalg import EigenPair, eigen_truncated, soft_threshold_svd, truncate_rank
from .model import LatentDecomposition

__all__ = ["oracle_alternating", "svt_impute"]

logger = logging.getLogger(__name__)


def _truncated(M, d):
    if d == 0:
        return EigenPair.empty(M.shape[0])
    return eigen_truncated(M, d)


def oracle_alternating(net, d1, d2, t_max=100, tol=1e-6):
    """Non-convex alternating rank truncation with known ranks.

    Starting from ``G_k = 0`` it alternates

        F   <- [ mean_k (A_k - G_k) ]_{d1}
        G_k <- [ A_k - F ]_{d2}

    where ``[M]_d`` keeps the ``d`` eigenpairs of largest magnitude.  The
    truncations act on whole matrices, diagonal included (stored as zero for
    networks without self-loops), and unobserved entries count as zero.

    Parameters
    ----------
    net : MultiplexNetwork
    d1 : int
        Rank of the common component.
    d2 : int or sequence of int
        Rank of each individual component.
    t_max : int
        Maximum number of sweeps.
    tol : float
        Stop once the relative Frobenius change of every block is below this.

    Returns
    -------
    LatentDecomposition
        ``info`` records ``converged`` and ``iterations``.  A
        :class:`ConvergenceWarning` is emitted when ``t_max`` is reached.
    """
    m, n = net.m, net.n
    d2 = np.broadcast_to(np.asarray(d2, dtype=int), (m,))
    d1 = int(d1)
    if d1 < 0 or d1 > n or np.any(d2 < 0) or np.any(d2 > n):
        raise InvalidInput(f"ranks must lie in [0, {n}]: d1={d1}, d2={list(d2)}")
    if t_max < 1:
        raise InvalidInput("t_max must be at least 1")
    A = net.layers
    G = np.zeros_like(A)
    F = np.zeros((n, n))
    converged = False
    t = 0
    for t in range(1, t_max + 1):
        F_new = truncate_rank((A - G).mean(axis=0), d1)
        G_new = np.stack([truncate_rank(A[k] - F_new, int(d2[k])) for k in range(m)])
        change = np.linalg.norm(F_new - F) / max(1.0, np.linalg.norm(F_new))
        for k in range(m):
            change = max(change, np.linalg.norm(G_new[k] - G[k]) / max(1.0, np.linalg.norm(G_new[k])))
        F, G = F_new, G_new
        if change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"oracle alternating truncation stopped at t_max={t_max} without converging",
            ConvergenceWarning,
            stacklevel=2,
        )
    common = _truncated(F, d1)
    individual = [_truncated(G[k], int(d2[k])) for k in range(m)]
    dec = LatentDecomposition(common, individual, {"converged": converged, "iterations": t})
    return dec


def _svt_objective(A, mask, X, lam):
    r = np.where(mask, A - X, 0.0)
    return 0.5 * float(np.sum(r**2)), lam * float(np.sum(np.abs(np.linalg.eigvalsh(X))))


def _svt_iterate(A, mask, X, lam, rank, max_iter, tol, trace=False):
    residual_trace, objective_trace = [], []
    if trace:
        loss, pen = _svt_objective(A, mask, X, lam or 0.0)
        residual_trace.append(loss)
        objective_trace.append(loss + pen)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        Z = np.where(mask, A, X)
        X_new = truncate_rank(Z, rank) if rank is not None else soft_threshold_svd(Z, lam)
        change = np.linalg.norm(X_new - X) / max(1.0, np.linalg.norm(X))
        X = X_new
        if trace:
            loss, pen = _svt_objective(A, mask, X, lam or 0.0)
            residual_trace.append(loss)
            objective_trace.append(loss + pen)
        if change < tol:
            converged = True
            break
    if trace:
        return X, converged, it, residual_trace, objective_trace
    return X, converged, it


def svt_impute(A, mask, lam=None, rank=None, max_iter=500, tol=1e-6, delta=0.309,
               path_factor=0.5, return_info=False):
    """Complete one symmetric layer by iterated singular value thresholding.

    Each iteration fills the unobserved entries with the current estimate and
    soft-thresholds the result at ``lam`` (or, with ``rank``, truncates to
    that rank instead).  With soft thresholding this is a majorize-minimize
    scheme for ``1/2 * sum_observed (A - X)^2 + lam * ||X||_*``.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Symmetric layer; unobserved entries are ignored.
    mask : array_like of bool, shape (n, n)
        True where observed.  Must be symmetric.
    lam : float, optional
        Threshold.  Defaults to ``(2 + delta) * sigma * sqrt(n)`` with ``sigma``
        the median-based noise estimate of the zero-filled layer.
    rank : int, optional
        Use hard rank truncation instead of soft thresholding.  Mutually
        exclusive with ``lam``.
    max_iter, tol : int, float
        Stop when the relative Frobenius change falls below ``tol``.
    path_factor : float or None
        Soft thresholding only.  Before iterating at ``lam``, warm-start along
        the thresholds ``L * path_factor^j`` above ``lam``, where ``L`` is the
        spectral norm of the zero-filled layer.  ``None`` starts at ``lam``
        from zero.
    return_info : bool
        Also return a dict with ``converged``, ``iterations``, ``lam``,
        ``path_stages`` and, for the final threshold, the observed residual
        loss trace and the penalized objective trace.

    Returns
    -------
    ndarray, shape (n, n)
        The low-rank estimate.  Rows and columns with no observed entries are
        set to zero (with an :class:`ImputationUnderdetermined` warning).
    """
    # deferred: tuning imports the solver stack
    from .tuning import sigma_mad

    A = np.asarray(A, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or mask.shape != A.shape:
        raise InvalidInput("A and mask must be square arrays of the same shape")
    if not np.array_equal(mask, mask.T):
        raise InvalidInput("mask must be symmetric")
    if lam is not None and rank is not None:
        raise InvalidInput("give at most one of lam and rank")
    n = A.shape[0]
    A = np.where(mask, A, 0.0)
    if not np.allclose(A, A.T):
        raise InvalidInput("observed entries of A must be symmetric")
    A = (A + A.T) / 2

    empty_rows = ~mask.any(axis=1)
    if empty_rows.any():
        warnings.warn(
            f"{int(empty_rows.sum())} node(s) have no observed entries; their rows are set to 0",
            ImputationUnderdetermined,
            stacklevel=2,
        )
    if rank is None and lam is None:
        lam = (2 + delta) * sigma_mad(A) * np.sqrt(n)
    if path_factor is not None and not 0 < path_factor < 1:
        raise InvalidInput(f"path_factor must lie in (0, 1), got {path_factor}")
    if rank is not None and not 0 <= rank <= n:
        raise InvalidInput(f"rank must lie in [0, {n}]")
    if lam is not None and not lam >= 0:
        raise InvalidInput(f"lam must be non-negative, got {lam}")

    X = np.zeros((n, n))
    stages = 0
    if rank is None and path_factor is not None and lam > 0:
        # warm starts along a decreasing threshold path; small thresholds are
        # otherwise reached very slowly from a zero start
        start = float(np.max(np.abs(np.linalg.eigvalsh(A))))
        path = []
        level = start * path_factor
        while level > lam:
            path.append(level)
            level *= path_factor
        for level in path:
            X, _, _ = _svt_iterate(A, mask, X, level, None, max_iter, tol)
            stages += 1
    X, converged, it, residual_trace, objective_trace = _svt_iterate(
        A, mask, X, lam, rank, max_iter, tol, trace=True
    )
    if not converged:
        logger.info("svt_impute stopped at max_iter=%d", max_iter)
    X = X.copy()
    X[empty_rows, :] = 0.0
    X[:, empty_rows] = 0.0
    if return_info:
        return X, dict(converged=converged, iterations=it, lam=lam, rank=rank, path_stages=stages,
                       residual_trace=residual_trace, objective_trace=objective_trace)
    return X
