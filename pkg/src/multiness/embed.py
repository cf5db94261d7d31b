"""Latent positions, sign alignment, error metrics and the identifiability check."""

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import InvalidInput
from .linalg import RANK_TOL, eigen_truncated, hollow_frobenius
from .model import Signature

__all__ = [
    "ase",
    "align_columns",
    "ErrorMetrics",
    "error_metrics",
    "identifiability_check",
]


def ase(M, d, tol=RANK_TOL, return_gaps=False):
    """Adjacency spectral embedding with an indefinite signature.

    Takes the ``d`` eigenpairs of largest ``|eigenvalue|`` and scales each
    eigenvector by ``sqrt(|eigenvalue|)``.  Columns for positive eigenvalues
    come first, then negative ones, each group by decreasing magnitude.
    Eigenvalues below ``tol * max(1, |leading|)`` give zero columns; they are
    counted as assortative and placed right after the positive block, so the
    first ``p`` columns always carry the ``+1`` signs of ``I_{p,q}``.

    Returns
    -------
    coords : ndarray, shape (n, d)
    sig : Signature
    gaps : ndarray
        Only with ``return_gaps=True``.  Differences between consecutive
        ``|eigenvalues|`` (length ``d``; the last entry is the gap to eigenvalue
        ``d + 1``, or ``nan`` if ``d == n``).  Small gaps mean the columns are
        not individually identified and sign alignment is unreliable.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if d < 1:
        raise InvalidInput(f"embedding dimension must be positive, got {d}")
    if d > n:
        raise InvalidInput(f"embedding dimension {d} exceeds n={n}")
    ep = eigen_truncated(M, min(d + 1, n))
    values, vectors = ep.values[:d], ep.vectors[:, :d]
    mags = np.abs(ep.values)
    gaps = np.append(-np.diff(mags), np.nan)[:d] if d == n else -np.diff(mags)[:d]

    zero = np.abs(values) <= tol * max(1.0, float(mags[0]))
    pos = np.flatnonzero((values > 0) & ~zero)
    neg = np.flatnonzero((values < 0) & ~zero)
    null = np.flatnonzero(zero)
    order = np.concatenate([pos, null, neg])
    coords = vectors[:, order] * np.sqrt(np.abs(values[order]))
    coords[:, len(pos):len(pos) + len(null)] = 0.0
    sig = Signature(len(pos) + len(null), len(neg))
    if return_gaps:
        return coords, sig, gaps
    return coords, sig


def align_columns(Xhat, Xref):
    """Flip column signs of ``Xhat`` to best match ``Xref`` column by column.

    Returns
    -------
    aligned : ndarray
    signs : ndarray of {+1, -1}
        Ties (equal distance either way) keep ``+1``.
    """
    Xhat = np.asarray(Xhat, dtype=float)
    Xref = np.asarray(Xref, dtype=float)
    if Xhat.shape != Xref.shape:
        raise InvalidInput(f"shape mismatch: {Xhat.shape} vs {Xref.shape}")
    plus = np.linalg.norm(Xhat - Xref, axis=0)
    minus = np.linalg.norm(Xhat + Xref, axis=0)
    signs = np.where(minus < plus, -1.0, 1.0)
    return Xhat * signs, signs


@dataclass
class ErrorMetrics:
    """Relative hollow-Frobenius errors for ``F``, the ``G_k`` and the layer means.

    Iterating yields ``(err_F, err_G, err_P)``.  ``unnormalized`` names every
    metric that fell back to an absolute error because its reference had zero
    norm.
    """

    err_F: float
    err_G: float
    err_P: float
    unnormalized: frozenset = field(default_factory=frozenset)

    def __iter__(self):
        return iter((self.err_F, self.err_G, self.err_P))


def _ratio(diff, ref, name, flags):
    num = hollow_frobenius(diff)
    den = hollow_frobenius(ref)
    if den == 0:
        flags.add(name)
        return num
    return num / den


def error_metrics(fam, est, truth):
    """Compare an estimate with the truth.

    ``est`` and ``truth`` are anything with dense ``F`` (n, n) and ``G``
    (m, n, n) attributes, e.g. :class:`~multiness.model.LatentDecomposition`
    or :class:`~multiness.simulate.SimTruth`.  For non-identity links the
    layer-mean error is computed after applying the link.
    """
    F_hat, G_hat = np.asarray(est.F), np.asarray(est.G)
    F, G = np.asarray(truth.F), np.asarray(truth.G)
    if F_hat.shape != F.shape or G_hat.shape != G.shape:
        raise InvalidInput("estimate and truth dimensions differ")
    m = G.shape[0]
    flags = set()
    err_F = _ratio(F_hat - F, F, "err_F", flags)
    err_G = 0.0
    err_P = 0.0
    for k in range(m):
        err_G += _ratio(G_hat[k] - G[k], G[k], "err_G", flags) / m
        P_hat = fam.link(F_hat + G_hat[k])
        P = fam.link(F + G[k])
        err_P += _ratio(P_hat - P, P, "err_P", flags) / m
    return ErrorMetrics(float(err_F), float(err_G), float(err_P), frozenset(flags))


def identifiability_check(V, U_list, tol=RANK_TOL):
    """Build the layer graph whose connectivity certifies identifiability.

    Layers ``k`` and ``l`` are joined when ``[V U_k U_l]`` has full column
    rank, judged by singular values above ``tol`` times the largest.

    Returns
    -------
    edges : list of (int, int)
        Zero-based layer pairs ``k < l``.
    connected : bool
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    U_list = [np.asarray(U, dtype=float).reshape(V.shape[0], -1) for U in U_list]
    m = len(U_list)
    n = V.shape[0]
    edges = []
    for k in range(m):
        for l in range(k + 1, m):
            X = np.hstack([V, U_list[k], U_list[l]])
            if X.shape[1] > n:
                continue
            if X.shape[1] == 0:
                edges.append((k, l))
                continue
            s = np.linalg.svd(X, compute_uv=False)
            if s[0] > 0 and np.sum(s > tol * s[0]) == X.shape[1]:
                edges.append((k, l))
    if m <= 1:
        return edges, True
    rows = [e[0] for e in edges]
    cols = [e[1] for e in edges]
    graph = coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(m, m))
    n_comp, _ = connected_components(graph, directed=False)
    return edges, bool(n_comp == 1)
