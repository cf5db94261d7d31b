"""Eigenvalue refitting with eigenvectors held fixed.

With the eigenvectors of ``F`` and each ``G_k`` frozen, the likelihood is a
GLM in the eigenvalues: observed pair ``(i, j)`` of layer ``k`` has predictors
``V_il V_jl`` for the common columns and ``U_k,il U_k,jl`` for the columns of
layer ``k``.  The design has one row per observed triple but only
``d1 + sum_k d2_k`` columns, so we accumulate its Gram matrix layer by layer
instead of building it.
"""

import time
import warnings

import numpy as np

from .exceptions import DegenerateDesign, RefitWarning
from .linalg import EigenPair, order_by_magnitude
from .model import GaussianIdentity, LatentDecomposition, _loss_dense
from .solver import fit

__all__ = ["refit_eigenvalues", "fit_plus"]


def _layer_blocks(dec):
    """Per layer: stacked eigenvectors ``[V U_k]`` and their global coefficient indices."""
    d1 = dec.common.rank
    offset = d1
    blocks = []
    for Gk in dec.individual:
        H = np.hstack([dec.common.vectors, Gk.vectors])
        idx = np.concatenate([np.arange(d1), offset + np.arange(Gk.rank)])
        offset += Gk.rank
        blocks.append((H, idx))
    return blocks, offset


def _gram(H, W):
    """``X^T diag(W) X`` for the implicit design rows ``x_ij = H_i * H_j``."""
    n, D = H.shape
    R = (H[:, :, None] * H[:, None, :]).reshape(n, D * D)
    # entry (a, c) of X^T W X is r^T W r with r = H_a * H_c
    return np.einsum("ia,ia->a", R, W @ R).reshape(D, D)


def _xt(H, Y):
    """``X^T y`` where ``y_ij = Y_ij`` (already weighted)."""
    return np.einsum("ia,ij,ja->a", H, Y, H)


def _assemble(blocks, total, weights):
    gram = np.zeros((total, total))
    for (H, idx), W in zip(blocks, weights):
        gram[np.ix_(idx, idx)] += _gram(H, W)
    return gram


def _predictors(blocks, beta):
    return [(H * beta[idx]) @ H.T for H, idx in blocks]


def _check_design(blocks, total, net):
    gram = _assemble(blocks, total, net.pair_weights)
    s = np.linalg.svd(gram, compute_uv=False)
    if s.size and s[-1] <= 1e-10 * s[0]:
        raise DegenerateDesign(
            f"refit design is rank deficient (condition {s[0] / max(s[-1], 1e-300):.3g})"
        )
    return gram


def _solve_gaussian(net, blocks, total, gram):
    rhs = np.zeros(total)
    for k, (H, idx) in enumerate(blocks):
        rhs[idx] += _xt(H, net.pair_weights[k] * net.layers[k])
    beta, _, rank, _ = np.linalg.lstsq(gram, rhs, rcond=None)
    if rank < total:
        raise DegenerateDesign("refit normal equations are rank deficient")
    return beta, True, 1


def _glm_loss(fam, net, thetas):
    total = 0.0
    for k, theta in enumerate(thetas):
        ell = fam.entry_loss(net.layers[k], theta)
        total += float(np.sum(np.where(net.mask[k], net.pair_weights[k] * ell, 0.0)))
    return total


# fitted natural parameters beyond this size (probabilities within ~1e-13 of 0
# or 1 for the logistic link) only arise when coefficients diverge under
# separation; the small gradient there is not genuine convergence
_SEPARATION_THETA = 30.0


def _separated(net, thetas):
    return any(np.abs(theta[net.mask[k]]).max(initial=0.0) > _SEPARATION_THETA
               for k, theta in enumerate(thetas))


def _solve_newton(fam, net, blocks, total, beta0, max_iter, grad_tol):
    beta = beta0.copy()
    thetas = _predictors(blocks, beta)
    loss = _glm_loss(fam, net, thetas)
    for it in range(1, max_iter + 1):
        grad = np.zeros(total)
        hess = np.zeros((total, total))
        for k, ((H, idx), theta) in enumerate(zip(blocks, thetas)):
            W = net.pair_weights[k]
            grad[idx] += _xt(H, -W * fam.residual(net.layers[k], theta))
            hess[np.ix_(idx, idx)] += _gram(H, W * fam.variance(theta))
        if _separated(net, thetas):
            return beta, False, it
        if np.max(np.abs(grad)) <= grad_tol:
            return beta, True, it
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return beta, False, it
        if not np.all(np.isfinite(step)):
            return beta, False, it
        t = 1.0
        while t > 1e-10:
            cand = beta - t * step
            cand_thetas = _predictors(blocks, cand)
            cand_loss = _glm_loss(fam, net, cand_thetas)
            if cand_loss <= loss + 1e-4 * t * float(grad @ -step):
                break
            t /= 2
        else:
            # no descent possible: at numerical optimum or stalled
            return beta, float(grad @ step) <= 1e-20 * max(1.0, abs(loss)), it
        beta, thetas, loss = cand, cand_thetas, cand_loss
    return beta, False, max_iter


def refit_eigenvalues(fam, net, dec, max_iter=50, grad_tol=1e-8):
    """Re-estimate eigenvalues of ``F`` and each ``G_k`` with eigenvectors fixed.

    Parameters
    ----------
    fam : EdgeFamily
    net : MultiplexNetwork
        Data; the same observation mask as the fit is used.
    dec : LatentDecomposition
        Output of a convex fit; its eigenvectors and ranks are kept.
    max_iter, grad_tol : int, float
        Newton iteration cap and gradient sup-norm tolerance (non-Gaussian
        families only).

    Returns
    -------
    LatentDecomposition
        Same eigenvectors, refitted eigenvalues reordered by magnitude.  If the
        Newton iterations fail (e.g. under separation) the input eigenvalues are
        returned with ``info["refit_converged"] = False`` and a
        :class:`RefitWarning`.

    Raises
    ------
    DegenerateDesign
        The fixed eigenvectors give linearly dependent predictors.
    """
    fam.validate(net.layers, net.mask)
    blocks, total = _layer_blocks(dec)
    if total == 0:
        out = LatentDecomposition(dec.common, dec.individual, dict(dec.info))
        out.info.update(refit_converged=True, refit_iterations=0)
        return out
    gram = _check_design(blocks, total, net)
    beta0 = np.concatenate([dec.common.values] + [G.values for G in dec.individual])
    if isinstance(fam, GaussianIdentity):
        beta, converged, iters = _solve_gaussian(net, blocks, total, gram)
    else:
        beta, converged, iters = _solve_newton(
            fam, net, blocks, total, beta0, max_iter, grad_tol
        )
    if not converged or not np.all(np.isfinite(beta)):
        warnings.warn(
            "eigenvalue refit did not converge; keeping the pre-refit eigenvalues",
            RefitWarning,
            stacklevel=2,
        )
        out = LatentDecomposition(dec.common, dec.individual, dict(dec.info))
        out.info.update(refit_converged=False, refit_iterations=iters)
        return out

    d1 = dec.common.rank
    common = _reordered(dec.common.vectors, beta[:d1])
    individual = []
    offset = d1
    for G in dec.individual:
        individual.append(_reordered(G.vectors, beta[offset:offset + G.rank]))
        offset += G.rank
    out = LatentDecomposition(common, individual, dict(dec.info))
    out.info.update(refit_converged=True, refit_iterations=iters)
    return out


def _reordered(vectors, values):
    idx = order_by_magnitude(values)
    return EigenPair(vectors[:, idx], values[idx])


def fit_plus(fam, net, cfg):
    """Convex fit followed by :func:`refit_eigenvalues`.

    Returns
    -------
    (LatentDecomposition, FitReport)
        The report's ``stages`` entry records both stages.
    """
    dec, report = fit(fam, net, cfg)
    start = time.perf_counter()
    refitted = refit_eigenvalues(fam, net, dec)
    refit_time = time.perf_counter() - start
    report.stages = {
        "fit": {"loss": _loss_dense(fam, net, dec.F, dec.G), "wall_time": report.wall_time},
        "refit": {
            "loss": _loss_dense(fam, net, refitted.F, refitted.G),
            "converged": refitted.info["refit_converged"],
            "iterations": refitted.info["refit_iterations"],
            "wall_time": refit_time,
        },
    }
    report.wall_time += refit_time
    report.final_ranks = refitted.ranks
    return refitted, report
