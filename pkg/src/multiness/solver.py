"""Blockwise proximal gradient descent for the nuclear-norm penalized fit."""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import BudgetExceeded, InvalidInput
from .linalg import RANK_TOL, EigenPair, soft_threshold_eig, truncate_rank
from .model import LatentDecomposition, _eig_above, _loss_dense, _neg_residuals

__all__ = [
    "SolverConfig",
    "FitReport",
    "initialize_common",
    "objective",
    "pgd_step",
    "fit",
]

logger = logging.getLogger(__name__)

# objective increases below this (relative) are rounding noise, not divergence
_MONOTONE_SLACK = 1e-10


@dataclass
class SolverConfig:
    """Tuning and control parameters for :func:`fit`.

    ``alphas`` may be a scalar, which is broadcast to every layer.  Iteration
    stops once the relative objective decrease is below ``rel_tol`` *and* no
    block moved by more than ``step_tol`` (relative Frobenius) in the last
    sweep.
    """

    lam: float
    alphas: Sequence[float]
    eta: float = 1.0
    max_iter: int = 200
    rel_tol: float = 1e-6
    step_tol: float = 1e-6
    psd_constrain: bool = False
    svd_budget: Optional[int] = None
    d1_init: Optional[int] = None
    rank_tol: float = RANK_TOL
    max_backtracks: int = 30

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidInput(f"lambda must be non-negative, got {self.lam}")
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float))
        if np.any(~(alphas >= 0)):
            raise InvalidInput("alphas must be non-negative")
        self.alphas = alphas
        if not self.eta > 0:
            raise InvalidInput(f"eta must be positive, got {self.eta}")
        if self.max_iter < 1:
            raise InvalidInput("max_iter must be at least 1")
        if self.svd_budget is not None and self.svd_budget < 1:
            raise InvalidInput("svd_budget must be at least 1")

    def alphas_for(self, m):
        if self.alphas.size == 1:
            return np.full(m, float(self.alphas[0]))
        if self.alphas.size != m:
            raise InvalidInput(f"{self.alphas.size} alphas given for {m} layers")
        return self.alphas


@dataclass
class FitReport:
    objective_trace: list
    iterations: int
    converged: bool
    final_ranks: tuple
    wall_time: float
    eta: float = 1.0
    fixed_point_residual: float = float("nan")
    stages: dict = field(default_factory=dict)


def initialize_common(net, d1=None):
    """Rank-``d1`` truncation of the layer mean.

    Unobserved entries count as zero and the mean divides by ``m``.  The
    diagonal is zeroed when the network has no self-loops.  ``d1=None`` keeps
    the full mean.
    """
    n = net.n
    d1 = n if d1 is None else int(d1)
    if d1 < 0 or d1 > n:
        raise InvalidInput(f"d1 must lie in [0, {n}], got {d1}")
    mean = net.layers.sum(axis=0) / net.m
    F0 = mean if d1 == n else truncate_rank(mean, d1)
    if not net.self_loops:
        F0 = F0.copy()
        np.fill_diagonal(F0, 0.0)
    return F0


def objective(fam, net, dec, lam, alphas):
    """Penalized objective minimized by :func:`fit`.

    ``loss + lam * ||F||_* + sum_k lam * alpha_k * ||G_k||_*`` where the loss
    sums the per-entry negative log-likelihood over observed *ordered* pairs
    (plus the diagonal when self-loops are modelled).  Without self-loops this
    loss is ``2 * masked_loss``.  It is the scaling whose matrix gradient is
    :func:`~multiness.model.block_gradient`, which makes each block update an
    exact proximal gradient step.
    """
    alphas = np.broadcast_to(np.asarray(alphas, dtype=float), (dec.m,))
    penalty = lam * dec.common.nuclear_norm
    penalty += sum(lam * a * Gk.nuclear_norm for a, Gk in zip(alphas, dec.individual))
    return _loss_dense(fam, net, dec.F, dec.G, ordered=True) + penalty


def _prox(M, T, budget, psd):
    n = M.shape[0]
    while True:
        try:
            ep = soft_threshold_eig(M, T, budget)
            break
        except BudgetExceeded as exc:
            budget = min(n, 2 * exc.budget)
            logger.debug("svd budget raised to %d", budget)
    if psd:
        keep = ep.values > 0
        ep = EigenPair(ep.vectors[:, keep], ep.values[keep])
    return ep, budget


def _sweep(fam, net, dec, lam, alphas, eta, psd, budget):
    m = net.m
    F, G = dec.F, dec.G
    grad_F = _neg_residuals(fam, net, F, G).sum(axis=0)
    F_ep, budget = _prox(F - (eta / m) * grad_F, eta * lam / m, budget, psd)
    F_new = F_ep.to_matrix()
    theta = F_new[None] + G
    grad_G = np.where(net.mask, -fam.residual(net.layers, theta), 0.0)
    G_eps = []
    for k in range(m):
        Gk_ep, budget = _prox(G[k] - eta * grad_G[k], eta * lam * alphas[k], budget, psd)
        G_eps.append(Gk_ep)
    new = LatentDecomposition(F_ep, G_eps)
    new.__dict__["F"] = F_new
    return new, budget


def pgd_step(fam, net, dec, cfg):
    """One Gauss-Seidel sweep: update ``F``, then every ``G_k`` given the new ``F``.

    The ``F`` block takes a gradient step of size ``eta / m`` and is soft
    thresholded at ``eta * lam / m``; block ``G_k`` uses step ``eta`` and
    threshold ``eta * lam * alpha_k``.

    Returns
    -------
    (LatentDecomposition, float)
        The updated decomposition and its penalized objective.
    """
    alphas = cfg.alphas_for(net.m)
    new, _ = _sweep(fam, net, dec, cfg.lam, alphas, cfg.eta, cfg.psd_constrain, cfg.svd_budget)
    return new, objective(fam, net, new, cfg.lam, alphas)


def _rel_change(old, new):
    return np.linalg.norm(new - old) / max(1.0, np.linalg.norm(old))


def _block_change(old, new):
    change = _rel_change(old.F, new.F)
    for Gk_old, Gk_new in zip(old.G, new.G):
        change = max(change, _rel_change(Gk_old, Gk_new))
    return float(change)


def _trim(ep, tol):
    if ep.rank == 0:
        return ep
    keep = np.abs(ep.values) > tol * max(1.0, float(np.abs(ep.values).max()))
    return EigenPair(ep.vectors[:, keep], ep.values[keep])


def fit(fam, net, cfg, init=None):
    """Minimize the penalized objective by proximal gradient descent.

    Starts from ``F = initialize_common(net, cfg.d1_init)`` and ``G_k = 0``
    unless ``init`` is given.  The step size is halved whenever a sweep would
    increase the objective; with the default ``eta = 1`` this only happens for
    families whose curvature bound exceeds one.

    Returns
    -------
    (LatentDecomposition, FitReport)
    """
    start = time.perf_counter()
    fam.validate(net.layers, net.mask)
    m, n = net.m, net.n
    alphas = cfg.alphas_for(m)
    lam = float(cfg.lam)

    if init is None:
        F0 = initialize_common(net, cfg.d1_init)
        dec = LatentDecomposition(_eig_above(F0, 0.0), [EigenPair.empty(n)] * m)
        dec.__dict__["F"] = F0
    else:
        dec = init

    obj = objective(fam, net, dec, lam, alphas)
    trace = [obj]
    eta = float(cfg.eta)
    budget = cfg.svd_budget
    converged = False
    change = float("inf")
    it = 0
    for it in range(1, cfg.max_iter + 1):
        for _ in range(cfg.max_backtracks + 1):
            new, new_budget = _sweep(fam, net, dec, lam, alphas, eta, cfg.psd_constrain, budget)
            new_obj = objective(fam, net, new, lam, alphas)
            if new_obj <= obj + _MONOTONE_SLACK * max(1.0, abs(obj)):
                break
            eta /= 2
            logger.debug("objective increased; step size halved to %g", eta)
        budget = new_budget
        change = _block_change(dec, new)
        decrease = (obj - new_obj) / max(1.0, abs(obj))
        dec, obj = new, new_obj
        trace.append(obj)
        if decrease < cfg.rel_tol and change < cfg.step_tol:
            converged = True
            break

    tol = cfg.rank_tol
    out = LatentDecomposition(_trim(dec.common, tol), [_trim(G, tol) for G in dec.individual])
    report = FitReport(
        objective_trace=[float(v) for v in trace],
        iterations=it,
        converged=converged,
        final_ranks=out.ranks,
        wall_time=time.perf_counter() - start,
        eta=eta,
        fixed_point_residual=change,
    )
    if not converged:
        logger.info("fit stopped at max_iter=%d (last change %.3g)", cfg.max_iter, change)
    return out, report
