"""Tuning parameter selection: noise estimation, adaptive penalties, edge cross-validation."""

import enum
import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .exceptions import CvFailed, CvWarning, HoldoutTooLarge, InvalidInput
from .simulate import hold_out
from .solver import SolverConfig, fit

__all__ = [
    "TuningMethod",
    "TuningSelection",
    "DEFAULT_DELTA",
    "marchenko_pastur_median",
    "sigma_mad",
    "adaptive_params",
    "edge_cv",
]

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.309


class TuningMethod(str, enum.Enum):
    ADAPTIVE_UNIFORM = "adaptive_uniform"
    ADAPTIVE_LAYERWISE = "adaptive_layerwise"
    CROSS_VALIDATED = "cross_validated"
    FIXED = "fixed"


@dataclass
class TuningSelection:
    lam: float
    alphas: np.ndarray
    delta: Optional[float]
    per_layer_sigma: np.ndarray
    method: TuningMethod
    cv: dict = field(default_factory=dict)

    def config(self, **kwargs):
        """:class:`SolverConfig` using this selection's ``lam`` and ``alphas``."""
        return SolverConfig(self.lam, self.alphas, **kwargs)


def _mp_density(x):
    return np.sqrt((4.0 - x) * x) / (2.0 * np.pi * x)


@lru_cache(maxsize=None)
def marchenko_pastur_median():
    """Median of the Marchenko-Pastur law with aspect ratio one (support ``[0, 4]``).

    Computed by inverting the numerically integrated distribution function.
    """

    def cdf_minus_half(t):
        value, _ = integrate.quad(_mp_density, 0.0, t, limit=200)
        return value - 0.5

    return optimize.brentq(cdf_minus_half, 1e-6, 4.0, xtol=1e-14)


def sigma_mad(A):
    """Noise level from the median singular value of a symmetric layer.

    ``median singular value / sqrt(n * mu)`` with ``mu`` the Marchenko-Pastur
    median; exact in the large-``n`` limit for white symmetric noise.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n < 2:
        raise InvalidInput("noise estimation needs n >= 2")
    s = np.abs(np.linalg.eigvalsh((A + A.T) / 2))
    return float(np.median(s) / np.sqrt(n * marchenko_pastur_median()))


def adaptive_params(net, delta=DEFAULT_DELTA, layerwise=False):
    """Penalties from per-layer noise estimates.

    Uniform: ``lam = (2 + delta) * sigma * sqrt(n m)`` with the pooled
    root-mean-square ``sigma`` and ``alpha_k = m^{-1/2}``.

    Layer-wise: ``lam = (2 + delta) * sqrt(n m) * sqrt(sum_k sigma_k^2)`` and
    ``alpha_k = m^{-1/2} * sigma_k / sqrt(sum_k sigma_k^2)``.
    """
    if not delta > -2:
        raise InvalidInput(f"delta must exceed -2, got {delta}")
    n, m = net.n, net.m
    sigmas = np.array([sigma_mad(A) for A in net.layers])
    total = float(np.sum(sigmas**2))
    base = np.full(m, m**-0.5)
    if total == 0:
        warnings.warn("all layers are zero; adaptive lambda set to 0", stacklevel=2)
        method = TuningMethod.ADAPTIVE_LAYERWISE if layerwise else TuningMethod.ADAPTIVE_UNIFORM
        return TuningSelection(0.0, base, delta, sigmas, method)
    if layerwise:
        lam = (2 + delta) * np.sqrt(n * m) * np.sqrt(total)
        alphas = base * np.sqrt(sigmas**2 / total)
        return TuningSelection(float(lam), alphas, delta, sigmas, TuningMethod.ADAPTIVE_LAYERWISE)
    sigma = np.sqrt(total / m)
    lam = (2 + delta) * sigma * np.sqrt(n * m)
    return TuningSelection(float(lam), base, delta, sigmas, TuningMethod.ADAPTIVE_UNIFORM)


def _candidate_params(kind, value, net, layerwise, alphas):
    n, m = net.n, net.m
    if kind == "delta":
        sel = adaptive_params(net, value, layerwise)
        return sel.lam, sel.alphas
    default_alphas = np.full(m, m**-0.5) if alphas is None else np.broadcast_to(alphas, (m,))
    if kind == "lambda":
        return float(value), default_alphas
    if kind == "C":
        return float(value) * np.sqrt(n * m), default_alphas
    raise InvalidInput(f"unknown candidate kind {kind!r}; use 'lambda', 'delta' or 'C'")


def _fold_seed(seed, fold):
    return int(np.random.SeedSequence([int(seed), fold]).generate_state(1)[0])


def edge_cv(
    fam,
    net,
    candidates,
    holdout_frac=0.1,
    n_folds=5,
    seed=0,
    kind="lambda",
    layerwise=False,
    alphas=None,
    **solver_kwargs,
):
    """Choose a tuning parameter by edge cross-validation.

    Each fold hides a random symmetric ``holdout_frac`` of the observed pairs
    of every layer, fits on the rest, and scores the hidden entries by mean
    deviance (squared error for Gaussian edges).

    Parameters
    ----------
    candidates : sequence of float
        Values of ``lam`` (``kind="lambda"``), of ``delta`` in the adaptive
        rule (``kind="delta"``), or of ``C`` in ``lam = C sqrt(n m)``
        (``kind="C"``).
    holdout_frac : float
        Fraction of pairs hidden per fold, in ``(0, 1)``.
    n_folds : int
        Number of random hold-out repetitions.
    seed : int
        Fold masks depend only on ``seed``.

    Returns
    -------
    TuningSelection
        ``cv`` holds the sorted candidate values, per-fold scores (``nan`` for
        skipped folds), mean scores and the chosen value.  Ties go to the
        smaller penalty.
    """
    if not 0 < holdout_frac < 1:
        raise InvalidInput(f"holdout_frac must lie in (0, 1), got {holdout_frac}")
    values = np.sort(np.asarray(candidates, dtype=float).reshape(-1))
    if values.size == 0:
        raise InvalidInput("at least one candidate is required")
    scores = np.full((values.size, n_folds), np.nan)
    used = 0
    for fold in range(n_folds):
        try:
            train, heldout = hold_out(net, holdout_frac, _fold_seed(seed, fold))
        except HoldoutTooLarge as exc:
            warnings.warn(f"fold {fold} skipped: {exc}", CvWarning, stacklevel=2)
            continue
        if heldout.shape[0] == 0:
            warnings.warn(f"fold {fold} skipped: nothing held out", CvWarning, stacklevel=2)
            continue
        used += 1
        k, i, j = heldout.T
        truth = net.layers[k, i, j]
        for c, value in enumerate(values):
            lam, cand_alphas = _candidate_params(kind, value, train, layerwise, alphas)
            dec, _ = fit(fam, train, SolverConfig(lam, cand_alphas, **solver_kwargs))
            theta = dec.F[i, j] + dec.G[k, i, j]
            scores[c, fold] = float(np.mean(fam.deviance(truth, theta)))
            logger.debug("fold %d candidate %g score %.6g", fold, value, scores[c, fold])
    if used == 0:
        raise CvFailed("every cross-validation fold was skipped")
    mean_scores = np.nanmean(scores, axis=1)
    best = float(np.min(mean_scores))
    # first (smallest) candidate within rounding of the minimum
    choice = int(np.flatnonzero(mean_scores <= best + 1e-12 * max(1.0, abs(best)))[0])
    chosen = float(values[choice])
    lam, final_alphas = _candidate_params(kind, chosen, net, layerwise, alphas)
    sigmas = np.array([sigma_mad(A) for A in net.layers])
    return TuningSelection(
        float(lam),
        np.asarray(final_alphas, dtype=float),
        chosen if kind == "delta" else None,
        sigmas,
        TuningMethod.CROSS_VALIDATED,
        cv=dict(kind=kind, candidates=values, scores=scores, mean_scores=mean_scores,
                chosen=chosen, folds_used=used),
    )
