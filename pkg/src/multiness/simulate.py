"""Seeded synthetic multiplex generators and edge hold-out utilities.

Random streams are keyed by ``(seed, stream, layer)`` through
:class:`numpy.random.SeedSequence` spawn keys:

========  ==========================================
stream    draws
========  ==========================================
0         common latent positions ``V``
1         individual latent positions ``U_k`` (one per layer)
2         edge noise / Bernoulli draws (one per layer)
3         random rotations ``O_k`` (one per layer)
4         hold-out selection (one per layer)
========  ==========================================

Adding layers never changes the draws of existing ones.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import HoldoutTooLarge, InvalidInput
from .model import MultiplexNetwork, Signature, get_family, similarity_matrix

__all__ = [
    "SimTruth",
    "stream",
    "gen_gaussian",
    "gen_logistic",
    "gen_correlated",
    "hold_out",
    "random_rotation",
]

_COMMON, _INDIVIDUAL, _NOISE, _ROTATION, _HOLDOUT = range(5)


def stream(seed, kind, layer=0):
    """Independent generator for one (stream, layer) slot of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(kind, layer))
    return np.random.default_rng(ss)


@dataclass
class SimTruth:
    """Ground truth behind a simulated multiplex network."""

    V: np.ndarray
    U: list
    common_signature: Signature
    individual_signatures: list
    family: object
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.F = similarity_matrix(self.V, self.common_signature)
        self.G = np.stack(
            [similarity_matrix(Uk, s) for Uk, s in zip(self.U, self.individual_signatures)]
        )

    @property
    def m(self):
        return len(self.U)

    @property
    def n(self):
        return self.V.shape[0]

    @property
    def ranks(self):
        return self.common_signature.d, tuple(s.d for s in self.individual_signatures)

    def theta(self, k):
        return self.F + self.G[k]


def _check_dims(n, m, d1, d2):
    if n < 1 or m < 1:
        raise InvalidInput("n and m must be positive")
    if d1 < 0 or d2 < 0:
        raise InvalidInput("latent dimensions must be non-negative")


def _symmetric_noise(rng, n, sigma):
    iu = np.triu_indices(n, 1)
    E = np.zeros((n, n))
    E[iu] = sigma * rng.standard_normal(iu[0].size)
    return E + E.T


def random_rotation(rng, d):
    """Haar-distributed ``d x d`` orthogonal matrix."""
    if d == 0:
        return np.zeros((0, 0))
    Z = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def _gaussian_layers(F, G, sigma, seed):
    m, n = G.shape[0], F.shape[0]
    layers = np.empty((m, n, n))
    for k in range(m):
        A = F + G[k]
        if sigma > 0:
            A = A + _symmetric_noise(stream(seed, _NOISE, k), n, sigma)
        np.fill_diagonal(A, 0.0)
        layers[k] = A
    return MultiplexNetwork(layers, self_loops=False)


def gen_gaussian(n, m, d1, d2, sigma, seed):
    """Gaussian multiplex with inner-product similarity and no self-loops.

    ``A_k = F + G_k + E_k`` with ``F = V V^T``, ``G_k = U_k U_k^T``, standard
    normal latent entries, and symmetric N(0, sigma^2) noise off the diagonal.
    The diagonal of every layer is zero.
    """
    _check_dims(n, m, d1, d2)
    if sigma < 0:
        raise InvalidInput("sigma must be non-negative")
    V = stream(seed, _COMMON).standard_normal((n, d1))
    U = [stream(seed, _INDIVIDUAL, k).standard_normal((n, d2)) for k in range(m)]
    truth = SimTruth(
        V, U, Signature(d1, 0), [Signature(d2, 0)] * m, get_family("gaussian", sigma),
        dict(generator="gaussian", n=n, m=m, d1=d1, d2=d2, sigma=sigma, seed=seed),
    )
    return _gaussian_layers(truth.F, truth.G, sigma, seed), truth


def gen_correlated(n, m, d1, d2, sigma, rho, seed):
    """Gaussian multiplex whose individual positions lean on the common ones.

    ``U_k = rho * V O_k + sqrt(1 - rho^2) Z_k`` with Haar rotations ``O_k``.
    ``Z_k`` comes from the same stream as ``U_k`` in :func:`gen_gaussian`, so
    ``rho = 0`` reproduces that generator exactly.
    """
    _check_dims(n, m, d1, d2)
    if d1 != d2:
        raise InvalidInput(f"correlated generator requires d1 == d2, got {d1} and {d2}")
    if not 0 <= rho <= 1:
        raise InvalidInput(f"rho must lie in [0, 1], got {rho}")
    if sigma < 0:
        raise InvalidInput("sigma must be non-negative")
    V = stream(seed, _COMMON).standard_normal((n, d1))
    scale = np.sqrt(1.0 - rho**2)
    U = []
    for k in range(m):
        Z = stream(seed, _INDIVIDUAL, k).standard_normal((n, d2))
        if rho == 0:
            U.append(Z)
        else:
            O = random_rotation(stream(seed, _ROTATION, k), d2)
            U.append(rho * V @ O + scale * Z)
    truth = SimTruth(
        V, U, Signature(d1, 0), [Signature(d2, 0)] * m, get_family("gaussian", sigma),
        dict(generator="correlated", n=n, m=m, d1=d1, d2=d2, sigma=sigma, rho=rho, seed=seed),
    )
    return _gaussian_layers(truth.F, truth.G, sigma, seed), truth


def gen_logistic(n, m, d1, d2, beta, seed):
    """Binary multiplex with ``P_k = expit(V V^T + U_k U_k^T - beta 11^T)``.

    The density offset is recorded in the truth as an extra disassortative
    common coordinate ``sqrt(beta) * 1``, so ``truth.F`` includes ``-beta``.
    """
    _check_dims(n, m, d1, d2)
    if beta < 0:
        raise InvalidInput("beta must be non-negative")
    V = stream(seed, _COMMON).standard_normal((n, d1))
    U = [stream(seed, _INDIVIDUAL, k).standard_normal((n, d2)) for k in range(m)]
    sig1 = Signature(d1, 0)
    if beta > 0:
        V = np.hstack([V, np.full((n, 1), np.sqrt(beta))])
        sig1 = Signature(d1, 1)
    truth = SimTruth(
        V, U, sig1, [Signature(d2, 0)] * m, get_family("bernoulli"),
        dict(generator="logistic", n=n, m=m, d1=d1, d2=d2, beta=beta, seed=seed),
    )
    iu = np.triu_indices(n, 1)
    layers = np.zeros((m, n, n))
    for k in range(m):
        P = expit(truth.theta(k)[iu])
        draws = stream(seed, _NOISE, k).random(P.size) < P
        A = np.zeros((n, n))
        A[iu] = draws
        layers[k] = A + A.T
    return MultiplexNetwork(layers, self_loops=False), truth


def hold_out(net, frac, seed, layers=None, nonzero_only=False):
    """Hide a random symmetric subset of observed entries.

    Parameters
    ----------
    net : MultiplexNetwork
    frac : float
        Fraction of eligible pairs to hide in each selected layer, rounded to
        the nearest count.
    seed : int
    layers : sequence of int, optional
        Layers to hold out from; default all.
    nonzero_only : bool
        Only pairs with a non-zero weight are eligible.

    Returns
    -------
    train : MultiplexNetwork
        Copy of ``net`` with the held-out entries unobserved.
    heldout : ndarray of int, shape (h, 3)
        Rows ``(k, i, j)`` with ``i < j`` (``i <= j`` with self-loops).
    """
    if not 0 <= frac < 1:
        raise InvalidInput(f"hold-out fraction must lie in [0, 1), got {frac}")
    layers = range(net.m) if layers is None else [int(k) for k in layers]
    n = net.n
    offset = 0 if net.self_loops else 1
    iu = np.triu_indices(n, offset)
    mask = net.mask.copy()
    rows = []
    for k in layers:
        eligible = net.mask[k][iu]
        if nonzero_only:
            eligible &= net.layers[k][iu] != 0
        candidates = np.flatnonzero(eligible)
        count = int(round(frac * candidates.size))
        if count == 0:
            continue
        rng = stream(seed, _HOLDOUT, k)
        chosen = np.sort(rng.choice(candidates, size=count, replace=False))
        i, j = iu[0][chosen], iu[1][chosen]
        mask[k, i, j] = False
        mask[k, j, i] = False
        if not mask[k].any():
            raise HoldoutTooLarge(f"layer {k} has no observed entries after hold-out")
        rows.append(np.column_stack([np.full(count, k), i, j]))
    heldout = np.concatenate(rows) if rows else np.zeros((0, 3), dtype=int)
    return MultiplexNetwork(net.layers, mask, net.self_loops), heldout.astype(int)
