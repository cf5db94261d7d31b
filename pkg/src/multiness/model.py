"""Edge families, multiplex containers, and the masked likelihood with its gradients."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .exceptions import InvalidInput
from .linalg import RANK_TOL, EigenPair, order_by_magnitude

__all__ = [
    "Signature",
    "EdgeFamily",
    "GaussianIdentity",
    "BernoulliLogistic",
    "get_family",
    "MultiplexNetwork",
    "LatentDecomposition",
    "similarity_matrix",
    "masked_loss",
    "block_gradient",
    "expected_adjacency",
    "COMMON",
]

COMMON = "common"


@dataclass(frozen=True)
class Signature:
    """Numbers of assortative (``p``) and disassortative (``q``) latent dimensions."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise InvalidInput(f"signature counts must be non-negative: {self}")

    @property
    def d(self):
        return self.p + self.q

    def diagonal(self):
        """Diagonal of the ``I_{p,q}`` sign matrix."""
        return np.concatenate([np.ones(self.p), -np.ones(self.q)])


class EdgeFamily:
    """Edge distribution with its canonical link.

    Subclasses supply the per-entry negative log-likelihood (up to constants in
    the data), the link mapping the natural parameter to the mean, and a
    deviance used to score held-out entries.
    """

    kind = "abstract"
    #: upper bound on the second derivative of ``entry_loss`` in ``theta``
    curvature = 1.0

    def __init__(self, nuisance=None):
        self.nuisance = nuisance

    def __repr__(self):
        return f"{type(self).__name__}(nuisance={self.nuisance!r})"

    def __eq__(self, other):
        return type(self) is type(other) and self.nuisance == other.nuisance

    def __hash__(self):
        return hash((type(self), self.nuisance))

    def link(self, theta):
        raise NotImplementedError

    def entry_loss(self, A, theta):
        raise NotImplementedError

    def deviance(self, A, theta):
        raise NotImplementedError

    def variance(self, theta):
        """Derivative of the link (variance function at the natural parameter)."""
        raise NotImplementedError

    def residual(self, A, theta):
        return A - self.link(theta)

    def validate(self, layers, mask):
        pass


class GaussianIdentity(EdgeFamily):
    """Gaussian edges with identity link; the loss is plain least squares.

    ``nuisance`` is the noise standard deviation if known.  It is recorded but
    never enters the loss.
    """

    kind = "gaussian"
    curvature = 1.0

    def link(self, theta):
        return np.asarray(theta, dtype=float)

    def variance(self, theta):
        return np.ones_like(np.asarray(theta, dtype=float))

    def entry_loss(self, A, theta):
        return 0.5 * (A - theta) ** 2

    def deviance(self, A, theta):
        return (A - theta) ** 2


class BernoulliLogistic(EdgeFamily):
    """Binary edges with logistic link."""

    kind = "bernoulli"
    curvature = 0.25

    def link(self, theta):
        return expit(theta)

    def variance(self, theta):
        p = expit(theta)
        return p * (1 - p)

    def entry_loss(self, A, theta):
        # log(1 + e^theta) without overflow
        return np.log1p(np.exp(-np.abs(theta))) + np.maximum(theta, 0.0) - A * theta

    def deviance(self, A, theta):
        return 2.0 * self.entry_loss(A, theta)

    def validate(self, layers, mask):
        observed = layers[mask]
        if not np.all((observed == 0) | (observed == 1)):
            raise InvalidInput("Bernoulli family requires observed entries in {0, 1}")


_FAMILIES = {
    "gaussian": GaussianIdentity,
    "bernoulli": BernoulliLogistic,
    "logistic": BernoulliLogistic,
}


def get_family(name, nuisance=None):
    """Look up an edge family by name (``gaussian``, ``bernoulli``/``logistic``)."""
    if isinstance(name, EdgeFamily):
        return name
    try:
        return _FAMILIES[name.lower()](nuisance)
    except KeyError:
        raise InvalidInput(f"unknown edge family {name!r}") from None


@dataclass
class MultiplexNetwork:
    """``m`` symmetric ``n x n`` layers on a shared node set.

    Parameters
    ----------
    layers : array_like, shape (m, n, n)
        Adjacency matrices.  Each is symmetrized on construction.  Entries that
        are NaN are treated as unobserved.
    mask : array_like of bool, shape (m, n, n), optional
        True where an entry is observed.  Defaults to every finite entry.
    self_loops : bool
        Whether diagonal entries carry data.  When False the diagonal is marked
        unobserved and never enters a likelihood or gradient.

    Unobserved entries of ``layers`` are stored as zero.
    """

    layers: np.ndarray
    mask: Optional[np.ndarray] = None
    self_loops: bool = False

    def __post_init__(self):
        layers = np.array(self.layers, dtype=float)
        if layers.ndim == 2:
            layers = layers[None]
        if layers.ndim != 3 or layers.shape[1] != layers.shape[2]:
            raise InvalidInput(f"layers must have shape (m, n, n), got {layers.shape}")
        if self.mask is None:
            mask = np.isfinite(layers)
        else:
            mask = np.array(self.mask, dtype=bool)
            if mask.ndim == 2:
                mask = np.broadcast_to(mask, layers.shape).copy()
            if mask.shape != layers.shape:
                raise InvalidInput(f"mask shape {mask.shape} != layers shape {layers.shape}")
        mask = mask & np.swapaxes(mask, 1, 2) & np.isfinite(layers) & np.isfinite(
            np.swapaxes(layers, 1, 2)
        )
        if not self.self_loops:
            idx = np.arange(layers.shape[1])
            mask[:, idx, idx] = False
        layers = np.where(mask, layers, 0.0)
        layers = (layers + np.swapaxes(layers, 1, 2)) / 2
        self.layers = layers
        self.mask = mask
        self.self_loops = bool(self.self_loops)

    @property
    def m(self):
        return self.layers.shape[0]

    @property
    def n(self):
        return self.layers.shape[1]

    @property
    def fully_observed(self):
        if self.self_loops:
            return bool(self.mask.all())
        off = ~np.eye(self.n, dtype=bool)
        return bool(self.mask[:, off].all())

    @cached_property
    def pair_weights(self):
        """Weight of each entry in the loss: 1/2 off the diagonal, 1 on it.

        Summing ``weight * loss`` over the full matrix counts each observed
        unordered pair once.
        """
        w = self.mask * 0.5
        if self.self_loops:
            idx = np.arange(self.n)
            w[:, idx, idx] = self.mask[:, idx, idx]
        return w

    def with_mask(self, mask):
        """Copy of this network restricted to ``mask`` (and the current mask)."""
        return MultiplexNetwork(self.layers, self.mask & mask, self.self_loops)

    def subset_layers(self, idx):
        idx = np.atleast_1d(idx)
        return MultiplexNetwork(self.layers[idx], self.mask[idx], self.self_loops)


@dataclass
class LatentDecomposition:
    """Common matrix ``F`` and individual matrices ``G_k`` in eigen form.

    Dense forms are built lazily from the eigenpairs.
    """

    common: EigenPair
    individual: Sequence[EigenPair]
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.individual = tuple(self.individual)
        n = self.common.n
        for G in self.individual:
            if G.n != n:
                raise InvalidInput("all blocks must share the node count")

    @classmethod
    def zeros(cls, n, m):
        return cls(EigenPair.empty(n), [EigenPair.empty(n) for _ in range(m)])

    @classmethod
    def from_dense(cls, F, G, tol=RANK_TOL):
        """Eigendecompose dense blocks, keeping eigenvalues above ``tol`` (relative).

        The supplied dense matrices are cached as-is, so ``dec.F`` returns ``F``
        bitwise.
        """
        F = np.asarray(F, dtype=float)
        G = np.asarray(G, dtype=float)
        dec = cls(_eig_above(F, tol), [_eig_above(Gk, tol) for Gk in G])
        dec.__dict__["F"] = F
        dec.__dict__["G"] = G
        return dec

    @property
    def n(self):
        return self.common.n

    @property
    def m(self):
        return len(self.individual)

    @cached_property
    def F(self):
        return self.common.to_matrix()

    @cached_property
    def G(self):
        n = self.n
        if not self.individual:
            return np.zeros((0, n, n))
        return np.stack([Gk.to_matrix() for Gk in self.individual])

    @property
    def ranks(self):
        """``(d1, (d2_1, ..., d2_m))``."""
        return self.common.rank, tuple(G.rank for G in self.individual)

    @property
    def common_signature(self):
        return Signature(*self.common.signature)

    @property
    def individual_signatures(self):
        return tuple(Signature(*G.signature) for G in self.individual)

    def theta(self, k):
        """Natural parameter matrix ``F + G_k`` for layer ``k``."""
        return self.F + self.G[k]


def _eig_above(M, tol):
    w, V = np.linalg.eigh((M + M.T) / 2)
    scale = max(1.0, float(np.abs(w).max())) if w.size else 1.0
    keep = np.abs(w) > tol * scale
    w, V = w[keep], V[:, keep]
    idx = order_by_magnitude(w)
    return EigenPair(V[:, idx], w[idx])


def similarity_matrix(X, sig):
    """Generalized inner product matrix ``X I_{p,q} X^T``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != sig.p + sig.q:
        raise InvalidInput(f"X has {X.shape[1]} columns but signature {sig} has d={sig.d}")
    S = (X * sig.diagonal()) @ X.T
    return (S + S.T) / 2


def _as_dense(dec):
    return dec.F, dec.G


def _check_dims(net, F, G):
    if F.shape != (net.n, net.n) or G.shape != net.layers.shape:
        raise InvalidInput(
            f"decomposition shapes F{F.shape}, G{G.shape} do not match network "
            f"(m={net.m}, n={net.n})"
        )


def _loss_dense(fam, net, F, G, ordered=False):
    """Masked loss; ``ordered=True`` counts off-diagonal pairs in both orders."""
    theta = F[None] + G
    per_entry = fam.entry_loss(net.layers, theta)
    weights = net.mask if ordered else net.pair_weights
    return float(np.sum(np.where(net.mask, weights * per_entry, 0.0)))


def _neg_residuals(fam, net, F, G):
    """Per-layer gradients ``-(A_k - mu_k)`` zeroed on unobserved entries."""
    theta = F[None] + G
    return np.where(net.mask, -fam.residual(net.layers, theta), 0.0)


def masked_loss(fam, net, dec):
    """Negative log-likelihood summed over observed pairs ``i < j``.

    Diagonal entries are included only when ``net.self_loops`` is set.
    """
    fam.validate(net.layers, net.mask)
    F, G = _as_dense(dec)
    _check_dims(net, F, G)
    return _loss_dense(fam, net, F, G)


def block_gradient(fam, net, dec, block):
    """Gradient of :func:`masked_loss` with respect to one block.

    Parameters
    ----------
    block : "common" or int
        ``"common"`` for ``F``; a layer index ``k`` for ``G_k``.

    Returns
    -------
    ndarray, shape (n, n)
        Entry ``(i, j)`` is the derivative under a symmetric perturbation of
        the pair ``(i, j)``.
    """
    fam.validate(net.layers, net.mask)
    F, G = _as_dense(dec)
    _check_dims(net, F, G)
    if block == COMMON:
        return _neg_residuals(fam, net, F, G).sum(axis=0)
    k = int(block)
    theta = F + G[k]
    return np.where(net.mask[k], -fam.residual(net.layers[k], theta), 0.0)


def expected_adjacency(fam, F, Gk):
    """Elementwise link applied to ``F + G_k``."""
    return fam.link(np.asarray(F, dtype=float) + np.asarray(Gk, dtype=float))
