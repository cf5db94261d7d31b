import numpy as np
import pytest

from conftest import rand_network, rand_sym
from multiness.exceptions import InvalidInput
from multiness.linalg import hollow_frobenius
from multiness.model import (
    COMMON,
    BernoulliLogistic,
    GaussianIdentity,
    LatentDecomposition,
    MultiplexNetwork,
    Signature,
    block_gradient,
    expected_adjacency,
    get_family,
    masked_loss,
    similarity_matrix,
)

FAMILIES = [GaussianIdentity(), BernoulliLogistic()]


def random_dec(rng, n, m, scale=0.5):
    F = rand_sym(rng, n, scale)
    G = np.stack([rand_sym(rng, n, scale) for _ in range(m)])
    return LatentDecomposition.from_dense(F, G, tol=0.0)


def dense_loss(fam, net, F, G):
    return masked_loss(fam, net, LatentDecomposition.from_dense(F, G, tol=0.0))


def sym_unit(n, i, j):
    E = np.zeros((n, n))
    E[i, j] = E[j, i] = 1.0
    return E


def fd_gradient(fam, net, dec, block, h=1e-6):
    """Central differences of masked_loss under symmetric unit perturbations."""
    n = net.n
    F, G = dec.F.copy(), dec.G.copy()
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            E = sym_unit(n, i, j)
            if block == COMMON:
                up = dense_loss(fam, net, F + h * E, G)
                down = dense_loss(fam, net, F - h * E, G)
            else:
                Gp, Gm = G.copy(), G.copy()
                Gp[block] += h * E
                Gm[block] -= h * E
                up = dense_loss(fam, net, F, Gp)
                down = dense_loss(fam, net, F, Gm)
            out[i, j] = out[j, i] = (up - down) / (2 * h)
    return out


class TestSimilarity:
    def test_euclidean_case(self, rng):
        X = rng.standard_normal((5, 3))
        np.testing.assert_allclose(similarity_matrix(X, Signature(3, 0)), X @ X.T, atol=1e-14)

    def test_single_row(self):
        np.testing.assert_allclose(similarity_matrix(np.array([1.0, 1.0]), Signature(1, 1)), [[0.0]])

    def test_eigen_counts(self, rng):
        S = similarity_matrix(rng.standard_normal((10, 3)), Signature(2, 1))
        w = np.linalg.eigvalsh(S)
        tol = 1e-10 * np.abs(w).max()
        assert np.sum(w > tol) <= 2 and np.sum(w < -tol) <= 1

    def test_dimension_mismatch(self, rng):
        with pytest.raises(InvalidInput):
            similarity_matrix(rng.standard_normal((4, 2)), Signature(2, 1))


class TestMaskedLoss:
    def test_exact_fit_is_zero(self, rng):
        dec = random_dec(rng, 6, 3)
        net = MultiplexNetwork(dec.F[None] + dec.G)
        assert masked_loss(GaussianIdentity(), net, dec) == pytest.approx(0.0, abs=1e-20)

    def test_single_pair_residual(self):
        A = np.zeros((1, 3, 3))
        A[0, 0, 1] = A[0, 1, 0] = 2.0
        mask = np.zeros((3, 3), dtype=bool)
        mask[0, 1] = mask[1, 0] = True
        net = MultiplexNetwork(A, mask)
        assert masked_loss(GaussianIdentity(), net, LatentDecomposition.zeros(3, 1)) == pytest.approx(2.0)

    def test_bernoulli_at_zero(self, rng):
        net = rand_network(rng, n=7, m=2, family="bernoulli", missing=0.3)
        pairs = int(np.triu(net.mask, 1).sum())
        loss = masked_loss(BernoulliLogistic(), net, LatentDecomposition.zeros(7, 2))
        assert loss == pytest.approx(pairs * np.log(2))

    def test_bernoulli_rejects_non_binary(self, rng):
        net = rand_network(rng)
        with pytest.raises(InvalidInput):
            masked_loss(BernoulliLogistic(), net, LatentDecomposition.zeros(6, 3))

    def test_unobserved_values_ignored(self, rng):
        net = rand_network(rng, missing=0.4)
        dec = random_dec(rng, 6, 3)
        perturbed = np.where(net.mask, net.layers, 100.0)
        other = MultiplexNetwork(perturbed, net.mask)
        assert masked_loss(GaussianIdentity(), net, dec) == masked_loss(GaussianIdentity(), other, dec)

    def test_gaussian_matches_hollow_norm(self, rng):
        net = rand_network(rng, n=9, m=4)
        dec = random_dec(rng, 9, 4)
        expected = sum(0.5 * 0.5 * hollow_frobenius(net.layers[k] - dec.theta(k)) ** 2 for k in range(4))
        assert masked_loss(GaussianIdentity(), net, dec) == pytest.approx(expected, rel=1e-12)

    def test_self_loops_count_diagonal(self, rng):
        A = np.zeros((1, 2, 2))
        A[0] = np.eye(2)
        with_loops = MultiplexNetwork(A, self_loops=True)
        without = MultiplexNetwork(A, self_loops=False)
        zero = LatentDecomposition.zeros(2, 1)
        assert masked_loss(GaussianIdentity(), with_loops, zero) == pytest.approx(1.0)
        assert masked_loss(GaussianIdentity(), without, zero) == 0.0

    def test_bernoulli_convex_along_segments(self, rng):
        fam = BernoulliLogistic()
        net = rand_network(rng, family="bernoulli")
        for _ in range(20):
            a, b = random_dec(rng, 6, 3, 3.0), random_dec(rng, 6, 3, 3.0)
            mid = dense_loss(fam, net, (a.F + b.F) / 2, (a.G + b.G) / 2)
            ends = (masked_loss(fam, net, a) + masked_loss(fam, net, b)) / 2
            assert mid <= ends + 1e-12

    def test_stable_for_large_theta(self):
        fam = BernoulliLogistic()
        loss = fam.entry_loss(np.array([1.0, 0.0]), np.array([800.0, -800.0]))
        np.testing.assert_allclose(loss, [0.0, 0.0], atol=1e-300)


@pytest.mark.parametrize("fam", FAMILIES, ids=lambda f: f.kind)
@pytest.mark.parametrize("self_loops", [False, True])
@pytest.mark.parametrize("missing", [0.0, 0.3])
def test_gradient_matches_finite_differences(rng, fam, self_loops, missing):
    net = rand_network(rng, n=6, m=3, self_loops=self_loops, missing=missing, family=fam.kind)
    dec = random_dec(rng, 6, 3)
    for block in [COMMON, 0, 1, 2]:
        analytic = block_gradient(fam, net, dec, block)
        numeric = fd_gradient(fam, net, dec, block)
        # the symmetric pair perturbation moves (i, j) and (j, i): off-diagonal
        # derivative of the i<j loss equals the per-entry gradient
        scale = max(1.0, np.abs(numeric).max())
        assert np.abs(analytic - numeric).max() / scale < 1e-5


class TestBlockGradient:
    def test_gaussian_is_negative_residual(self, rng):
        net = rand_network(rng, missing=0.3)
        dec = random_dec(rng, 6, 3)
        for k in range(3):
            expected = np.where(net.mask[k], -(net.layers[k] - dec.theta(k)), 0.0)
            np.testing.assert_array_equal(block_gradient(GaussianIdentity(), net, dec, k), expected)
            assert np.all(np.diag(block_gradient(GaussianIdentity(), net, dec, k)) == 0)

    def test_bernoulli_bounded(self, rng):
        net = rand_network(rng, family="bernoulli")
        grad = block_gradient(BernoulliLogistic(), net, random_dec(rng, 6, 3, 5.0), 1)
        assert np.all(np.abs(grad) < 1)

    def test_common_is_sum_of_individual(self, rng):
        for fam in FAMILIES:
            net = rand_network(rng, family=fam.kind, missing=0.2)
            dec = random_dec(rng, 6, 3)
            total = sum(block_gradient(fam, net, dec, k) for k in range(3))
            np.testing.assert_array_equal(block_gradient(fam, net, dec, COMMON), total)


class TestExpectedAdjacency:
    def test_gaussian(self, rng):
        F, G = rand_sym(rng, 4), rand_sym(rng, 4)
        np.testing.assert_array_equal(expected_adjacency(GaussianIdentity(), F, G), F + G)

    def test_bernoulli(self):
        fam = BernoulliLogistic()
        np.testing.assert_allclose(expected_adjacency(fam, np.zeros((3, 3)), np.zeros((3, 3))), 0.5)
        P = expected_adjacency(fam, np.full((2, 2), 10.0), np.zeros((2, 2)))
        np.testing.assert_allclose(P, 1.0, atol=1e-4)
        P = expected_adjacency(fam, np.full((2, 2), -10.0), np.zeros((2, 2)))
        np.testing.assert_allclose(P, 0.0, atol=1e-4)


class TestContainers:
    def test_network_symmetrizes_and_hides_diagonal(self, rng):
        A = rng.standard_normal((2, 4, 4))
        net = MultiplexNetwork(A)
        np.testing.assert_array_equal(net.layers, np.swapaxes(net.layers, 1, 2))
        assert not net.mask[:, np.arange(4), np.arange(4)].any()
        assert np.all(np.diagonal(net.layers, axis1=1, axis2=2) == 0)
        assert net.fully_observed

    def test_nan_is_unobserved(self):
        A = np.zeros((1, 3, 3))
        A[0, 0, 2] = np.nan
        net = MultiplexNetwork(A)
        assert not net.mask[0, 0, 2] and not net.mask[0, 2, 0]
        assert net.layers[0, 0, 2] == 0.0
        assert not net.fully_observed

    def test_bad_shape(self):
        with pytest.raises(InvalidInput):
            MultiplexNetwork(np.zeros((2, 3, 4)))

    def test_decomposition_signatures(self, rng):
        V = rng.standard_normal((8, 3))
        F = similarity_matrix(V, Signature(2, 1))
        dec = LatentDecomposition.from_dense(F, np.zeros((2, 8, 8)))
        assert dec.common_signature == Signature(2, 1)
        assert dec.ranks == (3, (0, 0))
        np.testing.assert_allclose(dec.common.to_matrix(), F, atol=1e-10)

    def test_get_family(self):
        assert isinstance(get_family("logistic"), BernoulliLogistic)
        assert get_family("Gaussian") == GaussianIdentity()
        with pytest.raises(InvalidInput):
            get_family("poisson")
