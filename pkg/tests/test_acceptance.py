"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N PASS|FAIL`` line (collected again in the
pytest terminal summary) and then asserts the criterion at its stated
tolerance.  Replicate counts follow the criteria exactly (20 seeded reps).
"""

import time
import warnings

import numpy as np
import pytest

from conftest import imputation_rmse, rand_network, rand_sym, record_criterion
from test_model import fd_gradient, random_dec
from test_refit import bernoulli_instance, coefficients, explicit_design, newton_logistic
from test_solver import closed_form_sweep, dense_dec

from multiness import cli
from multiness.baseline import oracle_alternating
from multiness.embed import error_metrics, identifiability_check
from multiness.io import read_decomposition, read_multiplex
from multiness.linalg import EigenPair, soft_threshold_svd
from multiness.model import (
    COMMON,
    BernoulliLogistic,
    GaussianIdentity,
    LatentDecomposition,
    MultiplexNetwork,
    block_gradient,
)
from multiness.refit import fit_plus, refit_eigenvalues
from multiness.simulate import gen_gaussian, gen_logistic
from multiness.solver import SolverConfig, fit, pgd_step
from multiness.tuning import adaptive_params

GAUSS = GaussianIdentity()
BERN = BernoulliLogistic()
REPS = 20


def _quiet(func, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return func(*args, **kwargs)


def _monotone(trace, slack=1e-9):
    trace = np.asarray(trace)
    return bool(np.all(np.diff(trace) <= slack * np.maximum(1.0, np.abs(trace[:-1]))))


@pytest.fixture(scope="module")
def recovery_runs():
    """Criterion-5 setting: n=200, m=8, d1=d2=2, sigma=1, adaptive tuning."""
    runs = []
    for seed in range(REPS):
        net, truth = gen_gaussian(200, 8, 2, 2, 1.0, seed)
        dec, rep = _quiet(fit_plus, GAUSS, net, adaptive_params(net).config())
        orc = _quiet(oracle_alternating, net, 2, 2)
        runs.append((net, truth, dec, rep, orc))
    return runs


def test_criterion_01_closed_form_equivalence():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(5):
        A = np.stack([rand_sym(rng, 20) for _ in range(3)])
        net = MultiplexNetwork(A, self_loops=True)
        F, G = rand_sym(rng, 20), np.stack([rand_sym(rng, 20) for _ in range(3)])
        lam, alphas = 2.0, np.full(3, 3**-0.5)
        new, _ = pgd_step(GAUSS, net, dense_dec(F, G), SolverConfig(lam, alphas, eta=1.0))
        F_ref, G_ref = closed_form_sweep(A, G, lam, alphas)
        worst = max(worst, np.linalg.norm(new.F - F_ref),
                    *(np.linalg.norm(new.G[k] - G_ref[k]) for k in range(3)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 1.0
    assert record_criterion(1, "closed-form equivalence", ok, f"max diff {worst:.1e}, {elapsed:.2f}s")


def test_criterion_02_gradient_correctness():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    for fam, family in [(GAUSS, "gaussian"), (BERN, "bernoulli")]:
        for self_loops in (False, True):
            for missing in (0.0, 0.3):
                net = rand_network(rng, 6, 3, self_loops=self_loops, missing=missing, family=family)
                dec = random_dec(rng, 6, 3)
                for block in [COMMON, 0, 1, 2]:
                    analytic = block_gradient(fam, net, dec, block)
                    numeric = fd_gradient(fam, net, dec, block)
                    err = np.abs(analytic - numeric).max() / max(1.0, np.abs(numeric).max())
                    worst = max(worst, err)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 10
    assert record_criterion(2, "gradient vs finite differences", ok, f"max rel err {worst:.1e}, {elapsed:.2f}s")


def test_criterion_03_prox_optimality():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = np.inf

    def objective(X, M, T):
        nuc = np.linalg.svd(X, compute_uv=False).sum(axis=-1)
        return 0.5 * np.sum((X - M) ** 2, axis=(-2, -1)) + T * nuc

    for _ in range(50):
        n = int(rng.integers(3, 9))
        M = rand_sym(rng, n, 2.0)
        T = float(rng.uniform(0.1, 2.0))
        S = soft_threshold_svd(M, T)
        best = objective(S, M, T)
        for eps in (1e-3, 1e-4):
            P = rng.standard_normal((1000, n, n))
            P /= np.linalg.norm(P, axis=(1, 2), keepdims=True)
            worst = min(worst, float(np.min(objective(S + eps * P, M, T) - best)))
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-12 and elapsed < 30
    assert record_criterion(3, "prox optimality", ok, f"min gain {worst:.1e}, {elapsed:.1f}s")


def test_criterion_04_monotone_convergence():
    fixtures = []
    for seed in range(3):
        fixtures.append((GAUSS, gen_gaussian(200, 8, 2, 2, 1.0, seed)[0], {}))
        fixtures.append((GAUSS, gen_gaussian(200, 8, 0, 2, 1.0, seed)[0], {}))
        fixtures.append((GAUSS, gen_gaussian(200, 8, 2, 0, 1.0, seed)[0], {}))
        fixtures.append((GAUSS, gen_gaussian(100, 4, 2, 2, 0.5, seed)[0], {"psd_constrain": True}))
        fixtures.append((BERN, gen_logistic(100, 4, 2, 2, 1.0, seed)[0], {}))
    failures = 0
    worst_res = 0.0
    for fam, net, extra in fixtures:
        if fam is BERN:
            cfg = SolverConfig(lam=1.5 * np.sqrt(net.n * net.m), alphas=net.m**-0.5, max_iter=500, **extra)
        else:
            cfg = adaptive_params(net).config(max_iter=500, **extra)
        _, rep = _quiet(fit, fam, net, cfg)
        worst_res = max(worst_res, rep.fixed_point_residual)
        if not (_monotone(rep.objective_trace) and rep.converged and rep.fixed_point_residual < 1e-6):
            failures += 1
    ok = failures == 0
    assert record_criterion(4, "monotone objective, fixed point", ok,
                            f"{len(fixtures) - failures}/{len(fixtures)} fits, max residual {worst_res:.1e}")


def test_criterion_05_rank_recovery(recovery_runs):
    hits = sum(dec.ranks == (2, (2,) * 8) for _, _, dec, _, _ in recovery_runs)
    ok = hits >= 0.9 * REPS
    assert record_criterion(5, "rank recovery", ok, f"{hits}/{REPS} exact")


def test_criterion_06_null_structure():
    common_hits = individual_hits = 0
    for seed in range(REPS):
        net, _ = gen_gaussian(200, 8, 0, 2, 1.0, seed)
        dec, _ = _quiet(fit_plus, GAUSS, net, adaptive_params(net).config())
        common_hits += dec.ranks[0] == 0
        net, _ = gen_gaussian(200, 8, 2, 0, 1.0, seed)
        dec, _ = _quiet(fit_plus, GAUSS, net, adaptive_params(net).config())
        individual_hits += all(r == 0 for r in dec.ranks[1])
    ok = common_hits == REPS and individual_hits == REPS
    assert record_criterion(6, "null structure detected", ok,
                            f"d1=0: {common_hits}/{REPS}, d2=0: {individual_hits}/{REPS}")


def test_criterion_07_pooling_trend():
    errs = {}
    for m in (4, 16):
        rows = []
        for seed in range(REPS):
            net, truth = gen_gaussian(200, m, 2, 2, 1.0, seed)
            dec, _ = _quiet(fit_plus, GAUSS, net, adaptive_params(net).config())
            rows.append(tuple(error_metrics(GAUSS, dec, truth)))
        errs[m] = np.mean(rows, axis=0)
    ratio_F = errs[16][0] / errs[4][0]
    change_G = abs(errs[16][1] - errs[4][1]) / errs[4][1]
    ok = ratio_F <= 0.65 and change_G < 0.15
    assert record_criterion(7, "common error pools over layers", ok,
                            f"Err_F ratio {ratio_F:.3f}, Err_G change {change_G:.1%}")


def test_criterion_08_refit_vs_oracle(recovery_runs):
    ours = np.mean([error_metrics(GAUSS, dec, truth).err_P for _, truth, dec, _, _ in recovery_runs])
    oracle = np.mean([error_metrics(GAUSS, orc, truth).err_P for _, truth, _, _, orc in recovery_runs])
    ok = ours <= 1.05 * oracle
    assert record_criterion(8, "refit vs oracle Err_P", ok, f"{ours:.4f} vs {oracle:.4f} (ratio {ours / oracle:.3f})")


def test_criterion_09_psd_preservation():
    hits = {False: 0, True: 0}
    worst = np.inf
    for seed in range(REPS):
        net, _ = gen_gaussian(200, 8, 2, 2, 0.5, seed)
        for psd in (False, True):
            dec, _ = _quiet(fit, GAUSS, net, adaptive_params(net).config(psd_constrain=psd))
            values = np.concatenate([dec.common.values] + [G.values for G in dec.individual])
            low = float(values.min(initial=0.0))
            worst = min(worst, low)
            hits[psd] += low >= -1e-8
    ok = hits[False] == REPS and hits[True] == REPS
    assert record_criterion(9, "PSD preservation", ok,
                            f"plain {hits[False]}/{REPS}, constrained {hits[True]}/{REPS}, min eig {worst:.1e}")


def test_criterion_10_imputation_dominance():
    wins = 0
    for seed in range(REPS):
        joint, svt = _quiet(imputation_rmse, seed)
        wins += joint <= svt
    ok = wins >= 18
    assert record_criterion(10, "imputation beats single-layer SVT", ok, f"{wins}/{REPS} reps")


def test_criterion_11_identifiability():
    rng = np.random.default_rng(11)
    V = rng.standard_normal((20, 2))
    U = [rng.standard_normal((20, 2)), np.column_stack([V[:, 0], rng.standard_normal(20)])]
    _, dup_connected = identifiability_check(V, U)
    generic = 0
    for seed in range(REPS):
        r = np.random.default_rng(seed)
        _, connected = identifiability_check(r.standard_normal((50, 2)),
                                             [r.standard_normal((50, 2)) for _ in range(8)])
        generic += connected
    ok = not dup_connected and generic == REPS
    assert record_criterion(11, "identifiability graph", ok,
                            f"duplicate connected={dup_connected}, generic {generic}/{REPS}")


def test_criterion_12_step_time():
    net, _ = gen_gaussian(400, 8, 2, 2, 1.0, seed=12)
    cfg = adaptive_params(net).config()
    dec, _ = pgd_step(GAUSS, net, LatentDecomposition.zeros(400, 8), cfg)
    start = time.perf_counter()
    pgd_step(GAUSS, net, dec, cfg)
    elapsed = time.perf_counter() - start
    ok = elapsed <= 2.0
    assert record_criterion(12, "one step at n=400, m=8", ok, f"{elapsed:.3f}s")


def test_criterion_13_refit_oracles():
    worst_bern = 0.0
    for seed in range(5):
        net, dec = bernoulli_instance(seed)
        X, y = explicit_design(net, dec)
        ours = coefficients(refit_eigenvalues(BERN, net, dec))
        worst_bern = max(worst_bern, np.abs(np.sort(ours) - np.sort(newton_logistic(X, y))).max())
    _, truth = gen_gaussian(40, 3, 2, 2, 0.0, seed=2)
    net = MultiplexNetwork(truth.F[None] + truth.G)

    def shrunk(M, factor):
        w, V = np.linalg.eigh(M)
        idx = np.argsort(-np.abs(w))[:2]
        return EigenPair(V[:, idx], w[idx] * factor)

    dec = LatentDecomposition(shrunk(truth.F, 0.7), [shrunk(Gk, 0.5) for Gk in truth.G])
    refit = refit_eigenvalues(GAUSS, net, dec)
    worst_gauss = max(np.abs(refit.F - truth.F).max(), np.abs(refit.G - truth.G).max())
    ok = worst_bern <= 1e-6 and worst_gauss <= 1e-8
    assert record_criterion(13, "refit oracles", ok,
                            f"Bernoulli {worst_bern:.1e}, Gaussian noiseless {worst_gauss:.1e}")


def test_criterion_14_cli_round_trip(tmp_path):
    data = tmp_path / "net.txt"
    assert cli.run(["simulate", "--n", "60", "--m", "3", "--d1", "2", "--d2", "2", "--seed", "14",
                    "--out", str(data), "--quiet"]) == 0
    codes = [cli.run(["fit", "--input", str(data), "--out-dir", str(tmp_path / name), "--refit",
                      "--no-timing", "--seed", "14", "--quiet"]) for name in ("a", "b")]
    net = read_multiplex(data)
    in_memory, _ = _quiet(fit_plus, GAUSS, net, adaptive_params(net).config())
    back, report = read_decomposition(tmp_path / "a")
    worst = max(error_metrics(GAUSS, back, in_memory))
    stable = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
                 for f in ("report.json", "F.mat", "G_1.mat", "V.csv"))
    ok = codes == [0, 0] and worst <= 1e-12 and stable and report["seed"] == 14
    assert record_criterion(14, "CLI round trip", ok, f"error {worst:.1e}, golden stable={stable}")
