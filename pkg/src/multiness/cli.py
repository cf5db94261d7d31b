"""Command-line interface: ``multiness <command> [options]``.

Commands
--------
simulate   generate a synthetic multiplex file (and optionally its truth)
fit        estimate common and individual components, write the decomposition
crossval   choose the penalty by edge cross-validation, write a JSON summary
embed      latent positions of a dense matrix file
impute     fill unobserved entries of one layer (joint fit or single-layer SVT)
report     simulation sweep written as a CSV table

Exit status is 0 on success, 2 for invalid input, 3 for numerical failure.
Progress goes to standard error; results go to files only.
"""

import argparse
import csv
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .baseline import oracle_alternating, svt_impute
from .embed import ase, error_metrics
from .exceptions import (
    CvFailed,
    DegenerateDesign,
    HoldoutTooLarge,
    InvalidInput,
    IoError,
    NumericalFailure,
    ParseError,
)
from .io import (
    read_matrix,
    read_multiplex,
    write_decomposition,
    write_embedding,
    write_json,
    write_matrix,
    write_multiplex,
)
from .model import LatentDecomposition, get_family
from .refit import fit_plus, refit_eigenvalues
from .simulate import gen_correlated, gen_gaussian, gen_logistic
from .solver import SolverConfig, fit
from .tuning import DEFAULT_DELTA, adaptive_params, edge_cv

__all__ = ["main", "run", "build_parser", "EXIT_OK", "EXIT_INVALID", "EXIT_NUMERICAL"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger("multiness.cli")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so :func:`run` can map errors to exit codes."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be a non-negative integer, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return value


def _lambda_arg(text):
    if text == "auto":
        return text
    return _nonneg_float(text)


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_solver_args(p):
    p.add_argument("--family", choices=["gaussian", "bernoulli"], default="gaussian")
    p.add_argument("--lambda", dest="lam", type=_lambda_arg, default="auto",
                   help="penalty, or 'auto' for the noise-adaptive value (default)")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA,
                   help="constant in the adaptive penalty (2 + delta) (default %(default)s)")
    p.add_argument("--alpha", type=_nonneg_float, default=None,
                   help="individual penalty weight for every layer (default m^-1/2)")
    p.add_argument("--layerwise", action="store_true",
                   help="layer-specific adaptive weights from per-layer noise estimates")
    p.add_argument("--refit", action="store_true", help="refit eigenvalues after the convex fit")
    p.add_argument("--psd", action="store_true", help="constrain all components to be PSD")
    p.add_argument("--eta", type=float, default=1.0, help="step size")
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--tol", type=float, default=1e-6, help="relative convergence tolerance")
    p.add_argument("--svd-budget", type=_positive_int, default=None,
                   help="compute only this many leading eigenpairs per prox step")
    p.add_argument("--log1p", action="store_true", help="apply log(1 + w) to weights on input")


def _add_common_args(p):
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="cap on BLAS threads (fallback: MULTINESS_THREADS)")
    p.add_argument("--quiet", action="store_true", help="no progress messages")


def build_parser():
    parser = _Parser(prog="multiness", description="Multiplex latent space estimation.")
    parser.add_argument("--version", action="version", version=f"multiness {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("simulate", help="generate a synthetic multiplex network")
    p.add_argument("--family", choices=["gaussian", "bernoulli", "correlated"], default="gaussian")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--d1", type=_nonneg_int, required=True)
    p.add_argument("--d2", type=_nonneg_int, required=True)
    p.add_argument("--sigma", type=_nonneg_float, default=1.0)
    p.add_argument("--beta", type=_nonneg_float, default=0.0)
    p.add_argument("--rho", type=_nonneg_float, default=0.0)
    p.add_argument("--out", required=True, help="multiplex file to write")
    p.add_argument("--truth-dir", default=None, help="also write the true decomposition here")
    _add_common_args(p)

    p = sub.add_parser("fit", help="fit the model and write the decomposition")
    p.add_argument("--input", required=True, help="multiplex file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--no-timing", action="store_true", help="omit timing fields from report.json")
    _add_solver_args(p)
    _add_common_args(p)

    p = sub.add_parser("crossval", help="edge cross-validation over penalty candidates")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="JSON summary to write")
    p.add_argument("--candidates", type=_float_list, required=True)
    p.add_argument("--kind", choices=["lambda", "delta", "C"], default="delta",
                   help="what the candidates are (default %(default)s)")
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--holdout-frac", type=float, default=0.1)
    _add_solver_args(p)
    _add_common_args(p)

    p = sub.add_parser("embed", help="latent positions from a dense matrix file")
    p.add_argument("--matrix", required=True, help="dense matrix file (e.g. F.mat)")
    p.add_argument("--d", type=_positive_int, required=True, help="embedding dimension")
    p.add_argument("--out", required=True, help="CSV file to write")
    _add_common_args(p)

    p = sub.add_parser("impute", help="fill unobserved entries of one layer")
    p.add_argument("--input", required=True)
    p.add_argument("--layer", type=_positive_int, required=True, help="1-based layer index")
    p.add_argument("--method", choices=["multiness", "svt"], default="multiness")
    p.add_argument("--out", required=True, help="dense matrix file to write")
    _add_solver_args(p)
    _add_common_args(p)

    p = sub.add_parser("report", help="simulation sweep as a CSV table")
    p.add_argument("--family", choices=["gaussian", "bernoulli"], default="gaussian")
    p.add_argument("--vary", choices=["n", "m", "sigma", "beta", "rho"], required=True)
    p.add_argument("--values", type=_float_list, required=True)
    p.add_argument("--n", type=_positive_int, default=200)
    p.add_argument("--m", type=_positive_int, default=8)
    p.add_argument("--d1", type=_nonneg_int, default=2)
    p.add_argument("--d2", type=_nonneg_int, default=2)
    p.add_argument("--sigma", type=_nonneg_float, default=1.0)
    p.add_argument("--beta", type=_nonneg_float, default=0.0)
    p.add_argument("--rho", type=_nonneg_float, default=0.0)
    p.add_argument("--reps", type=_positive_int, default=5)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--oracle", action="store_true", help="include the oracle alternating baseline")
    p.add_argument("--out", required=True, help="CSV file to write")
    _add_common_args(p)
    return parser


def _versions():
    return {
        "multiness": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _load(args):
    path = Path(args.input)
    if not path.is_file():
        raise InvalidInput(f"--input: no such file {path}")
    net = read_multiplex(path, log1p=getattr(args, "log1p", False))
    logger.info("read %s: n=%d m=%d", path, net.n, net.m)
    return net


def _tuning(args, net):
    if args.lam == "auto":
        sel = adaptive_params(net, args.delta, layerwise=args.layerwise)
        lam, alphas, delta = sel.lam, sel.alphas, args.delta
        if args.alpha is not None:
            alphas = np.full(net.m, args.alpha)
    else:
        lam, delta = float(args.lam), None
        alphas = np.full(net.m, net.m**-0.5 if args.alpha is None else args.alpha)
    return lam, np.asarray(alphas, dtype=float), delta


def _solver_config(args, lam, alphas):
    return SolverConfig(
        lam,
        alphas,
        eta=args.eta,
        max_iter=args.max_iter,
        rel_tol=args.tol,
        step_tol=args.tol,
        psd_constrain=args.psd,
        svd_budget=args.svd_budget,
    )


def _run_fit(fam, net, args, cfg):
    if args.refit:
        return fit_plus(fam, net, cfg)
    return fit(fam, net, cfg)


def cmd_simulate(args):
    if args.family == "gaussian":
        net, truth = gen_gaussian(args.n, args.m, args.d1, args.d2, args.sigma, args.seed)
    elif args.family == "correlated":
        net, truth = gen_correlated(args.n, args.m, args.d1, args.d2, args.sigma, args.rho, args.seed)
    else:
        net, truth = gen_logistic(args.n, args.m, args.d1, args.d2, args.beta, args.seed)
    write_multiplex(net, args.out)
    logger.info("wrote %s", args.out)
    if args.truth_dir:
        dec = LatentDecomposition.from_dense(truth.F, truth.G)
        params = {k: (v if not isinstance(v, np.generic) else v.item())
                  for k, v in truth.params.items()}
        write_decomposition(dec, None, args.truth_dir)
        write_json(params, Path(args.truth_dir) / "params.json")
        logger.info("wrote truth to %s", args.truth_dir)


def cmd_fit(args):
    net = _load(args)
    fam = get_family(args.family)
    lam, alphas, delta = _tuning(args, net)
    logger.info("lambda=%.6g", lam)
    cfg = _solver_config(args, lam, alphas)
    dec, rep = _run_fit(fam, net, args, cfg)
    logger.info("iterations=%d converged=%s ranks=%s", rep.iterations, rep.converged, rep.final_ranks)
    d1, d2 = dec.ranks
    report = {
        "family": fam.kind,
        "lambda": float(lam),
        "alphas": [float(a) for a in alphas],
        "delta": delta,
        "ranks": {"d1": int(d1), "d2": [int(r) for r in d2]},
        "objective_trace": [float(v) for v in rep.objective_trace],
        "converged": bool(rep.converged),
        "iterations": int(rep.iterations),
        "seed": int(args.seed),
        "versions": _versions(),
        "refit": bool(args.refit),
        "psd": bool(args.psd),
        "layerwise": bool(args.layerwise),
        "eta": float(rep.eta),
    }
    if args.refit:
        report["refit_converged"] = bool(dec.info.get("refit_converged", True))
    if not args.no_timing:
        timing = {"wall_time": float(rep.wall_time)}
        for name, stage in rep.stages.items():
            timing[f"{name}_time"] = float(stage["wall_time"])
        report["timing"] = timing
    write_decomposition(dec, report, args.out_dir)
    logger.info("wrote %s", args.out_dir)


def cmd_crossval(args):
    net = _load(args)
    fam = get_family(args.family)
    alphas = None if args.alpha is None else np.full(net.m, args.alpha)
    sel = edge_cv(
        fam, net, args.candidates, holdout_frac=args.holdout_frac, n_folds=args.folds,
        seed=args.seed, kind=args.kind, layerwise=args.layerwise, alphas=alphas,
        eta=args.eta, max_iter=args.max_iter, rel_tol=args.tol, step_tol=args.tol,
        psd_constrain=args.psd, svd_budget=args.svd_budget,
    )
    cv = sel.cv
    summary = {
        "family": fam.kind,
        "kind": cv["kind"],
        "candidates": [float(c) for c in cv["candidates"]],
        "mean_scores": [float(s) for s in cv["mean_scores"]],
        "fold_scores": [[None if np.isnan(x) else float(x) for x in row] for row in cv["scores"]],
        "chosen": float(cv["chosen"]),
        "lambda": float(sel.lam),
        "alphas": [float(a) for a in sel.alphas],
        "folds_used": int(cv["folds_used"]),
        "holdout_frac": float(args.holdout_frac),
        "seed": int(args.seed),
        "versions": _versions(),
    }
    write_json(summary, args.out)
    logger.info("chose %s=%g; wrote %s", cv["kind"], cv["chosen"], args.out)


def cmd_embed(args):
    path = Path(args.matrix)
    if not path.is_file():
        raise InvalidInput(f"--matrix: no such file {path}")
    M = read_matrix(path)
    if args.d > M.shape[0]:
        raise InvalidInput(f"--d: {args.d} exceeds the matrix dimension {M.shape[0]}")
    coords, sig, gaps = ase(M, args.d, return_gaps=True)
    write_embedding(coords, sig, args.out, gaps=gaps)
    logger.info("signature (%d, %d); wrote %s", sig.p, sig.q, args.out)


def cmd_impute(args):
    net = _load(args)
    k = args.layer - 1
    if k >= net.m:
        raise InvalidInput(f"--layer: {args.layer} exceeds m={net.m}")
    if args.method == "svt":
        lam = None if args.lam == "auto" else float(args.lam)
        X = svt_impute(net.layers[k], net.mask[k], lam=lam, delta=args.delta)
    else:
        fam = get_family(args.family)
        lam, alphas, _ = _tuning(args, net)
        dec, _ = _run_fit(fam, net, args, _solver_config(args, lam, alphas))
        X = fam.link(dec.theta(k))
    write_matrix(X, args.out)
    logger.info("wrote %s", args.out)


_SWEEP_FIELDS = ["vary", "value", "rep", "method", "err_F", "err_G", "err_P",
                 "d1_hat", "d2_hat_mean", "iterations", "converged"]


def _simulate_for(args, params, seed):
    if args.family == "bernoulli":
        return gen_logistic(int(params["n"]), int(params["m"]), args.d1, args.d2,
                            params["beta"], seed)
    if params["rho"] > 0:
        return gen_correlated(int(params["n"]), int(params["m"]), args.d1, args.d2,
                              params["sigma"], params["rho"], seed)
    return gen_gaussian(int(params["n"]), int(params["m"]), args.d1, args.d2,
                        params["sigma"], seed)


def cmd_report(args):
    fam = get_family(args.family)
    rows = []
    for value in args.values:
        params = {"n": args.n, "m": args.m, "sigma": args.sigma, "beta": args.beta, "rho": args.rho}
        params[args.vary] = value
        for rep in range(args.reps):
            seed = args.seed + rep
            net, truth = _simulate_for(args, params, seed)
            cfg = adaptive_params(net, args.delta).config()
            dec, fit_rep = fit(fam, net, cfg)
            plus = refit_eigenvalues(fam, net, dec)
            results = [("multiness", dec, fit_rep.iterations, fit_rep.converged),
                       ("multiness_plus", plus, fit_rep.iterations, fit_rep.converged)]
            if args.oracle:
                d1_true, d2_true = truth.ranks
                orc = oracle_alternating(net, d1_true, d2_true)
                results.append(("oracle", orc, orc.info["iterations"], orc.info["converged"]))
            for method, est, iters, conv in results:
                err = error_metrics(fam, est, truth)
                d1_hat, d2_hat = est.ranks
                rows.append({
                    "vary": args.vary, "value": value, "rep": rep, "method": method,
                    "err_F": err.err_F, "err_G": err.err_G, "err_P": err.err_P,
                    "d1_hat": d1_hat, "d2_hat_mean": float(np.mean(d2_hat)),
                    "iterations": iters, "converged": int(bool(conv)),
                })
            logger.info("%s=%g rep %d done", args.vary, value, rep)
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=_SWEEP_FIELDS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: (format(v, ".17g") if isinstance(v, float) else v)
                                 for k, v in row.items()})
    except OSError as exc:
        raise IoError(f"cannot write {args.out}: {exc.strerror}") from exc
    logger.info("wrote %s", args.out)


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "crossval": cmd_crossval,
    "embed": cmd_embed,
    "impute": cmd_impute,
    "report": cmd_report,
}


def _thread_limit(args):
    threads = args.threads
    if threads is None and os.environ.get("MULTINESS_THREADS"):
        try:
            threads = int(os.environ["MULTINESS_THREADS"])
        except ValueError:
            raise InvalidInput("MULTINESS_THREADS must be a positive integer") from None
        if threads < 1:
            raise InvalidInput("MULTINESS_THREADS must be a positive integer")
    return threads


def _setup_logging(quiet):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("multiness: %(message)s"))
    root = logging.getLogger("multiness")
    root.handlers = [handler]
    root.setLevel(logging.WARNING if quiet else logging.INFO)
    root.propagate = False


def run(argv=None):
    """Parse ``argv`` and run one command; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    _setup_logging(args.quiet)
    start = time.perf_counter()
    try:
        threads = _thread_limit(args)
        if threads is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=threads):
                _COMMANDS[args.command](args)
        else:
            _COMMANDS[args.command](args)
    except (InvalidInput, ParseError, IoError, HoldoutTooLarge) as exc:
        print(f"multiness: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailure, DegenerateDesign, CvFailed, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"multiness: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    logger.info("%s finished in %.2f s", args.command, time.perf_counter() - start)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
