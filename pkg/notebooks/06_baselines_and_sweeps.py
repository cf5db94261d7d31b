"""
Baselines and parameter sweeps
==============================

Compare the convex estimator and its refit with alternating rank truncation
given the true ranks, and watch the common-structure error fall as layers are
added.  The same sweep is available from the command line as
``multiness report``.
"""

# %%
import numpy as np

from multiness import GaussianIdentity, adaptive_params, error_metrics, fit, gen_gaussian, oracle_alternating
from multiness import refit_eigenvalues

fam = GaussianIdentity()
print(" m  method           Err_F   Err_G   Err_P")
for m in (2, 4, 8, 16):
    table = {"convex": [], "refit": [], "oracle": []}
    for seed in range(3):
        net, truth = gen_gaussian(n=150, m=m, d1=2, d2=2, sigma=1.0, seed=seed)
        dec, _ = fit(fam, net, adaptive_params(net).config())
        table["convex"].append(tuple(error_metrics(fam, dec, truth)))
        table["refit"].append(tuple(error_metrics(fam, refit_eigenvalues(fam, net, dec), truth)))
        table["oracle"].append(tuple(error_metrics(fam, oracle_alternating(net, 2, 2), truth)))
    for method, errs in table.items():
        f, g, p = np.mean(errs, axis=0)
        print(f"{m:2d}  {method:15s} {f:6.3f}  {g:6.3f}  {p:6.3f}")

# %%
# Err_F shrinks roughly like 1/sqrt(m) while Err_G stays flat: every layer
# adds information about the shared part but not about the others' own parts.
