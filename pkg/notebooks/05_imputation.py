"""
Imputing held-out edges
=======================

Hide a fifth of the non-zero entries of one layer and predict them, once from
a joint fit of all layers and once from that layer alone by singular value
thresholding.
"""

# %%
import warnings

import numpy as np

from multiness import GaussianIdentity, adaptive_params, fit, gen_gaussian, hold_out, svt_impute

rows = []
for seed in range(5):
    net, _ = gen_gaussian(n=145, m=8, d1=2, d2=2, sigma=1.0, seed=seed)
    train, held = hold_out(net, 0.2, seed, layers=[0], nonzero_only=True)
    k, i, j = held.T
    target = net.layers[k, i, j]

    dec, _ = fit(GaussianIdentity(), train, adaptive_params(train).config())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        single = svt_impute(train.layers[0], train.mask[0])
    joint_rmse = np.sqrt(np.mean((dec.theta(0)[i, j] - target) ** 2))
    svt_rmse = np.sqrt(np.mean((single[i, j] - target) ** 2))
    rows.append((seed, len(held), joint_rmse, svt_rmse))

print("seed  held-out  joint RMSE  SVT RMSE")
for seed, h, a, b in rows:
    print(f"{seed:4d}  {h:8d}  {a:10.4f}  {b:8.4f}")

# %%
# The joint fit borrows the shared structure from the fully observed layers,
# so the held-out layer only has to supply its individual part.
