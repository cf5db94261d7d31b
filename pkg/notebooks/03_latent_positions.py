"""
Latent positions and identifiability
====================================

Fitted components are low-rank symmetric matrices.  Their adjacency spectral
embeddings give latent positions, identified up to column signs when the
eigenvalues are distinct.  Whether the split into common and individual parts
is identifiable can be checked from the true positions.
"""

# %%
import numpy as np

from multiness import (
    GaussianIdentity,
    adaptive_params,
    align_columns,
    ase,
    fit_plus,
    gen_gaussian,
    identifiability_check,
)

net, truth = gen_gaussian(n=200, m=5, d1=2, d2=1, sigma=1.0, seed=2)
dec, _ = fit_plus(GaussianIdentity(), net, adaptive_params(net).config())

# %%
# Embed the estimated and the true common component, then flip the estimated
# columns to best match the truth.
Vhat, sig = ase(dec.F, 2)
V, _ = ase(truth.F, 2)
aligned, signs = align_columns(Vhat, V)
print("signature", sig, "signs", signs)
print("relative position error per column:",
      (np.linalg.norm(aligned - V, axis=0) / np.linalg.norm(V, axis=0)).round(4))

# %%
# An indefinite matrix has a mixed signature.
X = np.random.default_rng(0).standard_normal((30, 3))
M = X[:, :2] @ X[:, :2].T - np.outer(X[:, 2], X[:, 2])
coords, sig, gaps = ase(M, 3, return_gaps=True)
print("signature of an indefinite matrix:", sig, "eigengaps", gaps.round(2))

# %%
# Identifiability: layers are joined when [V, U_k, U_l] has full column rank;
# a connected layer graph certifies a unique split.
edges, connected = identifiability_check(truth.V, truth.U)
print(f"{len(edges)} layer pairs joined, connected={connected}")

U_bad = [truth.V[:, :1]] * net.m
edges, connected = identifiability_check(truth.V, U_bad)
print(f"individual positions copied from the common ones: connected={connected}")
