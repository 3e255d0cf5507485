"""Walk through the two parameterizations of a linear Gaussian SEM.

A DAG model is either (B, Omega): coefficients plus noise variances, or,
after permuting variables into a topological order, a lower-triangular
factor L with Sigma^{-1} = L^t L.  The two carry the same sparsity
pattern, so learning a sparse L learns the DAG.
"""

import numpy as np

from birkdag import (
    adjacency_to_cholesky,
    cholesky_to_adjacency,
    generate_dag,
    sample_covariance,
    sample_data,
)

rng = np.random.default_rng(7)

# A random 6-node DAG with ~5 expected edges, labels scrambled.
inst = generate_dag(p=6, s=5, rng=rng)
print("adjacency B (b[j, k] is the weight of edge k -> j):")
print(np.round(inst.adjacency.b, 3))
print("ground-truth ordering (positions -> variables):", inst.ordering.pi)

# In the permuted frame the adjacency is strictly lower triangular and
# the Cholesky factor shares its support.
b_perm = inst.ordering.apply_to_matrix(inst.adjacency.b)
l = adjacency_to_cholesky(inst)
print("\npermuted adjacency is strictly lower triangular:",
      np.abs(np.triu(b_perm)).max() == 0.0)
print("factor support equals adjacency support:",
      np.array_equal(l.l[np.tril_indices(6, -1)] != 0,
                     b_perm[np.tril_indices(6, -1)] != 0))

# The maps invert each other exactly.
b_back, omega_back = cholesky_to_adjacency(l)
print("round trip max error:", np.abs(b_back.b - b_perm).max())

# Sampling: rows are N(0, Sigma) with Sigma^{-1} = L^t L in the permuted
# frame; at large n the sample covariance approaches the model covariance.
x = sample_data(inst, n=50000, rng=rng)
s = sample_covariance(x)
pm = inst.ordering.matrix()
sigma = pm.T @ np.linalg.inv(l.l.T @ l.l) @ pm
print("max |sample cov - model cov| at n = 50000:",
      float(np.abs(s.s - sigma).max()))
