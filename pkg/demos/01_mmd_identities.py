"""Why the MMD matrices are outer products, checked numerically.

Run: python3 demos/01_mmd_identities.py
"""

import numpy as np

from ofjdar.fuzzy import MembershipMatrix, build_fuzzy_partition, membership, normalize_memberships
from ofjdar.mmd import (
    conditional_mmd_matrices,
    crisp_class_mmd_matrix,
    direct_mmd_value,
    marginal_mmd_matrix,
    mmd_trace_value,
)

rng = np.random.default_rng(0)
n_s, n_t, k = 6, 4, 2

# Embedded samples are columns of Z; the first n_s belong to the source.
Z = rng.normal(size=(k, n_s + n_t))
Z[:, n_s:] += 1.5

M0 = marginal_mmd_matrix(n_s, n_t)
print("marginal MMD, trace form :", mmd_trace_value(Z, M0))
print("marginal MMD, mean gap   :", direct_mmd_value(Z[:, :n_s], Z[:, n_s:]))

# Fuzzy classes: each sample belongs to several classes with some degree.
# Normalizing each class column to sum to one turns the degrees into weights,
# and the conditional MMD becomes a gap between weighted means.
partition = build_fuzzy_partition([0.1, 0.5, 0.9])
y_s = np.array([0.05, 0.2, 0.45, 0.6, 0.8, 0.95])
y_t = np.array([0.1, 0.5, 0.7, 0.92])
mu_s = normalize_memberships(membership(partition, y_s))
mu_t = normalize_memberships(membership(partition, y_t))
for c, M in enumerate(conditional_mmd_matrices(mu_s, mu_t)):
    weighted = direct_mmd_value(Z[:, :n_s], Z[:, n_s:], mu_s.mu[:, c], mu_t.mu[:, c])
    print(f"class {c}: trace {mmd_trace_value(Z, M):.6f}  weighted gap {weighted:.6f}")

# With one-hot memberships the fuzzy matrix is the ordinary per-class matrix.
hard_s = np.array([0, 0, 1, 1, 2, 2])
hard_t = np.array([0, 1, 2, 2])
onehot = [normalize_memberships(MembershipMatrix(np.eye(3)[h])) for h in (hard_s, hard_t)]
fuzzy = conditional_mmd_matrices(*onehot)
for c in range(3):
    same = np.array_equal(fuzzy[c], crisp_class_mmd_matrix(hard_s, hard_t, c))
    print(f"class {c}: one-hot fuzzy matrix equals the hard-label matrix -> {same}")

print("row sums of M0 are zero:", np.allclose(M0.sum(axis=1), 0))
