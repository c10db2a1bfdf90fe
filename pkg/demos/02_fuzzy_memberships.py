"""From crack lengths to fuzzy classes.

Labels are scaled to [0, 1], a kernel density estimate gives the 5th, 50th
and 95th percentiles, and three triangular sets (small / medium / large)
are placed on them.

Run: python3 demos/02_fuzzy_memberships.py
"""

import numpy as np

from ofjdar.dataset import clustered_labels, scale_labels
from ofjdar.fuzzy import build_fuzzy_partition, kde_percentiles, membership, normalize_memberships

# A record dense at small cracks, like slow early growth sampled often.
labels = clustered_labels(n=800, seed=0)
scaled, scaler = scale_labels(labels)
p = kde_percentiles(scaled)
print("percentiles (scaled):", np.round(p, 4))
print("percentiles (mm)     :", np.round(scaler.unscale(p), 2))

partition = build_fuzzy_partition(p)
for y in (17.0, 20.0, 30.0, 45.0):
    mu = membership(partition, scaler.scale([y])).mu[0]
    print(f"{y:5.1f} mm -> small {mu[0]:.2f}  medium {mu[1]:.2f}  large {mu[2]:.2f}")

mu = membership(partition, scaled)
print("degrees sum to one per sample:", np.allclose(mu.mu.sum(axis=1), 1.0))
weights = normalize_memberships(mu)
print("class weights sum to one per class:", np.round(weights.mu.sum(axis=0), 12))
print("effective samples per class:", np.round(1.0 / (weights.mu ** 2).sum(axis=0), 1))
