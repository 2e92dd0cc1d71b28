"""Ranking pool members by mutual information with the target.

A classifier whose predictions share more information with the true
labels is more relevant to the ensemble, regardless of where exactly it
puts its errors.  The ranking drives the order in which members join.
"""

import numpy as np

from dsfusion import builtin_pool, make_two_gaussians, mutual_information, rank_by_relevancy, stratified_split
from dsfusion.baselearners import fit
from dsfusion.infotheory import conditional_entropy, entropy

# Entropy measures the uncertainty left in a label vector.
labels = [0, 0, 0, 1]
print(f"H([0,0,0,1]) = {entropy(labels):.4f} bits")
print(f"H(target | perfect predictor) = {conditional_entropy(labels, labels):.4f} bits")
print()

# Fit the built-in pool on separable blobs and rank on the validation split.
ds = make_two_gaussians(300, center=1.8, sigma=1.0, seed=7)
splits = stratified_split(ds, (0.5, 0.25, 0.25), seed=1)
pool = fit(builtin_pool(), ds.features[splits.train], ds.labels[splits.train], seed=1)

valid_x = ds.features[splits.validation]
valid_y = ds.labels[splits.validation]
mi = [
    mutual_information(clf.predict_scores(valid_x).hard_labels(), valid_y)
    for clf in pool
]
ranks = rank_by_relevancy(mi)

print(f"{'name':>6} {'MI (bits)':>10} {'rank':>5}")
for clf, value, rank in zip(pool, mi, ranks):
    print(f"{clf.name:>6} {value:>10.4f} {rank:>5}")

# Rank 1 always belongs to the largest MI; ties keep pool order.
best = int(np.argmax(mi))
assert ranks[best] == 1
