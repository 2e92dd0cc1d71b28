"""Six per-class weighting vectors from one confusion matrix.

Before a classifier's scores become evidence, each class column can be
scaled by how much the classifier deserves to be trusted on that class.
All six weightings derive from the same cross-validated confusion matrix.
"""

import numpy as np

from dsfusion import ConfusionMatrix, WeightScheme, build_weight
from dsfusion.metrics import accuracy, npv, ppv, sensitivity, specificity

# A classifier that is better at spotting the negative class than the
# positive one: 40/45 positives right, 45/55 negatives right.
cm = ConfusionMatrix(tp=40, fp=10, fn=5, tn=45)

print(f"accuracy    {accuracy(cm):.4f}")
print(f"sensitivity {sensitivity(cm):.4f}   (positive-class accuracy)")
print(f"specificity {specificity(cm):.4f}   (negative-class accuracy)")
print(f"ppv         {ppv(cm):.4f}   npv {npv(cm):.4f}")
print()

for scheme in WeightScheme:
    w = build_weight(cm, scheme)
    print(f"{scheme.value}: {np.round(w.values, 4)}")

# w0 ignores the confusion matrix entirely and w1 scales both classes
# alike, so neither changes the BALANCE between classes.  w2 and w5 lean
# toward the class with the better class accuracy (the positive one here:
# sensitivity beats specificity), while w3 leans on the predictive values,
# which happen to favor the negative class for this matrix.
w5 = build_weight(cm, WeightScheme.W5)
assert w5.values[0] > w5.values[1]
w3 = build_weight(cm, WeightScheme.W3)
assert w3.values[1] > w3.values[0]

# The fused schemes (w4, w5) renormalize to sum 1: they come out of a
# Dempster combination of the two ingredient vectors.
print("\nw5 sums to", build_weight(cm, WeightScheme.W5).values.sum())
