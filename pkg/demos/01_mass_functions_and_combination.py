"""Mass functions and Dempster's rule on a two-class frame.

Evidence about a sample's class lives in a mass function: a weight on
each class hypothesis plus an "ignorance" weight on the whole frame that
commits to nothing.  Combining two pieces of evidence multiplies their
agreements and throws away the mass that lands on contradictions.
"""

import numpy as np

from dsfusion import BBA, combine_pair, combine_sequence, conflict
from dsfusion.evidence import GeneralBBA, combine_powerset_oracle, validate

# A confident source: 60% on class 0, nothing on class 1, 40% undecided.
confident = BBA(masses=[0.6, 0.0], ignorance=0.4)
# A milder source leaning the same way but hedging a little on class 1.
milder = BBA(masses=[0.5, 0.3], ignorance=0.2)
validate(confident)
validate(milder)

# How much joint mass lands on contradictions?  Only the (class 0, class 1)
# pairings conflict; ignorance is compatible with everything.
print("conflict:", conflict(confident, milder))

fused = combine_pair(confident, milder)
print("fused masses:   ", np.round(fused.masses, 4))
print("fused ignorance:", round(fused.ignorance, 4))

# Agreeing evidence reinforces: class 0 ends up with more belief than either
# source assigned alone.
assert fused.masses[0] > max(confident.masses[0], milder.masses[0])

# Total ignorance is the neutral element.
vacuous = BBA.vacuous(2)
unchanged = combine_pair(fused, vacuous)
print("vacuous partner changes nothing:", np.allclose(unchanged.masses, fused.masses))

# Folding a sequence gives the same answer as one exhaustive power-set
# combination; the fast path just never enumerates subsets.
sources = [confident, milder, BBA([0.2, 0.1], 0.7)]
fast = combine_sequence(sources)
slow = combine_powerset_oracle([GeneralBBA.from_two_level(b) for b in sources]).to_two_level()
print("fold vs power-set oracle match:", np.allclose(fast.masses, slow.masses, atol=1e-12))

# Certainty about different classes cannot be combined at all.
try:
    combine_pair(BBA.certain(0, 2), BBA.certain(1, 2))
except Exception as err:
    print("opposed certainties:", type(err).__name__)
