"""
A tour of the block rotation
============================

Why rotate weights before quantizing them?  Because the orthonormal
Walsh-Hadamard transform spreads any single large weight across the
whole block, shrinks the dynamic range, and preserves distances, so the
quantizer works on friendlier data at zero accuracy cost.
"""

import numpy as np

from itq3 import fwht_forward, fwht_inverse, fwht_staged

rng = np.random.default_rng(0)

# One outlier of magnitude 40 in an otherwise unit-scale block.
w = rng.standard_normal(256)
w[17] = 40.0
y = fwht_forward(w)

print("outlier suppression")
print(f"  weight-domain peak   {np.max(np.abs(w)):8.3f}")
print(f"  rotated-domain peak  {np.max(np.abs(y)):8.3f}")
print(f"  guaranteed ceiling   {np.sum(np.abs(w)) / 16:8.3f}   (l1 / sqrt(n))")
print()

# The transform is an isometry: distances and norms survive the trip.
print("isometry")
print(f"  |w|_2 = {np.linalg.norm(w):.6f}")
print(f"  |Hw|_2 = {np.linalg.norm(y):.6f}")
print()

# And it is its own inverse: two applications give the input back.
back = fwht_forward(y)
print("involution")
print(f"  max |H(Hw) - w| = {np.max(np.abs(back - w)):.2e}")
print(f"  fwht_inverse is the same operation: {np.allclose(fwht_inverse(y), w)}")
print()

# A pure impulse spreads perfectly flat: every coefficient has the
# same magnitude M / sqrt(n).
impulse = np.zeros(256)
impulse[3] = 16.0
flat = fwht_forward(impulse)
print("impulse spreading")
print(f"  unique |coefficient| values: {np.unique(np.abs(flat))}")
print()

# Under the hood: log2(n) butterfly stages, each pairing lane j with
# lane j XOR step.  The staged form exposes every intermediate state.
trace = fwht_staged(np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]))
print("butterfly stages for [1..8]")
for s, stage in enumerate(trace.stages):
    print(f"  after step {2**s}: {stage}")
print(f"  normalized:   {np.round(trace.final, 6)}")
