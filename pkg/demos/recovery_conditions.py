"""
How far is a sampling operator from an isometry on low-rank matrices?
=====================================================================

Exact recovery results ask that the operator nearly preserve the norm of
every low-rank matrix. We estimate this distortion from below by sampling,
then evaluate the largest fraction parameter that the resulting bound
certifies.
"""

import numpy as np

from fracrank import GeneralOperator, sample_mask
from fracrank.theory import a_star, corollary3_bound, ric_estimate, RecoveryConditionError

m = n = 30

###############################################################################
# Entry sampling can never be a uniform near-isometry: a matrix supported on
# one unobserved pixel is mapped to zero.
for sr in (0.3, 0.6, 0.9):
    mask = sample_mask(m, n, int(sr * m * n), seed=1)
    est = ric_estimate(mask, 2, trials=200, seed=0)
    print(f"mask SR={sr:.1f}: delta_2 >= {est.delta_lower:.3f}")

###############################################################################
# Dense Gaussian measurements behave much better once there are enough of them.
for d in (200, 600, 1200):
    op = GeneralOperator.gaussian(d, 12, 12, seed=2)
    est = ric_estimate(op, 2, trials=200, seed=0)
    print(f"gaussian d={d:4d}: delta_2 >= {est.delta_lower:.3f}")

###############################################################################
# Recovery is certified for any ``1 < a < a_star``.
for T, K, dk, d2 in [(1, 3, 0.0, 0.0), (1, 6, 0.1, 0.2), (2, 5, 0.1, 0.2)]:
    try:
        print(f"T={T} K={K}: a_star = {a_star(T, K, dk, d2):.4f}")
    except RecoveryConditionError as exc:
        print(f"T={T} K={K}: {exc}")

print("RIC level certified at a=1.2:", round(corollary3_bound(1.2), 7))
