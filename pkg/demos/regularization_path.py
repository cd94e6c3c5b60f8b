"""
Following the solution along a decreasing regularization path
=============================================================

For a fixed weight lambda the solver minimises the data misfit plus lambda
times the fraction penalty. As lambda shrinks the misfit must fall, and the
penalty of every solution stays below that of any exact completion.
"""

import numpy as np

from fracrank import penalty_value, rtrdc_solve, sample_mask, RtrdcConfig
from fracrank.theory import lambda_path_experiment

rng = np.random.default_rng(0)
M = rng.standard_normal((50, 5)) @ rng.standard_normal((5, 50))
op = sample_mask(50, 50, 1250, seed=1)
b = op.apply(M)
a = 1.2

###############################################################################
# Each lambda is warm-started from the previous solution.
path = lambda_path_experiment(op, b, a, [1.0, 1e-1, 1e-2, 1e-3])
print(f"penalty of the ground truth: {penalty_value(a, M):.4f}")
for p in path:
    err = np.linalg.norm(p.solution - M) / np.linalg.norm(M)
    print(f"lambda={p.lam:7.0e}  residual={p.residual:.3e}  "
          f"penalty={p.penalty:.4f}  RE={err:.2e}")

###############################################################################
# The adaptive rule removes the need for a path: lambda is reset every step so
# that exactly the leading ``rank`` singular values survive.
rep = rtrdc_solve(op, b, RtrdcConfig(a=a, rank=5))
print(f"adaptive: RE={np.linalg.norm(rep.solution - M) / np.linalg.norm(M):.2e}, "
      f"{rep.outer_iterations} outer steps, final lambda {rep.lambda_history[-1]:.2e}")
