# Comparing the five smoothness energies on one pair.
#
# The solver is identical for every row of this table; only the Y-step
# (the surrogate-coordinate solve) changes.  Each energy is run with
# the coupling weight it was tuned for.

import numpy as np

from smoothmatch import SolverConfig, Variant, compute_basis, compute_report
from smoothmatch.solver import landmark_init, refine
from smoothmatch.synth import farthest_point_indices, icosphere, jittered_copy

src = icosphere(3)
tgt = jittered_copy(src, 0.02, seed=1)
m1, m2 = src.normalized(), tgt.normalized()
basis_1 = compute_basis(m1, 100)
basis_2 = compute_basis(m2, 100)
gt = np.arange(m1.n_vertices)

landmarks = farthest_point_indices(m1, 5)
pi_12, pi_21 = landmark_init(np.column_stack([landmarks, landmarks]), basis_1, basis_2)

rep = compute_report(pi_12, pi_21, m1, m2, gt, gt)
print("%-10s accuracy %6.2f  bijectivity %6.2f  smoothness %6.3f  coverage %5.1f%%"
      % ("init", rep.accuracy, rep.bijectivity, rep.smoothness, rep.coverage))

for kind in ("dirichlet", "nicp", "arap", "shells", "rhm"):
    config = SolverConfig(variant=Variant(kind))
    f_12, f_21, _ = refine(pi_12, pi_21, m1, m2, basis_1, basis_2, config)
    rep = compute_report(f_12, f_21, m1, m2, gt, gt)
    print("%-10s accuracy %6.2f  bijectivity %6.2f  smoothness %6.3f  coverage %5.1f%%"
          % (kind, rep.accuracy, rep.bijectivity, rep.smoothness, rep.coverage))
