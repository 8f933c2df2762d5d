# End-to-end refinement of a noisy map pair.
#
# An icosphere is matched against a jittered copy of itself.  Five
# landmark pairs seed a coarse initial map, the three-block solver
# refines it, and the standard metrics quantify the improvement.  A
# second run with the smoothness block disabled (gamma = 0) isolates
# what the Dirichlet term contributes.

import numpy as np

from smoothmatch import SolverConfig, compute_basis, compute_report
from smoothmatch.solver import landmark_init, refine
from smoothmatch.synth import farthest_point_indices, icosphere, jittered_copy

src = icosphere(3)
tgt = jittered_copy(src, 0.02, seed=1)
m1, m2 = src.normalized(), tgt.normalized()
print("meshes: %d / %d vertices" % (m1.n_vertices, m2.n_vertices))

basis_1 = compute_basis(m1, 100)
basis_2 = compute_basis(m2, 100)

# vertex i of the source corresponds to vertex i of the jittered copy
gt = np.arange(m1.n_vertices)
landmarks = farthest_point_indices(m1, 5)
pi_12, pi_21 = landmark_init(np.column_stack([landmarks, landmarks]), basis_1, basis_2)


def show(tag, a, b):
    rep = compute_report(a, b, m1, m2, gt, gt)
    print("%-14s accuracy %6.2f  bijectivity %6.2f  smoothness %6.3f  coverage %5.1f%%"
          % (tag, rep.accuracy, rep.bijectivity, rep.smoothness, rep.coverage))


show("initial", pi_12, pi_21)

config = SolverConfig()          # Dirichlet energy, K 20 -> 100, gamma 0.1 -> 1
f_12, f_21, trace = refine(pi_12, pi_21, m1, m2, basis_1, basis_2, config)
show("refined", f_12, f_21)

spectral_only = SolverConfig(gamma_init=0.0, gamma_final=0.0)
s_12, s_21, _ = refine(pi_12, pi_21, m1, m2, basis_1, basis_2, spectral_only)
show("gamma = 0", s_12, s_21)

# The recorded total rises across iterations because the spectral size
# K and the smoothness weight gamma both grow on a schedule; at fixed
# K and gamma the three exact block minimizations never increase it.
print("\nenergy trace (per outer iteration)")
print("iter   k  gamma   e_total")
for row in trace.rows:
    print("%4d %4d  %5.3f  %9.4f" % (row["iteration"], row["k"], row["gamma"], row["e_total"]))
