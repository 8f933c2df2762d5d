# Discrete surface operators on a triangle mesh.
#
# This walkthrough builds a small mesh, assembles the cotangent and
# lumped mass matrices, and checks the identities that every other part
# of the library relies on.

import numpy as np

from smoothmatch import TriMesh, cotangent_matrix, geodesic_distances, vertex_areas
from smoothmatch.synth import icosphere


# A right triangle: the weight of each edge is half the cotangent of
# the opposite angle, so the hypotenuse (opposite the right angle)
# carries weight 0 and the legs carry 1/2.
tri = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
w = cotangent_matrix(tri)
print("right triangle cotangent weights")
print("  legs      :", -w[0, 1], -w[0, 2])
print("  hypotenuse:", -w[1, 2])

# On any mesh W has zero row sums and x^T W x equals the weighted sum
# of squared edge differences, which makes it positive semi-definite.
sphere = icosphere(2).normalized()
w = sphere.cot_matrix
print("\nicosphere operator sanity (%d vertices)" % sphere.n_vertices)
print("  max |row sum|    : %.2e" % np.abs(np.asarray(w.sum(axis=1))).max())
x = np.random.default_rng(0).normal(size=sphere.n_vertices)
print("  x^T W x          : %.6f (>= 0)" % float(x @ (w @ x)))

# The lumped mass matrix assigns one third of each incident face area
# to a vertex; its trace is exactly the surface area (1 after the
# default normalization).
a = vertex_areas(sphere)
print("  mass trace       : %.12f" % a.sum())
print("  min vertex area  : %.3e" % a.min())

# Geodesic distances run Dijkstra over the edge graph.  Antipodal
# vertices on the unit sphere sit at great-circle distance pi; the
# edge-graph path overshoots it by a few percent.
raw = icosphere(3)
anti = int(np.argmin(raw.vertices @ raw.vertices[0]))
d = geodesic_distances(raw, [0])
print("\nantipodal edge-graph distance: %.4f (pi = %.4f)" % (d[0, anti], np.pi))
