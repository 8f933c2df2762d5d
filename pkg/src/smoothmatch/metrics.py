"""Map-quality metrics: accuracy, bijectivity, smoothness, coverage.

Geodesic metrics are reported x100 on unit-area meshes so the numbers
live in a convenient magnitude range; smoothness is the raw Dirichlet
energy of the map and coverage is a percentage of target area.  All
metrics are intrinsic (edge lengths, areas) and therefore invariant to
rigid motions and to face relabeling.
"""

from dataclasses import dataclass

import numpy as np

from .energies import dirichlet_energy
from .mesh import geodesic_distances

GEODESIC_SCALE = 100.0


@dataclass
class MetricsReport:
    """One evaluation of a map pair (fields may be None when unavailable)."""

    accuracy: float | None = None
    bijectivity: float | None = None
    smoothness: float | None = None
    coverage: float | None = None
    conformal: float | None = None
    collapsed_faces: int | None = None

    def as_text(self):
        def fmt(v):
            return "n/a" if v is None else "%.6g" % v

        lines = [
            "accuracy    %s" % fmt(self.accuracy),
            "bijectivity %s" % fmt(self.bijectivity),
            "smoothness  %s" % fmt(self.smoothness),
            "coverage    %s" % fmt(self.coverage),
        ]
        if self.conformal is not None:
            lines.append("conformal   %s (collapsed faces: %d)"
                         % (fmt(self.conformal), self.collapsed_faces or 0))
        return "\n".join(lines)


def _distance_lookup(mesh, from_idx, to_idx):
    # geodesic distances d(from_idx[t], to_idx[t]) via Dijkstra from the
    # distinct sources only
    uniq, inverse = np.unique(from_idx, return_inverse=True)
    dmat = geodesic_distances(mesh, uniq)
    return dmat[inverse, to_idx]


def accuracy_metric(pi, gt_src, gt_tgt, mesh_tgt):
    """Mean geodesic error against ground truth, x100.

    Parameters
    ----------
    pi : PointwiseMap
    gt_src, gt_tgt : int arrays
        Ground-truth pairs; only these source vertices are scored, so
        sparse annotations are supported directly.
    mesh_tgt : TriMesh
        Distances are measured on the target surface.
    """
    gt_src = np.asarray(gt_src, dtype=np.int64)
    gt_tgt = np.asarray(gt_tgt, dtype=np.int64)
    if gt_src.size == 0:
        raise ValueError("empty ground-truth set")
    mapped = pi.target_of[gt_src]
    d = _distance_lookup(mesh_tgt, mapped, gt_tgt)
    return GEODESIC_SCALE * float(d.mean())


def bijectivity_metric(pi_12, pi_21, mesh_1, mesh_2):
    """Mean geodesic round-trip error, symmetric over both compositions, x100."""
    r1 = pi_12.compose(pi_21).target_of          # mesh 1 -> mesh 1
    r2 = pi_21.compose(pi_12).target_of          # mesh 2 -> mesh 2
    d1 = _distance_lookup(mesh_1, r1, np.arange(mesh_1.n_vertices))
    d2 = _distance_lookup(mesh_2, r2, np.arange(mesh_2.n_vertices))
    return GEODESIC_SCALE * 0.5 * float(d1.mean() + d2.mean())


def smoothness_metric(pi, mesh_src, mesh_tgt):
    """Dirichlet energy of the pulled-back coordinates (one direction)."""
    return dirichlet_energy(pi.pull(mesh_tgt.vertices), mesh_src.cot_matrix)


def coverage_metric(pi, target_areas):
    """Percentage of target area hit by the image of the map."""
    target_areas = np.asarray(target_areas, dtype=np.float64)
    hit = np.zeros(target_areas.shape[0], dtype=bool)
    hit[pi.target_of] = True
    return 100.0 * float(target_areas[hit].sum() / target_areas.sum())


def _triangle_frame(p0, p1, p2):
    # 2D coordinates of a triangle in its own plane; returns (2, 2)
    # columns [p1-p0, p2-p0] expressed in an orthonormal frame
    e1 = p1 - p0
    e2 = p2 - p0
    n1 = np.linalg.norm(e1)
    if n1 == 0:
        return None
    u = e1 / n1
    e2p = e2 - np.dot(e2, u) * u
    n2 = np.linalg.norm(e2p)
    if n2 == 0:
        return None
    v = e2p / n2
    return np.array([[n1, np.dot(e2, u)], [0.0, np.dot(e2, v)]])


def conformal_distortion(pi, mesh_src, mesh_tgt, return_collapsed=False):
    """Area-weighted mean quasi-conformal dilatation of the map.

    Per source face the affine map onto the image triangle has singular
    values s1 >= s2; the face distortion is s1/s2 (1 for conformal
    maps, including uniform scaling).  Faces with collapsed images are
    excluded from the mean and counted separately.
    """
    verts_src = mesh_src.vertices
    verts_img = pi.pull(mesh_tgt.vertices)
    areas = mesh_src.face_areas

    total = 0.0
    weight = 0.0
    collapsed = 0
    for f, face in enumerate(mesh_src.faces):
        p = _triangle_frame(verts_src[face[0]], verts_src[face[1]], verts_src[face[2]])
        q = _triangle_frame(verts_img[face[0]], verts_img[face[1]], verts_img[face[2]])
        if p is None:
            collapsed += 1
            continue
        if q is None:
            collapsed += 1
            continue
        jac = q @ np.linalg.inv(p)
        s = np.linalg.svd(jac, compute_uv=False)
        if s[1] <= 1e-12 * max(s[0], 1e-300):
            collapsed += 1
            continue
        total += areas[f] * (s[0] / s[1])
        weight += areas[f]
    mean = total / weight if weight > 0 else float("inf")
    if return_collapsed:
        return mean, collapsed
    return mean


def compute_report(pi_12, pi_21=None, mesh_1=None, mesh_2=None,
                   gt_src=None, gt_tgt=None, with_conformal=False):
    """Full metrics report for a map (pair).

    Smoothness is averaged over both directions when both maps are
    given; bijectivity needs both.  Accuracy needs ground truth for the
    1->2 direction.
    """
    report = MetricsReport()
    if gt_src is not None and gt_tgt is not None:
        report.accuracy = accuracy_metric(pi_12, gt_src, gt_tgt, mesh_2)
    if pi_21 is not None:
        report.bijectivity = bijectivity_metric(pi_12, pi_21, mesh_1, mesh_2)
        report.smoothness = 0.5 * (
            smoothness_metric(pi_12, mesh_1, mesh_2)
            + smoothness_metric(pi_21, mesh_2, mesh_1)
        )
    else:
        report.smoothness = smoothness_metric(pi_12, mesh_1, mesh_2)
    report.coverage = coverage_metric(pi_12, mesh_2.vertex_areas)
    if with_conformal:
        report.conformal, report.collapsed_faces = conformal_distortion(
            pi_12, mesh_1, mesh_2, return_collapsed=True
        )
    return report
