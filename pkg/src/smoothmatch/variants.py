"""Pluggable smoothness energies and their Y-step solvers.

Every variant produces surrogate pulled-back coordinates ``Y`` for one
map direction by exactly minimizing its own coupled energy at fixed
pointwise maps; the differences between variants live entirely here.
The spatial block each variant contributes to the nearest-neighbor
assignment step is always ``sqrt(gamma*beta) * Y`` against
``sqrt(gamma*beta) * X_tgt``.

Degenerate kernels (``beta == 0``) are pinned explicitly, never left to
the sparse solver: the Dirichlet variant returns the area-weighted
centroid rows, ARAP pins the centroid of the solution, and nICP returns
identity transforms.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import lsqr, splu

logger = logging.getLogger(__name__)

VARIANT_KINDS = ("dirichlet", "nicp", "arap", "shells", "rhm")

# Spatial coupling weights per energy.  The area-weighted coupling norm
# makes the spatial block scale like beta * diam^2 against a spectral
# block of order k, so the Dirichlet default must sit in the hundreds
# to act at all on unit-area meshes; the remaining values follow the
# per-energy tuning of the equivalent deformation solvers.
DEFAULT_BETA = {
    "dirichlet": 200.0,
    "arap": 1e-1,
    "nicp": 1e-2,
    "shells": 1e-3,
    "rhm": 1.0,
}


@dataclass(frozen=True)
class Variant:
    """Smoothness energy selector and its extra weights.

    lam : rigidity weight of the ARAP/shells energies
    mu : pointwise-bijectivity weight of the RHM energy
    k_def : displacement basis size for shells (None: current map size)
    """

    kind: str = "dirichlet"
    lam: float = 1.0
    mu: float = 1e4
    k_def: int | None = None

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError("unknown variant %r (expected one of %s)" % (self.kind, ", ".join(VARIANT_KINDS)))
        if self.lam <= 0 or self.mu < 0:
            raise ValueError("variant weights must be positive")

    @property
    def default_beta(self):
        return DEFAULT_BETA[self.kind]


def prefactored(mat):
    """Sparse LU factorization returned as a multi-RHS solve callable."""
    mat = sparse.csc_matrix(mat)
    try:
        lu = splu(mat)
    except RuntimeError:
        # exactly singular: tiny ridge, flagged (should not happen for
        # beta > 0 with a PSD stiffness matrix)
        logger.warning("singular Y-step system, retrying with 1e-10 ridge")
        scale = float(np.abs(mat.diagonal()).mean()) or 1.0
        lu = splu((mat + 1e-10 * scale * sparse.identity(mat.shape[0], format="csc")).tocsc())
    return lambda rhs: lu.solve(np.asarray(rhs, dtype=np.float64))


def _a_centroid(points, areas):
    return (areas[:, None] * points).sum(axis=0) / areas.sum()


# ----------------------------------------------------------------------
# Dirichlet
# ----------------------------------------------------------------------
def y_step_dirichlet(pi, mesh_src, mesh_tgt, beta, solve=None):
    """Minimize ``|Y|^2_W + beta |Y - Pi X_tgt|^2_A`` over Y.

    Solves ``(W + beta A) Y = beta A (Pi X_tgt)``; the operator can be
    prefactored once per mesh and passed in as ``solve``.
    """
    pulled = pi.pull(mesh_tgt.vertices)
    a = mesh_src.vertex_areas
    if beta == 0:
        # pure Dirichlet minimizers are the constant maps; pin to the
        # area-weighted centroid of the pulled-back coordinates
        return np.tile(_a_centroid(pulled, a), (mesh_src.n_vertices, 1))
    if solve is None:
        solve = prefactored(mesh_src.cot_matrix + sparse.diags(beta * a))
    return solve(beta * a[:, None] * pulled)


def dirichlet_operator(mesh, beta):
    return mesh.cot_matrix + sparse.diags(beta * mesh.vertex_areas)


# ----------------------------------------------------------------------
# nICP (per-vertex affine field)
# ----------------------------------------------------------------------
def nicp_operator(mesh, beta):
    """System matrix of the affine-field fit, shape (4n, 4n).

    Unknown ordering: vec of the (n, 4) array holding one affine row
    per vertex; the three output coordinates share this operator.
    """
    n = mesh.n_vertices
    smooth = sparse.kron(mesh.cot_matrix, sparse.identity(4), format="csc")
    xt = np.hstack([mesh.vertices, np.ones((n, 1))])
    blocks = (beta * mesh.vertex_areas)[:, None, None] * np.einsum("ia,ib->iab", xt, xt)
    base = 4 * np.arange(n)[:, None, None]
    rows = (base + np.arange(4)[None, :, None] + np.zeros((1, 1, 4), dtype=np.int64)).ravel()
    cols = (base + np.zeros((1, 4, 1), dtype=np.int64) + np.arange(4)[None, None, :]).ravel()
    data_term = sparse.csc_matrix((blocks.ravel(), (rows, cols)), shape=(4 * n, 4 * n))
    return smooth + data_term


def y_step_nicp(pi, mesh_src, mesh_tgt, beta, solve=None):
    """Fit a smooth per-vertex affine field to the current map.

    Minimizes ``|D|^2_W + beta |D o X_src - Pi X_tgt|^2_A`` where
    ``D o X`` applies each vertex's 3x4 transform to its homogeneous
    coordinates.  Returns ``(D, Y)`` with ``Y = D o X_src``.
    """
    n = mesh_src.n_vertices
    x = mesh_src.vertices
    if beta == 0:
        # any graph-constant field is optimal; return identity transforms
        d = np.tile(np.hstack([np.eye(3), np.zeros((3, 1))]), (n, 1, 1))
        return d, x.copy()
    if solve is None:
        solve = prefactored(nicp_operator(mesh_src, beta))
    xt = np.hstack([x, np.ones((n, 1))])
    target = pi.pull(mesh_tgt.vertices)
    scaled = (beta * mesh_src.vertex_areas)[:, None] * target     # (n, 3)
    # column r stacks the per-vertex vectors beta * a_i * t_ir * xt_i
    rhs = np.stack([(scaled[:, r, None] * xt).ravel() for r in range(3)], axis=1)
    g = solve(rhs)                                                # (4n, 3)
    d = np.transpose(g.reshape(n, 4, 3), (0, 2, 1))               # (n, 3, 4)
    y = np.einsum("irc,ic->ir", d, xt)
    return d, y


# ----------------------------------------------------------------------
# ARAP (local-global)
# ----------------------------------------------------------------------
def arap_local_step(y, mesh_src):
    """Best-fit per-vertex rotations of the deformation X -> Y.

    Per vertex the rotation maximizes
    ``sum_j w_ij (y_i - y_j)^T R (x_i - x_j)`` (orthogonal Procrustes
    on the weighted edge covariance with determinant correction).
    Vertices with a vanishing covariance get the identity.
    """
    edges, w = mesh_src.edge_weights
    x = mesh_src.vertices
    dx = x[edges[:, 0]] - x[edges[:, 1]]
    dy = np.asarray(y)[edges[:, 0]] - np.asarray(y)[edges[:, 1]]
    contrib = w[:, None, None] * dx[:, :, None] * dy[:, None, :]
    cov = np.zeros((mesh_src.n_vertices, 3, 3))
    np.add.at(cov, edges[:, 0], contrib)
    np.add.at(cov, edges[:, 1], contrib)

    u, sing, vt = np.linalg.svd(cov)
    v = vt.transpose(0, 2, 1)
    ut = u.transpose(0, 2, 1)
    rot = v @ ut
    flip = np.linalg.det(rot) < 0
    if flip.any():
        v = v.copy()
        v[flip, :, 2] *= -1.0
        rot = v @ ut
    scale = np.abs(cov).max()
    dead = sing[:, 0] <= 1e-14 * max(scale, 1e-30)
    if dead.any():
        rot[dead] = np.eye(3)
    return rot


def arap_rhs(rotations, mesh_src):
    """Right-hand side ``b_i = sum_j (w_ij/2)(R_i + R_j)(x_i - x_j)``."""
    edges, w = mesh_src.edge_weights
    x = mesh_src.vertices
    dx = x[edges[:, 0]] - x[edges[:, 1]]
    rr = rotations[edges[:, 0]] + rotations[edges[:, 1]]
    vec = 0.5 * w[:, None] * np.einsum("eij,ej->ei", rr, dx)
    out = np.zeros((mesh_src.n_vertices, 3))
    np.add.at(out, edges[:, 0], vec)
    np.add.at(out, edges[:, 1], -vec)
    return out


def arap_rigid_term(rotations, y, mesh_src):
    """Alignment term between deformed edges and rotated rest edges."""
    edges, w = mesh_src.edge_weights
    x = mesh_src.vertices
    dx = x[edges[:, 0]] - x[edges[:, 1]]
    dy = np.asarray(y)[edges[:, 0]] - np.asarray(y)[edges[:, 1]]
    rr = rotations[edges[:, 0]] + rotations[edges[:, 1]]
    return 0.5 * float(np.einsum("e,ei,ei->", w, dy, np.einsum("eij,ej->ei", rr, dx)))


def arap_energy(rotations, y, mesh_src):
    """Local-rigidity energy; decomposes as E_D(Y) - 2 rigid + E_D(X)."""
    from .energies import dirichlet_energy

    w = mesh_src.cot_matrix
    return (
        dirichlet_energy(y, w)
        - 2.0 * arap_rigid_term(rotations, y, mesh_src)
        + dirichlet_energy(mesh_src.vertices, w)
    )


def y_step_arap(pi, mesh_src, mesh_tgt, beta, lam=1.0, solve=None):
    """One local-global ARAP sweep coupled to the current map.

    Rotations are fit to ``Y0 = Pi X_tgt``; the global step solves
    ``(lam W + beta A) Y = lam b(R) + beta A Pi X_tgt``.
    """
    pulled = pi.pull(mesh_tgt.vertices)
    rot = arap_local_step(pulled, mesh_src)
    b = arap_rhs(rot, mesh_src)
    a = mesh_src.vertex_areas
    if beta == 0:
        # translation-ambiguous: solve least-squares and pin the
        # A-weighted centroid to that of the pulled-back coordinates
        w = sparse.csr_matrix(lam * mesh_src.cot_matrix)
        y = np.column_stack(
            [lsqr(w, lam * b[:, c], atol=1e-13, btol=1e-13)[0] for c in range(3)]
        )
        y += _a_centroid(pulled, a) - _a_centroid(y, a)
        return rot, y
    if solve is None:
        solve = prefactored(arap_operator(mesh_src, beta, lam))
    y = solve(lam * b + beta * a[:, None] * pulled)
    return rot, y


def arap_operator(mesh, beta, lam=1.0):
    return lam * mesh.cot_matrix + sparse.diags(beta * mesh.vertex_areas)


# ----------------------------------------------------------------------
# Smooth-shells style spectral displacement
# ----------------------------------------------------------------------
def y_step_shells(pi, mesh_src, mesh_tgt, basis_src, beta, lam=1.0, k_def=None,
                  return_rotations=False):
    """Spectral-displacement deformation with ARAP regularization.

    The update ``Y = X + Phi D`` restricts per-vertex translations to
    the first ``k_def`` eigenfunctions; ``D`` solves the k x k normal
    equations of the ARAP energy (rotations fit to ``Pi X_tgt``) plus
    the spatial coupling term, projected onto the basis.
    """
    k_def = basis_src.k if k_def is None else min(k_def, basis_src.k)
    x = mesh_src.vertices
    a = mesh_src.vertex_areas
    w = mesh_src.cot_matrix
    pulled = pi.pull(mesh_tgt.vertices)
    rot = arap_local_step(pulled, mesh_src)
    b = arap_rhs(rot, mesh_src)

    phi = basis_src.phi[:, :k_def]
    op_phi = lam * (w @ phi) + beta * a[:, None] * phi
    lhs = phi.T @ op_phi
    rhs = phi.T @ (lam * b + beta * a[:, None] * pulled - (lam * (w @ x) + beta * a[:, None] * x))
    if beta == 0:
        d = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    else:
        d = np.linalg.solve(lhs, rhs)
    y = x + phi @ d
    if return_rotations:
        return d, y, rot
    return d, y


# ----------------------------------------------------------------------
# RHM (reversible-map coupling)
# ----------------------------------------------------------------------
def y_step_rhm(pi_fwd, pi_bwd, mesh_src, mesh_tgt, beta, mu, dirichlet_solve=None):
    """Dirichlet Y-step with an extra pointwise reversibility pull.

    Minimizes ``E_D(Y) + beta |Y - Pi_fwd X_tgt|^2_{A_src}
    + mu |Pi_bwd Y - X_tgt|^2_{A_tgt}``; the reverse-map term only adds
    a diagonal (Pi_bwd is row-one-hot), so the system stays sparse SPD
    but depends on the current map and is factored per call.
    """
    if mu == 0:
        return y_step_dirichlet(pi_fwd, mesh_src, mesh_tgt, beta, solve=dirichlet_solve)
    n_src = mesh_src.n_vertices
    a_src = mesh_src.vertex_areas
    a_tgt = mesh_tgt.vertex_areas
    x_tgt = mesh_tgt.vertices

    back = pi_bwd.target_of
    diag_bij = np.bincount(back, weights=a_tgt, minlength=n_src)
    rhs = beta * a_src[:, None] * pi_fwd.pull(x_tgt)
    for c in range(3):
        rhs[:, c] += mu * np.bincount(back, weights=a_tgt * x_tgt[:, c], minlength=n_src)
    mat = mesh_src.cot_matrix + sparse.diags(beta * a_src + mu * diag_bij)
    return prefactored(mat)(rhs)


# ----------------------------------------------------------------------
# assignment-step embedding and dispatch
# ----------------------------------------------------------------------
def spatial_embedding(y, x_tgt, gamma, beta):
    """Spatial block of the assignment embedding: ``(query, data)`` rows.

    Queries are ``sqrt(gamma*beta) * Y`` (one per source vertex), data
    rows are the scaled raw target coordinates; a zero weight yields
    empty blocks.
    """
    y = np.asarray(y, dtype=np.float64)
    x_tgt = np.asarray(x_tgt, dtype=np.float64)
    s = np.sqrt(gamma * beta)
    if s == 0.0:
        return np.zeros((y.shape[0], 0)), np.zeros((x_tgt.shape[0], 0))
    return s * y, s * x_tgt


def run_y_step(variant, beta, pi_fwd, pi_bwd, mesh_src, mesh_tgt, basis_src,
               k_current, solve=None):
    """Dispatch one direction's Y-step; returns ``(y, aux)``.

    ``aux`` carries the variant's auxiliary unknowns (rotations, affine
    field, spectral displacement) for energy reporting.
    """
    kind = variant.kind
    if kind == "dirichlet":
        return y_step_dirichlet(pi_fwd, mesh_src, mesh_tgt, beta, solve=solve), None
    if kind == "nicp":
        d, y = y_step_nicp(pi_fwd, mesh_src, mesh_tgt, beta, solve=solve)
        return y, {"affine": d}
    if kind == "arap":
        rot, y = y_step_arap(pi_fwd, mesh_src, mesh_tgt, beta, variant.lam, solve=solve)
        return y, {"rotations": rot}
    if kind == "shells":
        k_def = variant.k_def if variant.k_def is not None else k_current
        d, y, rot = y_step_shells(
            pi_fwd, mesh_src, mesh_tgt, basis_src, beta, variant.lam,
            k_def=k_def, return_rotations=True,
        )
        return y, {"d_spec": d, "rotations": rot}
    if kind == "rhm":
        y = y_step_rhm(pi_fwd, pi_bwd, mesh_src, mesh_tgt, beta, variant.mu,
                       dirichlet_solve=solve)
        return y, None
    raise ValueError("unknown variant %r" % kind)


def y_step_operator(variant, mesh, beta):
    """Map-independent Y-step operator for prefactoring, or None."""
    if variant.kind == "dirichlet" or (variant.kind == "rhm" and variant.mu == 0):
        return dirichlet_operator(mesh, beta) if beta > 0 else None
    if variant.kind == "arap":
        return arap_operator(mesh, beta, variant.lam) if beta > 0 else None
    if variant.kind == "nicp":
        return nicp_operator(mesh, beta) if beta > 0 else None
    return None
