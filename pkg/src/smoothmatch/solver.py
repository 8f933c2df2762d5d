"""Three-block refinement of vertex-to-vertex map pairs.

Each outer iteration alternates exact minimizations of the combined
objective (bijectivity plus gamma times coupled smoothness):

1. C-step: both functional maps in closed form (K x K SPD systems).
2. Y-step: the active variant's sparse solve, one per direction, with
   the surrogate coordinates re-seeded from the freshest maps.
3. Pi-step: per-vertex nearest-neighbor assignment in a concatenated
   spectral/spatial embedding (row-separable exact minimization when
   ``exact_pi_step`` is on; the default drops the first bijectivity
   block, keeping only coupling terms, which is much smaller).

Across iterations the spectral size K grows linearly and gamma follows
a geometric ramp, so early iterations align low frequencies before the
smoothness term is fully weighted.

Index convention (see also :mod:`smoothmatch.energies`): ``c_21`` is
the spectral pull-back of ``pi_12`` and vice versa; the subscripts of C
name the function-transport direction, which is opposite to the vertex
map it represents.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import variants as _variants
from .energies import EnergyWeights, energy_breakdown
from .spectral import PointwiseMap, nearest_rows
from .variants import Variant

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    """Schedules, weights and switches of the refinement loop."""

    k_init: int = 20
    k_final: int = 100
    n_outer: int = 9
    gamma_init: float = 0.1
    gamma_final: float = 1.0
    variant: Variant = field(default_factory=Variant)
    weights: EnergyWeights | None = None
    exact_pi_step: bool = False
    early_exit: bool = True

    def __post_init__(self):
        if self.k_init < 1 or self.k_final < self.k_init:
            raise ValueError("need 1 <= k_init <= k_final")
        if self.n_outer < 1:
            raise ValueError("n_outer must be positive")
        if self.gamma_init != self.gamma_final and self.gamma_init <= 0:
            raise ValueError("a geometric gamma ramp needs gamma_init > 0")
        if self.weights is None:
            self.weights = EnergyWeights(beta=self.variant.default_beta)

    def k_schedule(self):
        """Spectral sizes per iteration, linear from k_init to k_final."""
        if self.n_outer == 1:
            return np.array([self.k_final])
        return np.round(np.linspace(self.k_init, self.k_final, self.n_outer)).astype(int)

    def gamma_schedule(self):
        """Smoothness weights per iteration, geometric ramp."""
        if self.n_outer == 1 or self.gamma_init == self.gamma_final:
            return np.full(self.n_outer, self.gamma_final, dtype=float)
        return np.geomspace(self.gamma_init, self.gamma_final, self.n_outer)


class SolverState:
    """The six live variables of one refinement, plus auxiliaries."""

    def __init__(self, pi_12, pi_21, c_12=None, c_21=None, y_12=None, y_21=None):
        self.pi_12 = pi_12
        self.pi_21 = pi_21
        self.c_12 = c_12
        self.c_21 = c_21
        self.y_12 = y_12
        self.y_21 = y_21
        self.aux_12 = None
        self.aux_21 = None
        self.k_current = None
        self.iteration = 0


class EnergyTrace:
    """Per-iteration energy record of a refinement run."""

    COLUMNS = ("iteration", "k", "gamma", "e_bij", "e_couple_spec",
               "e_dirichlet", "e_couple_spatial", "e_total")

    def __init__(self):
        self.rows = []

    def append(self, **row):
        self.rows.append({c: row[c] for c in self.COLUMNS})

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path_or_file):
        close = False
        fh = path_or_file
        if not hasattr(fh, "write"):
            fh = open(fh, "w")
            close = True
        try:
            fh.write(",".join(self.COLUMNS) + "\n")
            for r in self.rows:
                fh.write("%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n" % tuple(
                    r[c] for c in self.COLUMNS
                ))
        finally:
            if close:
                fh.close()


def _c_direction(pi_back, pi_fwd, basis_i, basis_j, weights, k):
    # exact minimizer over C_ji of both terms it appears in:
    #   |Pi_ji Phi_i C - Phi_j|^2_{A_j} + alpha |Phi_i C - Pi_ij Phi_j|^2_{A_i}
    # which, with Phi_i.T A_i Phi_i = I, gives the K x K SPD system
    #   (Phi_i.T Pi_ji.T A_j Pi_ji Phi_i + alpha I) C
    #        = Phi_i.T Pi_ji.T A_j Phi_j + alpha Phi_i.T A_i Pi_ij Phi_j
    phi_i = basis_i.phi[:, :k]
    phi_j = basis_j.phi[:, :k]
    a_j = basis_j.areas
    pulled = phi_i[pi_back.target_of]                     # Pi_ji Phi_i
    lhs = pulled.T @ (a_j[:, None] * pulled)
    rhs = pulled.T @ (a_j[:, None] * phi_j)
    alpha = weights.alpha
    if alpha > 0:
        lhs = lhs + alpha * np.eye(k)
        rhs = rhs + alpha * (phi_i.T @ (basis_i.areas[:, None] * phi_j[pi_fwd.target_of]))
    else:
        # rank-deficient map images can make the pure bijectivity
        # system singular; tiny documented ridge
        lhs = lhs + 1e-9 * np.eye(k)
        logger.debug("c_step with alpha=0: applying 1e-9 ridge")
    return np.linalg.solve(lhs, rhs)


def c_step(state, basis_1, basis_2, weights, k=None):
    """Closed-form update of both functional maps at fixed Pi.

    Returns ``(c_12, c_21)`` where each K x K map is the exact joint
    minimizer of the bijectivity energy in its own variable.
    """
    k = basis_1.k if k is None else k
    c_21 = _c_direction(state.pi_21, state.pi_12, basis_1, basis_2, weights, k)
    c_12 = _c_direction(state.pi_12, state.pi_21, basis_2, basis_1, weights, k)
    return c_12, c_21


def _pi_direction(c_own, c_other, y, basis_src, basis_tgt, mesh_tgt, weights, exact):
    # recover the map src -> tgt; per source vertex q the assignment
    # minimizes (up to the positive row weight A_src[q])
    #   alpha |Phi_tgt[p] - (Phi_src C_own)[q]|^2
    #   + gamma beta |X_tgt[p] - Y[q]|^2
    #   (+ spectral_bij |(Phi_tgt C_other)[p] - Phi_src[q]|^2 in exact mode)
    k_src, k_tgt = c_own.shape
    phi_src = basis_src.phi[:, :k_src]
    phi_tgt = basis_tgt.phi[:, :k_tgt]

    sa = np.sqrt(weights.alpha)
    query = [sa * (phi_src @ c_own)]
    data = [sa * phi_tgt]

    q_sp, d_sp = _variants.spatial_embedding(
        y, mesh_tgt.vertices, weights.gamma, weights.beta
    )
    if q_sp.shape[1]:
        query.append(q_sp)
        data.append(d_sp)

    if exact:
        sb = np.sqrt(weights.spectral_bij)
        query.append(sb * phi_src)
        data.append(sb * (phi_tgt @ c_other))

    idx = nearest_rows(np.hstack(query), np.hstack(data))
    return PointwiseMap(idx, mesh_tgt.n_vertices)


def pi_step(state, mesh_1, mesh_2, basis_1, basis_2, weights, exact=False):
    """Row-separable assignment update of both pointwise maps."""
    pi_12 = _pi_direction(
        state.c_21, state.c_12, state.y_12, basis_1, basis_2, mesh_2, weights, exact
    )
    pi_21 = _pi_direction(
        state.c_12, state.c_21, state.y_21, basis_2, basis_1, mesh_1, weights, exact
    )
    return pi_12, pi_21


def refine(pi_12, pi_21, mesh_1, mesh_2, basis_1, basis_2, config=None):
    """Run the full refinement loop on an initial map pair.

    Parameters
    ----------
    pi_12, pi_21 : PointwiseMap
        Initial maps in the two directions.
    mesh_1, mesh_2 : TriMesh
    basis_1, basis_2 : SpectralBasis
        Must hold at least ``config.k_final`` eigenpairs.
    config : SolverConfig

    Returns
    -------
    (PointwiseMap, PointwiseMap, EnergyTrace)
        Refined maps and the per-iteration energy record.
    """
    config = SolverConfig() if config is None else config
    if basis_1.k < config.k_final or basis_2.k < config.k_final:
        raise ValueError(
            "bases hold %d/%d eigenpairs, need k_final=%d"
            % (basis_1.k, basis_2.k, config.k_final)
        )
    if pi_12.n_src != mesh_1.n_vertices or pi_12.n_tgt != mesh_2.n_vertices:
        raise ValueError("pi_12 does not match the meshes")
    if pi_21.n_src != mesh_2.n_vertices or pi_21.n_tgt != mesh_1.n_vertices:
        raise ValueError("pi_21 does not match the meshes")

    weights = config.weights
    variant = config.variant
    ks = config.k_schedule()
    gammas = config.gamma_schedule()

    # map-independent Y-step operators are factored once per mesh
    solves = []
    for mesh in (mesh_1, mesh_2):
        op = _variants.y_step_operator(variant, mesh, weights.beta)
        solves.append(_variants.prefactored(op) if op is not None else None)

    state = SolverState(pi_12, pi_21)
    trace = EnergyTrace()

    for it in range(config.n_outer):
        k = int(ks[it])
        w_it = replace(weights, gamma=float(gammas[it]))
        b1 = basis_1.sliced(k)
        b2 = basis_2.sliced(k)
        state.k_current = k
        state.iteration = it

        state.c_12, state.c_21 = c_step(state, b1, b2, w_it, k)

        state.y_12, state.aux_12 = _variants.run_y_step(
            variant, w_it.beta, state.pi_12, state.pi_21, mesh_1, mesh_2, b1, k,
            solve=solves[0],
        )
        state.y_21, state.aux_21 = _variants.run_y_step(
            variant, w_it.beta, state.pi_21, state.pi_12, mesh_2, mesh_1, b2, k,
            solve=solves[1],
        )

        new_12, new_21 = pi_step(
            state, mesh_1, mesh_2, b1, b2, w_it, exact=config.exact_pi_step
        )
        unchanged = new_12 == state.pi_12 and new_21 == state.pi_21
        state.pi_12, state.pi_21 = new_12, new_21

        parts = energy_breakdown(state, mesh_1, mesh_2, b1, b2, w_it, variant)
        trace.append(iteration=it, k=k, gamma=float(gammas[it]), **parts)

        schedule_stable = (
            it + 1 >= config.n_outer
            or (ks[it + 1] == k and gammas[it + 1] == gammas[it])
        )
        if config.early_exit and unchanged and schedule_stable:
            break

    return state.pi_12, state.pi_21, trace


def landmark_init(landmarks, basis_1, basis_2, k0=None, diffusion_time=None):
    """Initial map pair from a few landmark correspondences.

    Landmark indicators (area-normalized vertex spikes, whose spectral
    coefficients are exactly the basis rows) are projected into the
    first ``k0`` eigenfunctions of each shape; the functional map
    aligning the two coefficient matrices in least squares is converted
    to pointwise maps.

    Parameters
    ----------
    landmarks : (L, 2) array_like
        Rows ``(index on mesh 1, index on mesh 2)``, L >= 2.
    k0 : int, optional
        Spectral size of the alignment (default: L).
    diffusion_time : float, optional
        If given, indicators are smoothed by the spectral heat kernel
        ``exp(-t * lambda)`` before alignment.
    """
    from .spectral import fmap_to_p2p

    lm = np.asarray(landmarks, dtype=np.int64)
    if lm.ndim != 2 or lm.shape[1] != 2:
        raise ValueError("landmarks must be an (L, 2) index array")
    if lm.shape[0] < 2:
        raise ValueError("need at least 2 landmarks")
    for col, basis in ((0, basis_1), (1, basis_2)):
        if np.unique(lm[:, col]).size != lm.shape[0]:
            raise ValueError("duplicate landmark indices on mesh %d" % (col + 1))
        if lm[:, col].min() < 0 or lm[:, col].max() >= basis.n:
            raise ValueError("landmark index out of range on mesh %d" % (col + 1))

    k0 = lm.shape[0] if k0 is None else k0
    if k0 > min(basis_1.k, basis_2.k):
        raise ValueError("k0=%d exceeds the stored bases" % k0)

    f1 = basis_1.phi[lm[:, 0], :k0].T            # (k0, L)
    f2 = basis_2.phi[lm[:, 1], :k0].T
    if diffusion_time is not None:
        f1 = np.exp(-diffusion_time * basis_1.lam[:k0])[:, None] * f1
        f2 = np.exp(-diffusion_time * basis_2.lam[:k0])[:, None] * f2

    # map 1 -> 2 pulls coefficients back from shape 2: C f2 ~ f1
    c_for_12 = np.linalg.lstsq(f2.T, f1.T, rcond=None)[0].T
    c_for_21 = np.linalg.lstsq(f1.T, f2.T, rcond=None)[0].T
    pi_12 = fmap_to_p2p(c_for_12, basis_1.sliced(k0), basis_2.sliced(k0))
    pi_21 = fmap_to_p2p(c_for_21, basis_2.sliced(k0), basis_1.sliced(k0))
    return pi_12, pi_21
