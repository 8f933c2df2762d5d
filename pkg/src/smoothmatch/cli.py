"""Command-line front end: ``refine``, ``eval`` and ``synth``.

Exit codes: 0 on success, 1 on solver failure, 2 on input errors.
"""

import argparse
import os
import sys

import numpy as np

from . import io as sm_io
from .energies import EnergyWeights
from .mesh import load_mesh, write_off
from .metrics import compute_report
from .solver import SolverConfig, landmark_init, refine
from .spectral import compute_basis
from .synth import farthest_point_indices, icosphere, jittered_copy
from .variants import DEFAULT_BETA, VARIANT_KINDS, Variant

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_INPUT = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="smoothmatch",
        description="Refine and evaluate vertex-to-vertex maps between triangle meshes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ref = sub.add_parser("refine", help="refine an initial map pair")
    p_ref.add_argument("--src", required=True, help="source mesh (.off/.obj)")
    p_ref.add_argument("--tgt", required=True, help="target mesh (.off/.obj)")
    init = p_ref.add_mutually_exclusive_group(required=True)
    init.add_argument("--landmarks", help="landmark pair file (src_idx tgt_idx per line)")
    init.add_argument("--init-map", nargs=2, metavar=("MAP12", "MAP21"),
                      help="initial pointwise map files for both directions")
    p_ref.add_argument("--energy", choices=VARIANT_KINDS, default="dirichlet")
    p_ref.add_argument("--out", required=True, help="output directory")
    p_ref.add_argument("--gt", help="ground-truth file for the 1->2 direction")
    p_ref.add_argument("--k-init", type=int, default=20)
    p_ref.add_argument("--k-final", type=int, default=100)
    p_ref.add_argument("--iters", type=int, default=9)
    p_ref.add_argument("--gamma-init", type=float, default=0.1)
    p_ref.add_argument("--gamma-final", type=float, default=1.0)
    p_ref.add_argument("--spectral-bij", type=float, default=1.0)
    p_ref.add_argument("--alpha", type=float, default=0.1,
                       help="spectral coupling weight")
    p_ref.add_argument("--beta", type=float, default=None,
                       help="spatial coupling weight (default: per-energy)")
    p_ref.add_argument("--lam", type=float, default=1.0,
                       help="rigidity weight (arap/shells)")
    p_ref.add_argument("--mu", type=float, default=1e4,
                       help="pointwise bijectivity weight (rhm)")
    p_ref.add_argument("--k-def", type=int, default=None,
                       help="displacement basis size (shells)")
    p_ref.add_argument("--exact-pi-step", action="store_true",
                       help="use all bijectivity terms in the assignment embedding")
    p_ref.add_argument("--no-normalize", action="store_true",
                       help="skip unit-area normalization of the inputs")
    p_ref.add_argument("--print-config", action="store_true")
    p_ref.add_argument("--conformal", action="store_true",
                       help="add conformal distortion to the printed report")
    p_ref.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for --pairs batch lists")
    p_ref.add_argument("--pairs", help="batch file: src tgt landmarks outdir per line")

    p_eval = sub.add_parser("eval", help="evaluate map files")
    p_eval.add_argument("--src", required=True)
    p_eval.add_argument("--tgt", required=True)
    p_eval.add_argument("--map12", required=True, help="map file mesh1 -> mesh2")
    p_eval.add_argument("--map21", help="map file mesh2 -> mesh1 (enables bijectivity)")
    p_eval.add_argument("--gt", help="ground-truth file (pairs or full map)")
    p_eval.add_argument("--conformal", action="store_true")
    p_eval.add_argument("--out", help="also write the CSV report here")
    p_eval.add_argument("--no-normalize", action="store_true")

    p_syn = sub.add_parser("synth", help="generate synthetic fixtures")
    p_syn.add_argument("fixture", help="fixture name (icosphere)")
    p_syn.add_argument("--subdiv", type=int, default=3)
    p_syn.add_argument("--jitter", type=float, default=0.02,
                       help="vertex noise as a fraction of the bbox diagonal")
    p_syn.add_argument("--landmarks", type=int, default=5)
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "refine":
            if args.pairs:
                return _run_batch(args)
            return _cmd_refine(args)
        if args.command == "eval":
            return _cmd_eval(args)
        return _cmd_synth(args)
    except (FileNotFoundError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:
        print("solver error: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER


def _require(path, what):
    if not os.path.exists(path):
        raise FileNotFoundError("%s not found: %s" % (what, path))
    return path


def _refine_config(args):
    variant = Variant(kind=args.energy, lam=args.lam, mu=args.mu, k_def=args.k_def)
    beta = DEFAULT_BETA[args.energy] if args.beta is None else args.beta
    weights = EnergyWeights(spectral_bij=args.spectral_bij, alpha=args.alpha, beta=beta)
    return SolverConfig(
        k_init=args.k_init, k_final=args.k_final, n_outer=args.iters,
        gamma_init=args.gamma_init, gamma_final=args.gamma_final,
        variant=variant, weights=weights, exact_pi_step=args.exact_pi_step,
    )


def _print_config(config, args):
    print("command refine")
    print("src %s" % args.src)
    print("tgt %s" % args.tgt)
    print("energy %s" % config.variant.kind)
    print("k_init %d" % config.k_init)
    print("k_final %d" % config.k_final)
    print("n_outer %d" % config.n_outer)
    print("gamma_init %g" % config.gamma_init)
    print("gamma_final %g" % config.gamma_final)
    print("spectral_bij %g" % config.weights.spectral_bij)
    print("alpha %g" % config.weights.alpha)
    print("beta %g" % config.weights.beta)
    print("lam %g" % config.variant.lam)
    print("mu %g" % config.variant.mu)
    print("k_def %s" % ("auto" if config.variant.k_def is None else config.variant.k_def))
    print("exact_pi_step %s" % config.exact_pi_step)
    print("normalize %s" % (not args.no_normalize))


def _cmd_refine(args):
    config = _refine_config(args)
    if args.print_config:
        _print_config(config, args)

    mesh_1 = load_mesh(_require(args.src, "source mesh"), normalize=not args.no_normalize)
    mesh_2 = load_mesh(_require(args.tgt, "target mesh"), normalize=not args.no_normalize)

    k_max = min(config.k_final, mesh_1.n_vertices - 2, mesh_2.n_vertices - 2)
    if k_max < 2:
        raise ValueError("meshes are too small to refine")
    if k_max < config.k_final:
        config.k_final = k_max
        config.k_init = min(config.k_init, k_max)
        print("note: spectral sizes reduced to %d for these mesh sizes" % k_max,
              file=sys.stderr)
    basis_1 = compute_basis(mesh_1, config.k_final)
    basis_2 = compute_basis(mesh_2, config.k_final)

    if args.landmarks:
        pairs = sm_io.read_index_pairs(_require(args.landmarks, "landmark file"))
        pi_12, pi_21 = landmark_init(pairs, basis_1, basis_2)
    else:
        path_12, path_21 = args.init_map
        pi_12 = sm_io.read_pointwise_map(_require(path_12, "initial map"), mesh_2.n_vertices)
        pi_21 = sm_io.read_pointwise_map(_require(path_21, "initial map"), mesh_1.n_vertices)
        if pi_12.n_src != mesh_1.n_vertices or pi_21.n_src != mesh_2.n_vertices:
            raise ValueError("initial map length does not match mesh size")

    pi_12, pi_21, trace = refine(pi_12, pi_21, mesh_1, mesh_2, basis_1, basis_2, config)

    os.makedirs(args.out, exist_ok=True)
    sm_io.write_pointwise_map(os.path.join(args.out, "map_12.txt"), pi_12)
    sm_io.write_pointwise_map(os.path.join(args.out, "map_21.txt"), pi_21)
    trace.to_csv(os.path.join(args.out, "energy_trace.csv"))
    if len(trace):
        from .energies import format_breakdown

        final = {k: v for k, v in trace.rows[-1].items() if k.startswith("e_")}
        with open(os.path.join(args.out, "energy_report.txt"), "w") as fh:
            fh.write(format_breakdown(final) + "\n")

    from .spectral import p2p_to_fmap
    k = int(trace.rows[-1]["k"]) if len(trace) else config.k_final
    # fmap_NM.txt holds the spectral pull-back of map_NM.txt
    sm_io.write_fmap(os.path.join(args.out, "fmap_12.txt"),
                     p2p_to_fmap(pi_12, basis_1, basis_2, k, k))
    sm_io.write_fmap(os.path.join(args.out, "fmap_21.txt"),
                     p2p_to_fmap(pi_21, basis_2, basis_1, k, k))

    gt_src = gt_tgt = None
    if args.gt:
        gt_src, gt_tgt = sm_io.read_ground_truth(_require(args.gt, "ground-truth file"))
    report = compute_report(pi_12, pi_21, mesh_1, mesh_2, gt_src, gt_tgt,
                            with_conformal=args.conformal)
    print(report.as_text())
    return EXIT_OK


def _run_batch(args):
    rows = []
    with open(_require(args.pairs, "batch file"), "r") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise ValueError("batch lines must be: src tgt landmarks outdir")
            rows.append(parts)
    jobs = []
    for src, tgt, lms, out in rows:
        sub = argparse.Namespace(**vars(args))
        sub.src, sub.tgt, sub.landmarks, sub.out = src, tgt, lms, out
        sub.init_map = None
        sub.pairs = None
        jobs.append(sub)
    if args.jobs > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            statuses = list(pool.map(_cmd_refine, jobs))
    else:
        statuses = [_cmd_refine(sub) for sub in jobs]
    return max(statuses) if statuses else EXIT_OK


def _cmd_eval(args):
    mesh_1 = load_mesh(_require(args.src, "source mesh"), normalize=not args.no_normalize)
    mesh_2 = load_mesh(_require(args.tgt, "target mesh"), normalize=not args.no_normalize)
    pi_12 = sm_io.read_pointwise_map(_require(args.map12, "map file"), mesh_2.n_vertices)
    if pi_12.n_src != mesh_1.n_vertices:
        raise ValueError("map length %d does not match mesh size %d"
                         % (pi_12.n_src, mesh_1.n_vertices))
    pi_21 = None
    if args.map21:
        pi_21 = sm_io.read_pointwise_map(_require(args.map21, "map file"), mesh_1.n_vertices)
        if pi_21.n_src != mesh_2.n_vertices:
            raise ValueError("map length %d does not match mesh size %d"
                             % (pi_21.n_src, mesh_2.n_vertices))
    gt_src = gt_tgt = None
    if args.gt:
        gt_src, gt_tgt = sm_io.read_ground_truth(_require(args.gt, "ground-truth file"))

    report = compute_report(pi_12, pi_21, mesh_1, mesh_2, gt_src, gt_tgt,
                            with_conformal=args.conformal)
    csv = sm_io.metrics_csv(report, with_conformal=args.conformal)
    sys.stdout.write(csv)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv)
    return EXIT_OK


def _cmd_synth(args):
    if args.fixture != "icosphere":
        raise ValueError("unknown fixture %r (available: icosphere)" % args.fixture)
    os.makedirs(args.out, exist_ok=True)
    src = icosphere(args.subdiv)
    tgt = jittered_copy(src, args.jitter, seed=args.seed)
    write_off(src, os.path.join(args.out, "src.off"))
    write_off(tgt, os.path.join(args.out, "tgt.off"))
    # dense identity ground truth: vertex i of the source corresponds
    # to vertex i of the jittered copy
    with open(os.path.join(args.out, "gt.txt"), "w") as fh:
        for i in range(src.n_vertices):
            fh.write("%d\n" % i)
    lm = farthest_point_indices(src, args.landmarks)
    sm_io.write_index_pairs(os.path.join(args.out, "lm%d.txt" % args.landmarks),
                            np.column_stack([lm, lm]))
    print("wrote %s fixture (%d vertices) to %s" % (args.fixture, src.n_vertices, args.out))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
