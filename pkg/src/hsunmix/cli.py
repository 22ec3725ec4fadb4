"""Command-line interface.

Subcommands cover the full pipeline: synthesize a scene, cluster its pixels,
unmix it with any algorithm variant, score estimates against ground truth,
and drive Monte-Carlo experiment sweeps from a spec file.

Exit codes: 0 on success, 1 when the algorithm itself fails (numerical
breakdown or degenerate input data), 2 for usage, IO, and format errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .clustering import fcm
from .errors import CubeFormatError, DegenerateDataError, LibraryParseError, NumericalFailureError
from .experiment import parse_experiment_spec, resolve_variant, run_experiment, write_aggregate_csv, write_rows_csv
from .fileio import read_cube, read_spectral_library, write_cube, write_report, write_spectral_library
from .initialize import fcls_abundances, random_init, vca
from .metrics import evaluate_matrices
from .synth import bundled_library, generate_synthetic
from .types import HyperspectralImage, SignatureMatrix, UnmixingConfig
from .unmix import AlgorithmVariant, run_unmixing

VARIANT_CHOICES = tuple(v.value for v in AlgorithmVariant) + ("proposed",)


def _load_library(path):
    if path is None:
        return bundled_library()
    return read_spectral_library(path)


def _cmd_synth(args) -> int:
    library = _load_library(args.library)
    scene = generate_synthetic(
        library.data,
        args.c,
        width=args.width,
        height=args.height,
        patch=args.patch,
        filter_size=args.filter,
        snr_db=args.snr,
        purity_cap=args.purity_cap,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_cube(out / "Y.cube", scene.Y)
    write_spectral_library(out / "A_true.csv", scene.A_true)
    write_cube(
        out / "S_true.cube",
        HyperspectralImage(scene.S_true.data, scene.Y.width, scene.Y.height),
    )
    print(f"wrote scene with {scene.Y.n_pixels} pixels, {scene.Y.n_bands} bands to {out}")
    return 0


def _cmd_cluster(args) -> int:
    image = read_cube(args.cube)
    assignment = fcm(
        image,
        args.clusters,
        m=args.m,
        tol=args.tol,
        max_iter=args.max_iter,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_cube(
        out / "memberships.cube",
        HyperspectralImage(assignment.memberships, image.width, image.height),
    )
    write_cube(
        out / "labels.cube",
        HyperspectralImage(
            assignment.labels.astype(np.float64)[np.newaxis, :], image.width, image.height
        ),
    )
    counts = np.bincount(assignment.labels, minlength=args.clusters)
    print(f"clustered {image.n_pixels} pixels into {args.clusters} groups; sizes {counts.tolist()}")
    return 0


def _cmd_unmix(args) -> int:
    image = read_cube(args.cube)
    variant = resolve_variant(args.variant)
    if args.clusters_given and variant != AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED.value:
        print(f"warning: --clusters has no effect for variant {variant}", file=sys.stderr)

    if args.init == "vca":
        A0 = vca(image, args.endmembers, seed=args.seed)
        S0 = fcls_abundances(image, A0)
    else:
        A0, S0 = random_init(image.n_bands, args.endmembers, image.n_pixels, seed=args.seed)

    cfg = UnmixingConfig(
        mu=args.mu,
        eta=args.eta,
        q=args.q,
        sparsity_weight=args.sparsity_weight,
        max_iter=args.max_iter,
        eps=args.eps,
        clusters=args.clusters,
        seed=args.seed,
        variant=variant,
    )
    clusters = None
    if variant == AlgorithmVariant.CLUSTERED_SPARSE_DISTRIBUTED.value:
        clusters = fcm(image, args.clusters, seed=args.seed)
    result = run_unmixing(image, cfg, A0, S0, clusters)

    report = None
    if args.truth_a is not None or args.truth_s is not None:
        if args.truth_a is None or args.truth_s is None:
            raise ValueError("--truth-a and --truth-s must be given together")
        A_true = read_spectral_library(args.truth_a)
        S_true = read_cube(args.truth_s)
        report = evaluate_matrices(A_true.data, S_true.data, result.A.data, result.S.data)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_spectral_library(out / "A_est.csv", result.A)
    write_cube(out / "S_est.cube", HyperspectralImage(result.S.data, image.width, image.height))
    write_report(out / "report.json", report, result.cost_trace, cfg)
    line = (
        f"{variant}: {result.iterations_run} iterations "
        f"({result.stop_reason.value}), final cost {result.cost_trace[-1]:.6g}"
    )
    if report is not None:
        line += f", rms_sad {report.rms_sad:.6g}, rms_aad {report.rms_aad:.6g}"
    print(line)
    return 0


def _cmd_eval(args) -> int:
    A_true = read_spectral_library(args.truth_a)
    S_true = read_cube(args.truth_s)
    A_est = read_spectral_library(args.est_a)
    S_est = read_cube(args.est_s)
    report = evaluate_matrices(A_true.data, S_true.data, A_est.data, S_est.data)
    payload = {
        "per_endmember_sad": list(report.per_endmember_sad),
        "rms_sad": report.rms_sad,
        "rms_aad": report.rms_aad,
        "matching": list(report.matching),
    }
    if args.out is not None:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    print(f"rms_sad {report.rms_sad:.6g}, rms_aad {report.rms_aad:.6g}")
    return 0


def _cmd_experiment(args) -> int:
    with open(args.spec) as fh:
        spec = parse_experiment_spec(fh.read())
    library = _load_library(spec.library)
    if args.quiet:
        progress = None
    else:
        def progress(done, total, row):
            print(
                f"[{done}/{total}] {row['variant']} snr={row['snr_db']:g} "
                f"clusters={row['clusters']} run={row['run']} "
                f"rms_sad={row['rms_sad']:.4g}",
                flush=True,
            )
    rows, aggregates = run_experiment(spec, library.data, jobs=args.jobs, progress=progress)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(out / "runs.csv", rows)
    write_aggregate_csv(out / "aggregate.csv", aggregates)
    print(f"wrote {len(rows)} runs and {len(aggregates)} aggregate rows to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsunmix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--c", type=int, default=6, help="number of endmembers")
    p.add_argument("--width", type=int, default=40)
    p.add_argument("--height", type=int, default=40)
    p.add_argument("--patch", type=int, default=8, help="side of the square patches")
    p.add_argument("--filter", type=int, default=7, help="odd smoothing window size")
    p.add_argument("--snr", type=float, default=25.0, help="target SNR in dB")
    p.add_argument("--purity-cap", type=float, default=0.8, help="maximum abundance of any pixel")
    p.add_argument("--library", default=None, help="spectral library CSV (default: bundled)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("cluster", help="fuzzy-cluster the pixels of a cube")
    p.add_argument("cube", help="input data cube")
    p.add_argument("--clusters", type=int, default=6)
    p.add_argument("--m", type=float, default=2.0, help="fuzziness exponent")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("unmix", help="estimate signatures and abundances")
    p.add_argument("cube", help="input data cube")
    p.add_argument("--variant", choices=VARIANT_CHOICES, default="proposed")
    p.add_argument("--init", choices=("vca", "random"), default="vca")
    p.add_argument("--endmembers", type=int, default=6)
    p.add_argument("--clusters", type=int, default=6)
    p.add_argument("--mu", type=float, default=0.02, help="gradient step size")
    p.add_argument("--eta", type=float, default=0.1, help="neighborhood coupling strength")
    p.add_argument("--q", type=float, default=1.0, help="sparsity norm exponent in (0, 1]")
    p.add_argument("--sparsity-weight", type=float, default=None,
                   help="override the data-driven sparsity weight")
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--eps", type=float, default=1e-8, help="cost-change stopping threshold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth-a", default=None, help="true signatures CSV for scoring")
    p.add_argument("--truth-s", default=None, help="true abundance cube for scoring")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_unmix)

    p = sub.add_parser("eval", help="score estimates against ground truth")
    p.add_argument("--truth-a", required=True)
    p.add_argument("--truth-s", required=True)
    p.add_argument("--est-a", required=True)
    p.add_argument("--est-s", required=True)
    p.add_argument("--out", default=None, help="optional JSON output path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("experiment", help="run a Monte-Carlo sweep from a spec file")
    p.add_argument("spec", help="experiment spec file (key = value lines)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--quiet", action="store_true", help="suppress per-run progress lines")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "unmix":
        given = argv if argv is not None else sys.argv[1:]
        args.clusters_given = "--clusters" in given
    try:
        return args.func(args)
    except (NumericalFailureError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CubeFormatError, LibraryParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
