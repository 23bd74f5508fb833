"""Command-line experiment runner.

Subcommands: qr-bench, gmres-bench, certify, sketch-info. Thread counts of
the BLAS backends are pinned before numpy loads (default 1, override with
SKETCHGS_THREADS) so repeated runs are reproducible.

Exit codes: 0 success, 2 configuration error, 3 numerical breakdown,
4 I/O failure.
"""

import os
import sys

_threads = os.environ.get("SKETCHGS_THREADS", "1")
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(_var, _threads)

import argparse

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BREAKDOWN = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sketchgs",
                                description="Sketched Gram-Schmidt benchmarks")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, gmres=False):
        sp.add_argument("--n", type=int, default=100_000)
        sp.add_argument("--m", type=int, default=300)
        sp.add_argument("--k", type=int, default=5000)
        sp.add_argument("--sketch", choices=["rademacher", "psrht"],
                        default="psrht")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--policy", choices=["f32", "f64", "mixed"],
                        default="mixed")
        sp.add_argument("--variants", default="cgs,mgs,cgs2,rgs")
        sp.add_argument("--matrix",
                        default="laplacian:100" if gmres else "synthetic",
                        help="synthetic | PATH.mtx | laplacian:SIZE | "
                             "randsparse:N[:NNZ_PER_ROW]")
        sp.add_argument("--eps-star", type=float, default=0.05)
        sp.add_argument("--delta-star", type=float, default=1e-3)
        sp.add_argument("--out", required=True,
                        help="output CSV path (per-variant suffix added when "
                             "several variants run)")
        sp.add_argument("--k-phi", type=int, default=None)
        sp.add_argument("--phi-seed", type=int, default=0x0F1A)
        sp.add_argument("--ls-solver", default="householder",
                        help="householder | richardson:N | smgs")
        sp.add_argument("--precond", action="store_true")
        sp.add_argument("--tol", type=float, default=None)

    common(sub.add_parser("qr-bench", help="QR stability benchmark"))
    common(sub.add_parser("gmres-bench", help="GMRES benchmark"), gmres=True)
    common(sub.add_parser("certify", help="embedding certification sweep"))

    si = sub.add_parser("sketch-info", help="print required sketch dimensions")
    si.add_argument("--n", type=int, default=100_000)
    si.add_argument("--sketch", choices=["rademacher", "psrht"], default="psrht")
    si.add_argument("--eps", type=float, default=0.5)
    si.add_argument("--delta", type=float, default=0.01)
    si.add_argument("--d", type=int, default=10)
    si.add_argument("--eps-star", type=float, default=0.05)
    si.add_argument("--delta-star", type=float, default=1e-3)
    return p


def _parse_solver(text: str):
    from .gram_schmidt import LsqSolver, richardson
    if text == "householder":
        return LsqSolver("householder")
    if text == "smgs":
        return LsqSolver("smgs")
    if text.startswith("richardson"):
        _, _, iters = text.partition(":")
        return richardson(int(iters) if iters else 4)
    raise ValueError(f"unknown least-squares solver {text!r}")


def _parse_variants(text: str):
    from .gram_schmidt import GsVariant
    out = []
    for name in text.split(","):
        name = name.strip()
        if not name:
            continue
        try:
            out.append(GsVariant(name))
        except ValueError:
            raise ValueError(f"unknown variant {name!r}") from None
    if not out:
        raise ValueError("no variants requested")
    return tuple(out)


def _config_from_args(args):
    from .bench import RunConfig
    from .sketch import SketchKind
    return RunConfig(
        n=args.n, m=args.m, k=args.k,
        sketch_kind=SketchKind(args.sketch),
        seed=args.seed, policy=args.policy,
        variants=_parse_variants(args.variants),
        matrix=args.matrix,
        eps_star=args.eps_star, delta_star=args.delta_star,
        k_phi=args.k_phi, phi_seed=args.phi_seed,
        ls_solver=_parse_solver(args.ls_solver),
        precond=args.precond, tol=args.tol)


def _out_path(base: str, variant: str, multi: bool) -> str:
    if not multi:
        return base
    root, dot, ext = base.rpartition(".")
    if dot:
        return f"{root}.{variant}.{ext}"
    return f"{base}.{variant}"


def _run(args) -> int:
    from .io import write_report
    if args.subcommand == "sketch-info":
        from .sketch import (EmbeddingParams, SketchKind, required_sketch_dim,
                             vector_certificate_dim)
        kind = SketchKind(args.sketch)
        params = EmbeddingParams(args.eps, args.delta, args.d)
        k = required_sketch_dim(kind, params, n=args.n)
        k_phi = vector_certificate_dim(args.eps_star, args.delta_star)
        print(f"sketch {kind.value}: k >= {k} for "
              f"(eps={args.eps}, delta={args.delta}, d={args.d}, n={args.n})")
        print(f"certification sketch: k_phi >= {k_phi} for "
              f"(eps*={args.eps_star}, delta*={args.delta_star})")
        return EXIT_OK

    config = _config_from_args(args)
    if args.subcommand == "qr-bench":
        from .bench import run_qr_bench
        reports = run_qr_bench(config)
        multi = len(reports) > 1
        for variant, report in reports.items():
            path = _out_path(args.out, variant, multi)
            write_report(report, path)
            print(f"{variant}: wrote {path}")
        return EXIT_OK
    if args.subcommand == "gmres-bench":
        from .bench import run_gmres_bench
        results = run_gmres_bench(config)
        multi = len(results) > 1
        for variant, (report, result) in results.items():
            path = _out_path(args.out, variant, multi)
            write_report(report, path)
            print(f"{variant}: {result.iterations} iterations, final "
                  f"residual {result.final_residual:.3e}, wrote {path}")
        return EXIT_OK
    if args.subcommand == "certify":
        from .bench import run_certify
        report = run_certify(config)
        write_report(report, args.out)
        last = report.rows[-1] if report.rows else {}
        print(f"rgs: omega={last.get('omega', float('nan')):.4f} "
              f"omega_bar={last.get('omega_bar', float('nan')):.4f}, "
              f"wrote {args.out}")
        return EXIT_OK
    raise AssertionError(f"unhandled subcommand {args.subcommand}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    from .gram_schmidt import BreakdownError
    try:
        return _run(args)
    except BreakdownError as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN
    except (ValueError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
