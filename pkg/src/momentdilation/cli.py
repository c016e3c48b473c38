"""Command-line interface.

Exit codes: 0 pass, 1 a check failed, 2 usage or input error, 3 numerical
instability.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import (HermitianSplit, moment_sequence, query_complexity_estimate, random_split,
                   split_hermitian, verify_moments)
from .evolve import IntegrationInstability, IntegratorConfig, convergence_study
from .report import ExperimentReport

OUTDIR_ENV = "MOMENTDILATION_OUTDIR"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNSTABLE = 0, 1, 2, 3

FAMILIES = ("compact", "schrodingerization", "lchs", "integral-kernel", "pseudodifferential",
            "difference", "bargmann")


class UsageError(Exception):
    pass


def _int_list(s: str) -> list:
    try:
        return [int(v) for v in s.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


def _float_list(s: str) -> list:
    try:
        return [float(v) for v in s.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}")


# ---------------------------------------------------------------- input files

def read_matrix_file(path: str) -> HermitianSplit:
    """Parse the plain-text matrix format.

    First non-comment line: ``N raw`` or ``N hermitian-split``.  Then ``N*N``
    (raw ``A``) or ``2*N*N`` (``H`` then ``K``) complex entries in row-major
    order, each written as ``re im``.  ``#`` starts a comment.
    """
    with open(path) as fh:
        lines = [ln.split("#", 1)[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise UsageError(f"{path}: empty matrix file")
    head = lines[0].split()
    if len(head) != 2 or head[1] not in ("raw", "hermitian-split"):
        raise UsageError(f"{path}: header must be 'N raw' or 'N hermitian-split'")
    try:
        N = int(head[0])
        vals = np.array([float(tok) for ln in lines[1:] for tok in ln.split()])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}")
    nmat = 1 if head[1] == "raw" else 2
    if N < 1 or vals.size != 2 * nmat * N * N:
        raise UsageError(f"{path}: expected {nmat * N * N} complex entries, got {vals.size / 2:g}")
    z = (vals[0::2] + 1j * vals[1::2]).reshape(nmat, N, N)
    try:
        return split_hermitian(z[0]) if nmat == 1 else HermitianSplit(z[0], z[1])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}")


def write_matrix_file(path: str, split: HermitianSplit) -> None:
    N = split.dim
    with open(path, "w") as fh:
        fh.write(f"{N} hermitian-split\n")
        for M in (split.H, split.K):
            for v in np.asarray(M, dtype=complex).ravel():
                fh.write(f"{v.real:.17g} {v.imag:.17g}\n")


def load_config(path: str) -> dict:
    if path.endswith(".toml"):
        try:
            import tomllib
        except ImportError:  # Python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: config must be a mapping")
    return cfg


# ---------------------------------------------------------------- output

def _emit(report: ExperimentReport, args, table: Optional[str]) -> None:
    report.params.update({f"cli_{k}": _plain(v) for k, v in sorted(vars(args).items())
                          if k not in ("func",)})
    out = args.out
    if out is None and os.environ.get(OUTDIR_ENV):
        out = os.path.join(os.environ[OUTDIR_ENV], f"{args.command}.json")
    if out:
        if out.endswith(".csv") and table:
            report.to_csv(table, out)
        else:
            report.to_json(out)
    if args.csv and table:
        report.to_csv(table, args.csv)


def _plain(v):
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    return v


def _line(label: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")


# ---------------------------------------------------------------- commands

def _build_family(args):
    from . import families
    from .bargmann import fock_triple
    from .operators import compact_triple

    fam = args.family
    if fam == "compact":
        return compact_triple(args.M or 64, args.theta, m=args.m, high_order=args.high_order)
    if fam == "schrodingerization":
        return families.schrodingerization_triple(args.p_star, args.M or 256, args.L or 20.0)
    if fam == "lchs":
        return families.lchs_triple(args.M or 4096, args.L or 2000.0)
    if fam == "integral-kernel":
        return families.integral_kernel_triple(args.theta, args.M or 1024, args.L or 60.0)
    if fam == "difference":
        return families.difference_triple(args.theta, args.n or 200)
    if fam == "bargmann":
        return fock_triple(args.theta, args.n or 30)
    raise UsageError(f"unknown family {fam}")


def cmd_verify(args) -> int:
    from .families import eigenrelation_residual, pseudodifferential_branch_check

    tol = args.tol * args.tol_scale
    rep = ExperimentReport("verify", {"family": args.family})
    if args.family == "pseudodifferential":
        chk = pseudodifferential_branch_check(args.theta)
        rep.results.update(branch_residual=chk["residual"])
        ok = chk["passed"]
        _line("branch identity", ok, f"|-i (xi0^2)^theta - 1| = {chk['residual']:.3e}")
    else:
        tri = _build_family(args)
        mr = verify_moments(tri, args.kmax, tol)
        skew = tri.relative_skew_residual()
        eig = eigenrelation_residual(tri)
        pair = abs(tri.pairing() - 1)
        skew_ok = skew <= 1e-12 * args.tol_scale or args.family not in ("compact", "bargmann")
        ok = mr.passed and skew_ok and pair <= 1e-12 * args.tol_scale
        _line(f"moments k<={args.kmax} ({args.family})", mr.passed,
              f"max |l F^k r - 1| = {mr.max_deviation:.3e} (tol {tol:g})")
        _line("skew residual", skew_ok, f"{skew:.3e} relative")
        _line("pairing", pair <= 1e-12 * args.tol_scale, f"|l r - 1| = {pair:.3e}")
        print(f"INFO eigen residual ||F r - r||/||r|| = {eig:.3e}")
        rep.results.update(max_deviation=mr.max_deviation, skew_residual=skew,
                           eigen_residual=eig, pairing_deviation=pair)
        rep.params.update({k: v for k, v in tri.params.items() if not isinstance(v, complex)})
        rep.add_table("moments", [{"k": k, "deviation": float(d)}
                                  for k, d in enumerate(mr.deviations)], ["k", "deviation"])
    rep.passed = bool(ok)
    _emit(rep, args, "moments" if "moments" in rep.tables else None)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dilate(args) -> int:
    from .operators import choose_theta, compact_triple

    if args.input:
        split = read_matrix_file(args.input)
    else:
        split = random_split(args.random, args.seed, Kmax=args.kmax)
    N = split.dim
    rng = np.random.default_rng(args.seed)
    x0 = rng.normal(size=N) + 1j * rng.normal(size=N)
    x0 /= np.linalg.norm(x0)
    theta = args.theta or choose_theta(split.Kmax, args.T)
    factory = lambda M: compact_triple(M, theta, m=args.m, high_order=args.high_order)
    rep = convergence_study(split, factory, args.M, args.T, x0, IntegratorConfig(args.scheme, args.dt))
    rep.name = "dilate"
    rep.params.update(theta=theta, high_order=args.high_order, N=N)
    if rep.results["exact"]:
        print("INFO exact: all errors at the integrator floor (K = 0 or exact triple)")
    if args.high_order:
        print("INFO high-order path: consistency is exact; remaining error is boundary leakage")
    for row in rep.tables["errors"]["rows"]:
        print("M={:<5d} error={:.6e}".format(row[0], row[3]))
    if rep.results["orders"]:
        print(f"fitted orders: {rep.results['orders']}")
    _emit(rep, args, "errors")
    return EXIT_OK


def cmd_maxwell(args) -> int:
    from .maxwell import MaxwellModel, maxwell_reference, run_maxwell_experiment

    model = MaxwellModel(n=args.n, eta=args.eta)
    ref = maxwell_reference(model, args.T, args.dt / 10, args.sigma0)
    code = EXIT_OK
    reports = []
    for order in args.order:
        rep = run_maxwell_experiment(args.M, args.theta, order, args.T, args.dt, model,
                                     args.sigma0, reference=ref)
        reports.append(rep)
        for row in rep.tables["peak"]["rows"]:
            print(f"order={order} M={row[0]:<4d} peak_error={row[1]:.6e}")
        if args.ratio_window and order == 2:
            lo, hi = args.ratio_window
            ratios = rep.column("peak", "ratio")[1:]
            ok = bool(np.all((ratios >= lo / args.tol_scale) & (ratios <= hi * args.tol_scale)))
            _line("second-order ratios", ok, ", ".join(f"{q:.3f}" for q in ratios))
            code = max(code, EXIT_OK if ok else EXIT_FAIL)
    rep = reports[0]
    if len(reports) > 1:
        rep = _merge(reports, "maxwell")
    _emit(rep, args, "midline")
    return code


def _merge(reports, name):
    out = ExperimentReport(name, dict(reports[0].params))
    out.params["order"] = ",".join(str(r.params["order"]) for r in reports)
    for tab in ("peak", "midline"):
        cols = ["order"] + reports[0].tables[tab]["columns"]
        rows = [[r.params["order"]] + row for r in reports for row in r.tables[tab]["rows"]]
        out.tables[tab] = {"columns": cols, "rows": rows}
    for r in reports:
        out.results.update({f"o{r.params['order']}_{k}": v for k, v in r.results.items()})
    return out


def cmd_ssh(args) -> int:
    from .bargmann import run_ssh, ssh_split

    scheme = {"trotter2": "strang-trotter", "strang-trotter": "strang-trotter", "rk4": "rk4"}[args.scheme]
    x0 = None
    if args.x0:
        x0 = np.array(args.x0, dtype=complex)
        x0 /= np.linalg.norm(x0)
    split = ssh_split(args.J1, args.J2, args.delta, args.gamma)
    rep = run_ssh(args.theta, args.ncut, args.T, args.dt, scheme, x0=x0, split=split)
    dev = rep.results["max_deviation"]
    print(f"max |rho_edge dilated - exact| = {dev:.6e}")
    code = EXIT_OK
    if args.max_dev is not None:
        ok = dev <= args.max_dev * args.tol_scale
        _line("ssh deviation", ok, f"{dev:.3e} (limit {args.max_dev * args.tol_scale:g})")
        code = EXIT_OK if ok else EXIT_FAIL
    _emit(rep, args, "trajectory")
    return code


def cmd_cost(args) -> int:
    try:
        est = query_complexity_estimate(args.T, args.Hmax, args.Kmax, args.eps, args.norm_xT)
    except ValueError as exc:
        raise UsageError(str(exc))
    print(f"{'scheme':<14}{'queries':>16}")
    print(f"{'second-order':<14}{est.query_count_second_order:>16.6g}")
    print(f"{'high-order':<14}{est.query_count_high_order:>16.6g}")
    print(f"{'log factor':<14}{est.log_multiplier:>16.6g}")
    rep = ExperimentReport("cost", {"T": est.T, "Hmax": est.Hmax, "Kmax": est.Kmax,
                                    "eps": est.eps, "norm_xT": est.norm_xT})
    rep.results.update(second_order=est.query_count_second_order,
                       high_order=est.query_count_high_order, log_multiplier=est.log_multiplier)
    _emit(rep, args, None)
    return EXIT_OK


def cmd_families(args) -> int:
    from . import families as fam
    from .bargmann import fock_triple
    from .operators import compact_triple

    builders = {
        "compact": lambda: compact_triple(64, 2 / 9),
        "schrodingerization": lambda: fam.schrodingerization_triple(1.0, 256, 20.0),
        "lchs": lambda: fam.lchs_triple(4096, 2000.0),
        "integral-kernel": lambda: fam.integral_kernel_triple(1.0, 1024, 60.0),
        "pseudodifferential": lambda: fam.pseudodifferential_triple(0.5)[0],
        "difference": lambda: fam.difference_triple(1.0, 200),
        "bargmann": lambda: fock_triple(0.5, 30),
    }
    rows = []
    print(f"{'family':<20}{'dim':>6}{'skew':>12}{'eigen':>12}{'|lr-1|':>12}{'max dev k<=4':>14}")
    for name, build in builders.items():
        t = build()
        d = t.diagnostics()
        dev = float("nan") if name == "pseudodifferential" else \
            float(np.abs(moment_sequence(t, 4) - 1).max())
        rows.append({"family": name, "dim": t.ancilla_dim, "skew_residual": d["skew_residual"],
                     "eigen_residual": d["eigen_residual"],
                     "pairing_deviation": d["pairing_deviation"], "moment_deviation": dev})
        print(f"{name:<20}{t.ancilla_dim:>6d}{d['skew_residual']:>12.3e}{d['eigen_residual']:>12.3e}"
              f"{d['pairing_deviation']:>12.3e}{dev:>14.3e}")
    rep = ExperimentReport("families")
    rep.add_table("families", rows)
    _emit(rep, args, "families")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=11, help="random seed (default 11)")
    common.add_argument("--out", help=f"report path (.json, or .csv for the main table); "
                                      f"default ${OUTDIR_ENV}/<command>.json if set")
    common.add_argument("--csv", help="write the main table as CSV")
    common.add_argument("--tol-scale", type=float, default=1.0, help="multiply all tolerances")
    common.add_argument("--config", help="JSON or TOML file with option defaults")

    p = argparse.ArgumentParser(prog="momentdilation", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", parents=[common], help="check moment conditions of a family")
    s.add_argument("--family", choices=FAMILIES, default="compact")
    s.add_argument("--M", type=int, help="grid size (compact, schrodingerization, lchs, integral-kernel)")
    s.add_argument("--n", type=int, help="sequence length or Fock cutoff (difference, bargmann)")
    s.add_argument("--theta", type=float, default=2 / 9)
    s.add_argument("--m", type=int, default=1, help="SBP half-order for the compact family")
    s.add_argument("--high-order", action="store_true")
    s.add_argument("--L", type=float, help="domain extent")
    s.add_argument("--p-star", type=float, default=1.0)
    s.add_argument("--kmax", type=int, default=4)
    s.add_argument("--tol", type=float, default=1e-2)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("dilate", parents=[common], help="dilation error and convergence order")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--input", help="matrix text file")
    g.add_argument("--random", type=int, default=4, help="random dissipative split of this size")
    s.add_argument("--kmax", type=float, default=0.25, help="||K|| of the random split")
    s.add_argument("--M", type=_int_list, default=[16, 32, 64])
    s.add_argument("--theta", type=float, help="default: CFL choice from ||K|| and T")
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--high-order", action="store_true")
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--scheme", choices=("rk4", "strang-trotter"), default="rk4")
    s.set_defaults(func=cmd_dilate)

    s = sub.add_parser("maxwell", parents=[common], help="viscoelastic convergence experiment")
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--M", type=_int_list, default=[10, 20, 40])
    s.add_argument("--theta", type=float, default=2 / 9)
    s.add_argument("--order", type=_int_list, default=[2], help="2, 4 or 2,4")
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--eta", type=float, default=3.4)
    s.add_argument("--sigma0", type=float, default=0.05)
    s.add_argument("--ratio-window", type=_float_list, help="e.g. 3,5: fail if an order-2 ratio is outside")
    s.set_defaults(func=cmd_maxwell)

    s = sub.add_parser("ssh", parents=[common], help="Fock-space dilation of the PT-SSH dimer")
    s.add_argument("--theta", type=float, default=0.5)
    s.add_argument("--ncut", type=int, default=5)
    s.add_argument("--dt", type=float, default=0.025)
    s.add_argument("--T", type=float, default=0.5)
    s.add_argument("--scheme", choices=("trotter2", "strang-trotter", "rk4"), default="trotter2")
    s.add_argument("--x0", type=_float_list, help="initial site amplitudes (default e1)")
    s.add_argument("--J1", type=float, default=1.0)
    s.add_argument("--J2", type=float, default=0.6)
    s.add_argument("--delta", type=float, default=0.3)
    s.add_argument("--gamma", type=float, default=-1 / 16)
    s.add_argument("--max-dev", type=float, help="fail if the edge-density deviation exceeds this")
    s.set_defaults(func=cmd_ssh)

    s = sub.add_parser("cost", parents=[common], help="query-count estimators")
    s.add_argument("--T", type=float, required=True)
    s.add_argument("--Hmax", type=float, required=True)
    s.add_argument("--Kmax", type=float, required=True)
    s.add_argument("--eps", type=float, default=0.01)
    s.add_argument("--norm-xT", type=float, default=1.0)
    s.set_defaults(func=cmd_cost)

    s = sub.add_parser("families", parents=[common], help="diagnostics for every family")
    s.set_defaults(func=cmd_families)
    return p


def _apply_config(parser, argv, args):
    cfg = load_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest for a in subparser._actions} - {"help", "config", "func"}
    norm = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(norm) - dests)
    if unknown:
        raise UsageError(f"{args.config}: unknown keys {', '.join(unknown)}")
    for a in subparser._actions:
        if a.dest in norm and a.type in (_int_list, _float_list) and not isinstance(norm[a.dest], str):
            v = norm[a.dest]
            norm[a.dest] = list(v) if isinstance(v, (list, tuple)) else [v]
    subparser.set_defaults(**norm)
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationInstability as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE


if __name__ == "__main__":
    sys.exit(main())
