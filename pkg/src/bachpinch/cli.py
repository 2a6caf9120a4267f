"""Command-line front end.

Subcommands: zoo, curvature, audit, sample, verify, constants.  Each run
prints a short summary and, with ``--out``, writes one JSON report.

Exit codes: 0 success (audit satisfied or at the boundary, suite passed),
1 audit not satisfied or suite failure, 2 usage, domain or precondition error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import constants as K
from . import inequality_lab as lab
from . import metric_zoo as zoo
from . import pinching_audit as audit
from . import verify
from .curvature_engine import FDConfig, PreconditionError, StencilError, bundle
from .quadrature import GridError, parse_grid
from .report import dumps, envelope, write_atomic
from .tensor_core import DimensionError, NotPositiveDefinite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

USER_ERRORS = (K.DomainError, PreconditionError, GridError, lab.CampaignError, StencilError,
               DimensionError, NotPositiveDefinite, ValueError)


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _fd(args) -> FDConfig:
    return FDConfig(step=args.fd_step, order=args.fd_order)


def _tolerances(args) -> audit.Tolerances:
    return audit.Tolerances(boundary=args.tol_boundary, bach=args.tol_bach, volume=args.tol_volume)


def _entry(args) -> zoo.ZooEntry:
    if not args.metric:
        raise UsageError("--metric is required")
    return zoo.from_label(args.metric)


# ---------------------------------------------------------------------------
# Commands: each returns (summary lines, result payload, exit code)
# ---------------------------------------------------------------------------

def cmd_zoo(args):
    rows, lines = [], []
    for e in zoo.catalogue():
        ex = {k: v for k, v in vars(e.exact).items() if v is not None}
        rows.append({"label": e.label, "n": e.n, "exact": ex, "yamabe_provenance": e.yamabe_provenance,
                     "flags": {"einstein": e.chart.is_einstein,
                               "conformally_flat": e.chart.is_conformally_flat,
                               "constant_scalar": e.chart.is_constant_scalar,
                               "homogeneous": e.chart.is_homogeneous},
                     "default_grid": list(e.grid) if e.grid else None})
        summary = ", ".join(f"{k}={v:.6g}" for k, v in ex.items())
        lines.append(f"{e.label:<40s} {summary}")
    return lines, rows, EXIT_OK


def cmd_curvature(args):
    e = _entry(args)
    x = e.chart.reference_point if args.point is None else np.array(_floats(args.point))
    if x.shape != (e.n,):
        raise UsageError(f"--point needs {e.n} coordinates")
    b = bundle(e.chart, x, _fd(args), with_bach=args.bach and e.n >= 4, with_div=args.div)
    result = {"metric": e.label, "point": x, "g": b.g, "R": b.R, "Ric": b.Ric, "Ric0": b.Ric0,
              "Rm": b.Rm, "W": b.W, "V": b.V, "U": b.U, "Rm0": b.Rm0, "norms": b.norms,
              "raw_riemann_residual": b.raw_residual}
    if b.bach is not None:
        result["bach"] = b.bach
        result["bach_max_entry"] = float(np.max(np.abs(b.bach)))
    if b.div_rm0 is not None:
        result["div_rm0"] = b.div_rm0
    lines = [f"{e.label} at {np.array2string(x, precision=6)}", f"  R = {b.R:.12g}"]
    lines += [f"  |{k}| = {v:.6g}" for k, v in b.norms.items()]
    if b.bach is not None:
        lines.append(f"  max |B_ij| = {result['bach_max_entry']:.3g}")
    return lines, result, EXIT_OK


def cmd_audit(args):
    if not args.theorem:
        raise UsageError(f"--theorem is required; one of {', '.join(audit.AUDITS)}")
    if args.theorem not in audit.AUDITS:
        raise UsageError(f"unknown audit {args.theorem!r}; one of {', '.join(audit.AUDITS)}")
    e = _entry(args)
    grid = parse_grid(args.grid, e.n) if args.grid else None
    Y = audit.yamabe_value(e, args.yamabe) if args.yamabe is not None else None
    rep = audit.run_audit(args.theorem, e, p=args.p, grid=grid, method=args.method, Y=Y,
                          tol=_tolerances(args), check_bach=not args.skip_bach)
    lines = [f"{rep.theorem} on {rep.metric_label}: {rep.verdict}",
             f"  lhs = {rep.lhs:.12g}  threshold = {rep.threshold:.12g}  margin = {rep.margin:.3g}"]
    lines += [f"  {k} = {v}" for k, v in rep.hypothesis_flags.items()]
    code = EXIT_FAIL if rep.verdict == "not-satisfied" else EXIT_OK
    return lines, rep.to_dict(), code


def cmd_sample(args):
    if not args.inequality:
        raise UsageError(f"--inequality is required; one of {', '.join(sorted(lab.INEQUALITIES))}")
    if args.n is None:
        raise UsageError("--n is required")
    cfg = lab.CampaignConfig(args.inequality, args.n, args.trials, args.seed, args.distribution,
                             args.K, args.tol)
    st = lab.run_campaign(cfg)
    lines = [f"{st.inequality} n={st.n} {st.distribution}: {st.trials} trials, seed {st.seed}",
             f"  violations = {st.violations}  skipped = {st.skipped}  max_ratio = {st.max_ratio:.15g}"]
    return lines, st.to_dict(), EXIT_FAIL if st.violations else EXIT_OK


def cmd_verify(args):
    if not args.suite:
        raise UsageError(f"a suite id is required; one of {', '.join(verify.SUITES)}")
    if args.suite not in verify.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; one of {', '.join(verify.SUITES)}")
    rep = verify.run_suite(args.suite)
    lines = [f"suite {rep.suite}: {'pass' if rep.passed else 'FAIL'} "
             f"({len(rep.checks)} checks, {len(rep.failures)} failed)"]
    lines += [f"  FAIL {c.name} [{c.subject}] value={c.value:.3g} limit={c.limit:.3g}" for c in rep.failures]
    return lines, rep.to_dict(), EXIT_OK if rep.passed else EXIT_FAIL


def cmd_constants(args):
    if args.n is None:
        raise UsageError("--n is required")
    if args.name:
        if args.name == "epsilon" and args.branch:
            value = K.rm0_pinching_epsilon(args.n, _need_p(args), branch=args.branch)
        else:
            value = K.evaluate(args.name, args.n, args.p, args.sign)
        result = {args.name: value}
    else:
        if args.branch:
            raise UsageError("--branch applies only with --name epsilon")
        result = K.table(args.n, args.p, args.sign)
    lines = [f"{k:>15s} = {v!r}" for k, v in result.items()]
    return lines, result, EXIT_OK


def _need_p(args) -> float:
    if args.p is None:
        raise UsageError("--p is required for epsilon")
    return args.p


COMMANDS = {"zoo": cmd_zoo, "curvature": cmd_curvature, "audit": cmd_audit, "sample": cmd_sample,
            "verify": cmd_verify, "constants": cmd_constants}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--out", help="write the JSON report here (atomically)")

    metric = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    metric.add_argument("--metric", help="zoo label, e.g. s1xs:n=6:t=0.1:normalized")
    metric.add_argument("--fd-step", type=float, default=FDConfig.step)
    metric.add_argument("--fd-order", type=int, default=FDConfig.order, choices=(2, 4))

    p = argparse.ArgumentParser(prog="bachpinch", allow_abbrev=False,
                                description="Numerical curvature pinching toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("zoo", parents=[common], allow_abbrev=False, help="list catalogue metrics")

    c = sub.add_parser("curvature", parents=[common, metric], allow_abbrev=False,
                       help="curvature bundle at a point")
    c.add_argument("--point", help="comma-separated chart coordinates (default: reference point)")
    c.add_argument("--bach", action="store_true", help="also compute the Bach tensor")
    c.add_argument("--div", action="store_true", help="also compute the divergence of Rm0")

    a = sub.add_parser("audit", parents=[common, metric], allow_abbrev=False, help="run a pinching audit")
    a.add_argument("--theorem", help=f"audit id: {', '.join(audit.AUDITS)}")
    a.add_argument("--p", type=float, help="integrability exponent (rm0-lp; default n/2)")
    a.add_argument("--grid", help="quadrature nodes: 'k' or 'k1,...,kn'")
    a.add_argument("--method", default="auto", choices=("auto", "closed-form", "quadrature"))
    a.add_argument("--yamabe", type=float, help="user-supplied Yamabe constant")
    a.add_argument("--skip-bach", action="store_true", help="do not evaluate the Bach-flat flag")
    a.add_argument("--tol.boundary", dest="tol_boundary", type=float, default=audit.BOUNDARY_RTOL)
    a.add_argument("--tol.bach", dest="tol_bach", type=float, default=audit.BACH_TOL)
    a.add_argument("--tol.volume", dest="tol_volume", type=float, default=audit.VOLUME_RTOL)

    s = sub.add_parser("sample", parents=[common], allow_abbrev=False, help="inequality campaign")
    s.add_argument("--inequality", help=f"one of {', '.join(sorted(lab.INEQUALITIES))}")
    s.add_argument("--n", type=int)
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--distribution", default="gaussian", choices=lab.DISTRIBUTIONS)
    s.add_argument("--K", type=float, help="weight for weyl-ricci-cubic (default n/(2(n-2)))")
    s.add_argument("--tol", type=float, default=lab.DEFAULT_TOL, help="violation tolerance on the ratio")

    v = sub.add_parser("verify", parents=[common], allow_abbrev=False, help="identity suites")
    v.add_argument("suite", nargs="?", default="", help=f"one of {', '.join(verify.SUITES)}")

    k = sub.add_parser("constants", parents=[common], allow_abbrev=False, help="pinching constants")
    k.add_argument("--n", type=int)
    k.add_argument("--p", type=float)
    k.add_argument("--name", choices=K.NAMES)
    k.add_argument("--sign", default="nonneg", choices=("nonneg", "neg"), help="sign of R for A(n)")
    k.add_argument("--branch", choices=K.EPSILON_BRANCHES, help="force an epsilon branch (validated)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with 2 on usage errors
    inputs = {k: v for k, v in sorted(vars(args).items()) if k != "out"}
    try:
        lines, result, code = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bachpinch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except USER_ERRORS as exc:
        print(f"bachpinch {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.out:
            write_atomic(args.out, dumps(envelope(args.command, inputs,
                                                  {"error": type(exc).__name__, "message": str(exc)},
                                                  "error")))
        return EXIT_USAGE
    print("\n".join(lines))
    if args.out:
        status = {EXIT_OK: "ok", EXIT_FAIL: "fail"}[code]
        write_atomic(args.out, dumps(envelope(args.command, inputs, result, status)))
    return code


if __name__ == "__main__":
    sys.exit(main())
