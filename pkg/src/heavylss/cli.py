"""Command line front end: ``heavylss {cov, kernel-grid, pair, validate, simulate}``.

Complex flags take the form ``a+bi`` or ``a-bi`` with an explicit imaginary
part (write ``--z=-1+2i`` when the value starts with a minus sign). JSON
output carries ``"schema": 1`` and every float is written with 17
significant digits, so output bytes depend only on the flags.

Exit codes: 0 success, 2 invalid input or domain error, 3 quadrature
non-convergence, 4 a validation suite outside its contract, 1 I/O errors.
"""

import argparse
import csv
import io
import math
import re
import sys
import warnings

import numpy as np

from .covariance import FIGURE_C, ModelParams, cov_closed, cov_remark_form
from .ensemble import EnsembleConfig, covariance_from_traces, sample_traces, tail_constant_c, write_traces_csv
from .errors import DomainError, NonConvergenceError
from .kernel import TestFunction, figure_grid, pairing, pairing_via_kernel
from .oracles import cov_r_integral
from .quadrature import QuadratureConfig
from .validation import run_validation

SCHEMA = 1
EXIT_DOMAIN = 2
EXIT_NONCONVERGENCE = 3
EXIT_VALIDATION = 4
EXIT_IO = 1

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(rf"^\s*([+-]?{_NUM})\s*([+-])\s*({_NUM})?\s*[ij]\s*$")


def parse_complex(text: str) -> complex:
    """``a+bi`` / ``a-bi`` (``j`` also accepted); the real part is mandatory."""
    m = _COMPLEX_RE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected a+bi with an explicit imaginary part, got {text!r}")
    im = float(m.group(3)) if m.group(3) is not None else 1.0
    return complex(float(m.group(1)), -im if m.group(2) == "-" else im)


def parse_c(text: str) -> float:
    if text == "figure":
        return FIGURE_C
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"c must be a number or 'figure', got {text!r}") from exc


def parse_test_function(text: str) -> TestFunction:
    """``resolvent:Z``, ``bump:CENTRE,RADIUS`` or ``indicator:A,B,RAMP``."""
    kind, _, args = text.partition(":")
    try:
        if kind == "resolvent":
            return TestFunction.resolvent(parse_complex(args))
        vals = [float(v) for v in args.split(",")]
        if kind == "bump" and len(vals) == 2:
            return TestFunction.bump(*vals)
        if kind == "indicator" and len(vals) == 3:
            return TestFunction.smoothed_indicator(*vals)
    except (ValueError, DomainError) as exc:
        raise argparse.ArgumentTypeError(f"bad test function {text!r}: {exc}") from exc
    raise argparse.ArgumentTypeError(
        f"test function must be resolvent:Z, bump:C,R or indicator:A,B,RAMP, got {text!r}")


# ---------------------------------------------------------------- serialization


def fmt(x) -> str:
    """17 significant digits; non-finite values as null."""
    x = float(x)
    return "null" if not math.isfinite(x) else f"{x:.17g}"


def to_json(obj, indent=0) -> str:
    """Minimal deterministic JSON writer with fixed float formatting."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def cplx(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def emit(text: str, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def _params(args):
    return ModelParams(args.alpha, args.c)


def _qcfg(args):
    return QuadratureConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol,
                            max_subdivisions=args.max_subdivisions)


def cmd_cov(args):
    params = _params(args)
    val = cov_closed(args.z, args.w, params)
    alt = cov_remark_form(args.z, args.w, params)
    rec = {"schema": SCHEMA, "command": "cov", "alpha": params.alpha, "c": params.c,
           "z": cplx(args.z), "w": cplx(args.w), "re": val.real, "im": val.imag,
           "remark_re": alt.real, "remark_im": alt.imag,
           "oracle_re": None, "oracle_im": None, "oracle_rel_err": None}
    if args.oracle:
        ref = cov_r_integral(args.z, args.w, params, _qcfg(args))
        rec.update(oracle_re=ref.real, oracle_im=ref.imag, oracle_rel_err=abs(ref - val) / abs(val))
    if args.format == "csv":
        keys = [k for k in rec if k not in ("z", "w")]
        row = [rec[k] if rec[k] is not None else "" for k in keys]
        emit(rows_to_csv(["z_re", "z_im", "w_re", "w_im"] + keys,
                         [[args.z.real, args.z.imag, args.w.real, args.w.imag] + row]), args.output)
    else:
        emit(to_json(rec) + "\n", args.output)
    return 0


def cmd_kernel_grid(args):
    if args.n < 2:
        raise DomainError("n must be at least 2")
    grid = figure_grid(args.alpha, args.c, args.n)
    rows = [(float(e), float(f), float(grid.density[i, j]))
            for i, e in enumerate(grid.E) for j, f in enumerate(grid.F)]
    emit(rows_to_csv(["E", "F", "K"], rows), args.output)
    return 0


def cmd_pair(args):
    params = _params(args)
    qcfg = _qcfg(args)
    val = complex(pairing(args.psi, args.phi, params, qcfg))
    rec = {"schema": SCHEMA, "command": "pair", "alpha": params.alpha, "c": params.c,
           "psi": args.psi_text, "phi": args.phi_text, "re": val.real, "im": val.imag}
    if args.via_kernel:
        alt = complex(pairing_via_kernel(args.psi, args.phi, params, qcfg))
        rec.update(kernel_re=alt.real, kernel_im=alt.imag,
                   rel_diff=abs(alt - val) / abs(val) if val != 0 else abs(alt))
    emit(to_json(rec) + "\n", args.output)
    return 0


def cmd_validate(args):
    params = _params(args)
    qcfg = _qcfg(args)

    def progress(r):
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<34s} max residual {r.max_residual:.3e}  "
              f"(contract {r.tolerance:.0e}, {r.count} cases, {r.seconds:.1f} s)", file=sys.stderr)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        results = run_validation(params, qcfg, fd_step=args.fd_step,
                                 printed_constant=args.printed_constant,
                                 n_sigma=args.n_sigma, progress=progress)
    rec = {"schema": SCHEMA, "command": "validate", "alpha": params.alpha, "c": params.c,
           "suites": [{"name": r.name, "max_residual": r.max_residual, "tolerance": r.tolerance,
                       "cases": r.count, "passed": r.passed} for r in results]}
    emit(to_json(rec) + "\n", args.output)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("validation failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    return 0


def _pair_indices(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def cmd_simulate(args):
    zs = args.z or [2j]
    cfg = EnsembleConfig(args.N, args.M, args.alpha, args.seed, tuple(zs))
    c = tail_constant_c(args.alpha)
    params = ModelParams(args.alpha, c)
    traces = sample_traces(cfg, threads=args.threads)
    if args.traces:
        write_traces_csv(args.traces, cfg, traces)
    estimates = covariance_from_traces(cfg, traces, bootstrap=args.bootstrap)
    records = []
    for est in estimates:
        target = cov_closed(est.z, est.w, params)
        diff = abs(est.estimate - target)
        zscore = diff / est.stderr
        rel = diff / abs(target)
        records.append({"z": cplx(est.z), "w": cplx(est.w), "estimate": cplx(est.estimate),
                        "stderr": est.stderr, "bootstrap_stderr": est.bootstrap_stderr,
                        "target": cplx(target), "z_score": zscore, "rel_err": rel,
                        "within_contract": bool(zscore <= 4.0 or rel <= 0.3)})
    if args.format == "csv":
        rows = [[r["z"]["re"], r["z"]["im"], r["w"]["re"], r["w"]["im"],
                 r["estimate"]["re"], r["estimate"]["im"], r["stderr"],
                 r["target"]["re"], r["target"]["im"], r["z_score"], r["rel_err"]] for r in records]
        emit(rows_to_csv(["z_re", "z_im", "w_re", "w_im", "est_re", "est_im", "stderr",
                          "target_re", "target_im", "z_score", "rel_err"], rows), args.output)
    else:
        rec = {"schema": SCHEMA, "command": "simulate", "alpha": args.alpha, "c": c,
               "N": args.N, "M": args.M, "seed": args.seed, "scaling_exponent": args.alpha / 2 - 2,
               "estimates": records}
        emit(to_json(rec) + "\n", args.output)
    return 0


# ---------------------------------------------------------------- parser


def _add_model(p, with_c=True):
    p.add_argument("--alpha", type=float, default=3.0, help="tail index in (2, 4)")
    if with_c:
        p.add_argument("--c", type=parse_c, default=1.0, help="tail constant, or 'figure' for 8 sqrt(pi)/15")


def _add_quadrature(p):
    d = QuadratureConfig()
    p.add_argument("--rel-tol", type=float, default=d.rel_tol)
    p.add_argument("--abs-tol", type=float, default=d.abs_tol)
    p.add_argument("--max-subdivisions", type=int, default=d.max_subdivisions)


def build_parser():
    parser = argparse.ArgumentParser(prog="heavylss", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cov", help="closed-form covariance C(z, w)")
    p.add_argument("--z", type=parse_complex, required=True)
    p.add_argument("--w", type=parse_complex, required=True)
    _add_model(p)
    _add_quadrature(p)
    p.add_argument("--oracle", action=argparse.BooleanOptionalAction, default=True,
                   help="also evaluate the r-integral oracle (default on)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_cov)

    p = sub.add_parser("kernel-grid", help="CSV of the bulk kernel density on an n x n grid")
    _add_model(p)
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_kernel_grid)

    p = sub.add_parser("pair", help="pairing <K, psi x phi> of two test functions")
    p.add_argument("--psi", required=True, help="resolvent:Z | bump:C,R | indicator:A,B,RAMP")
    p.add_argument("--phi", required=True)
    _add_model(p)
    _add_quadrature(p)
    p.add_argument("--via-kernel", action="store_true", help="also assemble it from the kernel density")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("validate", help="run every identity and oracle suite")
    _add_model(p)
    _add_quadrature(p)
    p.add_argument("--fd-step", type=float, default=None,
                   help="finite-difference step for the FD oracles (diagnostic; not range-checked)")
    p.add_argument("--printed-constant", action="store_true",
                   help="hold the fractional-power and double-Laplace suites to k_alpha")
    p.add_argument("--n-sigma", type=int, default=100)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="Monte Carlo fluctuation covariance vs the closed form")
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--M", type=int, default=2000)
    _add_model(p, with_c=False)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--z", type=parse_complex, action="append", help="repeatable; default 0+2i")
    p.add_argument("--threads", type=int, default=None, help="worker threads (capped by HEAVYLSS_THREADS)")
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap replicates for a second stderr")
    p.add_argument("--traces", help="write per-sample traces CSV here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "pair":
        args.psi_text, args.phi_text = args.psi, args.phi
        try:
            args.psi = parse_test_function(args.psi)
            args.phi = parse_test_function(args.phi)
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
