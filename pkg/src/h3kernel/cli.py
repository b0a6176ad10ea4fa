"""Command-line interface.

Exit status: 0 success, 1 usage error, 2 failed check, 3 runtime or
numerical error.
"""

import argparse
import logging
import sys

import numpy as np

from . import csvio
from .errors import DomainError

EXIT_OK, EXIT_USAGE, EXIT_CHECK, EXIT_RUNTIME = 0, 1, 2, 3
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive(text):
    v = _finite(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _nonneg(text):
    v = _finite(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _finite(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}") from None
    if not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return v


def _count(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _tol(text):
    name, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    return name.strip(), _positive(val)


def build_parser():
    p = _Parser(prog="h3kernel", description="Radial heat kernel of hyperbolic 3-space.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", help="print the kernel value")
    e.add_argument("--rho", type=_nonneg, required=True)
    e.add_argument("--rho0", type=_nonneg, default=0.0)
    e.add_argument("--t", type=_positive, required=True)
    e.add_argument("--D", type=_positive, required=True)
    e.add_argument("--log", action="store_true", help="print the natural log instead")

    t = sub.add_parser("table", help="kernel on a uniform rho grid as CSV")
    t.add_argument("--rho-min", type=_nonneg, default=0.0)
    t.add_argument("--rho-max", type=_positive, required=True)
    t.add_argument("--n", type=_count, required=True)
    t.add_argument("--rho0", type=_nonneg, default=0.0)
    t.add_argument("--t", type=_positive, required=True)
    t.add_argument("--D", type=_positive, required=True)
    t.add_argument("--out", default="-")

    from .checks import SUITES

    c = sub.add_parser("check", help="run verification suites")
    c.add_argument("--suite", choices=["all", *SUITES], default="all")
    c.add_argument("--seed", type=int, default=DEFAULT_SEED)
    c.add_argument("--n-samples", type=_count, default=None,
                   help="Monte Carlo sample count for the mc/spectrum suites")
    c.add_argument("--tol", type=_tol, action="append", default=[], metavar="NAME=VALUE",
                   help="override a tolerance, e.g. normalization.max_abs_error=1e-9")

    s = sub.add_parser("sample", help="draw radial samples as CSV")
    s.add_argument("--n", type=_count, required=True)
    s.add_argument("--method", choices=["cdf", "sde"], default="cdf")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--rho0", type=_nonneg, default=0.0)
    s.add_argument("--t", type=_positive, required=True)
    s.add_argument("--D", type=_positive, required=True)
    s.add_argument("--step", type=_positive, default=1e-4, help="SDE time step")
    s.add_argument("--epsilon", type=_positive, default=None, help="SDE origin guard")
    s.add_argument("--out", default="-")

    sp = sub.add_parser("spectrum", help="p_T density as CSV")
    sp.add_argument("--mass", type=_positive, required=True)
    sp.add_argument("--rho0", type=_nonneg, default=0.0)
    sp.add_argument("--Dt", type=_positive, required=True)
    sp.add_argument("--pt-min", type=_positive, required=True)
    sp.add_argument("--pt-max", type=_positive, required=True)
    sp.add_argument("--n", type=_count, required=True)
    sp.add_argument("--log-grid", action="store_true", help="log-spaced p_T grid")
    sp.add_argument("--out", default="-")

    f = sub.add_parser("fit", help="chi-square fit of a p_T spectrum")
    f.add_argument("--data", required=True)
    f.add_argument("--mass", type=_positive, required=True)
    f.add_argument("--dt0", type=_positive, default=1.0, help="initial Dt")
    f.add_argument("--rho00", type=_nonneg, default=0.5, help="initial rho0")
    f.add_argument("--norm0", type=_positive, default=None,
                   help="initial normalization (default: least squares at the initial shape)")
    f.add_argument("--pt-col", default=None)
    f.add_argument("--yield-col", default=None)
    f.add_argument("--sigma-col", default=None)
    return p


def _cmd_eval(a, out):
    from .kernel import log_kernel

    val = float(log_kernel(a.rho, a.rho0, a.D * a.t))
    out.write(csvio.fmt(val if a.log else np.exp(val)) + "\n")
    return EXIT_OK


def _cmd_table(a, out):
    from .kernel import log_kernel

    if a.rho_max <= a.rho_min:
        raise UsageError("--rho-max must exceed --rho-min")
    rho = np.linspace(a.rho_min, a.rho_max, a.n)
    lg = log_kernel(rho, a.rho0, a.D * a.t)
    meta = {"rho0": csvio.fmt(a.rho0), "t": csvio.fmt(a.t), "D": csvio.fmt(a.D)}
    csvio.write_csv(out if a.out == "-" else a.out, {"rho": rho, "density": np.exp(lg), "log_density": lg}, meta)
    return EXIT_OK


def _cmd_check(a, out):
    from .checks import SUITES, TOLERANCES, run_suites

    overrides = dict(a.tol)
    unknown = set(overrides) - set(TOLERANCES)
    if unknown:
        raise UsageError(f"unknown tolerance name(s): {', '.join(sorted(unknown))}")
    names = list(SUITES) if a.suite == "all" else [a.suite]
    opts = {"seed": a.seed}
    if a.n_samples:
        opts["n_samples"] = a.n_samples
    results = run_suites(names, overrides, **opts)
    for r in results:
        out.write(r.line() + "\n")
    failed = sum(not r.passed for r in results)
    out.write(f"summary checks={len(results)} failed={failed} status={'FAIL' if failed else 'PASS'}\n")
    return EXIT_CHECK if failed else EXIT_OK


def _cmd_sample(a, out):
    from .params import DiffusionParams
    from .stochastic import SdeConfig, sample_inverse_cdf, simulate_sde

    params = DiffusionParams(a.D, a.t)
    if a.method == "cdf":
        batch = sample_inverse_cdf(a.n, a.rho0, params, a.seed)
    else:
        cfg = SdeConfig.for_params(params, a.step, a.epsilon)
        batch = simulate_sde(a.n, a.rho0, params, cfg, a.seed)
    batch.to_csv(out if a.out == "-" else a.out)
    return EXIT_OK


def _cmd_spectrum(a, out):
    from .params import DiffusionParams
    from .spectra import SpectrumRequest, pt_density

    if a.pt_max <= a.pt_min:
        raise UsageError("--pt-max must exceed --pt-min")
    grid = (np.geomspace if a.log_grid else np.linspace)(a.pt_min, a.pt_max, a.n)
    spec = pt_density(SpectrumRequest(a.mass, grid, a.rho0, DiffusionParams.from_product(a.Dt)))
    spec.to_csv(out if a.out == "-" else a.out)
    return EXIT_OK


def _cmd_fit(a, out):
    from .fit import FitParams, FitProblem, ingest_csv, minimize, model_yields

    cmap = {k: v for k, v in (("pt", a.pt_col), ("yield", a.yield_col), ("sigma", a.sigma_col)) if v}
    cmap = {k: int(v) if v.isdigit() else v for k, v in cmap.items()}
    data = ingest_csv(a.data, cmap)
    for lineno, reason in data.rejected:
        sys.stderr.write(f"{a.data}:{lineno}: rejected: {reason}\n")
    norm0 = a.norm0
    if norm0 is None:
        shape = FitProblem(data, a.mass, FitParams(a.dt0, a.rho00, 1.0))
        m = model_yields(shape, shape.initial) / data.sigma
        y = data.yields / data.sigma
        norm0 = float(np.clip(np.dot(m, y) / np.dot(m, m), 1e-12, 1e12)) if np.dot(m, y) > 0 else 1.0
    problem = FitProblem(data, a.mass, FitParams(a.dt0, a.rho00, norm0))
    result = minimize(problem)
    out.write(result.to_text() + "\n")
    return EXIT_OK


COMMANDS = {
    "eval": _cmd_eval, "table": _cmd_table, "check": _cmd_check,
    "sample": _cmd_sample, "spectrum": _cmd_spectrum, "fit": _cmd_fit,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=err)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(parser.format_usage() + f"h3kernel: error: {exc}\n")
        return EXIT_USAGE
    except DomainError as exc:
        err.write(parser.format_usage() + f"h3kernel: error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, RuntimeError, ArithmeticError, OSError) as exc:
        err.write(f"h3kernel: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
