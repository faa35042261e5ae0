"""Command-line interface.

Exit codes
----------
0  success (simulable, verification passed)
1  input error (unreadable or invalid circuit file, bad arguments)
2  circuit not simulable, not rescuable, or verification failed
3  analyzable but not supported by the sampler (Fock inputs, non-Gaussian gates)
4  outside the Fock oracle's budget (more than two modes, truncation abort)
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .analyzer import NotRescuableError, analyze, loss_tolerance
from .circuit import Heterodyne
from .circuitfile import CircuitFileError, load
from .cubic import ConvergenceError, r_star
from .gates import BSPolicy, squeeze_curve, subtraction_curve, subtraction_limit_endpoint
from .report import ReportDocument
from .sampler import GaussianKernel, UnsupportedCircuitError, check_supported, run_sampling

EXIT_OK, EXIT_INPUT, EXIT_FAILED, EXIT_UNSUPPORTED, EXIT_ORACLE = 0, 1, 2, 3, 4
THREADS_ENV = "QPD_SIM_THREADS"


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(rows, header, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if out is None or out == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")


def _threads(arg: int | None) -> int:
    if arg is not None:
        value = arg
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            value = int(raw)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("thread count must be at least 1")
    return value


def _policy(text: str | None) -> BSPolicy | None:
    if text is None:
        return None
    try:
        return BSPolicy.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# -- commands -------------------------------------------------------------------

def cmd_analyze(args) -> int:
    circuit = load(args.path)
    verdict = analyze(circuit, _policy(args.policy))
    report = ReportDocument.from_verdict(circuit, verdict)
    print(report.summary())
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    return EXIT_OK if verdict.simulable else EXIT_FAILED


def _sampling_setup(args):
    circuit = load(args.path)
    verdict = analyze(circuit, _policy(args.policy))
    if not verdict.simulable:
        print(f"not simulable: {verdict.failure.reason}", file=sys.stderr)
        return circuit, verdict, EXIT_FAILED
    try:
        check_supported(circuit)
    except UnsupportedCircuitError as exc:
        print(f"not supported by the sampler: {exc}", file=sys.stderr)
        return circuit, verdict, EXIT_UNSUPPORTED
    return circuit, verdict, EXIT_OK


def cmd_sample(args) -> int:
    circuit, verdict, code = _sampling_setup(args)
    if code:
        return code
    samples = run_sampling(circuit, verdict, args.n, args.seed, _threads(args.threads))
    het = [isinstance(d, Heterodyne) for d in circuit.detectors]
    if all(het):
        header = ["record", "mode", "outcome_q", "outcome_p"]
    elif not any(het):
        header = ["record", "mode", "click"]
    else:
        header = ["record", "mode", "outcome_q", "outcome_p", "click"]
    rows = []
    for i in range(len(samples)):
        for m, is_het in enumerate(het):
            q, p = samples.outcomes[i, m]
            if len(header) == 4:
                rows.append([i, m, _fmt(q), _fmt(p)])
            elif len(header) == 3:
                rows.append([i, m, int(q)])
            else:
                rows.append([i, m, _fmt(q), _fmt(p), ""] if is_het else [i, m, "", "", int(q)])
    _write_csv(rows, header, args.out)
    return EXIT_OK


def _corrupt(index: int, k: GaussianKernel) -> GaussianKernel:
    # negative control: a biased, over-dispersed kernel
    return GaussianKernel(k.modes, k.A, k.b + 0.5, k.cov + np.eye(len(k.b)))


def cmd_verify(args) -> int:
    from . import fock

    circuit = load(args.path)
    if circuit.mode_count > fock.MAX_MODES:
        print(f"oracle limited to {fock.MAX_MODES} modes", file=sys.stderr)
        return EXIT_ORACLE
    circuit, verdict, code = _sampling_setup(args)
    if code:
        return code
    try:
        oracle = fock.born_probabilities(circuit, dims=args.fock_dims)
    except fock.TruncationError as exc:
        print(f"truncation abort: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    hook = _corrupt if args.corrupt_kernel else None
    samples = run_sampling(circuit, verdict, args.samples, args.seed, _threads(args.threads), kernel_hook=hook)

    worst = 0.0
    for m in oracle.heterodyne_modes:
        for quad, name in ((0, "q"), (1, "p")):
            stat = stats.kstest(samples.outcomes[:, m, quad], oracle.marginal_cdf(m, quad)).statistic
            worst = max(worst, stat)
            print(f"mode {m} {name}: KS = {stat:.5f}")
    if oracle.discrete_modes:
        clicks = samples.outcomes[:, list(oracle.discrete_modes), 0].astype(int)
        tv = 0.0
        for outcome, p in oracle.discrete.items():
            freq = float(np.mean(np.all(clicks == np.array(outcome), axis=1))) if len(clicks) else 0.0
            tv += abs(freq - p)
        tv /= 2
        worst = max(worst, tv)
        print(f"modes {list(oracle.discrete_modes)}: TV = {tv:.5f}")
    ok = worst < args.threshold
    print(f"{'PASS' if ok else 'FAIL'}: max distance {worst:.5f} vs threshold {args.threshold:g}")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_cubic_rstar(args) -> int:
    rows = []
    for eps in args.eps:
        try:
            res = r_star(eps, args.width)
            lo, hi = res.bracket
            rows.append([_fmt(eps), _fmt(res.r_star), _fmt(lo), _fmt(hi), _fmt(res.achieved_minimum), "ok"])
        except (ValueError, ConvergenceError) as exc:
            rows.append([_fmt(eps), "", "", "", "", f"error: {exc}"])
    _write_csv(rows, ["epsilon", "r_star", "bracket_lo", "bracket_hi", "min_value", "status"], args.out)
    return EXIT_OK


def cmd_curves(args) -> int:
    grid = [float(v) for v in np.round(np.linspace(args.s_min, args.s_max, args.points), 12)]
    if args.gate == "squeeze":
        rows = squeeze_curve(grid, args.r)
    else:
        s_star = subtraction_limit_endpoint(args.kappa)
        if args.s_min <= s_star <= args.s_max and not np.any(np.isclose(grid, s_star, atol=1e-12)):
            grid = sorted(grid + [s_star])
        rows = subtraction_curve(grid, args.kappa)
    out = [[_fmt(s), _fmt(t), int(ok)] for s, t, ok in rows]
    _write_csv(out, ["s_in", "s_out", "feasible"], args.out)
    return EXIT_OK


def cmd_loss_tolerance(args) -> int:
    circuit = load(args.path)
    try:
        deficit = loss_tolerance(circuit, args.layer, _policy(args.policy), args.mode)
    except NotRescuableError as exc:
        print(f"not rescuable: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"loss_tolerance = {deficit:.6f} (eta = {1 - deficit:.6f})")
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpdsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="decide simulability and print the ordering trace")
    a.add_argument("path")
    a.add_argument("--policy", help="balanced, greedy-a, greedy-b or weighted:wa,wb")
    a.add_argument("--report", help="write a JSON report here")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sample", help="draw outcome samples as CSV")
    s.add_argument("path")
    s.add_argument("-n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--policy")
    s.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("verify", help="compare sampler output with the Fock-space oracle")
    v.add_argument("path")
    v.add_argument("--fock-dims", type=int, default=25, help="starting Fock cutoff per mode; grown until the leak check passes")
    v.add_argument("--samples", type=int, default=100000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threshold", type=float, default=0.01)
    v.add_argument("--policy")
    v.add_argument("--threads", type=int)
    v.add_argument("--corrupt-kernel", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("cubic-rstar", help="cubic-phase threshold widths r*(eps)")
    c.add_argument("--eps", type=_float_list, default=[1e-2, 1e-3, 1e-4], help="comma-separated")
    c.add_argument("--width", type=float, default=1e-3, help="bracket width")
    c.add_argument("--out")
    c.set_defaults(func=cmd_cubic_rstar)

    k = sub.add_parser("curves", help="feasibility boundary curves as CSV")
    k.add_argument("--gate", choices=["squeeze", "subtraction"], required=True)
    k.add_argument("--r", type=float, default=0.3)
    k.add_argument("--kappa", type=float, default=0.5)
    k.add_argument("--s-min", type=float, default=-0.9)
    k.add_argument("--s-max", type=float, default=0.9)
    k.add_argument("--points", type=int, default=7)
    k.add_argument("--out")
    k.set_defaults(func=cmd_curves)

    t = sub.add_parser("loss-tolerance", help="smallest inserted loss that makes the circuit simulable")
    t.add_argument("path")
    t.add_argument("--layer", type=int, default=0)
    t.add_argument("--mode", type=int)
    t.add_argument("--policy")
    t.set_defaults(func=cmd_loss_tolerance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; keep 2 for "not simulable"
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (CircuitFileError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
