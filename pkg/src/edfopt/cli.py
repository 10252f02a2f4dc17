"""Command-line entry point: ``edfopt --problem builtin:QP2D --solver epm --out run1``.

Exit codes: 0 converged, 2 iteration cap, 3 solver failure, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import epm
from .edf import Center, EDFParams, edf_eval
from .epm import EPMConfig, solve
from .exceptions import EDFOptError, ParseError, ValidationError
from .fileio import TrajectoryWriter, format_value, parse_problem_file, write_summary, write_table
from .idf import idf_eval, run_icm
from .inner import InnerConfig
from .numdiff import fd_gradient, fd_jacobian, relative_error
from .problem import evaluate, get_builtin

EXIT_OK, EXIT_USAGE, EXIT_ITER_CAP, EXIT_FAILURE = 0, 1, 2, 3
_STATUS_EXIT = {epm.CONVERGED: EXIT_OK, epm.ITER_CAP: EXIT_ITER_CAP}

# flag -> (config class, field)
_FLAG_FIELDS = {
    "k": (EPMConfig, "k"),
    "k_growth": (EPMConfig, "k_growth"),
    "alpha": (EPMConfig, "alpha"),
    "gamma": (EPMConfig, "gamma"),
    "delta": (EPMConfig, "delta_reduction"),
    "epsilon": (EPMConfig, "epsilon"),
    "max_outer": (EPMConfig, "max_outer"),
    "grid": (EPMConfig, "linesearch_grid"),
    "max_inner": (InnerConfig, "max_iters"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="edfopt", description="Exterior point method and interior center baseline.")
    ap.add_argument("--problem", required=True, help="path to a JSON problem file, or builtin:NAME")
    ap.add_argument("--solver", choices=("epm", "icm"), default="epm")
    ap.add_argument("--compare", action="store_true",
                    help="run both solvers and write a conditioning table")
    ap.add_argument("--k", type=float)
    ap.add_argument("--k-growth", type=float)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--gamma", type=float)
    ap.add_argument("--delta", type=float, help="objective reduction required for a center move")
    ap.add_argument("--epsilon", type=float)
    ap.add_argument("--max-outer", type=int)
    ap.add_argument("--max-inner", type=int)
    ap.add_argument("--grid", type=int, help="resolution of the center line search")
    ap.add_argument("--center", help="comma-separated starting center")
    ap.add_argument("--lambda0", help="comma-separated initial multipliers")
    ap.add_argument("--no-center-update", action="store_true")
    ap.add_argument("--icm-steps", type=int, default=15)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override any EPMConfig or InnerConfig field (inner fields may be "
                         "prefixed with 'inner.')")
    ap.add_argument("--check-derivatives", type=int, default=0, metavar="N",
                    help="compare derivatives with finite differences at N random points")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="output directory for summary.txt, trajectory.jsonl, conditioning.csv")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _vector_arg(text, name):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated numbers, got {text!r}") from None


def _convert(cls, key, text):
    default = {f.name: f.default for f in dataclasses.fields(cls)}[key]
    low = text.strip().lower()
    if low == "none":
        return None
    if isinstance(default, bool):
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise UsageError(f"{key} expects true or false, got {text!r}")
    try:
        if isinstance(default, int):
            return int(text)
        if key == "lambda0":
            return tuple(float(v) for v in text.split(","))
        return float(text)
    except ValueError:
        raise UsageError(f"cannot parse {text!r} for {key}") from None


def build_configs(args) -> tuple:
    """Turn parsed flags into ``(EPMConfig, InnerConfig)``; unknown keys raise UsageError."""
    epm_kw, inner_kw = {}, {}
    target = {EPMConfig: epm_kw, InnerConfig: inner_kw}
    for flag, (cls, name) in _FLAG_FIELDS.items():
        v = getattr(args, flag)
        if v is not None:
            target[cls][name] = v
    if args.no_center_update:
        epm_kw["center_update_enabled"] = False
    if args.lambda0:
        epm_kw["lambda0"] = tuple(_vector_arg(args.lambda0, "lambda0"))

    epm_names = {f.name for f in dataclasses.fields(EPMConfig)}
    inner_names = {f.name for f in dataclasses.fields(InnerConfig)}
    for item in args.set:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        if key.startswith("inner."):
            cls, key = InnerConfig, key[len("inner."):]
            if key not in inner_names:
                raise UsageError(f"unknown inner config key {key!r}")
        elif key in epm_names:
            cls = EPMConfig
        elif key in inner_names:
            cls = InnerConfig
        else:
            raise UsageError(f"unknown config key {key!r}")
        target[cls][key] = _convert(cls, key, value)
    try:
        return EPMConfig(**epm_kw), InnerConfig(**inner_kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def load_problem(source: str):
    if source.startswith("builtin:"):
        try:
            return get_builtin(source[len("builtin:"):])
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    return parse_problem_file(source)


def _random_points(p, rng, count, center, margin=0.05):
    """Points scattered around the center, at least ``margin`` inside the domain.

    Central differences degrade next to the logarithmic singularities, so the
    margin is kept unless the domain is too thin to sample, in which case it
    is halved.
    """
    pts = []
    base = np.asarray(center.y)
    scale = 0.1 * max(1.0, float(np.max(np.abs(base))))
    misses = 0
    while len(pts) < count:
        x = base + scale * rng.standard_normal(p.n)
        ev = evaluate(p, x, order=0)
        if center.f_y - ev.f_val >= margin and np.all(ev.c_vals >= margin):
            pts.append(x)
            continue
        misses += 1
        if misses % 1000 == 0:
            margin *= 0.5
    return pts


def derivative_check(p, center, count, seed):
    """Largest relative FD error of the EDF and interior-function gradients."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    lam = np.ones(p.m)
    for x in _random_points(p, rng, count, center):
        for k in (1.0, 10.0, 100.0):
            params = EDFParams(k, lam)
            e = edf_eval(p, x, center, params, order=p.max_order)
            fd_g = fd_gradient(lambda z: edf_eval(p, z, center, params, 0).value, x)
            worst = max(worst, relative_error(fd_g, e.gradient))
            if p.has_hessian:
                fd_h = fd_jacobian(lambda z: edf_eval(p, z, center, params, 1).gradient, x)
                worst = max(worst, relative_error(fd_h, e.hessian))
        ie = idf_eval(p, x, center.f_y, order=1)
        fd_g = fd_gradient(lambda z: idf_eval(p, z, center.f_y, 0).value, x)
        worst = max(worst, relative_error(fd_g, ie.gradient))
    return worst


def _run_epm(p, args, cfg, inner_cfg, center, out):
    writer = TrajectoryWriter(out / "trajectory.jsonl") if out else None
    try:
        result = solve(p, cfg, inner_cfg, center=center, on_record=writer)
    finally:
        if writer:
            writer.close()
    summary = {
        "solver": "epm",
        "problem": p.name,
        "status": result.status,
        "x_final": result.x_final,
        "lambda_final": result.lambda_final,
        "merit": result.merit_final,
        "outer_iterations": result.outer_iterations,
        "inner_iterations": result.inner_iterations,
        "center_final": None if result.center is None else result.center.y,
        "active_set": ",".join(str(i) for i in result.active_set_estimate),
        "seed": args.seed,
    }
    if result.message:
        summary["message"] = result.message.replace("\n", " ")
    return summary, _STATUS_EXIT.get(result.status, EXIT_FAILURE), result


def _run_icm(p, args, center, out):
    state = run_icm(p, center, args.icm_steps)
    if out:
        with TrajectoryWriter(out / "trajectory.jsonl") as w:
            for rec in state.trajectory:
                w(rec)
    last = state.trajectory[-1] if state.trajectory else None
    summary = {
        "solver": "icm",
        "problem": p.name,
        "status": epm.CONVERGED,
        "x_final": state.x,
        "lambda_final": None if last is None else last.lambda_hat,
        "tau_final": state.tau,
        "hessian_cond_final": None if last is None else last.hessian_cond,
        "outer_iterations": len(state.trajectory),
        "seed": args.seed,
    }
    return summary, EXIT_OK, state


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, inner_cfg = build_configs(args)
        p = load_problem(args.problem)
        center = _vector_arg(args.center, "center") if args.center else p.interior_point
        if center is None:
            raise UsageError(f"{p.name} has no interior point; pass --center")
        if np.size(center) != p.n:
            raise UsageError(f"--center has {np.size(center)} entries, problem has dimension {p.n}")
        if args.icm_steps < 0 or args.check_derivatives < 0:
            raise UsageError("--icm-steps and --check-derivatives must be nonnegative")
    except (UsageError, ParseError, ValidationError) as exc:
        print(f"edfopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    try:
        if args.compare:
            summary, code = _compare(p, args, cfg, inner_cfg, center, out)
        elif args.solver == "epm":
            summary, code, _ = _run_epm(p, args, cfg, inner_cfg, center, out)
        else:
            summary, code, _ = _run_icm(p, args, center, out)
        if args.check_derivatives:
            ctr = Center.from_problem(p, center, cfg.gamma)
            summary["derivative_max_rel_err"] = derivative_check(p, ctr, args.check_derivatives, args.seed)
    except EDFOptError as exc:
        print(f"edfopt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    if out:
        write_summary(out / "summary.txt", summary)
    else:
        for key, value in summary.items():
            print(f"{key}={format_value(value)}")
    if code != EXIT_OK:
        print(f"edfopt: finished with status {summary['status']}", file=sys.stderr)
    return code


def _compare(p, args, cfg, inner_cfg, center, out):
    """ICM rows carry ``tau - f(x_hat)``; EPM rows carry the merit value as their accuracy."""
    icm_summary, _, state = _run_icm(p, args, center, None)
    summary, code, result = _run_epm(p, args, cfg, inner_cfg, center, out)
    rows = [("icm", rec.tau - evaluate(p, rec.x, order=0).f_val, rec.hessian_cond)
            for rec in state.trajectory]
    rows += [("epm", rec.merit, rec.edf_hessian_cond) for rec in result.trajectory]
    if out:
        write_table(out / "conditioning.csv", ("method", "gap", "cond"), rows)
    summary["icm_tau_final"] = icm_summary["tau_final"]
    summary["icm_hessian_cond_final"] = icm_summary["hessian_cond_final"]
    return summary, code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
