"""Command line front end: ``qmot <subcommand> [flags]``.

Results go to standard output as JSON. Exit status is 0 on success, 2 on
invalid input (with a ``{code, message, context}`` object on standard error)
and 3 when a solver stops without converging (results are still written,
with ``"converged": false``).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import DimensionError, QmotError, UsageError
from .field import interpolate_field, solve_field
from .flow import FlowConfig, run_flow
from .geometry import MetricMode, Mode, bures_identity_check, fisher_rao_tangent_cost, local_inner
from .lindblad import LindbladBasis, basis_hermitian
from .selfcheck import metric_report, operator_report
from .transport import SolverConfig, interpolate, solve

EXIT_OK, EXIT_INPUT, EXIT_NOCONV = 0, 2, 3
_DEF = SolverConfig()
_FLOW = FlowConfig()


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        if action.default is None or action.required:
            return action.help
        return super()._get_help_string(action)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, prog=self.prog)


def _times(text: str) -> list[float]:
    try:
        ts = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from None
    if not ts or any(not 0.0 <= t <= 1.0 for t in ts):
        raise argparse.ArgumentTypeError("times must be a non-empty comma list in [0, 1]")
    return ts


def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return x


def _solver_flags(p, modes, field=False):
    p.add_argument("--mode", choices=modes, default="wfs", help="geometry")
    p.add_argument("--alpha", type=_positive, default=_DEF.alpha, help="source penalty")
    if field:
        p.add_argument("--gamma", type=_positive, default=1.0, help="matricial transport weight")
    p.add_argument("--steps", type=int, default=_DEF.steps, help="time intervals K")
    p.add_argument("--tol", type=float, default=_DEF.tol_obj,
                   help="relative objective tolerance")
    p.add_argument("--tol-feas", type=float, default=_DEF.tol_feas,
                   help="continuity residual tolerance")
    p.add_argument("--max-iter", type=int, default=_DEF.max_iter, help="descent iterations")
    p.add_argument("--method", choices=["reduced", "alm"], default=_DEF.method,
                   help="reduced dual solve or augmented Lagrangian")
    p.add_argument("--basis", help="basis JSON file; unset means the real symmetric unit matrices")


def build_parser() -> argparse.ArgumentParser:
    fmt = _Formatter
    ap = _Parser(prog="qmot", formatter_class=fmt,
                 description="Unbalanced optimal transport between PD matrices and matrix fields.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def ops_flags(p):
        p.add_argument("--n", type=int, required=True, help="matrix size")
        p.add_argument("--basis", help="basis JSON file to check instead of the default")
        p.add_argument("--trials", type=int, default=100, help="random trials per identity")
        p.add_argument("--seed", type=int, default=0, help="random seed")

    ops_flags(sub.add_parser("ops-check", formatter_class=fmt,
                             help="operator and metric invariant suites"))
    ops = sub.add_parser("ops", formatter_class=fmt, help="same as ops-check (`ops check`)")
    ops.add_argument("action", choices=["check"])
    ops_flags(ops)

    all_modes = [m.value for m in Mode]
    p = sub.add_parser("dist", formatter_class=fmt, help="distance between two PD matrices")
    p.add_argument("--rho0", required=True, help="initial marginal JSON")
    p.add_argument("--rho1", required=True, help="final marginal JSON")
    _solver_flags(p, all_modes)

    p = sub.add_parser("interp", formatter_class=fmt, help="evaluate the geodesic")
    p.add_argument("--rho0", required=True, help="initial marginal JSON")
    p.add_argument("--rho1", required=True, help="final marginal JSON")
    _solver_flags(p, all_modes)
    p.add_argument("--times", type=_times, default="0,0.25,0.5,0.75,1",
                   help="comma separated times in [0, 1]")
    p.add_argument("--out", required=True, help="output path (.json or .csv)")

    field_help = {"dist-field": "distance between matrix fields on a 1-D grid",
                  "interp-field": "geodesic between matrix fields on a 1-D grid"}
    for name, text in field_help.items():
        p = sub.add_parser(name, formatter_class=fmt, help=text)
        p.add_argument("--rho0", required=True, help="initial marginal JSON")
        p.add_argument("--rho1", required=True, help="final marginal JSON")
        _solver_flags(p, ["wfs", "wf"], field=True)
        if name == "dist-field":
            p.add_argument("--cells-check", action="store_true",
                           help="also solve each cell separately (zero-flux upper bound)")
        else:
            p.add_argument("--times", type=_times, default="0,0.25,0.5,0.75,1",
                           help="comma separated times in [0, 1]")
            p.add_argument("--out", required=True, help="output path (.json or .csv)")
            p.add_argument("--traces-csv", help="per-cell traces over time")

    p = sub.add_parser("metric", formatter_class=fmt, help="local metric at a point")
    p.add_argument("--rho", required=True, help="base point JSON")
    p.add_argument("--delta", required=True, help="tangent vector JSON")
    p.add_argument("--mode", choices=all_modes, default="wfs", help="geometry")
    p.add_argument("--alpha", type=_positive, default=1.0, help="source penalty")
    p.add_argument("--basis", help="basis JSON file; unset means the real symmetric unit matrices")

    p = sub.add_parser("flow", formatter_class=fmt, help="entropy or quadratic gradient flow")
    p.add_argument("--rho0", required=True, help="initial marginal JSON")
    p.add_argument("--functional", choices=["entropy", "quadratic"], default="entropy",
                   help="entropy is ascended, quadratic energy descended")
    p.add_argument("--target", help="target matrix JSON (quadratic functional)")
    p.add_argument("--metric", choices=["wfs", "wf"], default="wfs", help="geometry")
    p.add_argument("--alpha", type=_positive, default=_FLOW.alpha, help="source penalty")
    p.add_argument("--dt", type=_positive, default=_FLOW.dt, help="Euler step")
    p.add_argument("--steps", type=int, default=_FLOW.steps, help="Euler steps")
    p.add_argument("--sample-every", type=int, default=None,
                   help="matrices kept in the JSON sidecar (default: steps/10)")
    p.add_argument("--out", required=True,
                   help="trajectory CSV; a .json sidecar is written next to it")
    p.add_argument("--basis", help="basis JSON file; unset means the real symmetric unit matrices")
    return ap


def _basis(path, n) -> LindbladBasis:
    if path is None:
        return basis_hermitian(n)
    B = io.read_basis(path)
    if B.n != n:
        raise UsageError(f"basis is for n={B.n}, inputs have n={n}", basis=path)
    return B


def _config(args) -> SolverConfig:
    if args.steps < 2:
        raise UsageError("--steps must be at least 2", steps=args.steps)
    return SolverConfig(mode=args.mode, alpha=args.alpha, steps=args.steps, tol_obj=args.tol,
                        tol_feas=args.tol_feas, max_iter=args.max_iter, method=args.method)


def _echo(config: SolverConfig, args, **extra) -> dict:
    d = config.to_dict()
    d.update(extra)
    d["basis"] = args.basis or "hermitian"
    return d


def _emit(obj) -> None:
    sys.stdout.write(io.dumps(obj))


def _status(converged: bool) -> int:
    return EXIT_OK if converged else EXIT_NOCONV


def cmd_ops_check(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive", n=args.n)
    B = _basis(args.basis, args.n)
    ops = operator_report(B, args.trials, args.seed)
    met = metric_report(B, max(1, args.trials // 5), args.seed)
    _emit({"operators": ops, "metric": met, "passed": ops["passed"] and met["passed"],
           "config": {"n": args.n, "basis": args.basis or "hermitian", "trials": args.trials,
                      "seed": args.seed}})
    return EXIT_OK if ops["passed"] and met["passed"] else 1


def _solve_pair(args):
    rho0, rho1 = io.read_matrix(args.rho0), io.read_matrix(args.rho1)
    config = _config(args)
    B = _basis(args.basis, rho0.shape[0])
    return solve(rho0, rho1, B, config), config


def _summary(sol, config, args, **extra) -> dict:
    return {"distance": sol.distance, "objective": sol.objective,
            "feas_residual": sol.feas_residual, "kkt_residual": sol.kkt_residual,
            "converged": sol.converged, "iterations": sol.iterations, **extra,
            "config": _echo(config, args)}


def cmd_dist(args) -> int:
    sol, config = _solve_pair(args)
    _emit(_summary(sol, config, args))
    return _status(sol.converged)


def _write_path(out, times, states, summary):
    if Path(out).suffix.lower() == ".csv":
        io.write_path_csv(out, times, states)
    else:
        doc = dict(summary, times=times)
        if states.ndim == 3:
            doc["matrices"] = [io.matrix_to_json(a) for a in states]
        else:
            doc["fields"] = [[io.matrix_to_json(c) for c in f] for f in states]
        io.write_json(doc, out)


def cmd_interp(args) -> int:
    sol, config = _solve_pair(args)
    states = np.array([interpolate(sol, t) for t in args.times])
    summary = _summary(sol, config, args, out=args.out)
    _write_path(args.out, args.times, states, summary)
    _emit(summary)
    return _status(sol.converged)


def _solve_fields(args):
    f0, f1 = io.read_field(args.rho0), io.read_field(args.rho1)
    config = _config(args)
    B = _basis(args.basis, f0.n)
    return solve_field(f0, f1, B, config, args.gamma), config, B, f0, f1


def _field_summary(sol, config, args, **extra) -> dict:
    return {"distance": sol.distance, "objective": sol.objective,
            "feas_residual": sol.feas_residual, "kkt_residual": sol.kkt_residual,
            "max_flux": sol.max_flux, "converged": sol.converged,
            "iterations": sol.iterations, **extra,
            "config": _echo(config, args, gamma=args.gamma)}


def cmd_dist_field(args) -> int:
    sol, config, B, f0, f1 = _solve_fields(args)
    extra = {}
    ok = sol.converged
    if args.cells_check:
        # the gamma weight is absorbed by rescaling the generators
        Bg = LindbladBasis(B.matrices / np.sqrt(args.gamma))
        cells = [solve(a, b, Bg, config) for a, b in zip(f0.cells, f1.cells)]
        bound = f0.h * sum(c.objective for c in cells)
        ok = ok and all(c.converged for c in cells)
        extra["cells_check"] = {
            "cell_distances": [c.distance for c in cells],
            "no_flux_bound": float(np.sqrt(bound)),
            "within_bound": bool(sol.objective <= bound * (1 + 1e-6)),
            "converged": all(c.converged for c in cells),
        }
    _emit(_field_summary(sol, config, args, **extra))
    return _status(ok)


def cmd_interp_field(args) -> int:
    sol, config, *_ = _solve_fields(args)
    states = np.array([interpolate_field(sol, t) for t in args.times])
    summary = _field_summary(sol, config, args, out=args.out)
    _write_path(args.out, args.times, states, summary)
    if args.traces_csv:
        io.write_traces_csv(args.traces_csv, np.linspace(0.0, 1.0, sol.path.K + 1), sol.path.rho)
        summary["traces_csv"] = args.traces_csv
    _emit(summary)
    return _status(sol.converged)


def cmd_metric(args) -> int:
    rho, delta = io.read_matrix(args.rho), io.read_matrix(args.delta)
    if rho.shape != delta.shape:
        raise DimensionError(f"rho is {rho.shape} but delta is {delta.shape}")
    B = _basis(args.basis, rho.shape[0])
    mode = MetricMode(Mode(args.mode), args.alpha)
    lhs, rhs = bures_identity_check(rho, delta)
    _emit({"local_inner": local_inner(rho, delta, delta, mode, B),
           "fisher_rao_cost": fisher_rao_tangent_cost(rho, delta),
           "bures": {"half_trace_G_delta": lhs, "trace_rho_G2": rhs},
           "config": {"mode": args.mode, "alpha": args.alpha, "basis": args.basis or "hermitian"}})
    return EXIT_OK


def cmd_flow(args) -> int:
    rho0 = io.read_matrix(args.rho0)
    target = None
    if args.functional == "quadratic":
        if not args.target:
            raise UsageError("--target is required for the quadratic functional")
        target = io.read_matrix(args.target)
        if target.shape != rho0.shape:
                raise DimensionError(f"rho0 is {rho0.shape} but target is {target.shape}")
    if args.steps < 1:
        raise UsageError("--steps must be positive", steps=args.steps)
    config = FlowConfig(functional=args.functional, metric=args.metric, alpha=args.alpha,
                        dt=args.dt, steps=args.steps, target=target)
    B = _basis(args.basis, rho0.shape[0])
    traj = run_flow(rho0, config, B)
    io.write_flow_csv(args.out, traj)
    every = args.sample_every or max(1, args.steps // 10)
    idx = list(range(0, len(traj), every))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    echo = {"functional": args.functional, "metric": args.metric, "alpha": args.alpha,
            "dt": args.dt, "steps": args.steps, "target": args.target,
            "basis": args.basis or "hermitian"}
    sidecar = Path(args.out).with_suffix(".json")
    io.write_json({"samples": [{"step": k, "time": traj.times[k],
                                "value": traj.values[k],
                                "matrix": io.matrix_to_json(traj.states[k])} for k in idx],
                   "left_cone": traj.left_cone, "message": traj.message, "config": echo},
                  sidecar)
    _emit({"steps_taken": len(traj) - 1, "final_value": traj.values[-1],
           "final_min_eig": traj.min_eigenvalues[-1], "left_cone": traj.left_cone,
           "message": traj.message, "out": args.out, "sidecar": str(sidecar), "config": echo})
    return EXIT_OK


COMMANDS = {
    "ops-check": cmd_ops_check, "ops": cmd_ops_check, "dist": cmd_dist, "interp": cmd_interp,
    "dist-field": cmd_dist_field, "interp-field": cmd_interp_field, "metric": cmd_metric,
    "flow": cmd_flow,
}


def _thread_limit():
    raw = os.environ.get("QMOT_THREADS")
    if not raw:
        return None
    try:
        k = int(raw)
    except ValueError:
        raise UsageError(f"QMOT_THREADS must be an integer, got {raw!r}") from None
    if k < 1:
        raise UsageError(f"QMOT_THREADS must be positive, got {k}")
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=k)


def _fail(err: dict, status: int) -> int:
    sys.stderr.write(io.dumps(err))
    return status


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        limit = _thread_limit()
        try:
            return COMMANDS[args.command](args)
        finally:
            if limit is not None:
                limit.unregister()
    except QmotError as exc:
        return _fail(exc.to_dict(), EXIT_INPUT)
    except ValueError as exc:
        return _fail({"code": "E_VALUE", "message": str(exc), "context": {}}, EXIT_INPUT)
    except OSError as exc:
        return _fail({"code": "E_IO", "message": str(exc),
                      "context": {"path": getattr(exc, "filename", None)}}, EXIT_INPUT)
    except Exception as exc:  # noqa: BLE001 - last line of defence for structured output
        return _fail({"code": "E_INTERNAL", "message": f"{type(exc).__name__}: {exc}",
                      "context": {}}, 1)


if __name__ == "__main__":
    sys.exit(main())
