"""Command-line front end.

Exit codes: 0 ok, 1 invalid input, 2 invariant or property violation,
3 vacuous bound under ``--strict``. Reports are JSON with sorted keys and
embed the configuration that produced them; nothing time-dependent is
written, so identical arguments give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from persistflow import __version__
from persistflow.balance import (
    aif_partial,
    arc_balance_Kmin,
    balanced_asymmetry_Mmin,
    cut_balance_Kmin,
)
from persistflow.bounds import (
    check_guarantee,
    counterexample_lower_bound,
    stagewise_contraction_check,
    theorem1_bound,
    theorem2_bound,
)
from persistflow.dynamics import simulate
from persistflow.errors import InvariantViolation, ValidationError
from persistflow.graph_analysis import PERSISTENT, accumulate, diameter, has_spanning_tree
from persistflow.schedule import (
    BUILTIN_IDS,
    SEC4_EXPECTED,
    builtin,
    load_schedule,
    schedule_from_config,
)
from persistflow.suites import run_all

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION, EXIT_VACUOUS = 0, 1, 2, 3
_IO_KEYS = ("func", "out", "csv", "report", "sorted_out", "out_dir")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def resolve_schedule(spec: str):
    """Built-in id, inline JSON object, or path to a schedule/generator JSON file."""
    if spec in BUILTIN_IDS:
        return builtin(spec)
    if spec.lstrip().startswith("{"):
        try:
            doc = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"inline schedule config is not valid JSON: {exc}") from exc
        return schedule_from_config(doc)
    path = Path(spec)
    if not path.is_file():
        raise ValidationError(f"schedule {spec!r} is neither a built-in id ({', '.join(BUILTIN_IDS)}) nor a file")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{spec}: not valid JSON: {exc}") from exc
    if isinstance(doc, dict) and "generator" in doc:
        return schedule_from_config(doc)
    return load_schedule(path)


def _schedule_config(s) -> dict:
    try:
        return s.config()
    except NotImplementedError:
        return {"generator": type(s).__name__}


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args, s=None) -> dict:
    # output destinations do not affect results and would break byte-identity across directories
    cfg = {k: v for k, v in vars(args).items() if k not in _IO_KEYS}
    if s is not None:
        cfg["schedule_config"] = _schedule_config(s)
    return cfg


def _x0(args, s) -> np.ndarray:
    if args.x0 is None:
        return np.arange(s.n, dtype=float)
    try:
        x = np.array([float(v) for v in args.x0.split(",")])
    except ValueError as exc:
        raise ValidationError(f"--x0 must be comma-separated numbers: {exc}") from exc
    if x.shape != (s.n,):
        raise ValidationError(f"--x0 has {x.size} entries, schedule has {s.n} agents")
    return x


def _persistent_arcs(s, horizon: int | None):
    if s.persistent_arcs is not None:
        return s.persistent_arcs, "ground-truth"
    T = horizon if horizon is not None else s.horizon
    if T is None:
        raise ValidationError("schedule declares no persistent arcs; pass --horizon to estimate them")
    return accumulate(s, T, use_ground_truth=False).arcs(PERSISTENT), "heuristic"


def cmd_simulate(args) -> int:
    s = resolve_schedule(args.schedule)
    traj = simulate(s, _x0(args, s), args.steps, record_sorted=args.sorted_out is not None)
    if args.out:
        traj.write_csv(args.out)
    if args.sorted_out:
        traj.write_sorted_csv(args.sorted_out)
    _emit({
        "config": _config(args, s),
        "t0": traj.t0,
        "t_end": traj.t_end,
        "Psi_start": float(traj.Psi[0]),
        "Psi_end": float(traj.Psi[-1]),
        "states_retained": traj.states is not None,
    }, args.report)
    return EXIT_OK


def cmd_persistence(args) -> int:
    s = resolve_schedule(args.schedule)
    est = accumulate(s, args.horizon, use_ground_truth=not args.heuristic)
    arcs = est.arcs(PERSISTENT)
    ok, roots = has_spanning_tree(arcs, s.n)
    rep = est.as_dict()
    rep["spanning_tree"] = ok
    rep["roots"] = [r + 1 for r in roots]
    if ok:
        d = diameter(arcs, s.n)
        rep["diameter"] = {"d0": d.d0, "root": d.root + 1, "root_eccentricity": d.root_eccentricity,
                           "convention": d.convention}
    rep["config"] = _config(args, s)
    _emit(rep, args.out)
    return EXIT_OK


def cmd_balance(args) -> int:
    s = resolve_schedule(args.schedule)
    ta = s.t0 if args.start is None else args.start
    tb = args.horizon
    reports = {}
    if args.condition in ("cut", "all"):
        rep = cut_balance_Kmin(s, args.L, (ta, tb))
        if args.K is not None:
            rep.check(args.L, args.K)
        reports["cut_balance"] = rep.as_dict()
    if args.condition in ("arc", "all"):
        Ep, src = _persistent_arcs(s, tb)
        rep = arc_balance_Kmin(s, Ep, args.L, (ta, tb), source=src)
        if args.K is not None:
            rep.check(args.L, args.K)
        reports["arc_balance"] = rep.as_dict()
    if args.condition in ("asymmetry", "all"):
        per_t = []
        for t in range(ta, tb + 1):
            d = balanced_asymmetry_Mmin(s.matrix_at(t)).as_dict()
            d["t"] = t
            per_t.append(d)
        reports["balanced_asymmetry"] = per_t
    if args.condition in ("aif", "all"):
        reports["aif_partial"] = aif_partial(s, (ta, tb)).as_dict()
    reports["config"] = _config(args, s)
    _emit(reports, args.out)
    return EXIT_OK


def _write_stage_csv(path, report) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "predicted", "observed"])
        for r, pred, obs in report.csv_rows():
            w.writerow([r, "%.17g" % pred, "%.17g" % obs])


def cmd_bound_arc(args) -> int:
    s = resolve_schedule(args.schedule)
    Ep = None
    if s.persistent_arcs is None:
        Ep, _ = _persistent_arcs(s, args.horizon)
    b = theorem1_bound(s, K=args.K, L=args.L, eps_target=args.eps, eps_tail=args.eps_tail,
                       delta=args.delta, Ep=Ep, n_rounds=args.rounds)
    stages = b.stage_boundaries()
    steps = max(args.steps, stages[-1] - s.t0)
    traj = simulate(s, _x0(args, s), steps)
    guar = check_guarantee(traj, s.t0, b.guarantee_time, args.eps)
    stage = stagewise_contraction_check(traj, stages, b.factor)
    mass_ok = b.stages is None or max(b.stages.masses) <= 1 + b.delta
    rep = {
        "config": _config(args, s),
        "bound": b.as_dict(),
        "guarantee": guar.as_dict(),
        "stagewise": stage.as_dict(),
        "stage_mass_within_1_plus_delta": mass_ok,
    }
    _emit(rep, args.out)
    if args.csv:
        _write_stage_csv(args.csv, stage)
    return _bound_exit(args, guar.holds and stage.ok and mass_ok, b.vacuous)


def cmd_bound_cut(args) -> int:
    s = resolve_schedule(args.schedule)
    b = theorem2_bound(s, K=args.K, L=args.L, eps_target=args.eps, n_outer=args.rounds)
    stages = b.stage_boundaries()
    steps = max(args.steps, stages[-1] - s.t0)
    traj = simulate(s, _x0(args, s), steps)
    guar = check_guarantee(traj, s.t0, b.guarantee_time, args.eps)
    stage = stagewise_contraction_check(traj, stages, b.contraction_factor)
    cap = b.eta**b.L + 1
    flow_ok = b.k_sequence is None or all(v <= cap for vs in b.k_sequence.values for v in vs)
    rep = {
        "config": _config(args, s),
        "bound": b.as_dict(),
        "guarantee": guar.as_dict(),
        "stagewise": stage.as_dict(),
        "substage_flow_within_eta_L_plus_1": flow_ok,
    }
    _emit(rep, args.out)
    if args.csv:
        _write_stage_csv(args.csv, stage)
    return _bound_exit(args, guar.holds and stage.ok and flow_ok, vacuous=False)


def _bound_exit(args, ok: bool, vacuous: bool) -> int:
    if not ok:
        print("bound check failed", file=sys.stderr)
        return EXIT_VIOLATION
    if vacuous:
        print("warning: bound vacuous for these constants", file=sys.stderr)
        if args.strict:
            return EXIT_VACUOUS
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_all(args.trials, args.seed, args.workers)
    cfg = _config(args)
    cfg.pop("workers")  # does not affect results
    _emit({"config": cfg, "suites": [r.as_dict() for r in results]}, args.out)
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"{status} {r.lemma}: {r.trials} trials, {r.checks} checks, {r.violations} violations", file=sys.stderr)
    return EXIT_OK if all(r.ok for r in results) else EXIT_VIOLATION


def _matrix_list(a) -> list:
    return [[float(v) for v in row] for row in a]


def cmd_example(args) -> int:
    s = builtin(args.id)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    if args.id == "paper-sec5":
        traj = simulate(s, [1.0, 1.0, 0.0], args.steps)
        rep = counterexample_lower_bound(traj)
        if out_dir:
            traj.write_csv(out_dir / "trajectory.csv")
        _emit({"config": _config(args, s), "lower_bound_chain": rep.as_dict()},
              None if out_dir is None else str(out_dir / "report.json"))
        return EXIT_OK if rep.ok else EXIT_VIOLATION
    exp = SEC4_EXPECTED
    traj = simulate(s, exp["y0"], args.steps, record_sorted=True)
    rec = traj.sorted_records
    C0, Cp0, z0 = rec.C[0], rec.C_prime[0], rec.z[0]
    found = {
        "y1": traj.x(1).tolist(),
        "sigma1": [int(v) + 1 for v in rec.sigma[1]],
        "z1": rec.z[1].tolist(),
        "C0": _matrix_list(C0),
        "C_prime0": _matrix_list(Cp0),
        "C0_z0": (C0 @ z0).tolist(),
        "C_prime0_z0": (Cp0 @ z0).tolist(),
    }
    checks = {
        "y1": found["y1"] == exp["y1"],
        "sigma1": found["sigma1"] == exp["sigma1"],
        "z1": found["z1"] == exp["z1"],
        "C0": np.array_equal(C0, exp["C0"]),
        "z1_equals_C0_z0": found["C0_z0"] == found["z1"],
        "z1_differs_from_C_prime0_z0": found["C_prime0_z0"] != found["z1"],
    }
    if out_dir:
        traj.write_csv(out_dir / "trajectory.csv")
        traj.write_sorted_csv(out_dir / "sorted.csv")
    _emit({"config": _config(args, s), "found": found, "expected": exp, "checks": checks},
          None if out_dir is None else str(out_dir / "report.json"))
    return EXIT_OK if all(checks.values()) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="persistflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sched(q):
        q.add_argument("--schedule", required=True,
                       help="built-in id (paper-sec4, paper-sec5), schedule/generator JSON file, or inline JSON")

    q = sub.add_parser("simulate", help="run x(t+1) = A(t) x(t)")
    sched(q)
    q.add_argument("--steps", type=int, required=True)
    q.add_argument("--x0", help="comma-separated initial state (default 0,1,...,n-1)")
    q.add_argument("--out", help="trajectory CSV")
    q.add_argument("--sorted-out", help="companion CSV of sigma_t and z(t)")
    q.add_argument("--report", help="JSON summary (default stdout)")
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("persistence", help="accumulate arc weights and label persistent arcs")
    sched(q)
    q.add_argument("--horizon", type=int, required=True, help="last time T to accumulate")
    q.add_argument("--heuristic", action="store_true", help="ignore generator ground truth")
    q.add_argument("--out")
    q.set_defaults(func=cmd_persistence)

    q = sub.add_parser("balance", help="windowed balance constants and minimal subset-sequence flow")
    sched(q)
    q.add_argument("--condition", choices=["cut", "arc", "asymmetry", "aif", "all"], default="cut")
    q.add_argument("--L", type=int, default=1)
    q.add_argument("--K", type=float, help="also report whether this constant suffices")
    q.add_argument("--start", type=int, help="first time (default t0)")
    q.add_argument("--horizon", type=int, required=True, help="last time examined")
    q.add_argument("--out")
    q.set_defaults(func=cmd_balance)

    for name, func, help_ in (("bound-arc", cmd_bound_arc, "arc-balance rate certificate"),
                              ("bound-cut", cmd_bound_cut, "cut-balance rate certificate")):
        q = sub.add_parser(name, help=help_)
        sched(q)
        q.add_argument("--K", type=float, required=True)
        q.add_argument("--L", type=int, required=True)
        q.add_argument("--eps", type=float, required=True, help="contraction target")
        if name == "bound-arc":
            q.add_argument("--eps-tail", type=float, help="transient-arc tail budget")
            q.add_argument("--delta", type=float, help="per-stage persistent in-weight")
            q.add_argument("--horizon", type=int, help="horizon for persistent-arc estimation")
        q.add_argument("--rounds", type=int, default=5, help="stages laid out for the stagewise check")
        q.add_argument("--steps", type=int, default=2000, help="minimum simulation length")
        q.add_argument("--x0")
        q.add_argument("--strict", action="store_true", help="exit 3 when the bound is vacuous")
        q.add_argument("--out")
        q.add_argument("--csv", help="stagewise (r, predicted, observed) CSV")
        q.set_defaults(func=func)

    q = sub.add_parser("verify", help="randomized property suites")
    q.add_argument("--suite", choices=["lemmas"], default="lemmas")
    q.add_argument("--trials", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--workers", type=int, default=0, help="worker processes (0: all cores)")
    q.add_argument("--out")
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("example", help="reproduce a built-in worked example")
    q.add_argument("--id", choices=list(BUILTIN_IDS), required=True)
    q.add_argument("--steps", type=int, default=None, help="default 1 (paper-sec4) or 10000 (paper-sec5)")
    q.add_argument("--out-dir", help="write trajectory CSV(s) and report.json here")
    q.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "steps", 0) is None:
        args.steps = 1 if args.id == "paper-sec4" else 10_000
    if getattr(args, "steps", 0) < 0:
        parser.error("--steps must be nonnegative")
    if args.command == "verify" and args.trials < 1:
        parser.error("--trials must be positive")
    if args.command == "example" and args.id == "paper-sec5" and args.steps < 2:
        parser.error("the three-agent example needs --steps >= 2")
    if args.command == "example" and args.id == "paper-sec4" and args.steps < 1:
        parser.error("the four-agent example needs --steps >= 1")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
