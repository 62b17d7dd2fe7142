"""Command-line front end.

Subcommands: ``solve`` (single eps, prints the report), ``sweep`` (runs the
config's eps list), ``recovery`` (sharp-limit upper-bound table), ``evolve``
(chain of loading steps), ``check`` (acceptance predicates, nonzero exit on
failure).  Exit codes: 0 success/pass, 1 check failure, 2 solver failure,
3 config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .critical import SolveOptions, solve_time0, solve_time1
from .energy import ATParams, affine_target, step_target
from .mesh import make_grid
from .obstacle import SolverFailure
from .recovery import gamma_limsup_table
from .sweep import (
    CheckCriteria,
    ConfigError,
    SweepConfig,
    check,
    emit,
    records_from_dicts,
    run_sweep,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_SOLVER_FAILURE = 2
EXIT_CONFIG_ERROR = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atobstacle", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("solve", "run one eps level and print the solve report"),
        ("sweep", "run the configured eps sweep and emit records"),
        ("recovery", "build the sharp-limit recovery table"),
        ("evolve", "run the configured loading schedule"),
        ("check", "evaluate the sweep-level acceptance predicates"),
    ):
        cmd = sub.add_parser(name, help=desc)
        cmd.add_argument("--config", required=True, help="path to the JSON config")
        cmd.add_argument("--out", default="out", help="output directory (default ./out)")
        cmd.add_argument("--format", action="append", choices=["csv", "json", "svg"],
                         help="output format, repeatable (default csv)")
        cmd.add_argument("--parallel", type=int, default=1, help="worker processes for sweep rows")
        cmd.add_argument("--verbose", action="store_true")
        if name == "check":
            cmd.add_argument("--records", help="existing records JSON; omitted = run the sweep first")
    return parser


def _load_config(path: str) -> tuple[SweepConfig, dict]:
    raw = json.loads(Path(path).read_text())
    return SweepConfig.from_dict(raw), raw


def _cmd_solve(args, cfg: SweepConfig, raw: dict) -> int:
    eps = cfg.eps_list[0]
    eta = cfg.eta_rule.resolve(eps)
    n = cfg.n_rule.resolve(eps, cfg.length)
    g = make_grid(cfg.length, n)
    opts = SolveOptions(max_iters=cfg.max_iters, tol=cfg.tol)
    p0 = ATParams(eps=eps, eta=eta, length=cfg.length, boundary_value=cfg.a0)
    report0 = solve_time0(p0, cfg.init0.strategy(cfg.length), g, opts)
    p1 = ATParams(eps=eps, eta=eta, length=cfg.length, boundary_value=cfg.a1)
    report1 = solve_time1(p1, report0, cfg.init.strategy(cfg.length, report0), g, opts)
    for label, rep in (("time0", report0), ("time1", report1)):
        print(
            f"{label}: c_eps={rep.flux.c_eps:.8g} v_min={rep.state.v.min():.8g} "
            f"energy={rep.energy.total:.8g} iters={rep.iterations} "
            f"residual={rep.stationarity_residual:.3e} converged={rep.converged} "
            f"contact={rep.active.contact_indices.size}"
        )
    if not (report0.converged and report1.converged):
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def _cmd_sweep(args, cfg: SweepConfig, raw: dict) -> int:
    records = run_sweep(cfg, keep_profiles="svg" in (args.format or []), parallel=args.parallel)
    paths = emit(records, args.format or ["csv"], args.out)
    if args.verbose:
        for rec in records:
            print(
                f"eps={rec.eps:.6g} branch={rec.branch} c={rec.c_eps:.6g} "
                f"alpha={rec.alpha_est:.4f} defect={rec.equi_defect:.3e} converged={rec.converged}"
            )
    for p in paths:
        print(f"wrote {p}")
    if not all(r.converged for r in records):
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def _target_from_config(raw: dict, cfg: SweepConfig):
    spec = raw.get("target", {"kind": "affine", "a": cfg.a1})
    kind = spec.get("kind", "affine")
    a = float(spec.get("a", cfg.a1))
    if kind == "affine":
        return affine_target(cfg.length, a)
    if kind == "step":
        jump_at = float(spec.get("jump_at", cfg.length / 2))
        gamma0 = tuple(float(x) for x in spec.get("gamma0", ()))
        return step_target(cfg.length, a, jump_at, gamma0)
    raise ConfigError(f"unknown target kind {kind!r}")


def _cmd_recovery(args, cfg: SweepConfig, raw: dict) -> int:
    target = _target_from_config(raw, cfg)
    levels = [
        (eps, cfg.eta_rule.resolve(eps), cfg.n_rule.resolve(eps, cfg.length))
        for eps in cfg.eps_list
    ]
    opts = SolveOptions(max_iters=cfg.max_iters, tol=cfg.tol)
    rows = gamma_limsup_table(target, levels, cfg.a0, cfg.init0.strategy(cfg.length), opts)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmts = args.format or ["csv"]
    if "csv" in fmts:
        header = "eps,eta,n,at_total,ms_target,gap,v_l2_dist,u_l2_dist,compliant"
        lines = [header] + [
            ",".join(repr(x) if isinstance(x, float) else str(x) for x in
                     (r.eps, r.eta, r.n, r.at_total, r.ms_target, r.gap, r.v_l2_dist, r.u_l2_dist, r.compliant))
            for r in rows
        ]
        path = out / "recovery.csv"
        path.write_text("\n".join(lines) + "\n")
        print(f"wrote {path}")
    if "json" in fmts:
        path = out / "recovery.json"
        path.write_text(json.dumps([asdict(r) for r in rows], indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
    for r in rows:
        print(f"eps={r.eps:.6g} at={r.at_total:.6f} ms={r.ms_target:.6f} gap={r.gap:+.6f} compliant={r.compliant}")
    return EXIT_OK


def _cmd_evolve(args, cfg: SweepConfig, raw: dict) -> int:
    from .critical import evolve_chain

    schedule = [float(a) for a in raw.get("schedule", [])]
    if not schedule:
        raise ConfigError("evolve needs a nonempty 'schedule' in the config")
    eps = cfg.eps_list[0]
    eta = cfg.eta_rule.resolve(eps)
    g = make_grid(cfg.length, cfg.n_rule.resolve(eps, cfg.length))
    p = ATParams(eps=eps, eta=eta, length=cfg.length, boundary_value=schedule[0])
    opts = SolveOptions(max_iters=cfg.max_iters, tol=cfg.tol)
    reports = evolve_chain(schedule, p, g, opts, init=cfg.init0.strategy(cfg.length))
    for t, rep in enumerate(reports):
        print(
            f"step {t}: a={schedule[t]:.6g} c_eps={rep.flux.c_eps:.8g} "
            f"v_min={rep.state.v.min():.6g} energy={rep.energy.total:.8g} converged={rep.converged}"
        )
    if len(reports) < len(schedule):
        print(f"chain truncated after step {len(reports) - 1}")
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def _cmd_check(args, cfg: SweepConfig, raw: dict) -> int:
    if getattr(args, "records", None):
        payload = json.loads(Path(args.records).read_text())
        records = records_from_dicts(payload["records"])
    else:
        records = run_sweep(cfg, parallel=args.parallel)
    crit_raw = dict(raw.get("check", {}))
    criteria = CheckCriteria(a1=cfg.a1, length=cfg.length, **crit_raw)
    report = check(records, criteria)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg, raw = _load_config(args.config)
        handler = {
            "solve": _cmd_solve,
            "sweep": _cmd_sweep,
            "recovery": _cmd_recovery,
            "evolve": _cmd_evolve,
            "check": _cmd_check,
        }[args.command]
        return handler(args, cfg, raw)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
