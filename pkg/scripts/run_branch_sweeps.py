#!/usr/bin/env python3
"""Run the two reference eps-sweeps (affine and crack branch) and emit
CSV/JSON/SVG under ./out, then print the acceptance-style check report."""

from atobstacle.sweep import (
    CellRule,
    CheckCriteria,
    EtaRule,
    InitSpec,
    SweepConfig,
    check,
    emit,
    run_sweep,
)

EPS = (0.1, 0.05, 0.025, 0.0125, 0.00625)


def main():
    scenarios = {
        "affine": SweepConfig(
            length=1.0, a0=0.5, a1=0.6, eps_list=EPS,
            eta_rule=EtaRule(kind="eps_pow", p=3.0),
            n_rule=CellRule(kind="rule", min_cells=2048, cells_per_eps=64.0, cap=16384),
            init=InitSpec(kind="continuation"),
            tol=1e-12,
        ),
        "crack": SweepConfig(
            length=1.0, a0=0.5, a1=2.0, eps_list=EPS,
            eta_rule=EtaRule(kind="eps_pow", p=3.0),
            n_rule=CellRule(kind="rule", min_cells=2048, cells_per_eps=64.0, cap=16384),
            init=InitSpec(kind="notch", center=0.5, width=0.025, depth=0.98),
            tol=1e-12,
        ),
    }
    for name, cfg in scenarios.items():
        records = run_sweep(cfg, keep_profiles=True)
        paths = emit(records, ["csv", "json", "svg"], "out", stem=name)
        for p in paths:
            print(f"wrote {p}")
        report = check(records, CheckCriteria(a1=cfg.a1, length=cfg.length))
        print(f"--- {name} ---")
        for line in report.lines():
            print(line)


if __name__ == "__main__":
    main()
