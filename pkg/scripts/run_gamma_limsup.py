#!/usr/bin/env python3
"""Tabulate the recovery-sequence energies against the sharp limit for the
three target classes (affine, fresh jump, inherited crack)."""

from atobstacle.critical import InitStrategy, SolveOptions
from atobstacle.energy import affine_target, step_target
from atobstacle.recovery import gamma_limsup_table

OPTS = SolveOptions(tol=1e-12)


def show(label, rows):
    print(f"--- {label} ---")
    print("eps        eta        n      AT(recovery)  MS(target)  gap       compliant")
    for r in rows:
        print(f"{r.eps:<10g} {r.eta:<10.3g} {r.n:<6d} {r.at_total:<13.6f} {r.ms_target:<11.4f} "
              f"{r.gap:+.6f} {r.compliant}")


def main():
    show("affine ramp, no crack", gamma_limsup_table(
        affine_target(1.0, 0.3),
        [(0.05, 0.05**3, 4096), (0.025, 0.025**3, 4096), (0.0125, 0.0125**3, 8192)],
        a0=0.5, init0=InitStrategy.uniform_one(), opts=OPTS))
    show("fresh jump at L/2", gamma_limsup_table(
        step_target(1.0, 1.0, 0.5),
        [(0.04, 0.04**3, 16384), (0.03, 0.03**3, 16384), (0.02, 0.02**3, 16384)],
        a0=0.5, init0=InitStrategy.uniform_one(), opts=OPTS))
    show("jump inherited from a first-step crack", gamma_limsup_table(
        step_target(1.0, 1.0, 0.5, gamma0=(0.5,)),
        [(0.04, 0.04**5, 4096), (0.028, 0.028**5, 4096), (0.02, 0.02**5, 4096)],
        a0=4.0, init0=InitStrategy.notch(0.5, 0.05, 0.98), opts=OPTS))


if __name__ == "__main__":
    main()
