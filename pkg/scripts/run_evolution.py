#!/usr/bin/env python3
"""Chain several loading steps with inherited obstacles and print how the
damage field and flux evolve.  Exploratory: beyond monotone damage, no
quantitative claims attach past the second step."""

import numpy as np

from atobstacle.critical import SolveOptions, evolve_chain
from atobstacle.energy import ATParams
from atobstacle.mesh import make_grid


def main():
    eps = 0.02
    g = make_grid(1.0, 4096)
    p = ATParams(eps=eps, eta=eps**3, length=1.0, boundary_value=0.5)
    schedule = [0.5, 1.0, 1.5, 2.0, 2.5]
    reports = evolve_chain(schedule, p, g, SolveOptions(tol=1e-12))
    print("step  a      c_eps        v_min      energy     contact")
    for t, rep in enumerate(reports):
        n_contact = rep.active.contact_indices.size
        print(f"{t:<5d} {schedule[t]:<6g} {rep.flux.c_eps:<12.6f} {rep.state.v.min():<10.4e} "
              f"{rep.energy.total:<10.5f} {n_contact}")
    for prev, cur in zip(reports, reports[1:]):
        assert np.all(cur.state.v <= prev.state.v)
    print("monotone damage verified on the whole chain")


if __name__ == "__main__":
    main()
