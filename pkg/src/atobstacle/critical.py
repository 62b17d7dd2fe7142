"""Critical points by alternate minimization, with and without an obstacle.

One iteration solves the v-subproblem (obstacle LCP) at frozen u and then the
u-subproblem (constant flux) at frozen v.  Both half-steps minimize the same
discrete energy in their own variable, so the energy history is non-increasing
to machine precision; the iteration stops when both the state change and the
coupled stationarity residuals drop below tolerance.

The first loading step uses the trivial obstacle (all ones); later steps use
the previous phase field, which encodes irreversibility of the damage.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .energy import ATParams, EnergyBreakdown, State, at_energy
from .flux import FluxSolution, flux_residual, solve_u
from .mesh import Grid1D, NodalField, require_nodal
from .obstacle import ActiveSet, MultiplierField, ObstacleSpec, SolverFailure, lcp_state_residual, solve_v

ENERGY_DECREASE_SLACK = 1e-12


@dataclass(frozen=True)
class InitStrategy:
    """Starting phase field: all ones, a rectangular notch, or a given state.

    The notch selects the basin of attraction; alternate minimization finds
    critical points, not global minimizers, so the initial well decides
    whether the crack branch is reached.
    """

    kind: str
    center: float = 0.0
    width: float = 0.0
    depth: float = 0.0
    state: State | None = None

    @staticmethod
    def uniform_one() -> "InitStrategy":
        return InitStrategy(kind="uniform_one")

    @staticmethod
    def notch(center: float, width: float, depth: float) -> "InitStrategy":
        if not 0.0 <= depth < 1.0:
            raise ValueError(f"notch depth must lie in [0, 1), got {depth}")
        return InitStrategy(kind="notch", center=center, width=width, depth=depth)

    @staticmethod
    def from_state(state: State) -> "InitStrategy":
        return InitStrategy(kind="from_state", state=state)

    def build_v(self, g: Grid1D) -> NodalField:
        if self.kind == "uniform_one":
            return np.ones(g.node_count)
        if self.kind == "notch":
            if not (0.0 < self.center < g.length):
                raise ValueError(f"notch center must lie inside (0, {g.length})")
            if not (0.0 < self.width < g.length):
                raise ValueError("notch width must lie inside (0, L)")
            v = np.ones(g.node_count)
            x = g.nodes
            inside = np.abs(x - self.center) <= 0.5 * self.width
            v[inside] = 1.0 - self.depth
            v[0] = v[-1] = 1.0
            return v
        if self.kind == "from_state":
            if self.state is None:
                raise ValueError("from_state init requires a state")
            return require_nodal(self.state.v, g).copy()
        raise ValueError(f"unknown init kind {self.kind!r}")


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 5000
    tol: float = 1e-10


@dataclass(frozen=True)
class CriticalPointReport:
    state: State
    flux: FluxSolution
    multiplier: MultiplierField
    active: ActiveSet
    energy: EnergyBreakdown
    iterations: int
    stationarity_residual: float
    energy_history: tuple[float, ...]
    residual_history: tuple[float, ...] = field(default_factory=tuple)
    converged: bool = True


def _certificate(flux: FluxSolution, v: NodalField, obs: ObstacleSpec, p: ATParams, g: Grid1D):
    """Coupled stationarity residual of (u, v): flux defect plus LCP defect."""
    r_flux = flux_residual(flux, v, p, g)
    r_lcp, mu, contact = lcp_state_residual(v, flux.u_prime**2, obs, p, g)
    return max(r_flux, r_lcp), mu, contact


def alternate_minimize(
    p: ATParams,
    obs: ObstacleSpec,
    init: InitStrategy,
    g: Grid1D,
    opts: SolveOptions = SolveOptions(),
) -> CriticalPointReport:
    """Iterate (solve_v o solve_u) to a fixed point under the given obstacle."""
    obs_full = obs.validate(g)
    v = np.minimum(init.build_v(g), obs_full)
    v[0] = v[-1] = 1.0
    flux = solve_u(v, p, g)
    energy_history: list[float] = [at_energy(State(flux.u, v), p, g).total]
    residual_history: list[float] = []

    iterations = 0
    converged = False
    for k in range(1, opts.max_iters + 1):
        iterations = k
        v_new, _, active = solve_v(flux.u_prime**2, obs, p, g, v_init=v)
        e_half = at_energy(State(flux.u, v_new), p, g).total
        _assert_decrease(energy_history[-1], e_half)
        energy_history.append(e_half)

        flux_new = solve_u(v_new, p, g)
        e_full = at_energy(State(flux_new.u, v_new), p, g).total
        _assert_decrease(e_half, e_full)
        energy_history.append(e_full)

        change = max(float(np.max(np.abs(v_new - v))), float(np.max(np.abs(flux_new.u - flux.u))))
        resid, mu, contact = _certificate(flux_new, v_new, obs, p, g)
        residual_history.append(resid)
        v, flux = v_new, flux_new
        if max(change, resid) <= opts.tol:
            converged = True
            break

    resid, mu, contact = _certificate(flux, v, obs, p, g)
    interior = np.arange(1, g.node_count - 1)
    state = State(u=flux.u, v=v)
    return CriticalPointReport(
        state=state,
        flux=flux,
        multiplier=MultiplierField(mu=mu),
        active=ActiveSet(contact_indices=interior[contact], free_indices=interior[~contact]),
        energy=at_energy(state, p, g),
        iterations=iterations,
        stationarity_residual=resid,
        energy_history=tuple(energy_history),
        residual_history=tuple(residual_history),
        converged=converged,
    )


def _assert_decrease(before: float, after: float) -> None:
    if after > before + ENERGY_DECREASE_SLACK * max(1.0, abs(before)):
        raise AssertionError(f"alternate-minimization energy increased: {before!r} -> {after!r}")


def solve_time0(p: ATParams, init: InitStrategy, g: Grid1D, opts: SolveOptions = SolveOptions()) -> CriticalPointReport:
    """Unconstrained critical point: obstacle = 1 everywhere.

    The multiplier of the trivial obstacle vanishes (within tolerance) since
    the load keeps the phase field strictly below one wherever u' != 0.
    """
    obs = ObstacleSpec(obstacle=np.ones(g.node_count))
    report = alternate_minimize(p, obs, init, g, opts)
    mu_free = report.multiplier.mu[report.active.free_indices]
    if report.converged and mu_free.size and np.max(np.abs(mu_free)) > opts.tol:
        raise AssertionError("first-step multiplier does not vanish on the free set")
    return report


def solve_time1(
    p1: ATParams,
    time0: CriticalPointReport,
    init: InitStrategy,
    g: Grid1D,
    opts: SolveOptions = SolveOptions(),
) -> CriticalPointReport:
    """Constrained critical point with the first-step phase field as obstacle."""
    if not time0.converged:
        raise ValueError("the first loading step did not converge")
    obs = ObstacleSpec(obstacle=time0.state.v)
    return alternate_minimize(p1, obs, init, g, opts)


def evolve_chain(
    schedule: list[float],
    p: ATParams,
    g: Grid1D,
    opts: SolveOptions = SolveOptions(),
    init: InitStrategy | None = None,
) -> list[CriticalPointReport]:
    """Chain of loading steps; step t uses step t-1's phase field as obstacle.

    Exploratory: beyond monotone damage (v_t <= v_{t-1} by construction) no
    quantitative claims attach to steps past the second, where the multiplier
    depends on the whole history of contact sets.  A non-converged step
    truncates the chain.
    """
    if not schedule:
        raise ValueError("schedule must be nonempty")
    reports: list[CriticalPointReport] = []
    obstacle = np.ones(g.node_count)
    step_init = init if init is not None else InitStrategy.uniform_one()
    for a in schedule:
        p_t = replace(p, boundary_value=float(a))
        try:
            report = alternate_minimize(p_t, ObstacleSpec(obstacle=obstacle), step_init, g, opts)
        except SolverFailure:
            break
        reports.append(report)
        if not report.converged:
            break
        obstacle = report.state.v
        step_init = InitStrategy.from_state(report.state)
    return reports
