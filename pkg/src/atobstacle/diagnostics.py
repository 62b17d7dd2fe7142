"""Derived quantities of converged states: everything the asymptotic theory
constrains.

Covered here: the discrepancy (the Hamiltonian-like pointwise defect), the
explicit multiplier formula on the contact set, the equipartition defect of
the two phase-field terms, concentration data around the minimum of v,
power-law fits of the outside mass, monotone-shape checks, branch
classification, and pairings of energy densities against a fixed panel of
smooth test functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .critical import CriticalPointReport
from .energy import ATParams, State
from .flux import FluxSolution
from .mesh import Grid1D, NodalField, cell_mean_square, derivative, integrate, node_average, require_nodal
from .obstacle import ActiveSet


def elastic_density(s: State, p: ATParams, g: Grid1D) -> NodalField:
    """(eta + v^2) |u'|^2 as a nodal field (cell values averaged to nodes)."""
    up = derivative(require_nodal(s.u, g), g)
    coeff = p.eta + cell_mean_square(s.v, g)
    return node_average(coeff * up**2, g)


def modica_densities(v: NodalField, p: ATParams, g: Grid1D) -> tuple[NodalField, NodalField]:
    """Nodal well density (1-v)^2/eps and gradient density eps |v'|^2."""
    v = require_nodal(v, g)
    well = (1.0 - v) ** 2 / p.eps
    grad = p.eps * node_average(derivative(v, g) ** 2, g)
    return well, grad


def discrepancy(s: State, p: ATParams, g: Grid1D) -> NodalField:
    """d = (1-v)^2/eps - eps |v'|^2 - (eta + v^2)|u'|^2, nodally.

    Constant in space when the constraint multiplier vanishes; otherwise its
    derivative equals twice the obstacle slope times the multiplier, so it is
    non-decreasing left of L/2 and non-increasing right of it.
    """
    well, grad = modica_densities(s.v, p, g)
    return well - grad - elastic_density(s, p, g)


def mu_explicit(
    s1: State,
    report0: CriticalPointReport,
    flux1: FluxSolution,
    active: ActiveSet,
    p: ATParams,
    g: Grid1D,
) -> NodalField:
    """Pointwise multiplier from the two fluxes, supported on the contact set.

    Evaluates v0 (c^2 - c0^2) / (v0^2 + eta)^2 on contact nodes and
    cross-checks it against the equivalent form v0 (|u'|^2 - |u0'|^2) built
    from the constrained phase field; the two agree wherever contact holds.
    """
    v0 = require_nodal(report0.state.v, g)
    v1 = require_nodal(s1.v, g)
    c0 = report0.flux.c_eps
    c1 = flux1.c_eps
    out = np.zeros(g.node_count)
    idx = np.asarray(active.contact_indices, dtype=int)
    if idx.size == 0:
        return out
    denom0 = (v0[idx] ** 2 + p.eta) ** 2
    form_a = v0[idx] * (c1**2 - c0**2) / denom0
    u1p = c1 / (p.eta + v1[idx] ** 2)
    u0p = c0 / (p.eta + v0[idx] ** 2)
    form_b = v0[idx] * (u1p**2 - u0p**2)
    scale = np.max(np.abs(form_a)) + 1e-300
    if np.max(np.abs(form_a - form_b)) > 1e-10 * max(scale, 1.0):
        raise AssertionError("the two multiplier formulas disagree on the contact set")
    out[idx] = form_a
    return out


def equipartition_defect(s: State, p: ATParams, g: Grid1D) -> float:
    """L1 norm of the difference of the two phase-field energy densities."""
    well, grad = modica_densities(s.v, p, g)
    return integrate(np.abs(well - grad), g)


@dataclass(frozen=True)
class ConcentrationReport:
    x_eps: float
    v_min: float
    alpha_est: float
    mass_total: float
    mass_outside: float
    delta: float
    well_mass: float
    grad_mass: float


def argmin_leftmost(v: NodalField, g: Grid1D) -> tuple[int, float]:
    """Index and coordinate of the leftmost nodal minimum of v."""
    v = require_nodal(v, g)
    i = int(np.argmin(v))  # argmin returns the first minimum
    return i, float(g.nodes[i])


def concentration(s: State, p: ATParams, g: Grid1D, delta: float) -> ConcentrationReport:
    """Phase-field mass split around the minimum of v.

    The excluded window (x_eps - delta, x_eps + delta) is snapped to whole
    cells by their midpoints; masses use the trapezoid rule cellwise.
    """
    if not 0.0 < delta < g.length / 4:
        raise ValueError(f"delta must lie in (0, L/4), got {delta}")
    i_min, x_eps = argmin_leftmost(s.v, g)
    v_min = float(s.v[i_min])
    alpha_est = 2.0 * (1.0 - v_min) ** 2
    well, grad = modica_densities(s.v, p, g)
    h = g.spacing
    cell_well = 0.5 * h * (well[:-1] + well[1:])
    cell_grad = 0.5 * h * (grad[:-1] + grad[1:])
    outside = np.abs(g.midpoints - x_eps) > delta
    return ConcentrationReport(
        x_eps=x_eps,
        v_min=v_min,
        alpha_est=alpha_est,
        mass_total=float(cell_well.sum() + cell_grad.sum()),
        mass_outside=float(cell_well[outside].sum() + cell_grad[outside].sum()),
        delta=float(delta),
        well_mass=float(cell_well.sum()),
        grad_mass=float(cell_grad.sum()),
    )


def mass_outside_rate(sweep: list[tuple[float, ConcentrationReport]]) -> float:
    """Least-squares slope of log(mass_outside) against log(eps)."""
    if len(sweep) < 3:
        raise ValueError("need at least 3 sweep points to fit a rate")
    deltas = {round(r.delta, 15) for _, r in sweep}
    if len(deltas) != 1:
        raise ValueError("sweep points must share a common delta")
    eps = np.array([e for e, _ in sweep])
    mass = np.array([r.mass_outside for _, r in sweep])
    if np.any(mass <= 0.0):
        raise ValueError("mass_outside must be positive to fit a log-log rate")
    slope = np.polyfit(np.log(eps), np.log(mass), 1)[0]
    return float(slope)


def shape_check(v: NodalField, g: Grid1D, tol: float) -> tuple[float, bool]:
    """Single-well test: non-increasing left of the leftmost minimum of v and
    non-decreasing right of it, up to ``tol`` per increment."""
    v = require_nodal(v, g)
    i_min, x_eps = argmin_leftmost(v, g)
    diffs = np.diff(v)
    ok = bool(np.all(diffs[:i_min] <= tol) and np.all(diffs[i_min:] >= -tol))
    return x_eps, ok


@dataclass(frozen=True)
class Classification:
    branch: str  # "affine" or "jump"
    c_eps: float
    c_target_dist: float
    c_limit_guess: float
    expected_jump: bool | None = None


def classify(report: CriticalPointReport, p: ATParams, a0: float | None = None) -> Classification:
    """Branch decision by the depth of the v-well, with the slope targets.

    v_min <= 0.5 classifies as jump (ties go to jump).  When the first-step
    datum ``a0`` is supplied, flags the configurations (nonempty contact and
    |a1| >= a0) whose limit is forced onto the jump branch.  The branch label
    and the concentration weight are reported independently; neither is
    inferred from the other.
    """
    v_min = float(np.min(report.state.v))
    branch = "jump" if v_min <= 0.5 else "affine"
    c = report.flux.c_eps
    target = p.boundary_value / p.length
    d0 = abs(c)
    d1 = abs(c - target)
    expected = None
    if a0 is not None:
        expected = bool(report.active.contact_indices.size > 0 and abs(p.boundary_value) >= a0)
    return Classification(
        branch=branch,
        c_eps=float(c),
        c_target_dist=float(min(d0, d1)),
        c_limit_guess=0.0 if d0 <= d1 else float(target),
        expected_jump=expected,
    )


def sup_norm_rates(report: CriticalPointReport, p: ATParams, g: Grid1D) -> dict[str, float]:
    """Scaled sup-norm trends, emitted for inspection only (never asserted)."""
    vp = derivative(report.state.v, g)
    up = report.flux.u_prime
    v_min = float(np.min(report.state.v))
    return {
        "eps_vprime_sup": float(p.eps * np.max(np.abs(vp))),
        "eps_uprime_sup": float(p.eps * np.max(np.abs(up))),
        "vmin_over_sqrt_eps": v_min / np.sqrt(p.eps),
    }


def panel_functions(g: Grid1D) -> list[tuple[str, NodalField]]:
    """Fixed panel of 8 smooth test functions: monomials and compact bumps."""
    x = g.nodes / g.length
    panel: list[tuple[str, NodalField]] = [
        ("one", np.ones_like(x)),
        ("x", x.copy()),
        ("x2", x**2),
        ("x3", x**3),
    ]
    for name, center, width in (
        ("bump_l", 0.25, 0.2),
        ("bump_c", 0.50, 0.2),
        ("bump_r", 0.75, 0.2),
        ("bump_wide", 0.50, 0.45),
    ):
        t = (x - center) / width
        phi = np.zeros_like(x)
        inside = np.abs(t) < 1.0
        phi[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        panel.append((name, phi))
    return panel


def measure_pairings(density: NodalField, g: Grid1D, panel: list[tuple[str, NodalField]]) -> np.ndarray:
    """Trapezoid pairings of a nodal density against every panel function."""
    density = require_nodal(density, g)
    return np.array([integrate(density * phi, g) for _, phi in panel])


def panel_norm(g: Grid1D, panel: list[tuple[str, NodalField]]) -> float:
    """Largest L1 norm over the panel; the scale for pairing errors."""
    return max(integrate(np.abs(phi), g) for _, phi in panel)
