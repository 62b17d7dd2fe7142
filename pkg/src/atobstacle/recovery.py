"""Recovery sequences for the sharp-interface limit under the obstacle.

For a target displacement with jump set J and inherited crack G0, the
construction samples three ingredients nodally:

* the classical optimal profile ``w = 1 - exp(-(d - alpha)/eps)`` of the
  distance d to J minus G0, flattened to zero on ``{d <= alpha}`` with
  ``alpha = sqrt(eta * eps)``, and the matching displacement ``z`` that ramps
  through the plateau;
* the obstacle clip ``w1 = min(w, v0)`` against the first-step phase field;
* near G0, a rescaled field ``w2`` that vanishes where v0 is small, plus a
  cut-off ``phi`` built from the level band [r, s] of v0 with
  ``r = (eta/eps)^(1/4)``, ``s = 2r``, ``t = sqrt(s)``, ``k = t/s``; the band
  is split into equal sub-intervals and the one carrying the least gradient
  mass hosts the transition of phi.

The assembled pair is ``v = min(w1, w2)``, ``u = phi * z``; it satisfies the
obstacle exactly and its energy approaches the sharp limit energy from above
as eps decreases.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .critical import CriticalPointReport, InitStrategy, SolveOptions, solve_time0
from .energy import ATParams, JumpSpec, State, at_energy, ms_energy
from .mesh import Grid1D, NodalField, derivative, integrate, make_grid, require_nodal


class ResolutionWarning(UserWarning):
    """The plateau of the optimal profile is thinner than two cells."""


@dataclass(frozen=True)
class RecoveryScales:
    alpha_eps: float
    r_eps: float
    s_eps: float
    t_eps: float
    k_eps: float


def recovery_scales(p: ATParams) -> RecoveryScales:
    r = (p.eta / p.eps) ** 0.25
    s = 2.0 * r
    t = np.sqrt(s)
    return RecoveryScales(
        alpha_eps=float(np.sqrt(p.eta * p.eps)),
        r_eps=float(r),
        s_eps=float(s),
        t_eps=float(t),
        k_eps=float(t / s),
    )


@dataclass(frozen=True)
class RecoveryIntermediates:
    alpha_eps: float
    r_eps: float
    s_eps: float
    t_eps: float
    k_eps: float
    w: NodalField
    z: NodalField
    w1: NodalField
    w2: NodalField
    phi: NodalField
    interval_endpoints: tuple[float, float]


def build_profiles(target: JumpSpec, p: ATParams, g: Grid1D) -> tuple[NodalField, NodalField]:
    """Optimal profile w and ramped displacement z for the free jump points."""
    if abs(target.length - g.length) > 1e-12 * g.length:
        raise ValueError("target and grid lengths differ")
    x = g.nodes
    d = target.dist_to_free_jumps(x)
    alpha = recovery_scales(p).alpha_eps
    if np.any(np.isfinite(d)) and alpha < 2.0 * g.spacing:
        warnings.warn(
            f"profile plateau alpha = {alpha:.3e} spans fewer than two cells (h = {g.spacing:.3e})",
            ResolutionWarning,
        )
    w = np.where(d > alpha, 1.0 - np.exp(-np.clip((d - alpha) / p.eps, 0.0, 700.0)), 0.0)
    u = target.sample(x)
    ramp = np.clip(2.0 * d / alpha - 1.0, 0.0, 1.0) if alpha > 0 else np.ones_like(d)
    z = np.where(d > alpha, u, ramp * u)
    z = np.where(d <= alpha / 2.0, 0.0, z)
    return w, z


def build_cutoff(v0: NodalField, p: ATParams, g: Grid1D) -> tuple[NodalField, tuple[float, float]]:
    """Cut-off phi: 1 where v0 >= s, 0 where v0 <= r, transition in the
    sub-interval of [r, s] carrying the least phase-field gradient mass."""
    v0 = require_nodal(v0, g)
    sc = recovery_scales(p)
    r, s = sc.r_eps, sc.s_eps
    if not np.any(v0 < s):
        return np.ones(g.node_count), (s, s)
    h_count = int(np.floor(np.sqrt(p.eps / p.eta) * (s - r)))
    h_count = max(h_count, 1)
    edges = np.linspace(r, s, h_count + 1)
    vp2 = p.eps * derivative(v0, g) ** 2 * g.spacing
    v_mid = 0.5 * (v0[:-1] + v0[1:])
    masses = np.empty(h_count)
    for j in range(h_count):
        lo, hi = edges[j], edges[j + 1]
        inside = (v_mid >= lo) & (v_mid < hi) if j < h_count - 1 else (v_mid >= lo) & (v_mid <= hi)
        masses[j] = vp2[inside].sum()
    j_best = int(np.argmin(masses))
    a_sel, b_sel = float(edges[j_best]), float(edges[j_best + 1])
    phi = np.minimum(np.maximum(v0 - a_sel, 0.0) / (b_sel - a_sel), 1.0)
    return phi, (a_sel, b_sel)


def build_w2(v0: NodalField, p: ATParams, g: Grid1D) -> NodalField:
    """Three-branch rescaling of v0 that vanishes on {v0 <= s}.

    Continuous across both seams: the middle branch k/(k-1) (v0 - t) + t
    equals t at v0 = t and 0 at v0 = s.  Requires k > 1, i.e. eps small
    enough that s < 1.
    """
    v0 = require_nodal(v0, g)
    sc = recovery_scales(p)
    if not np.any(v0 < sc.t_eps):
        return v0.copy()
    if sc.k_eps <= 1.0:
        raise ValueError(
            f"degenerate scales (k = {sc.k_eps:.3f} <= 1): the construction needs s = 2 (eta/eps)^(1/4) < 1"
        )
    k, t, s = sc.k_eps, sc.t_eps, sc.s_eps
    middle = k / (k - 1.0) * (v0 - t) + t
    w2 = np.where(v0 >= t, v0, np.where(v0 >= s, middle, 0.0))
    return w2


def assemble_recovery(
    target: JumpSpec, time0: CriticalPointReport, p: ATParams, g: Grid1D
) -> tuple[State, RecoveryIntermediates]:
    """Full recovery pair for the target over the given first-step solve.

    The inherited crack must match the first-step branch: an empty G0 needs
    the affine branch, G0 = {L/2} needs a genuine crack-branch v0 (otherwise
    the cut-off degenerates to 1 and the construction is rejected).
    Endpoint nodes are overwritten with the exact Dirichlet data.
    """
    v0 = require_nodal(time0.state.v, g)
    v0_min = float(np.min(v0))
    if target.gamma0 and v0_min > 0.5:
        raise ValueError("target inherits a crack but the first-step solve is on the affine branch")
    if not target.gamma0 and v0_min <= 0.5:
        raise ValueError("target inherits no crack but the first-step solve is on the crack branch")
    w, z = build_profiles(target, p, g)
    w1 = np.minimum(w, v0)
    w2 = build_w2(v0, p, g)
    phi, interval = build_cutoff(v0, p, g)
    v = np.minimum(w1, w2)
    u = phi * z
    u[0] = 0.0
    u[-1] = p.boundary_value
    v[0] = v[-1] = 1.0
    sc = recovery_scales(p)
    inter = RecoveryIntermediates(
        alpha_eps=sc.alpha_eps,
        r_eps=sc.r_eps,
        s_eps=sc.s_eps,
        t_eps=sc.t_eps,
        k_eps=sc.k_eps,
        w=w,
        z=z,
        w1=w1,
        w2=w2,
        phi=phi,
        interval_endpoints=interval,
    )
    return State(u=u, v=v), inter


@dataclass(frozen=True)
class RecoveryRow:
    eps: float
    eta: float
    n: int
    at_total: float
    ms_target: float
    gap: float
    v_l2_dist: float
    u_l2_dist: float
    compliant: bool


def gamma_limsup_table(
    target: JumpSpec,
    levels: list[tuple[float, float, int]],
    a0: float,
    init0: InitStrategy,
    opts: SolveOptions = SolveOptions(),
) -> list[RecoveryRow]:
    """Energy of the assembled recovery against the sharp limit, per level.

    ``levels`` lists (eps, eta, n_cells), strictly decreasing in eps; each
    level runs its own first-step solve with datum ``a0``.
    """
    eps_list = [lv[0] for lv in levels]
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ValueError("eps levels must be strictly decreasing")
    a1 = target.segments[-1].y_hi
    ms_target = ms_energy(target)
    rows: list[RecoveryRow] = []
    for eps, eta, n in levels:
        g = make_grid(target.length, n)
        p0 = ATParams(eps=eps, eta=eta, length=target.length, boundary_value=a0)
        report0 = solve_time0(p0, init0, g, opts)
        p1 = ATParams(eps=eps, eta=eta, length=target.length, boundary_value=float(a1))
        state, _ = assemble_recovery(target, report0, p1, g)
        breakdown = at_energy(state, p1, g)
        u_target = target.sample(g.nodes)
        rows.append(
            RecoveryRow(
                eps=eps,
                eta=eta,
                n=n,
                at_total=breakdown.total,
                ms_target=ms_target,
                gap=breakdown.total - ms_target,
                v_l2_dist=float(np.sqrt(integrate((state.v - 1.0) ** 2, g))),
                u_l2_dist=float(np.sqrt(integrate((state.u - u_target) ** 2, g))),
                compliant=bool(np.all(state.v <= report0.state.v)),
            )
        )
    return rows


__all__ = [
    "ResolutionWarning",
    "RecoveryScales",
    "RecoveryIntermediates",
    "RecoveryRow",
    "recovery_scales",
    "build_profiles",
    "build_cutoff",
    "build_w2",
    "assemble_recovery",
    "gamma_limsup_table",
]
