"""The v-subproblem: a tridiagonal linear complementarity problem.

Given the squared displacement gradient per cell, the phase field solves

    -eps v'' + (v - 1)/eps + v q = mu <= 0,   v <= obstacle,   mu (obstacle - v) = 0

with v = 1 at both ends, q the nodal average of the adjacent-cell values of
|u'|^2.  Discretely this is an LCP for the SPD M-matrix with stencil
[-eps/h^2, 2 eps/h^2 + 1/eps + q_i, -eps/h^2] and load 1/eps.  The solver is a
primal-dual active set iteration whose inner step is one banded solve; if the
active set cycles or stalls, a projected SOR loop takes over.

Residuals are certified in row-equilibrated form (rows scaled by h^2/eps): the
raw stencil norm is ~ eps/h^2, so at production resolutions a backward-stable
direct solve cannot push the unscaled residual to 1e-11, while the scaled
residual sits at machine level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .energy import ATParams
from .mesh import CellField, Grid1D, NodalField, require_cell, require_nodal

TOL_ACTIVE = 1e-10
TOL_MU = 1e-10
SOLVER_TOL = 1e-11


class SolverFailure(RuntimeError):
    """LCP iteration exhausted its budget; carries the final scaled residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (scaled residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class ObstacleSpec:
    """Upper obstacle for v: the all-ones field at the first step, the previous
    phase field afterwards.  Endpoints must equal 1."""

    obstacle: NodalField

    def validate(self, g: Grid1D) -> np.ndarray:
        obs = require_nodal(self.obstacle, g)
        if obs.min() < -1e-12 or obs.max() > 1.0 + 1e-12:
            raise ValueError("obstacle must take values in [0, 1]")
        if abs(obs[0] - 1.0) > 1e-12 or abs(obs[-1] - 1.0) > 1e-12:
            raise ValueError("obstacle must equal 1 at both endpoints")
        return obs


@dataclass(frozen=True)
class MultiplierField:
    """Nodal density of the constraint multiplier: the residual of the
    unconstrained stationarity equation, zero off the contact set."""

    mu: NodalField


@dataclass(frozen=True)
class ActiveSet:
    """Interior nodes split into contact (v = obstacle) and free."""

    contact_indices: np.ndarray
    free_indices: np.ndarray


def _assemble(q: np.ndarray, p: ATParams, g: Grid1D) -> tuple[float, np.ndarray, np.ndarray]:
    """Interior-row off-diagonal, diagonal and load of the density-form system."""
    h = g.spacing
    off = -p.eps / h**2
    diag = 2.0 * p.eps / h**2 + 1.0 / p.eps + q
    f = np.full(q.shape, 1.0 / p.eps)
    f[0] += p.eps / h**2  # Dirichlet v = 1 at x = 0
    f[-1] += p.eps / h**2  # and at x = L
    return off, diag, f


def _solve_pinned(off: float, diag: np.ndarray, f: np.ndarray, obs_int: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Banded solve with active rows replaced by the identity rows v_i = obs_i.

    The mixed system stays tridiagonal and strictly diagonally dominant, and
    its unique solution carries the pinned values into the free rows.
    """
    m = diag.size
    ab = np.zeros((3, m))
    ab[0, 1:] = off
    ab[1, :] = diag
    ab[2, :-1] = off
    rhs = f.copy()
    if active.any():
        idx = np.flatnonzero(active)
        ab[1, idx] = 1.0
        # banded storage: A[i, i+1] sits at ab[0, i+1], A[i, i-1] at ab[2, i-1]
        ab[2, idx[idx >= 1] - 1] = 0.0
        ab[0, idx[idx <= m - 2] + 1] = 0.0
        rhs[idx] = obs_int[idx]
    return solve_banded((1, 1), ab, rhs)


def _residual(off: float, diag: np.ndarray, f: np.ndarray, v_int: np.ndarray) -> np.ndarray:
    r = diag * v_int - f
    r[:-1] += off * v_int[1:]
    r[1:] += off * v_int[:-1]
    return r


def lcp_residual(r: np.ndarray, contact: np.ndarray, scale: float) -> float:
    """Scaled KKT defect: |r| on free nodes, positive part of r on contact."""
    worst_free = np.max(np.abs(r[~contact])) if (~contact).any() else 0.0
    worst_contact = np.max(np.maximum(r[contact], 0.0)) if contact.any() else 0.0
    return float(max(worst_free, worst_contact) * scale)


def _pgs(off: float, diag: np.ndarray, f: np.ndarray, obs_int: np.ndarray, v0: np.ndarray,
         scale: float, tol: float, max_sweeps: int = 100_000, omega: float = 1.5) -> np.ndarray:
    """Projected SOR fallback; slow but unconditionally convergent."""
    v = np.minimum(v0.copy(), obs_int)
    m = v.size
    for sweep in range(max_sweeps):
        for i in range(m):
            s = f[i]
            if i > 0:
                s -= off * v[i - 1]
            if i < m - 1:
                s -= off * v[i + 1]
            v[i] = min(v[i] + omega * (s / diag[i] - v[i]), obs_int[i])
        if sweep % 20 == 19 or sweep == max_sweeps - 1:
            r = _residual(off, diag, f, v)
            contact = obs_int - v <= TOL_ACTIVE
            if lcp_residual(r, contact, scale) <= tol:
                return v
    r = _residual(off, diag, f, v)
    contact = obs_int - v <= TOL_ACTIVE
    raise SolverFailure("projected SOR did not converge", lcp_residual(r, contact, scale))


def solve_v(
    u_prime_sq: CellField,
    obs: ObstacleSpec,
    p: ATParams,
    g: Grid1D,
    v_init: NodalField | None = None,
    max_iters: int | None = None,
) -> tuple[NodalField, MultiplierField, ActiveSet]:
    """Solve the obstacle problem for v; returns (v, multiplier, active set).

    ``v_init`` only seeds the active-set guess (warm start); the result is the
    exact LCP solution independent of it.  Raises :class:`SolverFailure` when
    neither the active-set iteration nor the SOR fallback certifies the KKT
    residuals.
    """
    ups = require_cell(u_prime_sq, g)
    if ups.min() < 0.0:
        raise ValueError("u_prime_sq must be nonnegative")
    obs_full = obs.validate(g)
    obs_int = obs_full[1:-1]
    q = 0.5 * (ups[:-1] + ups[1:])
    off, diag, f = _assemble(q, p, g)
    scale = g.spacing**2 / p.eps
    if max_iters is None:
        # the active set can peel one layer per iteration in the worst case
        max_iters = q.size + 20

    if v_init is not None:
        v_int = np.minimum(require_nodal(v_init, g)[1:-1], obs_int)
        lam = -np.minimum(_residual(off, diag, f, v_int), 0.0)
        active = lam + (v_int - obs_int) > 0.0
    else:
        active = np.zeros(q.size, dtype=bool)

    seen: set[bytes] = set()
    v_int = obs_int.copy()
    settled = False
    for _ in range(max_iters):
        v_int = _solve_pinned(off, diag, f, obs_int, active)
        r = _residual(off, diag, f, v_int)
        # KKT acceptance: free rows are solved exactly, so only primal
        # feasibility off the active set and the multiplier sign on it can
        # fail.  Tolerated slack here stops the classic chattering of
        # borderline nodes (mu ~ 0 and v ~ obstacle at the same node).
        viol = float(np.max(v_int - obs_int, initial=0.0, where=~active)) if (~active).any() else 0.0
        worst_sign = float(np.max(r, initial=0.0, where=active)) * scale if active.any() else 0.0
        if viol <= 1e-12 and worst_sign <= SOLVER_TOL:
            settled = True
            break
        lam = np.where(active, -r, 0.0)
        new_active = lam + (v_int - obs_int) > 0.0
        if np.array_equal(new_active, active):
            settled = True
            break
        key = new_active.tobytes()
        if key in seen:
            break
        seen.add(key)
        active = new_active
    if not settled:
        v_int = _pgs(off, diag, f, obs_int, v_int, scale, SOLVER_TOL)

    v = np.empty(g.node_count)
    v[0] = v[-1] = 1.0
    v[1:-1] = np.clip(v_int, 0.0, obs_int)  # exact obstacle compliance

    r = _residual(off, diag, f, v[1:-1])
    contact = obs_int - v[1:-1] <= TOL_ACTIVE
    resid = lcp_residual(r, contact, scale)
    if resid > SOLVER_TOL:
        v[1:-1] = np.clip(_pgs(off, diag, f, obs_int, v[1:-1], scale, SOLVER_TOL), 0.0, obs_int)
        r = _residual(off, diag, f, v[1:-1])
        contact = obs_int - v[1:-1] <= TOL_ACTIVE
        resid = lcp_residual(r, contact, scale)
        if resid > SOLVER_TOL:
            raise SolverFailure("obstacle solve could not certify the KKT residual", resid)

    mu = np.zeros(g.node_count)
    mu[1:-1] = np.where(contact, r, 0.0)
    interior = np.arange(1, g.node_count - 1)
    return (
        v,
        MultiplierField(mu=mu),
        ActiveSet(contact_indices=interior[contact], free_indices=interior[~contact]),
    )


def lcp_state_residual(
    v: NodalField, u_prime_sq: CellField, obs: ObstacleSpec, p: ATParams, g: Grid1D
) -> tuple[float, NodalField, np.ndarray]:
    """Scaled KKT residual of a given v, with its multiplier and contact mask."""
    ups = require_cell(u_prime_sq, g)
    obs_full = obs.validate(g)
    q = 0.5 * (ups[:-1] + ups[1:])
    off, diag, f = _assemble(q, p, g)
    v = require_nodal(v, g)
    r = _residual(off, diag, f, v[1:-1])
    contact = obs_full[1:-1] - v[1:-1] <= TOL_ACTIVE
    mu = np.zeros(g.node_count)
    mu[1:-1] = np.where(contact, r, 0.0)
    return lcp_residual(r, contact, g.spacing**2 / p.eps), mu, contact
