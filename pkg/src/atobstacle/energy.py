"""Problem parameters, states, and the two energies.

The regularized energy of a pair (u, v) on [0, L] is

    E(u, v) = int (eta + v^2) |u'|^2  +  int (1 - v)^2 / eps  +  int eps |v'|^2

discretized with midpoint quadrature on cells for the elastic and gradient
terms and trapezoid on nodes for the well term.  The elastic coefficient on a
cell is ``eta + (v_i^2 + v_{i+1}^2) / 2``; with that choice the u-solve and the
v-solve of :mod:`atobstacle.critical` each minimize this exact discrete
functional in their own variable, so alternate minimization decreases it
monotonically to machine precision.

The sharp limit energy of a displacement with jumps is

    int |u'|^2 + 2 * #(J_u united with the inherited crack set),

evaluated exactly on piecewise-affine descriptions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Grid1D, NodalField, cell_mean_square, derivative, integrate, require_nodal

# Points closer than this (times L) are identified when counting jump sets.
JUMP_IDENT_TOL = 1e-12


@dataclass(frozen=True)
class ATParams:
    """Regularization scales and boundary datum for one solve.

    ``boundary_value`` is the Dirichlet value of u at x = L (u(0) = 0 always);
    v = 1 at both ends.  Requires 0 < eta < eps regime (eta/eps < 1).
    """

    eps: float
    eta: float
    length: float
    boundary_value: float

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.eta <= 0.0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.eta / self.eps >= 1.0:
            raise ValueError(f"eta/eps must be < 1, got {self.eta / self.eps}")
        if self.length <= 0.0:
            raise ValueError(f"length must be positive, got {self.length}")


@dataclass(frozen=True)
class State:
    """The pair (u, v) as nodal fields."""

    u: NodalField
    v: NodalField


def validate_state(s: State, p: ATParams, g: Grid1D, tol: float = 1e-9) -> None:
    """Check sizes, v in [0, 1] and the Dirichlet data, within ``tol``."""
    u = require_nodal(s.u, g)
    v = require_nodal(s.v, g)
    if v.min() < -tol or v.max() > 1.0 + tol:
        raise ValueError("v leaves [0, 1]")
    if abs(u[0]) > tol * (1.0 + abs(p.boundary_value)):
        raise ValueError(f"u(0) = {u[0]} != 0")
    if abs(u[-1] - p.boundary_value) > tol * (1.0 + abs(p.boundary_value)):
        raise ValueError(f"u(L) = {u[-1]} != {p.boundary_value}")
    if abs(v[0] - 1.0) > tol or abs(v[-1] - 1.0) > tol:
        raise ValueError("v != 1 at an endpoint")


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    well: float
    grad: float
    total: float


def at_energy(s: State, p: ATParams, g: Grid1D) -> EnergyBreakdown:
    """Discrete energy breakdown of an admissible state."""
    u = require_nodal(s.u, g)
    v = require_nodal(s.v, g)
    h = g.spacing
    up = derivative(u, g)
    vp = derivative(v, g)
    coeff = p.eta + cell_mean_square(v, g)
    elastic = float(h * np.sum(coeff * up**2))
    grad = float(h * p.eps * np.sum(vp**2))
    well = integrate((1.0 - v) ** 2, g) / p.eps
    return EnergyBreakdown(elastic=elastic, well=well, grad=grad, total=elastic + well + grad)


@dataclass(frozen=True)
class Segment:
    """Affine piece of a limit displacement: y_lo at x_lo to y_hi at x_hi."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    @property
    def slope(self) -> float:
        return (self.y_hi - self.y_lo) / (self.x_hi - self.x_lo)


@dataclass(frozen=True)
class JumpSpec:
    """Piecewise-affine limit displacement with jump set and inherited crack.

    ``jump_points`` lists the discontinuities of u inside (0, L); ``gamma0``
    is the crack inherited from the first loading step, empty or {L/2}.
    Segments must tile [0, L] in order.
    """

    length: float
    jump_points: tuple[float, ...]
    gamma0: tuple[float, ...]
    segments: tuple[Segment, ...]

    def __post_init__(self):
        L = self.length
        tol = JUMP_IDENT_TOL * L
        object.__setattr__(self, "jump_points", tuple(sorted(self.jump_points)))
        for x in self.jump_points:
            if not (tol < x < L - tol):
                raise ValueError(f"jump point {x} not strictly inside (0, {L})")
        if self.gamma0 and (len(self.gamma0) > 1 or abs(self.gamma0[0] - L / 2) > tol):
            raise ValueError("gamma0 must be empty or {L/2}")
        if not self.segments:
            raise ValueError("at least one segment required")
        prev = 0.0
        for seg in self.segments:
            if seg.x_hi <= seg.x_lo:
                raise ValueError("segment with non-positive width")
            if abs(seg.x_lo - prev) > tol:
                raise ValueError("segments overlap or leave a gap")
            prev = seg.x_hi
        if abs(prev - L) > tol:
            raise ValueError("segments do not reach L")

    def sample(self, x: np.ndarray) -> np.ndarray:
        """Evaluate u at the points x (right-continuous at the jumps)."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for seg in self.segments:
            mask = (x >= seg.x_lo) & (x < seg.x_hi)
            out[mask] = seg.y_lo + seg.slope * (x[mask] - seg.x_lo)
        out[x >= self.segments[-1].x_hi] = self.segments[-1].y_hi
        return out

    def dist_to_free_jumps(self, x: np.ndarray) -> np.ndarray:
        """Distance to J_u minus gamma0; +inf when that set is empty."""
        tol = JUMP_IDENT_TOL * self.length
        pts = [xj for xj in self.jump_points if not any(abs(xj - gx) <= tol for gx in self.gamma0)]
        x = np.asarray(x, dtype=float)
        if not pts:
            return np.full_like(x, np.inf)
        return np.min(np.abs(x[:, None] - np.asarray(pts)[None, :]), axis=1)


def affine_target(length: float, a: float) -> JumpSpec:
    """The ramp 0 -> a with no jumps."""
    return JumpSpec(length, (), (), (Segment(0.0, length, 0.0, a),))


def step_target(length: float, a: float, jump_at: float, gamma0: tuple[float, ...] = ()) -> JumpSpec:
    """The step a * 1_[jump_at, L] with a single jump."""
    return JumpSpec(
        length,
        (jump_at,),
        gamma0,
        (Segment(0.0, jump_at, 0.0, 0.0), Segment(jump_at, length, a, a)),
    )


def ms_energy(j: JumpSpec) -> float:
    """Sharp limit energy: exact Dirichlet part plus 2 per distinct crack point."""
    dirichlet = sum(seg.slope**2 * (seg.x_hi - seg.x_lo) for seg in j.segments)
    pts = sorted(list(j.jump_points) + list(j.gamma0))
    tol = JUMP_IDENT_TOL * j.length
    count = 0
    prev = None
    for x in pts:
        if prev is None or x - prev > tol:
            count += 1
        prev = x
    return float(dirichlet + 2.0 * count)
