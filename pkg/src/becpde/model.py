"""Spatial right-hand side of the regularized problem, in conservative flux form.

The evolution is u_t = (x+eps)^(-beta) * (J)_xx with the nonlinear flux

    J = -g(x) f(u)^n u_xx + 2 g(x) f(u)^(n-1) u_x^2,

where f is a smooth truncation clamp that equals the identity on [1/k, k].
Boundary conditions u_x = u_xxx = 0 are imposed through even ghost reflection
(two mirror nodes per side); the flux gradient then vanishes discretely at
both endpoints, and applying the 3-point second difference to nodal J makes
the weighted mass sum telescope to zero exactly, step after step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, interior_d1, interior_d2
from .params import Params
from .regularization import WeightTables, cutoff, weight_tables


def tables_for(params: Params, grid: Grid) -> WeightTables:
    """Build the weight tables a state needs, from validated parameters."""
    profile = cutoff(params.eps, params.L)
    return weight_tables(profile, params.alpha, params.beta, params.gamma, grid)


@dataclass(frozen=True)
class Truncation:
    """Smooth nondecreasing clamp; identity on [1/k, k], pinned to
    [1/(2k), 2k] on all of R."""

    k: float

    def __post_init__(self):
        if not self.k >= 1.0:
            raise ValueError(f"truncation level k must be >= 1, got {self.k}")


def f_k(s: np.ndarray | float, k: float) -> np.ndarray | float:
    """Truncation clamp: s on [1/k, k], cubic Hermite blends to the constants
    1/(2k) below and 2k above, C1 everywhere and monotone."""
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.where(s_arr >= 2.0 * k, 2.0 * k, s_arr)
    out = np.where(s_arr <= 0.5 / k, 0.5 / k, out)

    m = (s_arr > k) & (s_arr < 2.0 * k)
    if np.any(m):
        t = (s_arr[m] - k) / k
        out[m] = k * (-t**3 + t**2 + t + 1.0)
    m = (s_arr < 1.0 / k) & (s_arr > 0.5 / k)
    if np.any(m):
        t = (2.0 * k) * s_arr[m] - 1.0
        out[m] = (-(t**3) + 2.0 * t**2 + 1.0) / (2.0 * k)
    return float(out[0]) if scalar else out


def f_k_prime(s: np.ndarray | float, k: float) -> np.ndarray | float:
    """Derivative of the truncation clamp (1 on the identity region, 0 on the
    pinned tails)."""
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros_like(s_arr)
    out[(s_arr >= 1.0 / k) & (s_arr <= k)] = 1.0

    m = (s_arr > k) & (s_arr < 2.0 * k)
    if np.any(m):
        t = (s_arr[m] - k) / k
        out[m] = -3.0 * t**2 + 2.0 * t + 1.0
    m = (s_arr < 1.0 / k) & (s_arr > 0.5 / k)
    if np.any(m):
        t = (2.0 * k) * s_arr[m] - 1.0
        out[m] = -3.0 * t**2 + 4.0 * t
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class State:
    """Nodal solution at one time; immutable by convention."""

    t: float
    u: np.ndarray
    params: Params
    tables: WeightTables

    @property
    def grid(self) -> Grid:
        return self.tables.grid


def initial_state(params: Params, grid: Grid, u0: np.ndarray, tables: WeightTables | None = None) -> State:
    if tables is None:
        tables = tables_for(params, grid)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != grid.x.shape:
        raise ValueError(f"u0 has shape {u0.shape}, grid has {grid.x.shape}")
    return State(t=0.0, u=u0, params=params, tables=tables)


def ghost_extend(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Even reflection with two ghost nodes per side (u_{-j} = u_j mirrored).

    Together with the mirror-image ghost positions this makes the discrete
    first and third derivatives vanish at both endpoints.
    """
    u = np.asarray(u, dtype=float)
    return np.concatenate((u[2:0:-1], u, u[-2:-4:-1]))


def ghost_derivatives(u: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(u_x, u_xx, u_xxx) at all nodes, via ghost-extended stencils."""
    xg = grid.x_ext2
    uext = ghost_extend(u, grid)
    du_w = interior_d1(xg, uext)  # covers nodes -1 .. N+1
    d2u_w = interior_d2(xg, uext)
    du = du_w[1:-1]
    d2u = d2u_w[1:-1]
    d3u = interior_d1(xg[1:-1], d2u_w)
    return du, d2u, d3u


def _reflect1(values: np.ndarray) -> np.ndarray:
    # one even-reflected ghost per side
    return np.concatenate((values[1:2], values, values[-2:-1]))


def flux_nodal(
    u: np.ndarray, tables: WeightTables, n: float, trunc: Truncation
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(J, u_x, u_xx) at all nodes; the minimal work the time stepper needs."""
    xg = tables.grid.x_ext2
    uext = ghost_extend(u, tables.grid)
    du = interior_d1(xg, uext)[1:-1]
    d2u = interior_d2(xg, uext)[1:-1]
    fk = f_k(u, trunc.k)
    J = -tables.g * fk**n * d2u + 2.0 * tables.g * fk ** (n - 1.0) * du * du
    return J, du, d2u


def rhs_nodal(u: np.ndarray, tables: WeightTables, n: float, trunc: Truncation) -> np.ndarray:
    """(x+eps)^(-beta) * D2(J) with even flux ghosts (discrete J_x = 0 at the ends)."""
    J, _, _ = flux_nodal(u, tables, n, trunc)
    xg1 = tables.grid.x_ext2[1:-1]
    d2J = interior_d2(xg1, _reflect1(J))
    return d2J / tables.wbeta


@dataclass(frozen=True)
class FluxField:
    """Nodal flux with its gradient computed two independent ways.

    ``Jx`` is the term-by-term expansion of the flux derivative (chain rule
    through the truncation clamp); ``div_J`` is the discrete derivative of
    the nodal flux itself.  Both vanish at the endpoints under the ghost
    policy; their interior mismatch measures stencil consistency.
    """

    J: np.ndarray
    Jx: np.ndarray
    div_J: np.ndarray


def flux(state: State, trunc: Truncation | None = None) -> FluxField:
    if trunc is None:
        trunc = Truncation(state.params.k)
    tbl, n = state.tables, state.params.n
    u = state.u
    du, d2u, d3u = ghost_derivatives(u, tbl.grid)
    fk = f_k(u, trunc.k)
    fkp = f_k_prime(u, trunc.k)
    g, gx = tbl.g, tbl.gx
    J = -g * fk**n * d2u + 2.0 * g * fk ** (n - 1.0) * du * du
    Jx = (
        -gx * fk**n * d2u
        - g * n * fk ** (n - 1.0) * fkp * du * d2u
        - g * fk**n * d3u
        + 2.0 * gx * fk ** (n - 1.0) * du * du
        + 2.0 * g * (n - 1.0) * fk ** (n - 2.0) * fkp * du**3
        + 4.0 * g * fk ** (n - 1.0) * du * d2u
    )
    xg1 = tbl.grid.x_ext2[1:-1]
    div_J = interior_d1(xg1, _reflect1(J))
    return FluxField(J=J, Jx=Jx, div_J=div_J)


def flux_gradient_consistency(state: State, trunc: Truncation | None = None) -> float:
    """Max-norm defect between the expanded and divergence forms of J_x."""
    field = flux(state, trunc)
    return float(np.max(np.abs(field.Jx - field.div_J)))


def rhs(state: State, trunc: Truncation | None = None) -> np.ndarray:
    """Nodal time derivative of the state."""
    if trunc is None:
        trunc = Truncation(state.params.k)
    return rhs_nodal(state.u, state.tables, state.params.n, trunc)
