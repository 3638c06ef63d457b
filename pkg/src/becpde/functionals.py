"""Weighted integral functionals tracked along a run.

Everything here is a pure function of a State (or of plain arrays): the
conserved weighted mass, the gradient energy y(t) = int (x+eps)^gamma u_x^2,
the five dissipation integrals paired with y in the a priori estimate, the
sup and Holder bounds with their proof-derived constants, the dead-core
functional int u^-2, the physical energy/entropy pair, and the scalar
comparison ODE y' = c5 + c6 y^((n+2)/2) whose first-passage time gives a
computable local-existence horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import quad
from .model import State, ghost_derivatives
from .params import holder_exponents


def weighted_mass(state: State) -> float:
    """int (x+eps)^beta u dx - conserved exactly by the flux-form stepper."""
    return quad(state.tables.wbeta, state.u, state.grid)


def grad_energy(state: State) -> float:
    """y(t) = int (x+eps)^gamma u_x^2 dx with the ghost policy at the ends."""
    du, _, _ = ghost_derivatives(state.u, state.grid)
    return quad(state.tables.wgamma, du * du, state.grid)


def dissipation_terms(state: State) -> tuple[float, float, float, float, float]:
    """The five instantaneous dissipation integrands, in estimate order:

    weight (x+eps)^(alpha-beta+gamma):   u^n u_xxx^2,  u^(n-2) u_x^2 u_xx^2,  u^(n-4) u_x^6
    weight (x+eps)^(alpha-beta+gamma-2): u^n u_xx^2,   u^(n-2) u_x^4

    Requires a strictly positive state (negative powers of u appear).
    """
    u = state.u
    if np.min(u) <= 0.0:
        raise DomainError("dissipation terms need a strictly positive state")
    p = state.params
    du, d2u, d3u = ghost_derivatives(u, state.grid)
    e = p.alpha - p.beta + p.gamma
    xe = state.grid.x + p.eps
    w0 = xe**e
    w2 = xe ** (e - 2.0)
    g = state.grid
    return (
        quad(w0, u**p.n * d3u**2, g),
        quad(w0, u ** (p.n - 2.0) * du**2 * d2u**2, g),
        quad(w0, u ** (p.n - 4.0) * du**6, g),
        quad(w2, u**p.n * d2u**2, g),
        quad(w2, u ** (p.n - 2.0) * du**4, g),
    )


def holder_proof_constant(gamma: float, L: float) -> float:
    """Constant c with |u(x2)-u(x1)| <= c * sqrt(int (x+eps)^gamma u_x^2) * |x2-x1|^theta.

    For gamma in [0,1) it is (1/(1-gamma))^(1/2) (the map x -> x^(1-gamma) is
    Holder with constant 1); for gamma < 0 the Lipschitz constant of
    x -> x^(1-gamma) on [0, L+1] enters instead, giving ((L+1)^|gamma|)^(1/2).
    """
    if not gamma < 1.0:
        raise DomainError(f"gamma must be < 1, got {gamma}")
    if gamma >= 0.0:
        return math.sqrt(1.0 / (1.0 - gamma))
    return math.sqrt((L + 1.0) ** (-gamma))


def sup_bound_constant(beta: float, gamma: float, L: float) -> float:
    """Constant c with sup|u| <= c*(int (x+eps)^beta |u| + sqrt(int (x+eps)^gamma u_x^2)).

    Assembled from the pigeonhole step (some x0 in (L/2, L) has weighted value
    at most 2B/L) and the Holder estimate carrying u from x0 to any x, which
    costs a span factor |x - x0|^theta <= max(1, L)^theta.
    """
    c1 = (2.0 / L) * max((L / 2.0) ** (-beta), (L + 1.0) ** (-beta))
    theta = min(0.5, 0.5 * (1.0 - gamma))
    span = max(1.0, L) ** theta
    return max(1.0, c1) * (1.0 + span * holder_proof_constant(gamma, L))


def sup_estimate(state: State) -> float:
    """A priori sup bound from mass and gradient energy alone."""
    c = sup_bound_constant(state.params.beta, state.params.gamma, state.params.L)
    return c * (weighted_mass(state) + math.sqrt(max(grad_energy(state), 0.0)))


def holder_modulus_values(x: np.ndarray, u: np.ndarray, theta: float) -> float:
    """max over node pairs of |u_i - u_j| / |x_i - x_j|^theta."""
    if not 0.0 < theta <= 0.5:
        raise DomainError(f"theta must lie in (0, 1/2], got {theta}")
    if len(x) > 2049:
        raise DomainError(f"pairwise modulus limited to 2049 nodes, got {len(x)}")
    ii, jj = np.triu_indices(len(x), k=1)
    num = np.abs(u[ii] - u[jj])
    den = np.abs(x[ii] - x[jj]) ** theta
    return float(np.max(num / den))


def holder_modulus(state: State, theta: float | None = None) -> float:
    if theta is None:
        theta = state.params.derived.theta
    x, u = state.grid.x, state.u
    if len(x) > 2049:
        idx = np.linspace(0, len(x) - 1, 2049).round().astype(int)
        x, u = x[idx], u[idx]
    return holder_modulus_values(x, u, theta)


def deadcore_functional(state: State) -> float:
    """int u^-2 dx; stays bounded on finite horizons unless a dead core forms."""
    if np.min(state.u) <= 0.0:
        raise DomainError("dead-core functional needs a strictly positive state")
    return quad(np.ones_like(state.u), state.u**-2.0, state.grid)


def temporal_modulus(times, states, theta_time: float) -> float:
    """Measured Holder constant in time:
    max over snapshot pairs and nodes of |u(x,t2) - u(x,t1)| / |t2-t1|^theta_time.

    The expected exponent is theta/(2*theta + 3) with theta the spatial one;
    this diagnostic lets a run report how its trajectory actually scales.
    """
    if not 0.0 < theta_time < 1.0:
        raise DomainError(f"theta_time must lie in (0, 1), got {theta_time}")
    times = [float(t) for t in times]
    if len(times) != len(states) or len(times) < 2:
        raise DomainError("need at least two aligned snapshots")
    worst = 0.0
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            dt = times[j] - times[i]
            if dt <= 0.0:
                raise DomainError("snapshot times must be strictly increasing")
            jump = float(np.max(np.abs(states[j] - states[i])))
            worst = max(worst, jump / dt**theta_time)
    return worst


def physical_diagnostics(state: State) -> tuple[float, float]:
    """(kinetic energy, entropy) of the physical model, with eps-free x weights.

    E = int x^(3/2) u dx and S = int ((1+u)log(1+u) - u log u) x^(1/2) dx;
    the entropy integrand extends continuously by 0 at u = 0.
    """
    x, u = state.grid.x, state.u
    energy = quad(x**1.5, u, state.grid)
    s = np.zeros_like(u)
    pos = u > 0.0
    up = u[pos]
    s[pos] = (1.0 + up) * np.log1p(up) - up * np.log(up)
    entropy = quad(x**0.5, s, state.grid)
    return energy, entropy


@dataclass(frozen=True)
class OdeBound:
    """First-passage data for the comparison ODE y' = c5 + c6 y^((n+2)/2)."""

    T0: float
    ts: np.ndarray
    ys: np.ndarray


def ode_bound(A: float, c5: float, c6: float, n: float, dt: float = 1e-5) -> OdeBound:
    """Integrate the comparison ODE from y(0) = A until y = A+1 or t = 1.

    RK4 with fixed step; the crossing time is refined by linear interpolation
    inside the bracketing step, keeping the error far below the step size.
    T0 = min(1, first crossing time).  If the growth term overflows before a
    crossing is bracketed, the last finite time is returned.
    """
    if A < 0.0 or c5 < 0.0 or c6 < 0.0:
        raise DomainError("A, c5, c6 must be nonnegative")
    power = 0.5 * (n + 2.0)

    def rate(y: float) -> float:
        try:
            return c5 + c6 * y**power
        except OverflowError:
            return math.inf

    target = A + 1.0
    t, y = 0.0, float(A)
    ts = [t]
    ys = [y]
    stride = 100  # curve subsampling; every step is still integrated
    step = 0
    T0 = 1.0
    while t < 1.0:
        h = min(dt, 1.0 - t)
        k1 = rate(y)
        k2 = rate(y + 0.5 * h * k1)
        k3 = rate(y + 0.5 * h * k2)
        k4 = rate(y + h * k3)
        y_new = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_new = t + h
        if not math.isfinite(y_new):
            T0 = min(1.0, t)
            break
        if y_new >= target:
            frac = (target - y) / (y_new - y) if y_new > y else 1.0
            T0 = min(1.0, t + frac * h)
            ts.append(T0)
            ys.append(target)
            break
        t, y = t_new, y_new
        step += 1
        if step % stride == 0:
            ts.append(t)
            ys.append(y)
    else:
        T0 = 1.0
        ts.append(t)
        ys.append(y)
    return OdeBound(T0=float(T0), ts=np.asarray(ts), ys=np.asarray(ys))


def fit_ode_constants(ts: np.ndarray, ys: np.ndarray, n: float) -> tuple[float, float]:
    """Least-squares fit of y' against 1 and y^((n+2)/2), clamped nonnegative.

    Intended for reporting only: turns a measured gradient-energy series into
    usable (c5, c6) inputs for ode_bound.
    """
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(ts) < 3:
        raise DomainError("need at least 3 samples to fit the comparison ODE")
    dy = np.gradient(ys, ts)
    a = np.column_stack([np.ones_like(ys), ys ** (0.5 * (n + 2.0))])
    coef, *_ = np.linalg.lstsq(a, dy, rcond=None)
    return float(max(coef[0], 0.0)), float(max(coef[1], 0.0))


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-snapshot values of every tracked functional."""

    t: float
    mass_beta: float
    grad_energy: float
    dissipation: tuple[float, float, float, float, float]
    sup_u: float
    sup_bound: float
    holder_C: float
    deadcore: float
    energy: float
    entropy: float


def make_record(state: State) -> DiagnosticsRecord:
    """Evaluate all diagnostics on one state.

    Positivity-only functionals degrade gracefully on states touching zero
    (inf for the dead-core functional, nan for the dissipation integrals)
    instead of aborting a run that is still producing data.
    """
    positive = bool(np.min(state.u) > 0.0)
    energy, entropy = physical_diagnostics(state)
    theta, _ = holder_exponents(state.params.gamma)
    return DiagnosticsRecord(
        t=state.t,
        mass_beta=weighted_mass(state),
        grad_energy=grad_energy(state),
        dissipation=dissipation_terms(state) if positive else (math.nan,) * 5,
        sup_u=float(np.max(state.u)),
        sup_bound=sup_estimate(state),
        holder_C=holder_modulus(state, theta),
        deadcore=deadcore_functional(state) if positive else math.inf,
        energy=energy,
        entropy=entropy,
    )
