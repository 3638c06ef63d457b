"""Implicit time integration with event detection.

Implicit Euler is used throughout: the operator is fourth order and
degenerate, so L-stability matters far more than formal order.  Each step
solves  v - u - dt*rhs(v) = 0  by damped Newton.  The Jacobian of rhs has
stencil radius 2 (pentadiagonal), so it is assembled with 5-color finite
differencing - five rhs evaluations regardless of N - and factored with a
banded LU solve.

Runs terminate with one of four events: Completed, Blowup (sup-norm escape,
or step collapse while the sup grows monotonically), DeadCore (min u below
the truncation floor), or StepFailure (step collapse without the blow-up
signature).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import functionals
from .errors import DomainError
from .grid import Grid
from .model import State, Truncation, rhs_nodal, tables_for
from .params import Params, RawParams, validate

COMPLETED = "Completed"
BLOWUP = "Blowup"
DEADCORE = "DeadCore"
STEP_FAILURE = "StepFailure"

_BANDWIDTH = 2  # stencil radius of rhs: D2 over nodal J over {D1, D2} of u
_NCOLORS = 2 * _BANDWIDTH + 1


@dataclass(frozen=True)
class StepControl:
    """Time-step and Newton controls.

    ``u_floor`` defaults (when None) to 1/(2k), the guaranteed floor of the
    truncation clamp: crossing it means the truncation is actively distorting
    the dynamics, which we surface as a DeadCore event.
    """

    dt_init: float = 1e-7
    dt_min: float = 1e-14
    dt_max: float = 1e-2
    newton_tol: float = 1e-10
    newton_max_iter: int = 12
    safety: float = 1.3
    u_floor: float | None = None
    u_ceil: float = 1e6

    def __post_init__(self):
        if not 0.0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise DomainError("need 0 < dt_min <= dt_init <= dt_max")
        if not self.newton_tol > 0.0:
            raise DomainError("newton_tol must be positive")
        if not 1.0 < self.safety <= 1.5:
            raise DomainError("safety factor must lie in (1, 1.5]")
        floor = self.u_floor if self.u_floor is not None else 0.0
        if not floor < self.u_ceil:
            raise DomainError("u_floor must be below u_ceil")

    def resolved_floor(self, params: Params) -> float:
        return self.u_floor if self.u_floor is not None else 0.5 / params.k


@dataclass(frozen=True)
class StopEvent:
    kind: str
    t_event: float
    detail: str = ""


@dataclass(frozen=True)
class StepReject:
    reason: str
    residual: float
    iterations: int


@dataclass
class Trajectory:
    """Strided snapshots plus aligned diagnostics, ending in a StopEvent."""

    params: Params
    control: StepControl
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    records: list[functionals.DiagnosticsRecord] = field(default_factory=list)
    event: StopEvent | None = None
    steps_accepted: int = 0
    steps_rejected: int = 0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def rhs_jacobian_banded(
    u: np.ndarray, tables, n: float, trunc: Truncation, base: np.ndarray | None = None
) -> np.ndarray:
    """Pentadiagonal Jacobian of rhs in LAPACK banded layout (5, len(u)).

    Forward differencing over 5 node colors: columns of the same color are at
    least 5 apart, so their row supports (radius 2) cannot overlap and one
    perturbed rhs evaluation recovers a full color of columns.
    """
    m = len(u)
    r0 = rhs_nodal(u, tables, n, trunc) if base is None else base
    ab = np.zeros((_NCOLORS, m))
    sqeps = math.sqrt(np.finfo(float).eps)
    for color in range(_NCOLORS):
        cols = np.arange(color, m, _NCOLORS)
        delta = sqeps * (1.0 + np.abs(u[cols]))
        up = u.copy()
        up[cols] += delta
        rp = rhs_nodal(up, tables, n, trunc)
        for off in range(-_BANDWIDTH, _BANDWIDTH + 1):
            rows = cols + off
            ok = (rows >= 0) & (rows < m)
            ab[_BANDWIDTH + off, cols[ok]] = (rp[rows[ok]] - r0[rows[ok]]) / delta[ok]
    return ab


def rhs_jacobian_dense(u: np.ndarray, tables, n: float, trunc: Truncation) -> np.ndarray:
    """Brute-force dense finite-difference Jacobian; the oracle the colored
    assembly is checked against."""
    m = len(u)
    r0 = rhs_nodal(u, tables, n, trunc)
    jac = np.zeros((m, m))
    sqeps = math.sqrt(np.finfo(float).eps)
    for j in range(m):
        delta = sqeps * (1.0 + abs(u[j]))
        up = u.copy()
        up[j] += delta
        jac[:, j] = (rhs_nodal(up, tables, n, trunc) - r0) / delta
    return jac


def banded_to_dense(ab: np.ndarray) -> np.ndarray:
    m = ab.shape[1]
    out = np.zeros((m, m))
    for off in range(-_BANDWIDTH, _BANDWIDTH + 1):
        for j in range(m):
            i = j + off
            if 0 <= i < m:
                out[i, j] = ab[_BANDWIDTH + off, j]
    return out


def step_implicit(
    state: State, dt: float, control: StepControl, trunc: Truncation | None = None
) -> State | StepReject:
    """One implicit-Euler step; returns the new state or a StepReject.

    Acceptance requires the Newton residual inf-norm to fall below
    newton_tol*(1 + |u|_inf) and the iterate to stay above -1e-12; accepted
    iterates are then clipped to be nonnegative.
    """
    if trunc is None:
        trunc = Truncation(state.params.k)
    u = state.u
    tables, n = state.tables, state.params.n
    tol = control.newton_tol * (1.0 + float(np.max(np.abs(u))))

    v = u.copy()
    res_v = 0.0
    fv = np.zeros_like(u)
    for it in range(control.newton_max_iter):
        rv = rhs_nodal(v, tables, n, trunc)
        fv = v - u - dt * rv
        res_v = float(np.max(np.abs(fv)))
        if not math.isfinite(res_v):
            return StepReject("non-finite residual", res_v, it)
        if res_v <= tol:
            if float(np.min(v)) < -1e-12:
                return StepReject("negative iterate", res_v, it)
            return State(t=state.t + dt, u=np.maximum(v, 0.0), params=state.params, tables=tables)
        ab = rhs_jacobian_banded(v, tables, n, trunc, base=rv)
        m_ab = -dt * ab
        m_ab[_BANDWIDTH, :] += 1.0
        try:
            delta = solve_banded((_BANDWIDTH, _BANDWIDTH), m_ab, -fv)
        except np.linalg.LinAlgError:
            return StepReject("singular Newton matrix", res_v, it)
        step_ok = False
        s = 1.0
        for _ in range(9):
            vt = v + s * delta
            ft = vt - u - dt * rhs_nodal(vt, tables, n, trunc)
            res_t = float(np.max(np.abs(ft)))
            if math.isfinite(res_t) and res_t <= (1.0 - 1e-4 * s) * res_v:
                v = vt
                step_ok = True
                break
            s *= 0.5
        if not step_ok:
            return StepReject("newton line search stalled", res_v, it)
    # one last residual check after the final update
    fv = v - u - dt * rhs_nodal(v, tables, n, trunc)
    res_v = float(np.max(np.abs(fv)))
    if res_v <= tol and float(np.min(v)) >= -1e-12:
        return State(t=state.t + dt, u=np.maximum(v, 0.0), params=state.params, tables=tables)
    return StepReject("newton did not converge", res_v, control.newton_max_iter)


def _check_events(u: np.ndarray, t: float, floor: float, ceil: float) -> StopEvent | None:
    sup = float(np.max(u))
    inf = float(np.min(u))
    if sup > ceil:
        return StopEvent(BLOWUP, t, f"sup u = {sup:.6g} exceeded ceiling {ceil:.6g}")
    if inf < floor:
        return StopEvent(DEADCORE, t, f"min u = {inf:.6g} fell below floor {floor:.6g}")
    return None


def blowup_signature(sup_history) -> bool:
    """Step collapse counts as blow-up only when the sup-norm grew strictly
    over the last 10 accepted steps; otherwise it is a plain solver failure."""
    tail = list(sup_history)[-10:]
    return len(tail) == 10 and all(b > a for a, b in zip(tail, tail[1:]))


def run(
    u0: np.ndarray,
    params: Params,
    control: StepControl,
    t_end: float,
    *,
    grid: Grid,
    tables=None,
    snapshot_stride: int = 1,
    snap_times: np.ndarray | None = None,
) -> Trajectory:
    """Advance from u0 to t_end with step halving/growth and event checks.

    Snapshots are recorded every ``snapshot_stride`` accepted steps (always
    including t = 0 and the final state); if ``snap_times`` is given, the
    stepper additionally lands on those times exactly and records there,
    which is what makes trajectories comparable across runs.
    """
    if t_end <= 0.0:
        raise DomainError("t_end must be positive")
    if snapshot_stride < 1:
        raise DomainError("snapshot_stride must be >= 1")
    if tables is None:
        tables = tables_for(params, grid)
    trunc = Truncation(params.k)
    floor = control.resolved_floor(params)

    state = State(t=0.0, u=np.asarray(u0, dtype=float).copy(), params=params, tables=tables)
    traj = Trajectory(params=params, control=control)

    targets: list[float] = []
    if snap_times is not None:
        targets = [float(t) for t in np.sort(np.asarray(snap_times)) if 0.0 < t <= t_end]
    t_tol = 1e-12 * max(1.0, t_end)

    def record(st: State) -> None:
        traj.times.append(st.t)
        traj.states.append(st.u.copy())
        traj.records.append(functionals.make_record(st))

    record(state)
    ev = _check_events(state.u, 0.0, floor, control.u_ceil)
    if ev is not None:
        traj.event = ev
        return traj

    dt_ctrl = control.dt_init
    consecutive = 0
    sup_history: list[float] = [float(np.max(state.u))]
    since_snapshot = 0

    while state.t < t_end - t_tol:
        next_target = t_end
        for tgt in targets:
            if tgt > state.t + t_tol:
                next_target = min(next_target, tgt)
                break
        dt_try = min(dt_ctrl, next_target - state.t)
        result = step_implicit(state, dt_try, control, trunc)
        if isinstance(result, StepReject):
            traj.steps_rejected += 1
            consecutive = 0
            dt_ctrl *= 0.5
            if dt_ctrl < control.dt_min:
                kind = BLOWUP if blowup_signature(sup_history) else STEP_FAILURE
                traj.event = StopEvent(
                    kind,
                    state.t,
                    f"dt collapsed below {control.dt_min:.3g} ({result.reason}, "
                    f"residual {result.residual:.3g})",
                )
                if traj.times[-1] != state.t:
                    record(state)
                return traj
            continue

        state = result
        traj.steps_accepted += 1
        consecutive += 1
        since_snapshot += 1
        sup_history.append(float(np.max(state.u)))
        if len(sup_history) > 11:
            sup_history.pop(0)

        on_target = any(abs(state.t - tgt) <= t_tol for tgt in targets)
        at_end = state.t >= t_end - t_tol
        if since_snapshot >= snapshot_stride or on_target or at_end:
            record(state)
            since_snapshot = 0

        ev = _check_events(state.u, state.t, floor, control.u_ceil)
        if ev is not None:
            traj.event = ev
            if traj.times[-1] != state.t:
                record(state)
            return traj

        if consecutive >= 3:
            dt_ctrl = min(dt_ctrl * control.safety, control.dt_max)
            consecutive = 0

    if traj.times[-1] != state.t:
        record(state)
    traj.event = StopEvent(COMPLETED, state.t)
    return traj


@dataclass(frozen=True)
class ContinuationReport:
    """Pairwise sup-norm distances along a decreasing regularization ladder.

    ``trajectories`` is populated on request so artifact writers can reuse
    the runs instead of integrating the ladder twice.
    """

    eps_list: tuple[float, ...]
    snap_times: tuple[float, ...]
    distances: tuple[float, ...]
    holder_moduli: tuple[float, ...]
    events: tuple[StopEvent, ...]
    cauchy: bool
    trajectories: tuple[Trajectory, ...] = ()


def continuation(
    u0: np.ndarray,
    params: Params,
    eps_list,
    control: StepControl,
    t_end: float,
    *,
    grid: Grid,
    n_snap: int = 9,
    keep_trajectories: bool = False,
) -> ContinuationReport:
    """Run the same initial state for each eps and compare at shared times.

    d_j = max over snapshot times of |u_{eps_j} - u_{eps_{j+1}}|_inf; the
    report flags whether the sequence is strictly decreasing (Cauchy trend).
    Repeated eps values are allowed (their distance is 0 by determinism);
    increases are not.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise DomainError("eps_list must not be empty")
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be nonincreasing")
    snap_times = np.linspace(0.0, t_end, n_snap + 1)[1:]

    runs: list[Trajectory] = []
    moduli: list[float] = []
    for eps in eps_list:
        p_eps = validate(
            RawParams(
                n=params.n, alpha=params.alpha, beta=params.beta, gamma=params.gamma,
                L=params.L, eps=eps, k=params.k, N=params.N,
            )
        )
        traj = run(
            u0, p_eps, control, t_end,
            grid=grid, snapshot_stride=10**9, snap_times=snap_times,
        )
        runs.append(traj)
        moduli.append(max(r.holder_C for r in traj.records))

    def states_at_targets(traj: Trajectory) -> dict[float, np.ndarray]:
        out = {}
        for t, u in zip(traj.times, traj.states):
            for tgt in snap_times:
                if abs(t - tgt) <= 1e-12 * max(1.0, t_end):
                    out[float(tgt)] = u
        return out

    dist: list[float] = []
    for a, b in zip(runs[:-1], runs[1:]):
        sa, sb = states_at_targets(a), states_at_targets(b)
        common = sorted(set(sa) & set(sb))
        if not common:
            dist.append(math.nan)
            continue
        dist.append(max(float(np.max(np.abs(sa[t] - sb[t]))) for t in common))

    decreasing = all(
        math.isfinite(a) and math.isfinite(b) and b < a for a, b in zip(dist, dist[1:])
    ) if len(dist) > 1 else bool(dist)
    return ContinuationReport(
        eps_list=tuple(eps_list),
        snap_times=tuple(float(t) for t in snap_times),
        distances=tuple(dist),
        holder_moduli=tuple(moduli),
        events=tuple(t.event for t in runs),
        cauchy=decreasing,
        trajectories=tuple(runs) if keep_trajectories else (),
    )
