"""Numerical verification of the weighted interpolation inequalities.

Test functions are positive cosine polynomials (so u_x vanishes at both ends
analytically, the hypothesis every inequality shares).  Derivatives are taken
analytically from the expansion and integrals use composite Simpson with 1e4
panels: the checks must not be polluted by solver-grade discretization error.

Each inequality is named by its left-hand side:

  ux2      int w^(e-4) u^n     u_x^2    <= eta*G1 + C(eta)*B
  uxx2     int w^(e-2) u^n     u_xx^2   <= eta*(A1 + A2) + C(eta)*B
  ux4      int w^(e-2) u^(n-2) u_x^4    <= eta*(A1 + A2) + C(eta)*B
  ux6      int w^(e)   u^(n-4) u_x^6    <= C1(eta)*A2 + C2(eta)*G2
  combined sum of the ux2/uxx2/ux4 left sides, same right-hand shape

with w = (x+eps), e = alpha - beta + gamma, A1 = int w^e u^n u_xxx^2,
A2 = int w^e u^(n-2) u_x^2 u_xx^2, B = int w^(e-6) u^(n+2), and G1, G2 the
uxx2/ux4 left sides.  Every C(eta) below is derived by replaying the
integration-by-parts + Young chains; the derivations are spelled out next to
each constant so they can be audited term by term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .functionals import holder_proof_constant, sup_bound_constant
from .grid import Grid, interior_d2
from .params import Params

#: Relative slack granted to quadrature when declaring an inequality satisfied.
TOL_REL = 1e-6

#: Composite-Simpson panel count for all lab integrals.
QUAD_PANELS = 10_000

INEQUALITIES = ("ux2", "uxx2", "ux4", "ux6", "combined")


@dataclass(frozen=True)
class TestFunction:
    """u(x) = c0 + sum a_m cos(m pi x / L), positive by construction."""

    L: float
    c0: float
    coeffs: tuple[float, ...]
    floor: float

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(u, u_x, u_xx, u_xxx) evaluated analytically."""
        x = np.asarray(x, dtype=float)
        u = np.full_like(x, self.c0)
        ux = np.zeros_like(x)
        uxx = np.zeros_like(x)
        uxxx = np.zeros_like(x)
        for m, a in enumerate(self.coeffs, start=1):
            f = m * math.pi / self.L
            ph = f * x
            c, s = np.cos(ph), np.sin(ph)
            u += a * c
            ux += -a * f * s
            uxx += -a * f * f * c
            uxxx += a * f**3 * s
        return u, ux, uxx, uxxx


def random_test_function(seed: int, M: int = 8, floor: float = 0.1, L: float = 1.0) -> TestFunction:
    """Draw a_m uniform in [-1,1]/m^2 and set c0 = sum|a_m| + floor, so the
    minimum of u over [0, L] is at least ``floor``."""
    if M > 16:
        raise DomainError(f"mode count limited to 16, got {M}")
    if not floor > 0.0:
        raise DomainError("floor must be positive")
    rng = np.random.default_rng(seed)
    if M == 0:
        coeffs: tuple[float, ...] = ()
    else:
        coeffs = tuple(rng.uniform(-1.0, 1.0, size=M) / np.arange(1, M + 1) ** 2)
    return TestFunction(L=L, c0=float(np.sum(np.abs(coeffs)) + floor), coeffs=coeffs, floor=floor)


@dataclass(frozen=True)
class InequalityReport:
    inequality: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    eta: float | None
    params: dict

    @staticmethod
    def from_sides(inequality: str, lhs: float, rhs: float, eta: float | None, params: dict):
        margin = rhs - lhs
        return InequalityReport(
            inequality=inequality,
            lhs=lhs,
            rhs=rhs,
            margin=margin,
            passed=bool(margin >= -TOL_REL * rhs),
            eta=eta,
            params=params,
        )


# ---------------------------------------------------------------------------
# constants, replayed from the integration-by-parts + Young chains
# ---------------------------------------------------------------------------


def const_ux2(eta: float, e: float, n: float) -> float:
    """ux2 constant.

    Chain: integrate u^n u_x^2 w^(e-4) by parts (u_x = 0 at the ends):
      G3 = -1/(n+1) int w^(e-4) u^(n+1) u_xx - (e-4)/(n+1) int w^(e-5) u^(n+1) u_x.
    Young on term 1 with split (w^((e-2)/2) u^(n/2) u_xx) * (w^((e-6)/2) u^((n+2)/2)):
      <= eta/2 * G1 + 1/(2 eta (n+1)^2) * B.
    Young on term 2 with split (w^((e-4)/2) u^(n/2) u_x) * (w^((e-6)/2) u^((n+2)/2)):
      <= 1/2 * G3 + (e-4)^2/(2 (n+1)^2) * B.
    Absorb G3/2 and double: G3 <= eta*G1 + (1/eta + (e-4)^2)/(n+1)^2 * B.
    """
    return (1.0 / eta + (e - 4.0) ** 2) / (n + 1.0) ** 2


def const_uxx2(eta: float, e: float, n: float) -> float:
    """uxx2 constant.

    Chain: integrate by parts:
      G1 = - int w^(e-2) u^n u_x u_xxx - n int w^(e-2) u^(n-1) u_x^2 u_xx
           - (e-2) int w^(e-3) u^n u_x u_xx.
    Young the three terms against eta/2*A1, eta/4*A2, eta/4*A2 leaving
      c1*G3 + c2*G3 + c3*B with c1 = 1/(2 eta), c2 = n^2/eta,
      c3 = (e-2)^2/eta.
    Then ux2 with eta' = 1/(2(c1+c2)) absorbs (c1+c2)*G3 into G1/2 plus
      (c1+c2)*const_ux2(eta') * B.  Absorb G1/2 and double.
    """
    c1 = 0.5 / eta
    c2 = n * n / eta
    c3 = (e - 2.0) ** 2 / eta
    eta_inner = 0.5 / (c1 + c2)
    return 2.0 * (c3 + (c1 + c2) * const_ux2(eta_inner, e, n))


def const_ux4(eta: float, e: float, n: float) -> float:
    """ux4 constant.

    Chain: integrate by parts:
      G2 = -3/(n-1) int w^(e-2) u^(n-1) u_x^2 u_xx
           - (e-2)/(n-1) int w^(e-3) u^(n-1) u_x^3.
    Term 1: Young against G2/4 leaves c1*G1 with c1 = 9/(n-1)^2.
    Term 2: pointwise Young on X^(3/4) Y^(1/4) (X the G2 integrand, Y the B
    integrand; kappa = |e-2|/|n-1|): kappa X^(3/4) Y^(1/4) <= X/4 + c2*Y with
    c2 = 27 kappa^4 / 4.  Absorb G2/2 and double: G2 <= 2 c1 G1 + 2 c2 B.
    Then uxx2 with eta' = eta/(2 c1) bounds the G1 term.
    """
    c1 = 9.0 / (n - 1.0) ** 2
    kappa = abs(e - 2.0) / abs(n - 1.0)
    c2 = 27.0 * kappa**4 / 4.0
    eta_inner = eta / (2.0 * c1)
    return 2.0 * c1 * const_uxx2(eta_inner, e, n) + 2.0 * c2


def const_ux6(eta: float, e: float, n: float) -> tuple[float, float]:
    """The two explicit ux6 coefficients (A2 and G2 multipliers)."""
    if not 0.0 < eta < 1.0:
        raise DomainError(f"eta must lie in (0, 1) for the ux6 bound, got {eta}")
    d = (1.0 - eta) * (n - 3.0) ** 2
    return 25.0 / d, e * e / (eta * d)


def const_combined(eta: float, e: float, n: float) -> float:
    """combined constant.

    G3 <= 1*G1 + const_ux2(1)*B folds the third left-hand term into the
    first; then 2*G1 gets uxx2 at eta/4 and G2 gets ux4 at eta/2, keeping the
    total A1/A2 multiplier at eta (2*(eta/4) + eta/2).
    """
    return 2.0 * const_uxx2(0.25 * eta, e, n) + const_ux4(0.5 * eta, e, n) + const_ux2(1.0, e, n)


# ---------------------------------------------------------------------------
# quadrature workspace
# ---------------------------------------------------------------------------


class Workspace:
    """Cached Simpson nodes/weights and (x+eps)-power tables for one setup."""

    def __init__(self, params: Params, eps: float = 0.0, panels: int = QUAD_PANELS):
        if eps < 0.0 or eps >= 1.0:
            raise DomainError(f"lab eps must lie in [0, 1), got {eps}")
        self.params = params
        self.eps = eps
        self.e = params.alpha - params.beta + params.gamma
        if eps == 0.0:
            for shift in (0.0, -2.0, -4.0, -6.0):
                if self.e + shift < 0.0:
                    raise DomainError(
                        "eps = 0 needs nonnegative weight exponents; "
                        f"alpha-beta+gamma{shift:+g} = {self.e + shift:g}"
                    )
        n = panels
        self.x = np.linspace(0.0, params.L, n + 1)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        self.wq = w * (params.L / n) / 3.0
        self._pow: dict[float, np.ndarray] = {}

    def weight(self, exponent: float) -> np.ndarray:
        if exponent not in self._pow:
            self._pow[exponent] = (self.x + self.eps) ** exponent
        return self._pow[exponent]

    def integral(self, exponent: float, values: np.ndarray) -> float:
        return float(np.sum(self.wq * self.weight(exponent) * values))

    def atoms(self, tf: TestFunction) -> dict[str, float]:
        """All weighted integrals the inequality suite consumes, in one pass."""
        p = self.params
        u, ux, uxx, uxxx = tf.evaluate(self.x)
        e, n = self.e, p.n
        return {
            "A1": self.integral(e, u**n * uxxx**2),
            "A2": self.integral(e, u ** (n - 2.0) * ux**2 * uxx**2),
            "A3": self.integral(e, u ** (n - 4.0) * ux**6),
            "G1": self.integral(e - 2.0, u**n * uxx**2),
            "G2": self.integral(e - 2.0, u ** (n - 2.0) * ux**4),
            "G3": self.integral(e - 4.0, u**n * ux**2),
            "B": self.integral(e - 6.0, u ** (n + 2.0)),
        }


def _sides(inequality: str, atoms: dict[str, float], eta: float, e: float, n: float):
    if inequality == "ux2":
        return atoms["G3"], eta * atoms["G1"] + const_ux2(eta, e, n) * atoms["B"]
    if inequality == "uxx2":
        return atoms["G1"], eta * (atoms["A1"] + atoms["A2"]) + const_uxx2(eta, e, n) * atoms["B"]
    if inequality == "ux4":
        return atoms["G2"], eta * (atoms["A1"] + atoms["A2"]) + const_ux4(eta, e, n) * atoms["B"]
    if inequality == "ux6":
        c1, c2 = const_ux6(eta, e, n)
        return atoms["A3"], c1 * atoms["A2"] + c2 * atoms["G2"]
    if inequality == "combined":
        lhs = atoms["G1"] + atoms["G2"] + atoms["G3"]
        return lhs, eta * (atoms["A1"] + atoms["A2"]) + const_combined(eta, e, n) * atoms["B"]
    raise DomainError(f"unknown inequality {inequality!r}")


def check_inequality(
    inequality: str,
    tf: TestFunction,
    params: Params,
    eta: float,
    eps: float = 0.0,
    workspace: Workspace | None = None,
) -> InequalityReport:
    """Evaluate one inequality on one test function."""
    if not eta > 0.0:
        raise DomainError(f"eta must be positive, got {eta}")
    ws = workspace if workspace is not None else Workspace(params, eps)
    atoms = ws.atoms(tf)
    lhs, rhs = _sides(inequality, atoms, eta, ws.e, params.n)
    meta = {
        "alpha": params.alpha, "beta": params.beta, "gamma": params.gamma,
        "n": params.n, "eps": ws.eps,
    }
    return InequalityReport.from_sides(inequality, lhs, rhs, eta, meta)


def check_inequalities(
    tf: TestFunction, params: Params, etas, inequalities=INEQUALITIES,
    eps: float = 0.0, workspace: Workspace | None = None,
) -> list[InequalityReport]:
    """All (inequality, eta) reports for one function, sharing one evaluation."""
    ws = workspace if workspace is not None else Workspace(params, eps)
    atoms = ws.atoms(tf)
    meta = {
        "alpha": params.alpha, "beta": params.beta, "gamma": params.gamma,
        "n": params.n, "eps": ws.eps,
    }
    out = []
    for ineq in inequalities:
        for eta in etas:
            lhs, rhs = _sides(ineq, atoms, eta, ws.e, params.n)
            out.append(InequalityReport.from_sides(ineq, lhs, rhs, eta, meta))
    return out


def check_pointwise_bounds(
    tf: TestFunction, params: Params, eps: float = 0.0, nodes: int = 2048,
    workspace: Workspace | None = None,
) -> tuple[InequalityReport, InequalityReport]:
    """Holder-modulus and sup-norm bounds with the proof-derived constants.

    Both are evaluated on a ``nodes``-point uniform sample; sampling can only
    shrink the left-hand sides, so a failure is a genuine violation.
    """
    p = params
    ws = workspace if workspace is not None else Workspace(params, eps)
    u, ux, _, _ = tf.evaluate(ws.x)
    energy = ws.integral(p.gamma, ux**2)
    mass = ws.integral(p.beta, np.abs(u))

    xs = np.linspace(0.0, p.L, nodes)
    us = tf.evaluate(xs)[0]
    theta = min(0.5, 0.5 * (1.0 - p.gamma))
    ii, jj = np.triu_indices(nodes, k=1)
    modulus = float(np.max(np.abs(us[ii] - us[jj]) / np.abs(xs[ii] - xs[jj]) ** theta))

    meta = {
        "alpha": p.alpha, "beta": p.beta, "gamma": p.gamma, "n": p.n, "eps": ws.eps,
    }
    holder = InequalityReport.from_sides(
        "holder", modulus, holder_proof_constant(p.gamma, p.L) * math.sqrt(energy), None, meta
    )
    sup = InequalityReport.from_sides(
        "sup",
        float(np.max(np.abs(u))),
        sup_bound_constant(p.beta, p.gamma, p.L) * (mass + math.sqrt(energy)),
        None,
        meta,
    )
    return holder, sup


def sharpness_ratio(reports) -> float:
    """Smallest margin/rhs over the given reports (0 means the bound is tight,
    1 means it is vacuous on this corpus); reports with rhs = 0 are skipped."""
    ratios = [r.margin / r.rhs for r in reports if r.rhs > 0.0]
    if not ratios:
        raise DomainError("no reports with positive right-hand side")
    return min(ratios)


# ---------------------------------------------------------------------------
# steady-state residuals
# ---------------------------------------------------------------------------


def exceptional_sigmas(alpha: float, n: float) -> tuple[float, float, float, float]:
    """The power-law decay rates sigma for which x^-sigma is stationary."""
    return (0.0, 1.0, (alpha - 3.0) / (n + 1.0), (alpha - 2.0) / (n + 1.0))


@dataclass(frozen=True)
class SteadyReport:
    sigma: float
    exponent: float  # flux exponent e: closed-form flux is sigma(sigma-1) x^e
    is_member: bool
    residual_norm: float
    closed_form_fxx_norm: float
    x_cut: float


def steady_residual(sigma: float, params: Params, grid: Grid, x_cut: float | None = None) -> SteadyReport:
    """Discrete stationarity residual of u = x^-sigma on [x_cut, L].

    The flux is discretized in its reciprocal form x^alpha u^(n+2) D2(1/u),
    with 1/u = x^sigma evaluated in closed form.  Nested divided differences
    make D2 vanish identically on constant and linear data, so the two
    trivially stationary rates (sigma = 0, 1) produce an exactly zero
    residual, while the other members decay at the stencil's O(h^2) and
    non-members converge to the closed-form |F_xx|.
    """
    if sigma < 0.0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    if x_cut is None:
        x_cut = grid.L / 10.0
    if not 0.0 < x_cut < grid.L:
        raise DomainError("x_cut must lie strictly inside (0, L)")
    p = params
    e = p.alpha - (p.n + 1.0) * sigma - 2.0
    member = sigma in exceptional_sigmas(p.alpha, p.n)

    x = grid.x
    w = x**sigma  # 1/u, smooth up to the origin
    d2w = interior_d2(x, w)  # nodes 1 .. N-1
    xi = x[1:-1]
    # x^alpha u^(n+2) = x^(alpha - sigma(n+2)); combining exponents avoids
    # overflow from u^(n+2) alone near the origin
    flux = xi ** (p.alpha - sigma * (p.n + 2.0)) * d2w
    d2_flux = interior_d2(xi, flux)  # nodes 2 .. N-2
    window = xi[1:-1] >= x_cut
    if not np.any(window):
        raise DomainError("x_cut leaves no interior nodes to evaluate on")
    residual = float(np.max(np.abs(d2_flux[window])))

    coef = sigma * (sigma - 1.0) * e * (e - 1.0)
    fxx = np.abs(coef) * xi[1:-1][window] ** (e - 2.0)
    return SteadyReport(
        sigma=sigma,
        exponent=e,
        is_member=member,
        residual_norm=residual,
        closed_form_fxx_norm=float(np.max(fxx)),
        x_cut=x_cut,
    )
