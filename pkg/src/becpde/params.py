"""Model parameters, admissibility checks, and derived constants.

The equation under study,

    u_t = x^{-beta} * ( x^alpha * (-u^n u_xx + 2 u^{n-1} u_x^2) )_xx   on (0, L),

is only well behaved for exponents inside an open admissibility region:
``n`` above a critical value ``nstar`` (the positive root of a cubic) and
below 3, ``alpha > 3``, ``beta`` strictly between -1 and ``alpha - 4``, and a
gradient-weight power ``gamma`` strictly between ``5 - alpha + beta`` and 1.
All comparisons are exact: the region is open, and running on its boundary
silently voids the a priori estimates the solver monitors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError, ValidationError

#: Physical exponents of the original condensation model.
PHYSICAL = {"n": 2.0, "alpha": 6.5, "beta": 0.5, "gamma": 0.0}


def critical_polynomial(n: float) -> float:
    """Cubic whose unique positive root separates admissible n from inadmissible."""
    return n**3 + 5.0 * n**2 + 16.0 * n - 40.0


def nstar_root() -> float:
    """Critical exponent: root of the cubic in (1, 2), found by bisection.

    The bracket is fixed and valid (P(1) = -18 < 0 < 20 = P(2)) and P is
    strictly increasing there, so bisection converges unconditionally.
    """
    lo, hi = 1.0, 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if critical_polynomial(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def holder_exponents(gamma: float) -> tuple[float, float]:
    """Spatial and temporal Holder exponents implied by the gradient weight.

    theta = min(1/2, (1-gamma)/2); the temporal exponent is theta/(2*theta+3).
    """
    if not gamma < 1.0:
        raise DomainError(f"gamma must be < 1, got {gamma}")
    theta = min(0.5, 0.5 * (1.0 - gamma))
    return theta, theta / (2.0 * theta + 3.0)


def eps_upper_limit(L: float) -> float:
    """Largest admissible regularization strength for a domain of length L."""
    return min(1.0, math.sqrt(L / 2.0))


@dataclass(frozen=True)
class DerivedConstants:
    """Constants determined by (n, gamma) alone."""

    nstar: float
    theta: float
    theta_time: float


@dataclass(frozen=True)
class RawParams:
    """Unvalidated parameter bundle, as parsed from a config."""

    n: float
    alpha: float
    beta: float
    gamma: float
    L: float
    eps: float
    k: float = 4.0
    N: int = 256
    eps_star: float | None = None  # reporting cap for eps; defaults to eps0/2


@dataclass(frozen=True)
class Params:
    """Validated parameters plus derived constants.

    Immutable after construction; safe to share across workers.
    """

    n: float
    alpha: float
    beta: float
    gamma: float
    L: float
    eps: float
    k: float
    N: int
    eps0: float
    eps_star: float
    derived: DerivedConstants = field(repr=False)


def validate(raw: RawParams) -> Params:
    """Check every admissibility inequality and return a Params bundle.

    Raises ValidationError carrying *all* violated inequalities, keyed as
    "<field>.<side>" with the offending bound as value.
    """
    bad: dict[str, float] = {}
    for name in ("n", "alpha", "beta", "gamma", "L", "eps", "k"):
        v = getattr(raw, name)
        if not math.isfinite(v):
            bad[f"{name}.finite"] = v
    if bad:
        raise ValidationError(bad)

    nstar = nstar_root()
    if not raw.n > nstar:
        bad["n.lower"] = nstar
    if not raw.n < 3.0:
        bad["n.upper"] = 3.0
    if not raw.alpha > 3.0:
        bad["alpha.lower"] = 3.0
    if not raw.beta > -1.0:
        bad["beta.lower"] = -1.0
    if not raw.beta < raw.alpha - 4.0:
        bad["beta.upper"] = raw.alpha - 4.0
    gamma_lo = 5.0 - raw.alpha + raw.beta
    if not raw.gamma > gamma_lo:
        bad["gamma.lower"] = gamma_lo
    if not raw.gamma < 1.0:
        bad["gamma.upper"] = 1.0
    if not raw.L > 0.0:
        bad["L.lower"] = 0.0
    else:
        eps0 = eps_upper_limit(raw.L)
        if not raw.eps > 0.0:
            bad["eps.lower"] = 0.0
        if not raw.eps < eps0:
            bad["eps.upper"] = eps0
    if not raw.k >= 1.0:
        bad["k.lower"] = 1.0
    if not raw.N >= 16:
        bad["N.lower"] = 16
    if raw.eps_star is not None and not 0.0 < raw.eps_star < eps_upper_limit(raw.L):
        bad["eps_star.range"] = eps_upper_limit(raw.L)
    if bad:
        raise ValidationError(bad)

    # These follow from the inequalities above; both keep the weight
    # x^(alpha-beta+gamma-6) integrable near 0.
    assert raw.alpha - raw.beta + raw.gamma > 5.0
    assert raw.alpha + raw.beta - raw.gamma + 2.0 > 3.0

    eps0 = eps_upper_limit(raw.L)
    theta, theta_time = holder_exponents(raw.gamma)
    return Params(
        n=raw.n,
        alpha=raw.alpha,
        beta=raw.beta,
        gamma=raw.gamma,
        L=raw.L,
        eps=raw.eps,
        k=raw.k,
        N=raw.N,
        eps0=eps0,
        eps_star=raw.eps_star if raw.eps_star is not None else 0.5 * eps0,
        derived=DerivedConstants(nstar=nstar, theta=theta, theta_time=theta_time),
    )


def physical_params(eps: float = 0.05, L: float = 1.0, k: float = 4.0, N: int = 256) -> Params:
    """Convenience constructor at the physical exponents."""
    return validate(RawParams(L=L, eps=eps, k=k, N=N, **PHYSICAL))
