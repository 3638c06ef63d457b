"""Regularized weight construction and its pointwise bounds.

The singular coefficient x^alpha is replaced by g(x) = z(x)^alpha, where
z(x) = eps + integral_0^x zeta(y) dy and zeta is a C-infinity cutoff equal to
1 on (eps^2, L - eps^2) and supported in [eps^2/2, L - eps^2/2].  The payoff
is a weight that is bounded below by eps^alpha, has vanishing slope at both
endpoints, and stays sandwiched between sandwich_factor(eps)*(x+eps)^alpha
and (x+eps)^alpha at every point (the lower factor is the alpha-th power of
the base ratio bound returned by lambda_lower).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InternalError
from .grid import Grid
from .params import eps_upper_limit

# Panels used per unit ramp width when integrating the cutoff; chosen so the
# composite-Simpson error sits far below 1e-12 and halves 16x on doubling.
_RAMP_PANELS = 512


def _smoothstep(s: np.ndarray) -> np.ndarray:
    """C-infinity ramp from 0 at s<=0 to 1 at s>=1 (exp(-1/s) construction)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    out[s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    sm = s[mid]
    a = np.exp(-1.0 / sm)
    b = np.exp(-1.0 / (1.0 - sm))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth cutoff: 0 outside [a0, b1], 1 on [a1, b0], monotone ramps between.

    a0 = eps^2/2, a1 = eps^2 and the mirrored pair on the right; both ramps
    have width eps^2/2 and sit strictly inside (0, L).
    """

    eps: float
    L: float
    a0: float
    a1: float
    b0: float
    b1: float

    @property
    def ramp_width(self) -> float:
        return self.a1 - self.a0

    def zeta(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        up = _smoothstep((x - self.a0) / self.ramp_width)
        down = _smoothstep((self.b1 - x) / self.ramp_width)
        return np.minimum(up, down)


def cutoff(eps: float, L: float) -> CutoffProfile:
    if not 0.0 < eps < eps_upper_limit(L):
        raise DomainError(f"eps must lie in (0, {eps_upper_limit(L)}), got {eps}")
    e2 = eps * eps
    return CutoffProfile(eps=eps, L=L, a0=0.5 * e2, a1=e2, b0=L - e2, b1=L - 0.5 * e2)


def lambda_lower(eps: float, L: float) -> float:
    """Lower sandwich factor Lambda(eps) = min{1/(1+eps), 1 - 2 eps^2/(L+eps)}.

    Lambda(0) = 1 and Lambda is decreasing in eps.
    """
    if not 0.0 <= eps < eps_upper_limit(L):
        raise DomainError(f"eps must lie in [0, {eps_upper_limit(L)}), got {eps}")
    return min(1.0 / (1.0 + eps), 1.0 - 2.0 * eps * eps / (L + eps))


def _simpson(fn, a: float, b: float, panels: int) -> float:
    xs = np.linspace(a, b, 2 * panels + 1)
    ys = fn(xs)
    h = (b - a) / (2 * panels)
    return float(h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1::2].sum() + 2.0 * ys[2:-1:2].sum()))


def _cell_increment(profile: CutoffProfile, xl: float, xr: float, subsamples: int) -> float:
    """integral of zeta over one grid cell, split at the ramp breakpoints.

    Constant spans (zeta = 0 or 1) are integrated exactly; ramp overlaps get
    composite Simpson with a panel count proportional to the covered ramp
    fraction, so resolution is independent of how the mesh slices the ramp.
    """
    cuts = [xl]
    for b in (profile.a0, profile.a1, profile.b0, profile.b1):
        if xl < b < xr:
            cuts.append(b)
    cuts.append(xr)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= profile.a0 or lo >= profile.b1:
            continue  # zeta == 0
        if profile.a1 <= lo and hi <= profile.b0:
            total += hi - lo  # zeta == 1
            continue
        frac = (hi - lo) / profile.ramp_width
        panels = max(subsamples, min(4096, 2 * int(np.ceil(0.5 * _RAMP_PANELS * frac))))
        total += _simpson(profile.zeta, lo, hi, panels)
    return total


@dataclass(frozen=True)
class WeightTables:
    """Nodal values of the regularized weight family on a fixed grid."""

    grid: Grid
    eps: float
    alpha: float
    beta: float
    gamma: float
    zeta: np.ndarray
    z: np.ndarray
    g: np.ndarray
    gx: np.ndarray
    gx2_over_g: np.ndarray
    wbeta: np.ndarray
    wgamma: np.ndarray
    lam: float


def weight_tables(
    profile: CutoffProfile,
    alpha: float,
    beta: float,
    gamma: float,
    grid: Grid,
    subsamples: int = 8,
) -> WeightTables:
    """Integrate the cutoff into z, then tabulate g = z^alpha and friends.

    g_x is evaluated analytically as alpha*z^(alpha-1)*zeta, which is exact at
    the boundary nodes where zeta vanishes.
    """
    x = grid.x
    inc = np.array(
        [_cell_increment(profile, x[i], x[i + 1], subsamples) for i in range(grid.N)]
    )
    inc2 = np.array(
        [_cell_increment(profile, x[i], x[i + 1], 2 * subsamples) for i in range(grid.N)]
    )
    if np.max(np.abs(inc - inc2)) > 1e-10 * max(1.0, profile.L):
        raise InternalError("cutoff quadrature did not converge under refinement")

    z = profile.eps + np.concatenate(([0.0], np.cumsum(inc)))
    zeta = profile.zeta(x)
    g = z**alpha
    gx = alpha * z ** (alpha - 1.0) * zeta
    xe = x + profile.eps
    return WeightTables(
        grid=grid,
        eps=profile.eps,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        zeta=zeta,
        z=z,
        g=g,
        gx=gx,
        gx2_over_g=gx * gx / g,
        wbeta=xe**beta,
        wgamma=xe**gamma,
        lam=lambda_lower(profile.eps, profile.L),
    )


def sandwich_factor(eps: float, L: float, alpha: float) -> float:
    """Lower sandwich constant for g against (x+eps)^alpha.

    lambda_lower bounds the ratio z/(x+eps) from below, so the weight ratio
    g/(x+eps)^alpha = (z/(x+eps))^alpha is bounded below by its alpha-th
    power.  Using the unexponentiated factor would be wrong for alpha > 1.
    """
    return lambda_lower(eps, L) ** alpha


@dataclass(frozen=True)
class BoundReport:
    """Worst-case nodal ratios against the three pointwise weight bounds.

    The sandwich sandwich_factor*(x+eps)^alpha <= g <= (x+eps)^alpha holds
    for every alpha > 0; the slope bounds with constants alpha and alpha^2
    additionally need alpha >= 1 resp. alpha >= 2 (z^(alpha-1) and
    z^(alpha-2) must be increasing in z), which the report reflects rather
    than hides.
    """

    lower_min_ratio: float
    upper_max_ratio: float
    gx_max_ratio: float
    gx2_max_ratio: float
    sandwich_ok: bool
    gx_ok: bool
    gx2_ok: bool

    @property
    def passed(self) -> bool:
        return self.sandwich_ok and self.gx_ok and self.gx2_ok


def verify_weight_bounds(tables: WeightTables) -> BoundReport:
    """Sweep every node against the sandwich and slope bounds."""
    xe = tables.grid.x + tables.eps
    a = tables.alpha
    lower = tables.g / (tables.lam**a * xe**a)
    upper = tables.g / xe**a
    gx_ratio = tables.gx / (a * xe ** (a - 1.0))
    gx2_ratio = tables.gx2_over_g / (a * a * xe ** (a - 2.0))
    report = BoundReport(
        lower_min_ratio=float(lower.min()),
        upper_max_ratio=float(upper.max()),
        gx_max_ratio=float(gx_ratio.max()),
        gx2_max_ratio=float(gx2_ratio.max()),
        sandwich_ok=bool(lower.min() >= 1.0 - 1e-13 and upper.max() <= 1.0 + 1e-13),
        gx_ok=bool(gx_ratio.max() <= 1.0 + 1e-13),
        gx2_ok=bool(gx2_ratio.max() <= 1.0 + 1e-13),
    )
    return report
