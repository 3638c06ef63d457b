"""One-dimensional mesh, finite-difference stencils, and weighted quadrature.

The mesh may be graded toward x = 0 (nodes x_i = L*(i/N)^p) to resolve the
degeneracy there.  Quadrature is the trapezoid rule on purpose: paired with
the 3-point second-difference operator and even ghost reflection it makes the
discrete divergence telescope exactly, which is what gives the solver exact
mass conservation (see the model module).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Grid:
    """Nodes x_0 = 0 < ... < x_N = L with trapezoid weights.

    ``N`` counts intervals; arrays over nodes have length N + 1.
    ``x_ext2`` holds the nodes extended by two mirror-image ghost positions
    per side (x_{-j} = -x_j, x_{N+j} = 2L - x_{N-j}); symmetric positions are
    what make even reflection annihilate odd derivatives at the boundary.
    """

    N: int
    L: float
    p: float
    x: np.ndarray
    h: np.ndarray  # cell widths, length N
    w: np.ndarray  # trapezoid weights, length N + 1
    x_ext2: np.ndarray  # length N + 5

    @property
    def nnodes(self) -> int:
        return self.N + 1


def build(N: int, L: float, p: float = 1.0) -> Grid:
    """Construct a (possibly graded) mesh on [0, L]."""
    if N < 16:
        raise DomainError(f"N must be >= 16, got {N}")
    if not L > 0.0:
        raise DomainError(f"L must be > 0, got {L}")
    if not 1.0 <= p <= 3.0:
        raise DomainError(f"grading exponent p must be in [1, 3], got {p}")
    i = np.arange(N + 1, dtype=float)
    x = L * (i / N) ** p
    x[0] = 0.0
    x[-1] = L
    h = np.diff(x)
    if not np.all(h > 0.0):
        raise DomainError("mesh nodes are not strictly increasing")
    w = np.zeros(N + 1)
    w[0] = 0.5 * h[0]
    w[-1] = 0.5 * h[-1]
    w[1:-1] = 0.5 * (h[:-1] + h[1:])
    x_ext2 = np.concatenate(([-x[2], -x[1]], x, [2 * L - x[-2], 2 * L - x[-3]]))
    return Grid(N=N, L=L, p=p, x=x, h=h, w=w, x_ext2=x_ext2)


def interior_d1(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """First derivative of f at x[1:-1] on an arbitrary strictly increasing mesh.

    3-point stencil, exact on quadratics; second order on smooth meshes.
    """
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    dl = (f[1:-1] - f[:-2]) / hl
    dr = (f[2:] - f[1:-1]) / hr
    return (hl * dr + hr * dl) / (hl + hr)


def interior_d2(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Second derivative of f at x[1:-1]; divided-difference form.

    Writing the stencil as nested divided differences (rather than
    coefficient-times-value) makes it return exactly zero on nodal data that
    is constant or linear in x, which several steady-state checks rely on.
    """
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    dl = (f[1:-1] - f[:-2]) / hl
    dr = (f[2:] - f[1:-1]) / hr
    return 2.0 * (dr - dl) / (hl + hr)


def _edge_d1(x0, x1, x2, f0, f1, f2):
    # one-sided 3-point first derivative at x0 (second order)
    h1 = x1 - x0
    h2 = x2 - x0
    return (f1 - f0) / h1 * (h2 / (h2 - h1)) - (f2 - f0) / h2 * (h1 / (h2 - h1))


def _edge_d2(x0, x1, x2, f0, f1, f2):
    # one-sided 3-point second derivative at x0 (first order on graded meshes)
    h1 = x1 - x0
    h2 = x2 - x0
    return 2.0 * ((f2 - f0) / h2 - (f1 - f0) / h1) / (h2 - h1)


def d1(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Nodal first derivative; one-sided stencils at the two boundary nodes."""
    x, f = grid.x, np.asarray(values, dtype=float)
    out = np.empty_like(f)
    out[1:-1] = interior_d1(x, f)
    out[0] = _edge_d1(x[0], x[1], x[2], f[0], f[1], f[2])
    out[-1] = _edge_d1(x[-1], x[-2], x[-3], f[-1], f[-2], f[-3])
    return out


def d2(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Nodal second derivative; one-sided stencils at the two boundary nodes."""
    x, f = grid.x, np.asarray(values, dtype=float)
    out = np.empty_like(f)
    out[1:-1] = interior_d2(x, f)
    out[0] = _edge_d2(x[0], x[1], x[2], f[0], f[1], f[2])
    out[-1] = _edge_d2(x[-1], x[-2], x[-3], f[-1], f[-2], f[-3])
    return out


def quad(weight_values: np.ndarray, f_values: np.ndarray, grid: Grid) -> float:
    """Trapezoid-rule integral of weight*f over [0, L]."""
    return float(np.sum(grid.w * np.asarray(weight_values) * np.asarray(f_values)))
