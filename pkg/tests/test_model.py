import numpy as np
import pytest

from becpde import grid
from becpde.model import (
    State,
    Truncation,
    f_k,
    f_k_prime,
    flux,
    flux_gradient_consistency,
    ghost_derivatives,
    ghost_extend,
    initial_state,
    rhs,
    tables_for,
)
from becpde.params import RawParams, physical_params, validate


def make_state(u=None, eps=0.05, N=None, p=2.0, k=4.0, L=1.0):
    N = N if N is not None else len(u) - 1
    prm = physical_params(eps=eps, L=L, k=k, N=N)
    g = grid.build(N, L, p)
    if u is None:
        u = np.ones(g.nnodes)
    return initial_state(prm, g, np.asarray(u, dtype=float))


class TestGhostExtend:
    def test_constant(self):
        g = grid.build(16, 1.0, 2.0)
        ext = ghost_extend(np.full(17, 3.5), g)
        assert np.all(ext == 3.5) and len(ext) == 17 + 4

    def test_cosine_zero_slope_at_ends(self):
        g = grid.build(32, 1.0, 1.0)
        u = np.cos(np.pi * g.x)
        du, _, d3u = ghost_derivatives(u, g)
        assert du[0] == 0.0 and du[-1] == 0.0
        assert d3u[0] == 0.0 and d3u[-1] == 0.0

    def test_parabola_at_origin(self):
        errs = []
        for N in (32, 64):
            g = grid.build(N, 1.0, 1.0)
            du, d2u, _ = ghost_derivatives(g.x**2, g)
            assert du[0] == 0.0  # reflection forces an exact even extension
            errs.append(abs(d2u[0] - 2.0))
        # second derivative at the wall is consistent for even data
        assert errs[1] <= errs[0] + 1e-12


class TestTruncation:
    def test_identity_region(self):
        assert f_k(1.0, 2.0) == 1.0
        assert f_k(0.5, 2.0) == 0.5
        assert f_k(2.0, 2.0) == 2.0

    def test_upper_clamp(self):
        assert f_k(100.0, 2.0) <= 4.0
        assert f_k(4.0, 2.0) == 4.0

    def test_lower_clamp(self):
        assert f_k(-5.0, 2.0) == 0.25
        assert f_k(0.0, 2.0) == 0.25

    def test_monotone_and_bounded(self):
        s = np.linspace(-2.0, 10.0, 10_000)
        v = f_k(s, 2.0)
        assert np.all(np.diff(v) >= -1e-15)
        assert np.all(v >= 0.25) and np.all(v <= 4.0)

    def test_derivative_matches_finite_difference(self):
        s = np.linspace(0.3, 4.6, 2000)
        h = 1e-6
        fd = (f_k(s + h, 2.0) - f_k(s - h, 2.0)) / (2 * h)
        assert np.max(np.abs(fd - f_k_prime(s, 2.0))) <= 1e-6

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            Truncation(0.5)


class TestFlux:
    def test_constant_state_zero_flux(self):
        st = make_state(np.full(65, 2.0))
        f = flux(st)
        assert np.max(np.abs(f.J)) == 0.0
        assert np.max(np.abs(f.Jx)) == 0.0

    def test_linear_state_interior(self):
        # u = x has u_xx = 0 and u_x = 1 on interior nodes, so
        # J = 2 g u^(n-1); with small eps, g is close to x^alpha there
        eps = 1e-3
        st = make_state(None, eps=eps, N=256, p=1.0, k=64.0)
        g = st.grid
        u = g.x.copy()
        st = State(0.0, u, st.params, st.tables)
        f = flux(st)
        inner = slice(2, -2)
        expected = 2.0 * st.tables.g[inner] * u[inner] ** (st.params.n - 1.0)
        assert np.max(np.abs(f.J[inner] - expected)) <= 1e-10 * np.max(np.abs(expected))
        window = (g.x > 0.3) & (g.x < 0.9)
        closed = 2.0 * g.x[window] ** (st.params.alpha + st.params.n - 1.0)
        assert np.max(np.abs(f.J[window] / closed - 1.0)) <= 0.05

    def test_power_law_interior_closed_form(self):
        # u = x^-sigma inside the truncation band: against the semi-closed
        # form sigma(sigma-1) g(x) x^(-(n+1)sigma - 2) the error is pure
        # discretization, so it must fall ~4x per mesh doubling
        sigma = 1.5
        errs = []
        for N in (128, 256):
            st = make_state(None, eps=1e-3, N=N, p=1.0, k=64.0)
            g = st.grid
            with np.errstate(divide="ignore"):
                u = np.clip(g.x**-sigma, 1 / 64.0, 64.0)
            st = State(0.0, u, st.params, st.tables)
            f = flux(st)
            window = (g.x > 0.3) & (g.x < 0.8)
            semi = (
                sigma * (sigma - 1.0)
                * st.tables.g[window]
                * g.x[window] ** (-(st.params.n + 1.0) * sigma - 2.0)
            )
            errs.append(np.max(np.abs(f.J[window] - semi)))
        assert errs[0] / errs[1] > 3.0
        # and the semi-closed form itself approaches the eps-free power law
        ratio = st.tables.g[window] / g.x[window] ** st.params.alpha
        assert np.max(np.abs(ratio - 1.0)) <= 0.05


class TestFluxGradientConsistency:
    def test_constant_zero(self):
        st = make_state(np.full(49, 1.5))
        assert flux_gradient_consistency(st) == 0.0

    def test_smooth_refinement(self):
        # the defect is O(h^2) once the mesh resolves the cutoff ramps
        # (width eps^2/2), so use a wide regularization for the rate study
        defects = []
        for N in (256, 512, 1024):
            prm = physical_params(eps=0.3, N=N)
            g = grid.build(N, 1.0, 1.0)
            u = 1.0 + 0.1 * np.cos(np.pi * g.x)
            defects.append(flux_gradient_consistency(initial_state(prm, g, u)))
        assert defects[0] / defects[1] > 3.0
        assert defects[1] / defects[2] > 3.0

    def test_expansion_vanishes_at_endpoints(self):
        prm = physical_params(eps=0.05, N=64)
        g = grid.build(64, 1.0, 2.0)
        u = 1.0 + 0.2 * np.cos(np.pi * g.x) + 0.05 * np.cos(2 * np.pi * g.x)
        f = flux(initial_state(prm, g, u))
        # u_x, u_xxx and g_x all vanish discretely at the wall, so every term does
        assert f.Jx[0] == 0.0 and f.Jx[-1] == 0.0
        assert f.div_J[0] == 0.0 and f.div_J[-1] == 0.0


class TestRhs:
    def test_constant_is_steady(self):
        st = make_state(np.full(65, 0.7))
        assert np.max(np.abs(rhs(st))) == 0.0

    def test_mass_telescopes_for_random_states(self):
        rng = np.random.default_rng(11)
        for p in (1.0, 2.0):
            prm = physical_params(eps=0.05, N=64)
            g = grid.build(64, 1.0, p)
            tbl = tables_for(prm, g)
            for _ in range(5):
                u = 0.5 + rng.uniform(0.0, 1.5, g.nnodes)
                st = State(0.0, u, prm, tbl)
                r = rhs(st)
                total = float(np.sum(g.w * tbl.wbeta * r))
                assert abs(total) <= 1e-12 * np.max(np.abs(flux(st).J))

    def test_k_independent_inside_identity_band(self):
        prm4 = physical_params(eps=0.05, N=48, k=4.0)
        prm8 = physical_params(eps=0.05, N=48, k=8.0)
        g = grid.build(48, 1.0, 2.0)
        tbl = tables_for(prm4, g)
        u = 1.0 + 0.3 * np.cos(np.pi * g.x)  # range [0.7, 1.3] inside both bands
        r4 = rhs(State(0.0, u, prm4, tbl))
        r8 = rhs(State(0.0, u, prm8, tbl))
        assert np.array_equal(r4, r8)

    def test_exceptional_exponents_make_flux_curvature_vanish(self):
        # closed-form flux sigma(sigma-1) x^e with e = alpha-(n+1)sigma-2:
        # its second derivative vanishes iff sigma is one of four rates
        alpha, n = 6.5, 2.0
        members = {0.0, 1.0, (alpha - 3.0) / (n + 1.0), (alpha - 2.0) / (n + 1.0)}
        assert members == {0.0, 1.0, 7.0 / 6.0, 1.5}
        for sigma in sorted(members):
            e = alpha - (n + 1.0) * sigma - 2.0
            assert sigma * (sigma - 1.0) * e * (e - 1.0) == pytest.approx(0.0, abs=1e-12)
        e = alpha - (n + 1.0) * 1.2 - 2.0
        assert 1.2 * 0.2 * e * (e - 1.0) != 0.0


def test_state_shape_mismatch_rejected():
    prm = physical_params(eps=0.05, N=32)
    g = grid.build(32, 1.0, 1.0)
    with pytest.raises(ValueError):
        initial_state(prm, g, np.ones(12))


def test_validate_allows_large_k():
    p = validate(RawParams(n=2.0, alpha=6.5, beta=0.5, gamma=0.0, L=1.0, eps=1e-3, k=64.0, N=64))
    assert p.k == 64.0
