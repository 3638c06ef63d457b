import math

import numpy as np
import pytest

from becpde import functionals as fn
from becpde import grid, lab
from becpde.errors import DomainError
from becpde.model import State, initial_state, tables_for
from becpde.params import physical_params


def make_state(u=None, eps=0.05, N=64, p=1.0, beta=None):
    prm = physical_params(eps=eps, N=N)
    if beta is not None:
        from becpde.params import RawParams, validate

        prm = validate(RawParams(n=2.0, alpha=6.5, beta=beta, gamma=0.0, L=1.0, eps=eps, N=N))
    g = grid.build(N, 1.0, p)
    if u is None:
        u = np.ones(g.nnodes)
    return initial_state(prm, g, np.asarray(u, dtype=float))


def random_states(count, N=96, eps=0.05, seed0=500, floor=0.1):
    """Positive states with u_x = 0 at both ends (cosine expansions)."""
    prm = physical_params(eps=eps, N=N)
    g = grid.build(N, 1.0, 1.0)
    tbl = tables_for(prm, g)
    for i in range(count):
        tf = lab.random_test_function(seed0 + i, M=8, floor=floor)
        yield State(0.0, tf.evaluate(g.x)[0], prm, tbl)


class TestWeightedMass:
    def test_unit_constant(self):
        st = make_state(beta=0.0)
        assert fn.weighted_mass(st) == pytest.approx(1.0, abs=1e-14)

    def test_linear_weight_via_quad(self):
        # the underlying quadrature integrates x exactly
        g = grid.build(64, 1.0, 1.0)
        assert grid.quad(g.x, np.ones(65), g) == pytest.approx(0.5, abs=1e-14)

    def test_closed_form(self):
        # oracle: antiderivative of 2 (x+0.1)^0.5 over [0, 1]
        st = make_state(u=np.full(257, 2.0), eps=0.1, N=256)
        expected = 1.496089275180644
        assert fn.weighted_mass(st) == pytest.approx(expected, rel=1e-4)


class TestGradEnergy:
    def test_constant(self):
        assert fn.grad_energy(make_state()) == 0.0

    def test_linear(self):
        st = make_state(u=grid.build(128, 1.0, 1.0).x, N=128)
        # ghosts force zero slope at both walls, costing one cell per side
        assert fn.grad_energy(st) == pytest.approx(1.0, abs=0.05)

    def test_cosine_closed_form(self):
        vals = []
        for N in (128, 256):
            g = grid.build(N, 1.0, 1.0)
            st = make_state(u=np.cos(np.pi * g.x), N=N)
            vals.append(fn.grad_energy(st))
        exact = np.pi**2 / 2.0
        assert abs(vals[1] - exact) < abs(vals[0] - exact)
        assert vals[1] == pytest.approx(exact, rel=1e-3)


class TestDissipation:
    # oracle: adaptive quadrature of the analytic integrands for
    # u = 1 + 0.1 cos(pi x), eps = 0.05, physical exponents
    REF = (
        0.35805208298707264,
        0.0018976468313304283,
        1.623639099321281e-05,
        0.1440694002033622,
        0.00047073545345332205,
    )

    def test_constant_all_zero(self):
        assert fn.dissipation_terms(make_state()) == (0.0,) * 5

    def test_nonnegative_random(self):
        for st in random_states(20):
            assert all(v >= 0.0 for v in fn.dissipation_terms(st))

    def test_converges_to_reference(self):
        errs = []
        for N in (128, 256, 512):
            g = grid.build(N, 1.0, 1.0)
            st = make_state(u=1.0 + 0.1 * np.cos(np.pi * g.x), N=N)
            d = fn.dissipation_terms(st)
            errs.append(max(abs(a - b) / abs(b) for a, b in zip(d, self.REF)))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 1e-3

    def test_requires_positive(self):
        u = np.ones(65)
        u[3] = 0.0
        with pytest.raises(DomainError):
            fn.dissipation_terms(make_state(u=u))


class TestSupEstimate:
    def test_bounds_sup_on_random_states(self):
        for st in random_states(100):
            assert float(np.max(st.u)) <= fn.sup_estimate(st)

    def test_constant_state(self):
        st = make_state(u=np.full(65, 3.0))
        assert fn.sup_estimate(st) >= 3.0

    def test_positively_homogeneous(self):
        st = make_state(u=1.0 + 0.3 * np.cos(np.pi * grid.build(64, 1.0, 1.0).x))
        st5 = State(0.0, 5.0 * st.u, st.params, st.tables)
        assert fn.sup_estimate(st5) == pytest.approx(5.0 * fn.sup_estimate(st), rel=1e-12)


class TestHolderModulus:
    def test_constant(self):
        assert fn.holder_modulus(make_state(), 0.5) == 0.0

    def test_linear_span(self):
        g = grid.build(64, 1.0, 1.0)
        st = make_state(u=g.x.copy())
        # |du| / |dx|^0.5 is maximized by the full span for u = x on [0, 1]
        assert fn.holder_modulus(st, 0.5) == pytest.approx(1.0, abs=1e-12)

    def test_bounded_by_gradient_energy(self):
        c = fn.holder_proof_constant(0.0, 1.0)
        for st in random_states(100):
            bound = c * math.sqrt(fn.grad_energy(st))
            assert fn.holder_modulus(st, 0.5) <= bound * (1 + 1e-9)

    def test_node_cap(self):
        x = np.linspace(0, 1, 3000)
        with pytest.raises(DomainError):
            fn.holder_modulus_values(x, x, 0.5)


class TestDeadcore:
    def test_unit(self):
        assert fn.deadcore_functional(make_state()) == pytest.approx(1.0, abs=1e-14)

    def test_two(self):
        assert fn.deadcore_functional(make_state(u=np.full(65, 2.0))) == pytest.approx(0.25)

    def test_requires_positive(self):
        u = np.ones(65)
        u[0] = 0.0
        with pytest.raises(DomainError):
            fn.deadcore_functional(make_state(u=u))

    def test_bounded_along_stable_run(self):
        from becpde import stepper
        from becpde.model import tables_for
        from becpde.params import physical_params

        prm = physical_params(eps=0.05, N=64)
        g = grid.build(64, 1.0, 2.0)
        tbl = tables_for(prm, g)
        u0 = 1.0 + 0.1 * np.cos(np.pi * g.x)
        ctl = stepper.StepControl(dt_init=1e-6, dt_max=1e-5)
        traj = stepper.run(u0, prm, ctl, 2e-4, grid=g, tables=tbl, snapshot_stride=20)
        values = [r.deadcore for r in traj.records]
        assert max(values) <= 2.0 * values[0]


class TestOdeBound:
    def test_linear_growth(self):
        ob = fn.ode_bound(7.0, 4.0, 0.0, 2.0)
        assert ob.T0 == pytest.approx(0.25, abs=1e-8)

    def test_linear_capped(self):
        ob = fn.ode_bound(1.0, 0.5, 0.0, 2.0)
        assert ob.T0 == 1.0

    def test_riccati_closed_form(self):
        # y' = y^2, y(0)=1 gives y = 1/(1-t), crossing 2 at t = 1/2
        ob = fn.ode_bound(1.0, 0.0, 1.0, 2.0)
        assert ob.T0 == pytest.approx(0.5, abs=1e-8)

    def test_riccati_general(self):
        a, c6 = 2.0, 3.0
        ob = fn.ode_bound(a, 0.0, c6, 2.0)
        assert ob.T0 == pytest.approx(1.0 / (c6 * a) - 1.0 / (c6 * (a + 1.0)), abs=1e-8)

    def test_no_growth_capped_at_one(self):
        ob = fn.ode_bound(3.0, 0.0, 0.0, 2.0)
        assert ob.T0 == 1.0
        assert np.all(np.diff(ob.ys) >= 0.0)

    def test_curve_nondecreasing(self):
        ob = fn.ode_bound(1.0, 2.0, 0.5, 2.5)
        assert np.all(np.diff(ob.ys) >= 0.0)

    def test_monotone_in_inputs(self):
        base = fn.ode_bound(1.0, 1.0, 1.0, 2.0).T0
        assert fn.ode_bound(2.0, 1.0, 1.0, 2.0).T0 <= base
        assert fn.ode_bound(1.0, 2.0, 1.0, 2.0).T0 <= base
        assert fn.ode_bound(1.0, 1.0, 2.0, 2.0).T0 <= base

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            fn.ode_bound(-1.0, 0.0, 0.0, 2.0)

    def test_huge_growth_stays_finite(self):
        # growth so violent the RK4 stages overflow: the bound reports the
        # last finite time instead of propagating inf/nan
        ob = fn.ode_bound(1.0, 0.0, 1e300, 2.0)
        assert math.isfinite(ob.T0) and 0.0 <= ob.T0 <= 1e-5
        assert np.all(np.isfinite(ob.ys))


class TestPhysicalDiagnostics:
    def test_zero_state(self):
        st = make_state(u=np.zeros(65))
        assert fn.physical_diagnostics(st) == (0.0, 0.0)

    def test_unit_energy(self):
        st = make_state(N=256)
        e, _ = fn.physical_diagnostics(st)
        assert e == pytest.approx(0.4, rel=1e-4)

    def test_unit_entropy(self):
        # closed form: 2 log 2 * (2/3)
        st = make_state(N=256)
        _, s = fn.physical_diagnostics(st)
        assert s == pytest.approx(0.9241962407465937, rel=1e-4)


class TestTemporalModulus:
    def test_frozen_states_zero(self):
        states = [np.ones(8), np.ones(8), np.ones(8)]
        assert fn.temporal_modulus([0.0, 1.0, 2.0], states, 0.125) == 0.0

    def test_single_jump_scaling(self):
        # one jump of size 1 over dt: modulus = dt^-theta_time
        states = [np.zeros(4), np.ones(4)]
        assert fn.temporal_modulus([0.0, 0.5], states, 0.125) == pytest.approx(0.5**-0.125)

    def test_along_run(self):
        from becpde import stepper
        from becpde.model import tables_for
        from becpde.params import physical_params

        prm = physical_params(eps=0.05, N=64)
        g = grid.build(64, 1.0, 2.0)
        u0 = 1.0 + 0.1 * np.cos(np.pi * g.x)
        ctl = stepper.StepControl(dt_init=1e-6, dt_max=1e-5)
        traj = stepper.run(u0, prm, ctl, 2e-4, grid=g, tables=tables_for(prm, g),
                           snapshot_stride=20)
        mod = fn.temporal_modulus(traj.times, traj.states, prm.derived.theta_time)
        assert math.isfinite(mod) and mod >= 0.0

    def test_validation(self):
        with pytest.raises(DomainError):
            fn.temporal_modulus([0.0], [np.ones(3)], 0.125)
        with pytest.raises(DomainError):
            fn.temporal_modulus([0.0, 1.0], [np.ones(3), np.ones(3)], 1.5)


def test_fit_ode_constants_recovers_series():
    ts = np.linspace(0.0, 0.2, 50)
    ys = 1.0 + 0.7 * ts  # linear: c5 = 0.7, c6 = 0
    c5, c6 = fn.fit_ode_constants(ts, ys, 2.0)
    assert c5 == pytest.approx(0.7, rel=1e-6)
    assert c6 == pytest.approx(0.0, abs=1e-8)


def test_make_record_finite_on_positive_state():
    st = make_state(u=1.0 + 0.2 * np.cos(np.pi * grid.build(64, 1.0, 1.0).x))
    rec = fn.make_record(st)
    assert math.isfinite(rec.mass_beta) and math.isfinite(rec.entropy)
    assert all(math.isfinite(v) for v in rec.dissipation)
    assert rec.sup_u <= rec.sup_bound
