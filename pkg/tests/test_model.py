import numpy as np
import pytest

from mlt_tool import model
from mlt_tool.model import Basin, MLParams, State

from conftest import SC_STARTS, UC_STARTS


class TestParams:
    def test_defaults_are_reference_set(self, params):
        assert (params.C, params.g_ca, params.g_k, params.g_l) == (20.0, 4.4, 8.0, 2.0)
        assert (params.v_ca, params.v_k, params.v_l) == (120.0, -84.0, -60.0)
        assert (params.v1, params.v2, params.v3, params.v4) == (-1.2, 18.0, 2.0, 30.0)
        assert (params.phi, params.i_app) == (0.04, 92.0)

    @pytest.mark.parametrize("bad", [
        dict(C=0.0), dict(v2=0.0), dict(v4=0.0), dict(g_k=-1.0), dict(phi=0.0),
    ])
    def test_invariants_rejected(self, bad):
        with pytest.raises(ValueError):
            MLParams(**bad)


class TestGating:
    def test_half_activation_points(self, params):
        m_inf, _, _ = model.gating(params.v1, params)
        assert m_inf == pytest.approx(0.5, abs=1e-15)
        _, w_inf, tau_w = model.gating(params.v3, params)
        assert w_inf == pytest.approx(0.5, abs=1e-15)
        assert tau_w == pytest.approx(1.0, abs=1e-15)

    def test_value_at_zero_matches_high_precision_eval(self, params):
        # frozen from a 40-digit evaluation of 0.5*(1 + tanh(1.2/18))
        m_inf, _, _ = model.gating(0.0, params)
        assert m_inf == pytest.approx(0.5332840382511313, abs=1e-14)

    def test_ranges_and_tau_peak(self, params):
        v = np.linspace(-80.0, 60.0, 401)
        m_inf, w_inf, tau_w = model.gating(v, params)
        assert np.all((m_inf > 0) & (m_inf < 1))
        assert np.all((w_inf > 0) & (w_inf < 1))
        assert np.all((tau_w > 0) & (tau_w <= 1.0))
        assert tau_w.argmax() == np.abs(v - params.v3).argmin()

    def test_monotone_in_v(self, params):
        v = np.linspace(-80.0, 60.0, 801)
        m_inf, w_inf, _ = model.gating(v, params)
        assert np.all(np.diff(m_inf) > 0)
        assert np.all(np.diff(w_inf) > 0)


class TestVectorField:
    def test_nullcline_zeroes_w_drift(self, params):
        for v in (-40.0, -10.0, 25.0):
            _, w_inf, _ = model.gating(v, params)
            dv, dw = model.vector_field((v, w_inf), params)
            assert dw == pytest.approx(0.0, abs=1e-15)

    def test_fixed_point_zeroes_field(self, fixed_point, params):
        dv, dw = model.vector_field(fixed_point.location, params)
        assert abs(dv) < 1e-10 and abs(dw) < 1e-10

    def test_term_by_term_value(self, params):
        # frozen from a 40-digit term-by-term evaluation at (0, 0.5)
        dv, dw = model.vector_field((0.0, 0.5), params)
        assert dv == pytest.approx(-4.121301390170134, abs=1e-12)
        assert dw == pytest.approx(-0.0013321012438279330, abs=1e-16)

    def test_jacobian_matches_finite_differences(self, params):
        s = np.array([-20.0, 0.3])
        jac = model.jacobian(s, params)
        eps = 1e-6
        for col, dx in enumerate(np.eye(2) * eps):
            fd = (model.vector_field(s + dx, params)
                  - model.vector_field(s - dx, params)) / (2 * eps)
            assert np.allclose(jac[:, col], fd, atol=1e-6)


class TestIntegrate:
    def test_equilibrium_stays_put(self, fixed_point, params):
        orbit = model.integrate(fixed_point.location, 50.0, 0.01, params)
        drift = np.abs(orbit.states - np.array(fixed_point.location)).max()
        assert drift < 1e-6

    def test_cycle_start_stays_in_tube(self, stable_cycle, params):
        # start state lies on the stable cycle; the orbit must hug it
        orbit = model.integrate(SC_STARTS[0], 100.0, 0.01, params)
        dist = [model.polyline_distance(stable_cycle.polyline, s, 1.0, 0.01)
                for s in orbit.states[::100]]
        assert max(dist) < 0.1  # measured 0.0027 in scaled (mV, w/0.01) units

    def test_rk4_convergence_order(self, params):
        s0, T = (0.0, 0.3), 10.0
        ends = [model.integrate(s0, T, dt, params).states[-1]
                for dt in (0.08, 0.04, 0.02)]
        e1 = np.hypot(*(ends[0] - ends[1]))
        e2 = np.hypot(*(ends[1] - ends[2]))
        order = np.log2(e1 / e2)
        assert order >= 3.8

    def test_sanity_band_violation_raises(self, params):
        with pytest.raises(model.NonFiniteError):
            model.integrate((0.0, 0.9), 5000.0, 500.0, params)

    def test_argument_validation(self, params):
        with pytest.raises(ValueError):
            model.integrate((0.0, 0.3), 1.0, -0.1, params)
        with pytest.raises(ValueError):
            model.integrate((0.0, 0.3), 0.001, 0.01, params)


def _nullcline_bisection(params, lo, hi):
    """Test-local oracle: bisection of f_v along the w-nullcline."""
    def g(v):
        return float(model.drift_v(v, model.gating(v, params)[1], params))
    assert g(lo) * g(hi) < 0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if g(lo) * g(mid) <= 0:
            hi = mid
        else:
            lo = mid
    v = 0.5 * (lo + hi)
    return v, model.gating(v, params)[1]


class TestFixedPoint:
    def test_idempotent_on_converged_output(self, fixed_point, params):
        again = model.find_fixed_point(fixed_point.location, params)
        assert again.location == fixed_point.location

    def test_spiral_sink_at_reference_params(self, fixed_point):
        ev = fixed_point.jacobian_eigenvalues
        assert fixed_point.stability == "stable"
        assert fixed_point.is_spiral
        assert np.all(ev.real < 0) and np.all(np.abs(ev.imag) > 0)

    def test_location_matches_bisection_oracle(self, params):
        got = model.find_fixed_point((-26.0, 0.1), params)
        v_ref, w_ref = _nullcline_bisection(params, -40.0, -10.0)
        assert got.location.v == pytest.approx(v_ref, abs=1e-8)
        assert got.location.w == pytest.approx(w_ref, abs=1e-10)
        assert np.linalg.norm(model.vector_field(got.location, params)) < 1e-10

    def test_zero_current_root_against_grid_scan(self):
        quiet = MLParams(i_app=0.0)
        got = model.find_fixed_point(params=quiet)
        v_ref, w_ref = _nullcline_bisection(quiet, -80.0, 0.0)
        assert got.location.v == pytest.approx(v_ref, abs=1e-8)
        assert np.linalg.norm(model.vector_field(got.location, quiet)) < 1e-10
        assert got.location.v != pytest.approx(-25.9, abs=1.0)

    def test_no_convergence_error(self, params):
        with pytest.raises(model.NoConvergenceError):
            model.find_fixed_point((-26.0, 0.1), params, tol=1e-10, max_iter=1)


class TestStableCycle:
    def test_polyline_closed_and_period(self, stable_cycle):
        assert np.allclose(stable_cycle.polyline[0], stable_cycle.polyline[-1])
        assert stable_cycle.stability == "stable"
        assert 50.0 < stable_cycle.period < 200.0

    @pytest.mark.parametrize("anchor", SC_STARTS)
    def test_passes_through_anchor_points(self, stable_cycle, anchor):
        dv = np.abs(stable_cycle.v - anchor[0])
        dw = np.abs(stable_cycle.w - anchor[1])
        assert np.any((dv <= 0.5) & (dw <= 0.01))

    def test_return_map_closes(self, stable_cycle, params):
        vertex = stable_cycle.polyline[len(stable_cycle.polyline) // 3]
        orbit = model.integrate(vertex, stable_cycle.period, 0.01, params)
        gap = orbit.states[-1] - vertex
        assert abs(gap[0]) < 0.05 and abs(gap[1]) < 5e-4  # measured ~3e-3 / 4e-5

    def test_encloses_fixed_point_and_unstable_cycle(self, stable_cycle,
                                                     unstable_cycle, fixed_point):
        assert stable_cycle.encloses(fixed_point.location)
        for vertex in unstable_cycle.polyline[::500]:
            assert stable_cycle.encloses(vertex)


class TestUnstableCycle:
    def test_tagged_unstable_and_closed(self, unstable_cycle):
        assert unstable_cycle.stability == "unstable"
        assert np.allclose(unstable_cycle.polyline[0], unstable_cycle.polyline[-1])

    @pytest.mark.parametrize("anchor", UC_STARTS)
    def test_passes_through_anchor_points(self, unstable_cycle, anchor):
        dv = np.abs(unstable_cycle.v - anchor[0])
        dw = np.abs(unstable_cycle.w - anchor[1])
        assert np.any((dv <= 0.5) & (dw <= 0.01))

    def test_time_reversed_return(self, unstable_cycle, params):
        for frac in (0.2, 0.5, 0.8):
            vertex = unstable_cycle.polyline[int(frac * len(unstable_cycle.polyline))]
            orbit = model.integrate(vertex, unstable_cycle.period, 0.01, params,
                                    reverse=True)
            dist = model.polyline_distance(unstable_cycle.polyline,
                                           orbit.states[-1], 1.0, 0.01)
            assert dist < 0.05

    def test_separatrix_property(self, unstable_cycle, fixed_point,
                                 stable_cycle, params):
        fp = np.array(fixed_point.location)
        for frac in (0.25, 0.7):
            vertex = unstable_cycle.polyline[int(frac * len(unstable_cycle.polyline))]
            inward = vertex + 0.08 * (fp - vertex)
            outward = vertex - 0.08 * (fp - vertex)
            got = model.classify_basin_by_flow(
                np.array([inward, outward]), params, fixed_point, stable_cycle)
            assert got[0] is Basin.REST
            assert got[1] is Basin.OSCILLATE


class TestClassifyBasin:
    def test_fixed_point_rests(self, fixed_point, unstable_cycle):
        assert model.classify_basin(fixed_point.location, unstable_cycle) is Basin.REST

    def test_stable_cycle_point_oscillates(self, unstable_cycle):
        assert model.classify_basin(SC_STARTS[0], unstable_cycle) is Basin.OSCILLATE

    def test_interior_point_rests_and_flow_agrees(self, unstable_cycle, fixed_point,
                                                  stable_cycle, params):
        s = (-27.0, 0.13)
        assert model.classify_basin(s, unstable_cycle) is Basin.REST
        flow = model.classify_basin_by_flow(s, params, fixed_point, stable_cycle)
        assert flow is Basin.REST

    def test_point_on_polyline_is_ambiguous(self, unstable_cycle):
        vertex = unstable_cycle.polyline[100]
        assert model.classify_basin(vertex, unstable_cycle) is Basin.AMBIGUOUS

    def test_band_zero_disables_ambiguity(self, unstable_cycle):
        vertex = unstable_cycle.polyline[100]
        got = model.classify_basin(vertex, unstable_cycle, band=(0.0, 0.0))
        assert got in (Basin.REST, Basin.OSCILLATE)

    def test_grid_agreement_with_flow_classifier(self, unstable_cycle, fixed_point,
                                                 stable_cycle, params):
        # >= 99% agreement on a 50x50 grid, ambiguous band excluded
        v = np.linspace(-59.0, 39.0, 50)
        w = np.linspace(0.01, 0.59, 50)
        pts = np.array([(vv, ww) for vv in v for ww in w])
        fast = np.array([model.classify_basin(p, unstable_cycle) for p in pts])
        keep = fast != Basin.AMBIGUOUS
        slow = model.classify_basin_by_flow(pts[keep], params, fixed_point,
                                            stable_cycle)
        agree = np.mean([a is b for a, b in zip(fast[keep], slow)])
        assert agree >= 0.99
