import numpy as np
import pytest

from etobs.analysis import (
    certificate_values,
    check_certificate,
    detect_quiescence,
    iet_stats,
    measured_M,
    write_certificate_csv,
)
from etobs.design import params_from_gains
from etobs.hybrid import HybridArc, SimConfig, simulate
from etobs.signals import InputSignal


def make_arc(event_times, t_end=4.0, n=1, p=1):
    """Tiny hand-built arc with the given transmission instants."""
    ts, js, flags = [0.0], [0], [False]
    j = 0
    for te in event_times:
        ts += [te, te]
        js += [j, j + 1]
        flags += [False, True]
        j += 1
    ts.append(t_end)
    js.append(j)
    flags.append(False)
    states = np.zeros((len(ts), 2 * n + p + 1))
    events = [(te, k) for k, te in enumerate(event_times)]
    return HybridArc(t=ts, j=js, states=states, events=events,
                     event_flags=flags, n=n, p=p)


class TestCheckCertificate:
    def test_zero_start_stays_below_offset(self, battery_plant, battery_cert,
                                           battery_profile):
        # zero initial errors: the bound collapses to the offset nu
        params = params_from_gains(battery_cert, sigma=500.0, c1=1.0, c2=50.0,
                                   c3=1.0, epsilon=1.0)
        cfg = SimConfig(t_end=300.0, dt_max=0.05, eta0=0.0)
        arc = simulate(battery_plant, battery_cert, params, battery_profile,
                       [1.0, 1.0], [1.0, 1.0], cfg)
        rep = check_certificate(arc, battery_cert, params)
        assert rep.holds
        assert rep.U0 == 0.0
        u_vals = certificate_values(arc, battery_cert, params)
        assert u_vals.max() <= params.nu + rep.cert_tol

    def test_battery_run_certificate(self, battery_arc, battery_cert,
                                     battery_params):
        rep = check_certificate(battery_arc, battery_cert, battery_params)
        assert rep.holds
        assert rep.worst_violation <= rep.cert_tol
        assert rep.bound_samples.shape == (battery_arc.t.size, 3)

    def test_energy_nonincreasing_across_jumps(self, battery_arc,
                                               battery_cert, battery_params):
        u_vals = certificate_values(battery_arc, battery_cert, battery_params)
        post = np.flatnonzero(battery_arc.event_flags)
        pre = post - 1
        assert np.all(u_vals[post] <= u_vals[pre] * (1.0 + 1e-10))

    def test_discretized_flow_decay(self, battery_arc, battery_cert,
                                    battery_params):
        # (U(t+h) - U(t))/h <= -abar U(t) + abar nu + 10 h, on U normalized
        # by (1 + U0); pairs straddling jumps or with sliver steps excluded
        u_vals = certificate_values(battery_arc, battery_cert, battery_params)
        scale = 1.0 + u_vals[0]
        u_hat = u_vals / scale
        nu_hat = battery_params.nu / scale
        abar = battery_params.alpha_bar
        dt = np.diff(battery_arc.t)
        same_j = np.diff(battery_arc.j) == 0
        ok = same_j & (dt >= 1e-6)
        quot = (u_hat[1:][ok] - u_hat[:-1][ok]) / dt[ok]
        bound = -abar * u_hat[:-1][ok] + abar * nu_hat + 10.0 * dt[ok]
        assert np.all(quot <= bound)

    def test_csv_export(self, battery_arc, battery_cert, battery_params,
                        tmp_path):
        rep = check_certificate(battery_arc, battery_cert, battery_params)
        path = tmp_path / "cert.csv"
        write_certificate_csv(rep, path)
        rows = path.read_text().splitlines()
        assert rows[0] == "t,U,bound"
        assert len(rows) == battery_arc.t.size + 1


class TestIetStats:
    def test_uniform_events(self):
        stats = iet_stats(make_arc([1.0, 2.0, 3.0]))
        assert stats.count == 2
        assert stats.min == stats.mean == stats.max == 1.0

    def test_no_events(self):
        stats = iet_stats(make_arc([]))
        assert stats.count == 0
        assert stats.series.size == 0
        assert np.isnan(stats.min) and np.isnan(stats.mean) and np.isnan(stats.max)

    def test_single_event_has_no_gaps(self):
        assert iet_stats(make_arc([2.0])).count == 0

    def test_ramp_gaps_analytic(self, ramp_setup, ramp_arc):
        _, cert, params, _ = ramp_setup
        stats = iet_stats(ramp_arc)
        expected = np.sqrt(params.epsilon / cert.gamma)
        assert np.abs(stats.series - expected).max() <= 2e-9
        assert stats.min <= stats.mean <= stats.max


class TestDetectQuiescence:
    def test_no_events_whole_horizon(self):
        arc = make_arc([], t_end=4.0)
        assert detect_quiescence(arc, window=2.0) == [(0.0, 4.0)]

    def test_short_horizon_below_window(self):
        arc = make_arc([], t_end=4.0)
        assert detect_quiescence(arc, window=10.0) == []

    def test_battery_rest_window(self, battery_arc):
        quiet = detect_quiescence(battery_arc, window=60.0)
        covered = [(lo, hi) for lo, hi in quiet
                   if min(hi, 900.0) - max(lo, 720.0) >= 100.0]
        assert covered, f"no long quiescent stretch inside [720, 900]: {quiet}"

    def test_periodic_triggering_has_no_long_gaps(self, ramp_setup, ramp_arc):
        _, cert, params, _ = ramp_setup
        gap = np.sqrt(params.epsilon / cert.gamma)
        assert detect_quiescence(ramp_arc, window=1.5 * gap) == []

    def test_rejects_bad_window(self, ramp_arc):
        with pytest.raises(ValueError):
            detect_quiescence(ramp_arc, window=0.0)


class TestMeasuredM:
    def test_ramp_unit_drift(self, ramp_setup, ramp_arc):
        plant, _, _, signal = ramp_setup
        assert measured_M(ramp_arc, plant, signal) == pytest.approx(1.0,
                                                                    rel=1e-9)

    def test_input_scaling(self, ramp_setup):
        plant, cert, params, _ = ramp_setup
        cfg = SimConfig(t_end=3.0, dt_max=0.1)
        arcs = {}
        for kappa in (1.0, 2.5):
            sig = InputSignal.constant([kappa])
            arc = simulate(plant, cert, params, sig, [0.0], [0.0], cfg)
            arcs[kappa] = measured_M(arc, plant, sig)
        assert arcs[2.5] == pytest.approx(2.5 * arcs[1.0], rel=1e-9)

    def test_battery_drift_finite(self, battery_arc, battery_plant,
                                  battery_profile):
        m = measured_M(battery_arc, battery_plant, battery_profile)
        assert np.isfinite(m) and m > 0.0

    def test_static_plant_has_zero_drift(self):
        from etobs.design import LtiPlant, iss_constants, params_from_gains
        plant = LtiPlant(A=[[0.0]], B=[[1.0]], C=[[1.0]])
        cert = iss_constants(plant, [[1.0]], [[2.0]])
        params = params_from_gains(cert, sigma=0.0, c1=1.0, c2=0.0, c3=1.0,
                                   epsilon=1.0)
        sig = InputSignal.constant([0.0])
        arc = simulate(plant, cert, params, sig, [1.5], [0.0],
                       SimConfig(t_end=2.0, dt_max=0.1))
        assert measured_M(arc, plant, sig) == 0.0
