import math
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sondlab.adrc import (
    NOMINAL_INLSEF,
    NOMINAL_MOTOR,
    NOMINAL_SMESO,
    IadrcConfig,
    InlsefParams,
    MotorParams,
    SmesoParams,
    control_law,
    inlsef_control,
    inlsef_error_fn,
    inlsef_gain,
    inlsef_integral,
    load_torque,
    pmdc_dynamics,
    simulate_iadrc,
    smeso_correction,
    smeso_dynamics,
    summarize,
)
from sondlab.ode import IntegrationDiverged, IntegratorConfig, integrate
from sondlab.signals import DisturbanceSchedule

errors = st.floats(-50, 50)
I = NOMINAL_INLSEF


@pytest.fixture(scope="module")
def nominal_run():
    cfg = IadrcConfig()
    return cfg, simulate_iadrc(cfg)


class TestParams:
    def test_b0(self):
        assert NOMINAL_MOTOR.b0 == pytest.approx(1 / (3 * 0.82 * 0.2752))
        assert NOMINAL_SMESO.b0 == NOMINAL_MOTOR.b0

    @pytest.mark.parametrize("name", ["Ra", "La", "Kb", "Kt", "n", "Jeq", "Beq"])
    def test_motor_positive(self, name):
        with pytest.raises(ValueError):
            replace(NOMINAL_MOTOR, **{name: 0.0})

    def test_friction(self):
        assert replace(NOMINAL_MOTOR, Fc=0.0).Fc == 0.0
        with pytest.raises(ValueError):
            replace(NOMINAL_MOTOR, Fc=-0.1)

    def test_smeso_alpha_range(self):
        replace(NOMINAL_SMESO, alpha=1.0)
        with pytest.raises(ValueError):
            replace(NOMINAL_SMESO, alpha=1.5)
        with pytest.raises(ValueError):
            replace(NOMINAL_SMESO, beta1=0.0)

    def test_inlsef_positive(self):
        with pytest.raises(ValueError):
            replace(NOMINAL_INLSEF, delta=0.0)


class TestPlant:
    def test_equilibrium(self):
        assert pmdc_dynamics((0.0, 0.0), 0.0, 0.0, 0.0, NOMINAL_MOTOR) == (0.0, 0.0)

    def test_speed_coefficient(self):
        _, dx2 = pmdc_dynamics((1.0, 0.0), 0.0, 0.0, 0.0, NOMINAL_MOTOR)
        want = -(0.1557 * 0.3922 + 1.1882 * 1.185) / (0.82 * 0.2752)
        assert dx2 == pytest.approx(want, rel=1e-14)
        assert dx2 == pytest.approx(-6.51004, abs=1e-5)

    def test_steady_state(self):
        va = 2.0
        m = NOMINAL_MOTOR
        a = np.array([[0.0, 1.0], [-m.speed_coeff, -m.accel_coeff]])
        x_ss = np.linalg.solve(a, -np.array([0.0, m.b0 * va]))
        traj = integrate(lambda t, x: np.array(pmdc_dynamics(x, va, 0.0, 0.0, m)), IntegratorConfig(0, 40, 0.01, (0.0, 0.0)))
        np.testing.assert_allclose(traj.states[-1], x_ss, atol=1e-9)

    def test_load_enters_as_input(self):
        m = NOMINAL_MOTOR
        a = pmdc_dynamics((0.0, 0.0), m.Ra / m.Kt * 2.0, 0.0, 0.0, m)
        b = pmdc_dynamics((0.0, 0.0), 0.0, 2.0, 0.0, m)
        assert a == pytest.approx(b, rel=1e-14)

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            pmdc_dynamics((0.0, 0.0), math.nan, 0.0, 0.0, NOMINAL_MOTOR)


class TestLoadTorque:
    def test_empty(self):
        assert load_torque(3.0, 1.0, DisturbanceSchedule(), 0.0) == (0.0, 0.0)

    def test_scheduled_event(self):
        assert load_torque(6.0, -0.3, DisturbanceSchedule(((5.0, 2.0),)), 0.0) == (2.0, 0.0)

    def test_friction_sign(self):
        assert load_torque(0.0, -0.5, DisturbanceSchedule(), 0.1) == (-0.1, 0.0)


class TestSmeso:
    def test_zero(self):
        assert smeso_correction(0.0, NOMINAL_SMESO) == 0.0

    def test_linear_limit(self):
        p = replace(NOMINAL_SMESO, alpha=1.0, Kbeta=0.0)
        assert smeso_correction(0.37, p) == pytest.approx(p.Kalpha * 0.37, rel=1e-15)

    def test_nominal_value(self):
        mpmath.mp.dps = 30
        e = mpmath.mpf("0.5")
        want = mpmath.mpf("0.7511") * e ** mpmath.mpf("0.7490") + mpmath.mpf("1.8629") * e ** mpmath.mpf("0.0331") * e
        assert smeso_correction(0.5, NOMINAL_SMESO) == pytest.approx(float(want), rel=1e-14)

    @given(errors)
    def test_odd(self, e):
        assert smeso_correction(-e, NOMINAL_SMESO) == -smeso_correction(e, NOMINAL_SMESO)

    def test_dynamics_examples(self):
        assert smeso_dynamics((0.4, 0.0, 0.0), 0.4, 0.0, NOMINAL_SMESO) == (0.0, 0.0, 0.0)
        assert smeso_dynamics((0.4, 2.0, 0.0), 0.4, 0.0, NOMINAL_SMESO) == (2.0, 0.0, 0.0)
        dz = smeso_dynamics((0.0, 0.0, 0.0), 0.1, 1.0, NOMINAL_SMESO)
        assert dz[2] == pytest.approx(1880.1690 * smeso_correction(0.1, NOMINAL_SMESO), rel=1e-15)

    def test_linear_observer_on_double_integrator(self):
        # y'' = b0*u + w with constant w; the linearized observer must recover y, y', w
        p = SmesoParams(beta1=19.403, beta2=1084.9393, beta3=1880.169, Kalpha=1.0, alpha=1.0,
                        Kbeta=0.0, beta=0.5, b0=NOMINAL_MOTOR.b0)
        w = 0.7

        def f(t, s):
            u = math.sin(t)
            dz = smeso_dynamics(s[2:], s[0], u, p)
            return np.array([s[1], p.b0 * u + w, *dz])

        traj = integrate(f, IntegratorConfig(0.0, 12.0, 0.002, (0.2, -0.1, 0.0, 0.0, 0.0)))
        late = traj.times > 6.0
        s = traj.states[late]
        assert np.max(np.abs(s[:, 2] - s[:, 0])) < 1e-3
        assert np.max(np.abs(s[:, 3] - s[:, 1])) < 1e-3
        assert np.max(np.abs(s[:, 4] - w)) < 1e-3


class TestInlsef:
    def test_gain_values(self):
        assert inlsef_gain(0.0, 144.2110, 4.7661, 22.6214) == pytest.approx(144.2110 + 4.7661 / 2)
        assert inlsef_gain(1e3, 144.2110, 4.7661, 22.6214) == 144.2110
        want = 144.2110 + 4.7661 / (1 + math.exp(22.6214 * 0.01))
        assert inlsef_gain(0.1, 144.2110, 4.7661, 22.6214) == pytest.approx(want, rel=1e-15)

    @given(st.floats(-1e6, 1e6), st.floats(0.1, 100), st.floats(0.1, 100), st.floats(0.01, 100))
    def test_gain_bounds(self, e, ka, kb, mu):
        g = inlsef_gain(e, ka, kb, mu)
        assert ka <= g <= ka + kb / 2 + 1e-12
        assert g <= inlsef_gain(0.0, ka, kb, mu)

    def test_error_fn(self):
        assert inlsef_error_fn(0.0, 0.594) == 0.0
        assert inlsef_error_fn(-3.2, 1.0) == -3.2
        assert inlsef_error_fn(-4.0, 0.5) == -2.0

    def test_integral_values(self):
        assert inlsef_integral(0.0, I.k3, I.alpha3, I.mu3) == 0.0
        assert inlsef_integral(50.0, I.k3, I.alpha3, I.mu3) == pytest.approx(0.0, abs=1e-300)
        want = 0.2**5.6162 * 176.3737 / (1 + math.exp(20.6845 * 0.04))
        assert inlsef_integral(0.2, I.k3, I.alpha3, I.mu3) == pytest.approx(want, rel=1e-14)

    @given(errors)
    def test_odd(self, e):
        assert inlsef_error_fn(-e, 0.594) == -inlsef_error_fn(e, 0.594)
        assert inlsef_integral(-e, I.k3, I.alpha3, I.mu3) == -inlsef_integral(e, I.k3, I.alpha3, I.mu3)

    def test_control_values(self):
        assert inlsef_control(0.0, 0.0, 0.0, I) == 0.0
        k = inlsef_gain(0.1, I.k11, I.k12, I.mu1)
        want = I.delta * math.tanh(k * 0.1**I.alpha1 / I.delta)
        assert inlsef_control(0.1, 0.0, 0.0, I) == pytest.approx(want, rel=1e-14)
        assert inlsef_control(1e4, 1e4, 0.0, I) == pytest.approx(I.delta)

    @given(errors, errors, errors)
    def test_saturation_bound(self, e0, e1, ie):
        assert abs(inlsef_control(e0, e1, ie, I)) <= I.delta

    def test_control_law(self):
        assert control_law(2.5, 0.0, 1.0) == 2.5
        assert control_law(0.0, 1.477, 1.477) == -1.0
        with pytest.raises(ValueError):
            control_law(1.0, 0.0, 0.0)


class TestClosedLoop:
    def test_nominal_scenario(self, nominal_run):
        cfg, traj = nominal_run
        t, y = traj.times, traj["y"]
        s = summarize(traj, cfg)
        assert s.settling_time is not None and s.settling_time < 5.0
        assert s.disturbance_events == 1
        assert s.recovery_time[0] is not None and s.recovery_time[0] < 10.0
        assert np.max(np.abs(traj["u0"])) <= I.delta
        assert abs(s.z3_shift[0]) > 0

    def test_rejection_property(self, nominal_run):
        _, traj = nominal_run
        t, y = traj.times, traj["y"]
        after = (t >= 5.0) & (t <= 5.5)
        late = t >= 8.0
        assert np.max(np.abs(y[late] - 1)) < np.max(np.abs(y[after] - 1))

    def test_z3_tracks_load(self, nominal_run):
        cfg, traj = nominal_run
        s = summarize(traj, cfg)
        m = cfg.motor
        assert s.z3_shift[0] == pytest.approx(m.b0 * m.Ra / m.Kt * 2.0, rel=0.01)

    def test_larger_load_larger_dip(self, nominal_run):
        cfg, traj = nominal_run
        cfg4 = replace(cfg, disturbance=DisturbanceSchedule(((5.0, 4.0),)))
        s2, s4 = summarize(traj, cfg), summarize(simulate_iadrc(cfg4), cfg4)
        assert s4.peak_deviation[0] > s2.peak_deviation[0]
        assert s4.recovery_time[0] is not None

    def test_zero_everything(self):
        cfg = IadrcConfig(reference=0.0, disturbance=DisturbanceSchedule(()), tf=2.0)
        traj = simulate_iadrc(cfg)
        for name, values in traj.channels.items():
            assert np.max(np.abs(values)) < 1e-9, name

    def test_kernel_matches_generic(self):
        cfg = IadrcConfig(tf=6.0)
        a = simulate_iadrc(cfg)
        b = simulate_iadrc(cfg, use_kernel=False)
        np.testing.assert_allclose(a.states, b.states, rtol=0, atol=1e-12)

    def test_divergence_bound(self):
        with pytest.raises(IntegrationDiverged) as info:
            simulate_iadrc(IadrcConfig(h=0.1, tf=2.0))
        assert "exceeded" in str(info.value)
        assert info.value.t < 2.0

    def test_summary_without_events(self):
        cfg = IadrcConfig(disturbance=DisturbanceSchedule(()), tf=3.0)
        s = summarize(simulate_iadrc(cfg), cfg)
        assert s.disturbance_events == 0
        assert ("disturbance_events", 0) in s.rows()
