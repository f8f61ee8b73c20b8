import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stepwise_driver.errors import InvalidConfig, SingularSystem
from stepwise_driver.model_core import (
    DriverConfig,
    StepCoefficients,
    SwitchQuality,
    build_system,
    coth,
    derive_coefficients,
    falling_trajectory,
    falling_trajectory_closed_form,
    gauss_solve,
    load_driver_energy,
    rising_trajectory,
    rising_trajectory_closed_form,
    solve_steady_state,
    solve_tank_voltages,
    switch_driver_energy,
    tank_ripple,
    total_energy,
)
from stepwise_driver.sweep_opt import driver_at

LN5 = 1.609437912434100374600759333226187639526  # t/tau giving r = 0.5 when c_tank = c_load


def coeffs(r, f):
    return StepCoefficients(c_series=0.5, tau_r=1.0, tau_f=1.0, r=r, f=f)


def unit_driver(n=2, ct=1.0, r_sr=1.0, r_sf=1.0, t_sr=1.0, t_sf=1.0, cl=1.0, v_dd=1.0):
    return DriverConfig(n_steps=n, c_load=cl, v_dd=v_dd, c_tank=ct, r_sr=r_sr, r_sf=r_sf, t_sr=t_sr, t_sf=t_sf)


class TestConfig:
    def test_single_step_needs_no_tank(self):
        cfg = DriverConfig(n_steps=1, c_load=1e-9, v_dd=1.0)
        assert cfg.c_tank is None

    @pytest.mark.parametrize("field", ["c_load", "v_dd", "c_tank", "r_sr", "r_sf", "t_sr", "t_sf"])
    def test_non_positive_rejected(self, field):
        kwargs = dict(n_steps=3, c_load=1.0, v_dd=1.0, c_tank=1.0, r_sr=1.0, r_sf=1.0, t_sr=1.0, t_sf=1.0)
        kwargs[field] = 0.0
        with pytest.raises(InvalidConfig, match=field):
            DriverConfig(**kwargs)

    def test_missing_tank_for_multi_step(self):
        with pytest.raises(InvalidConfig, match="c_tank"):
            DriverConfig(n_steps=2, c_load=1.0, v_dd=1.0)

    def test_zero_steps(self):
        with pytest.raises(InvalidConfig):
            DriverConfig(n_steps=0, c_load=1.0, v_dd=1.0)


class TestCoth:
    def test_matches_definition(self):
        for x in (1e-6, 0.01, 0.5, 1.0, 3.0, 20.0):
            assert coth(x) == pytest.approx(math.cosh(x) / math.sinh(x), rel=1e-12)

    def test_large_argument_saturates(self):
        assert coth(350.0) == 1.0
        assert coth(700.0) == 1.0
        assert coth(1e6) == 1.0

    def test_small_argument_no_cancellation(self):
        assert coth(1e-10) == pytest.approx(1e10, rel=1e-9)


class TestDeriveCoefficients:
    def test_full_settling_equal_caps(self):
        c = derive_coefficients(unit_driver(t_sr=1000.0))
        assert c.c_series == 0.5
        assert c.r == pytest.approx(2 / 3, rel=1e-15)

    def test_unit_example(self):
        c = derive_coefficients(unit_driver())
        assert c.tau_r == 0.5
        # mpmath, 40 digits: coth(1) = 1.31303528549933..., r = 0.55156124538667...
        assert c.r == pytest.approx(0.5515612453866766, rel=1e-14)

    def test_huge_tank_full_settling_is_ideal(self):
        c = derive_coefficients(unit_driver(ct=1e9, t_sr=1e6, t_sf=1e6))
        assert c.r == pytest.approx(1.0, abs=1e-8)
        assert c.f == pytest.approx(1.0, abs=1e-8)

    def test_falling_uses_own_timing(self):
        c = derive_coefficients(unit_driver(r_sf=2.0, t_sf=2.0))
        assert c.tau_f == 1.0
        assert c.f == pytest.approx(c.r, rel=1e-15)

    def test_r_half_at_ln5(self):
        c = derive_coefficients(unit_driver(n=3, t_sr=LN5 * 0.5, t_sf=LN5 * 0.5))
        assert c.r == pytest.approx(0.5, rel=1e-14)

    def test_rejects_single_step(self):
        with pytest.raises(InvalidConfig):
            derive_coefficients(DriverConfig(n_steps=1, c_load=1.0, v_dd=1.0))

    @given(
        ratio=st.floats(0.01, 1e4),
        t1=st.floats(0.01, 50.0),
        t2=st.floats(0.01, 50.0),
    )
    def test_strictly_increasing_in_on_time(self, ratio, t1, t2):
        lo, hi = sorted((t1, t2))
        if hi - lo < 1e-6 * hi:
            return
        c_lo = derive_coefficients(driver_at(2, ratio, lo))
        c_hi = derive_coefficients(driver_at(2, ratio, hi))
        assert 0 < c_lo.r < 1 and 0 < c_hi.r < 1
        assert c_lo.r <= c_hi.r
        assert c_lo.f <= c_hi.f

    @given(r1=st.floats(0.01, 100.0), r2=st.floats(0.01, 100.0))
    def test_strictly_increasing_in_tank(self, r1, r2):
        lo, hi = sorted((r1, r2))
        if hi - lo < 1e-6 * hi:
            return
        # fixed absolute on-time and resistance
        a = derive_coefficients(unit_driver(ct=lo, t_sr=0.3))
        b = derive_coefficients(unit_driver(ct=hi, t_sr=0.3))
        assert a.r < b.r


def eq48(r, f, v_dd=1.0):
    """N = 5 system written out entry by entry."""
    a = np.array([
        [-r**2 * (1 - r) ** 2, -r**2 * (1 - r), -r**2, r + f],
        [-r**2 * (1 - r), -r**2, r + f, -f**2],
        [-r**2, r + f, -f**2, -f**2 * (1 - f)],
        [r + f, -f**2, -f**2 * (1 - f), -f**2 * (1 - f) ** 2],
    ])
    b = np.array([f, f * (1 - f), f * (1 - f) ** 2, f * (1 - f) ** 3]) * v_dd
    return a, b


def eq51(r, f):
    """N = 6 system; top-left entry carries the minus sign of the general pattern."""
    R = lambda p: -r**2 * (1 - r) ** p  # noqa: E731
    F = lambda q: -f**2 * (1 - f) ** q  # noqa: E731
    s = r + f
    a = np.array([
        [R(3), R(2), R(1), R(0), s],
        [R(2), R(1), R(0), s, F(0)],
        [R(1), R(0), s, F(0), F(1)],
        [R(0), s, F(0), F(1), F(2)],
        [s, F(0), F(1), F(2), F(3)],
    ])
    b = np.array([f * (1 - f) ** i for i in range(5)])
    return a, b


class TestBuildSystem:
    def test_two_steps(self):
        sys_ = build_system(coeffs(0.3, 0.7), 2, 2.0)
        assert sys_.a.tolist() == [[1.0]]
        assert sys_.b.tolist() == [0.7 * 2.0]

    def test_ideal_five_steps(self):
        sys_ = build_system(coeffs(1.0, 1.0), 5, 1.0)
        expected = np.zeros((4, 4))
        for i in range(4):
            for j in range(4):
                if i + j == 3:
                    expected[i, j] = 2.0
                elif i + j in (2, 4):
                    expected[i, j] = -1.0
        np.testing.assert_array_equal(sys_.a, expected)
        np.testing.assert_array_equal(sys_.b, [1.0, 0.0, 0.0, 0.0])

    @pytest.mark.parametrize("r,f", [(0.3, 0.6), (0.9, 0.2), (0.5, 0.5)])
    def test_matches_n5_table(self, r, f):
        sys_ = build_system(coeffs(r, f), 5, 1.7)
        a, b = eq48(r, f, 1.7)
        np.testing.assert_allclose(sys_.a, a, rtol=1e-15)
        np.testing.assert_allclose(sys_.b, b, rtol=1e-15)

    @pytest.mark.parametrize("r,f", [(0.3, 0.6), (0.8, 0.25)])
    def test_matches_n6_table(self, r, f):
        sys_ = build_system(coeffs(r, f), 6, 1.0)
        a, b = eq51(r, f)
        np.testing.assert_allclose(sys_.a, a, rtol=1e-15)
        np.testing.assert_allclose(sys_.b, b, rtol=1e-15)

    @given(n=st.integers(2, 20), r=st.floats(0.01, 0.99), f=st.floats(0.01, 0.99))
    def test_hankel_structure(self, n, r, f):
        a = build_system(coeffs(r, f), n, 1.0).a
        for i in range(n - 1):
            for j in range(n - 1):
                if i + 1 < n - 1 and j > 0:
                    assert a[i + 1, j - 1] == a[i, j]
                s = i + j
                if s == n - 2:
                    assert a[i, j] == r + f
                elif s < n - 2:
                    assert a[i, j] < 0
                else:
                    assert a[i, j] < 0


class TestSolve:
    def test_symmetric_two_step(self):
        v = solve_tank_voltages(build_system(coeffs(0.4, 0.4), 2, 3.0))
        assert v.tolist() == pytest.approx([1.5], rel=1e-15)

    def test_ideal_five_steps_evenly_spaced(self):
        v = solve_tank_voltages(build_system(coeffs(1.0, 1.0), 5, 1.0))
        np.testing.assert_allclose(v, [0.2, 0.4, 0.6, 0.8], rtol=1e-14)

    def test_three_steps_half(self):
        # elimination by hand: [[-0.25, 1], [1, -0.25]] V = [0.5, 0.25]
        v = solve_tank_voltages(build_system(coeffs(0.5, 0.5), 3, 1.0))
        np.testing.assert_allclose(v, [0.4, 0.6], rtol=1e-14)

    def test_singular(self):
        with pytest.raises(SingularSystem):
            gauss_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 2.0]))

    def test_needs_pivoting(self):
        a = np.array([[0.0, 1.0], [1.0, 1.0]])
        np.testing.assert_allclose(gauss_solve(a, np.array([2.0, 3.0])), [1.0, 2.0])

    @given(n=st.integers(2, 40), r=st.floats(0.02, 0.999), f=st.floats(0.02, 0.999))
    @settings(max_examples=200)
    def test_residual_and_numpy_agreement(self, n, r, f):
        sys_ = build_system(coeffs(r, f), n, 1.0)
        v = solve_tank_voltages(sys_)
        assert np.max(np.abs(sys_.a @ v - sys_.b)) <= 1e-10
        np.testing.assert_allclose(v, np.linalg.solve(sys_.a, sys_.b), rtol=1e-8, atol=1e-12)


class TestTrajectories:
    def test_rising_three_step(self):
        np.testing.assert_allclose(rising_trajectory([0.4, 0.6], 0.5, 3, 1.0), [0, 0.2, 0.4, 1], atol=1e-15)

    def test_falling_three_step(self):
        np.testing.assert_allclose(falling_trajectory([0.4, 0.6], 0.5, 3, 1.0), [1, 0.8, 0.6, 0], atol=1e-15)

    @pytest.mark.parametrize("n", [2, 5, 9])
    def test_ideal_staircases(self, n):
        v = [k / n for k in range(1, n)]
        np.testing.assert_allclose(rising_trajectory(v, 1.0, n, 1.0), np.arange(n + 1) / n, atol=1e-15)
        np.testing.assert_allclose(falling_trajectory(v, 1.0, n, 1.0), 1 - np.arange(n + 1) / n, atol=1e-15)

    def test_two_step_rising(self):
        assert rising_trajectory([0.7], 0.3, 2, 1.0).tolist() == pytest.approx([0.0, 0.21, 1.0])

    def test_four_step_falling_second_step(self):
        f, v = 0.35, [0.2, 0.45, 0.8]
        out = falling_trajectory(v, f, 4, 1.0)
        assert out[2] == pytest.approx((1 - f) ** 2 + f * (1 - f) * v[2] + f * v[1], rel=1e-15)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            rising_trajectory([0.5], 0.5, 3, 1.0)

    @given(
        n=st.integers(2, 64),
        r=st.floats(0.01, 1.0),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=150)
    def test_closed_forms_match_recurrences(self, n, r, seed):
        v = np.sort(np.random.default_rng(seed).uniform(0.01, 1.0, n - 1))
        for rec, closed in ((rising_trajectory, rising_trajectory_closed_form),
                            (falling_trajectory, falling_trajectory_closed_form)):
            a, b = rec(v, r, n, 1.0), closed(v, r, n, 1.0)
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


def charge_balance_oracle(cfg):
    """Tank averages found from the step-size balance alone, without the Hankel system.

    The balance residual is affine in V, so its Jacobian from unit probes is exact.
    """
    c = derive_coefficients(cfg)
    n = cfg.n_steps

    def resid(v):
        up = rising_trajectory(v, c.r, n, cfg.v_dd)
        down = falling_trajectory(v, c.f, n, cfg.v_dd)
        return np.array([(up[k] - up[k - 1]) - (down[n - k - 1] - down[n - k]) for k in range(1, n)])

    zero = np.zeros(n - 1)
    base = resid(zero)
    jac = np.column_stack([resid(np.eye(n - 1)[j]) - base for j in range(n - 1)])
    return np.linalg.solve(jac, -base)


class TestSteadyState:
    @pytest.mark.parametrize("n,ratio,t,mode", [(2, 1, 1, "equal"), (4, 4, 0.5, "double"), (9, 0.5, 3, "equal")])
    def test_matches_charge_balance_oracle(self, n, ratio, t, mode):
        cfg = driver_at(n, ratio, t, mode)
        sol = solve_steady_state(cfg)
        np.testing.assert_allclose(sol.v_tank_avg, charge_balance_oracle(cfg), rtol=1e-10, atol=1e-13)

    def test_ripple_two_step_full_settling(self):
        cfg = unit_driver(t_sr=1e3, t_sf=1e3)
        sol = solve_steady_state(cfg)
        assert sol.v_tank_after_rise[0] == pytest.approx(1 / 3, rel=1e-12)
        assert sol.v_tank_after_fall[0] == pytest.approx(2 / 3, rel=1e-12)
        assert sol.ripple[0] == pytest.approx(1 / 3, rel=1e-12)

    def test_ripple_vanishes_for_huge_tank(self):
        sol = solve_steady_state(driver_at(5, 1e8, 4.0))
        assert np.max(np.abs(sol.ripple)) < 1e-7

    @given(n=st.integers(2, 12), ratio=st.floats(0.1, 100), t=st.floats(0.1, 20))
    def test_ripple_consistency(self, n, ratio, t):
        sol = solve_steady_state(driver_at(n, ratio, t))
        np.testing.assert_allclose((sol.v_tank_after_rise + sol.v_tank_after_fall) / 2, sol.v_tank_avg, atol=1e-14)
        assert np.all(sol.ripple >= -1e-12)

    def test_tank_ripple_direct(self):
        cfg = unit_driver(n=3, t_sr=LN5 * 0.5, t_sf=LN5 * 0.5)
        c = derive_coefficients(cfg)
        rise, fall = tank_ripple([0.4, 0.6], [0.0, 0.2, 0.4, 1.0], c, cfg)
        np.testing.assert_allclose((rise + fall) / 2, [0.4, 0.6], atol=1e-15)


class TestEnergy:
    def test_conventional(self):
        cfg = DriverConfig(n_steps=1, c_load=2e-9, v_dd=3.0)
        rep = load_driver_energy(cfg)
        assert rep.e_load_driver == 2e-9 * 9.0
        assert rep.normalized == 1.0

    @pytest.mark.parametrize("n", [2, 3, 5, 9])
    def test_ideal_regime(self, n):
        rep = load_driver_energy(driver_at(n, 1e9, 200.0))
        assert rep.normalized == pytest.approx(1 / n, rel=1e-6)

    def test_three_step_half_settling(self):
        cfg = unit_driver(n=3, t_sr=LN5 * 0.5, t_sf=LN5 * 0.5, cl=1.0, v_dd=1.0)
        assert load_driver_energy(cfg).e_load_driver == pytest.approx(0.6, rel=1e-12)

    def test_switch_energy(self):
        cfg = driver_at(5, 1, 1, r_sr=2.0, r_sf=4.0)
        assert switch_driver_energy(cfg, SwitchQuality()) == 0.0
        q = SwitchQuality(rho_r=2.0e-9, rho_f=4.0e-9)
        assert switch_driver_energy(cfg, q) == pytest.approx(10e-9, rel=1e-15)
        cfg2 = driver_at(2, 1, 1, r_sr=1.0, r_sf=1.0)
        assert switch_driver_energy(cfg2, SwitchQuality(1e-9, 2e-9)) == pytest.approx(6e-9, rel=1e-15)

    def test_switch_energy_needs_resistance(self):
        with pytest.raises(InvalidConfig):
            switch_driver_energy(DriverConfig(n_steps=1, c_load=1.0, v_dd=1.0), SwitchQuality(rho_r=1.0))

    def test_total_conventional(self):
        cfg = DriverConfig(n_steps=1, c_load=1.0, v_dd=1.0, r_sr=2.0, r_sf=1.0)
        rep = total_energy(cfg, SwitchQuality(rho_r=0.6, rho_f=0.5))
        assert rep.e_total == pytest.approx(1.0 + 0.3 + 0.5, rel=1e-15)

    def test_total_three_step(self):
        cfg = unit_driver(n=3, t_sr=LN5 * 0.5, t_sf=LN5 * 0.5)
        rep = total_energy(cfg, SwitchQuality(rho_r=0.01, rho_f=0.01))
        assert rep.e_total == pytest.approx(0.66, rel=1e-12)
        assert rep.e_total == rep.e_load_driver + rep.e_switch_driver
        assert total_energy(cfg).e_total == rep.e_load_driver
