import pytest
from hypothesis import given, strategies as st

from stepwise_driver.errors import InvalidConfig
from stepwise_driver.reference_models import (
    SvenssonParams,
    combined_load,
    dancy_half_cycle,
    dancy_load,
    ideal_energy,
    svensson_load,
    svensson_total,
)


def test_ideal_energy():
    assert ideal_energy(1, 2.0, 3.0) == 18.0
    assert ideal_energy(4, 1e-9, 1.0) == pytest.approx(0.25e-9, rel=1e-15)
    assert ideal_energy(10, 1.0, 1.0) == pytest.approx(0.1, rel=1e-15)


class TestSvensson:
    def test_full_settling(self):
        assert svensson_load(4, 1.0, 1.0, 1e4, 1.0) == 0.25

    # reference values: mpmath coth at 40 digits
    def test_two_step_two_tau(self):
        assert svensson_load(2, 1.0, 1.0, 2.0, 1.0) == pytest.approx(0.6565176427496657, rel=1e-14)

    def test_short_on_time_exceeds_conventional(self):
        e = svensson_load(4, 1.0, 1.0, 0.5, 1.0)
        assert e == pytest.approx(1.0207470412683991, rel=1e-14)
        assert e > 1.0

    def test_total_reduces_to_load(self):
        p = SvenssonParams.from_timing(3.0, 1.5)
        assert p.m == 2.0
        assert svensson_total(3, 1.0, 2.0, p) == pytest.approx(svensson_load(3, 1.0, 2.0, 3.0, 1.5), rel=1e-15)

    def test_total_limits(self):
        assert svensson_total(5, 1.0, 1.0, SvenssonParams(m=1e4)) == pytest.approx(0.2, rel=1e-15)
        assert svensson_total(1, 1.0, 1.0, SvenssonParams(m=1e4)) == pytest.approx(1.0, rel=1e-15)

    def test_total_drive_term(self):
        p = SvenssonParams(m=1e4, rho_bar=1e-6, t_total=1.0)
        assert svensson_total(2, 1.0, 1.0, p) == pytest.approx(0.5 + 2 * 4 * 1e4 * 1e-6, rel=1e-12)

    def test_params_validation(self):
        with pytest.raises(InvalidConfig):
            SvenssonParams(m=0.0)
        with pytest.raises(InvalidConfig):
            SvenssonParams(m=1.0, rho_bar=1.0)


class TestDancy:
    def test_huge_tank(self):
        assert dancy_load(4, 1.0, 1e12, 1.0) == pytest.approx(0.25, rel=1e-11)

    def test_two_step_equal_caps(self):
        assert dancy_load(2, 1.0, 1.0, 1.0) == pytest.approx(2 / 3, rel=1e-15)

    @given(ct=st.floats(1e-3, 1e3))
    def test_single_step_is_conventional(self, ct):
        assert dancy_load(1, 1.0, ct, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_half_cycle(self):
        assert dancy_half_cycle(3, 1.0, 2.0, 1.0) == dancy_load(3, 1.0, 2.0, 1.0) / 2


class TestCombined:
    def test_full_settling_is_dancy(self):
        assert combined_load(3, 1.0, 2.0, 1.0, 1e4, 1.0) == pytest.approx(dancy_load(3, 1.0, 2.0, 1.0), rel=1e-15)

    def test_huge_tank_is_svensson(self):
        assert combined_load(3, 1.0, 1e12, 1.0, 1.0, 1.0) == pytest.approx(
            svensson_load(3, 1.0, 1.0, 1.0, 1.0), rel=1e-10
        )

    def test_two_step_six_tau(self):
        assert combined_load(2, 1.0, 1.0, 1.0, 6.0, 1.0) == pytest.approx(0.6688718239476179, rel=1e-14)

    @given(n=st.integers(1, 30), ct=st.floats(1e-2, 1e3), t=st.floats(0.01, 100))
    def test_never_below_dancy(self, n, ct, t):
        assert combined_load(n, 1.0, ct, 1.0, t, 1.0) >= dancy_load(n, 1.0, ct, 1.0) * (1 - 1e-15)

    @pytest.mark.parametrize("n", [2, 4, 9])
    @pytest.mark.parametrize("ct", [0.5, 1.0, 4.0])
    def test_sixty_tau_matches_dancy(self, n, ct):
        assert combined_load(n, 1.0, ct, 1.0, 60.0, 1.0) == pytest.approx(dancy_load(n, 1.0, ct, 1.0), rel=1e-9)
