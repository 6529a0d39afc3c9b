import math

import numpy as np
import pytest

from apps.core.exceptions import RegimeValidityError
from apps.core.models import FieldSchedule, IntegratorOptions, UnitsConvention, Validity
from apps.ising.adiabatic import (
    TransitionChannel,
    channel_bounds,
    channel_matrix_element,
    duration_for_target,
    p0n_bound,
    pe_regime1,
    pe_regime2,
    pe_regime3,
    pe_sum,
    regime_estimates,
    theta_prime,
)
from apps.ising.dynamics import extract_p0n, evolve_sweep, sweep_report
from apps.ising.models import IsingParams
from apps.ising.spectrum import bogoliubov_angle

FIG6_COEFFICIENT = 5 / math.sqrt(0.05 * 2 ** 6 * math.pi ** 4)


class TestThetaPrime:
    """Test the derivative of the Bogoliubov angle along the schedule."""

    def test_vanishes_without_momentum(self):
        """Test theta' = 0 when sin(2 pi k / N) = 0."""
        assert theta_prime(0, 1.3, 9, -4.0) == 0.0

    @pytest.mark.parametrize('g', [0.2, 1.0, 2.0, 7.5])
    def test_matches_angle_finite_differences(self, g):
        """Test theta' equals -(d theta / dg)(dg/ds) from finite differences."""
        k, N, dg_ds, h = np.arange(1, 9), 17, -3.0, 1e-6
        dtheta = (bogoliubov_angle(k, g + h, N) - bogoliubov_angle(k, g - h, N)) / (2 * h)
        assert np.allclose(theta_prime(k, g, N, dg_ds), -dtheta * dg_ds, atol=1e-6)

    def test_large_field_suppression(self):
        """Test theta' falls off as dg/ds / g^2."""
        q = 2 * math.pi * 3 / 11
        value = theta_prime(3, 1e3, 11, 2.0)
        assert value * 1e6 == pytest.approx(2.0 * math.sin(q), rel=1e-2)


class TestMatrixElement:
    """Test the channel matrix element and transition channel."""

    def test_zero_ramp(self):
        """Test a stationary schedule has no coupling."""
        schedule = FieldSchedule(2.0, 2.0, 10.0)
        assert channel_matrix_element(2, 0.5, IsingParams(9), schedule) == 0.0

    def test_sign_follows_ramp_direction(self):
        """Test reversing the ramp flips the sign."""
        params = IsingParams(9)
        down = channel_matrix_element(2, 0.25, params, FieldSchedule(5.0, 1.0, 10.0))
        up = channel_matrix_element(2, 0.75, params, FieldSchedule(1.0, 5.0, 10.0))
        assert down == pytest.approx(-up, rel=1e-12)

    @pytest.mark.parametrize('n', [1, 3, 5])
    def test_ratio_to_gap(self, n):
        """Test matrix_element / (hbar omega) = -theta'/2."""
        params = IsingParams(11, coupling=0.7)
        schedule = FieldSchedule(4.0, 0.5, 20.0)
        units = UnitsConvention(hbar=1.5)
        channel = TransitionChannel(n, params, schedule, units)
        s = 0.4
        ratio = channel.matrix_element(s) / (units.hbar * channel.angular_gap(s))
        expected = -theta_prime(n, schedule.field(s), 11, schedule.dg_ds) / 2
        assert ratio == pytest.approx(expected, rel=1e-12)
        assert channel.coupling(s) == pytest.approx(-expected, rel=1e-12)
        assert channel.adiabatic_ratio(s) > 0


class TestBounds:
    """Test the per-channel bound and its sum."""

    def test_zero_ramp(self):
        """Test a stationary schedule gives a zero bound."""
        schedule = FieldSchedule(2.0, 2.0, 10.0)
        assert p0n_bound(1, IsingParams(9), schedule) == 0.0
        assert pe_sum(IsingParams(9), schedule) == 0.0

    def test_inverse_square_duration(self):
        """Test doubling T quarters the bound."""
        params = IsingParams(21)
        short = p0n_bound(4, params, FieldSchedule(5.0, 1.2, 100.0))
        long = p0n_bound(4, params, FieldSchedule(5.0, 1.2, 200.0))
        assert long == pytest.approx(short / 4, rel=1e-12)

    def test_maximum_found_between_grid_points(self):
        """Test the refined maximum is at least the grid maximum."""
        params = IsingParams(31)
        schedule = FieldSchedule(3.0, 0.2, 50.0)
        s = np.linspace(0, 1, 100001)
        g = schedule.field(s)
        ratio = theta_prime(15, g, 31, schedule.dg_ds) / (2 * np.sqrt(1 + g * g + 2 * g * np.cos(2 * np.pi * 15 / 31)))
        brute = np.max(ratio ** 2) / (16 * 50.0 ** 2)
        assert p0n_bound(15, params, schedule) == pytest.approx(brute, rel=1e-6)

    @pytest.mark.parametrize('N', [11, 51])
    def test_bounds_exceed_numeric_probabilities(self, N):
        """Test every channel bound is above the simulated probability."""
        params = IsingParams(N)
        schedule = FieldSchedule.from_rate(10.0, 1.5, -0.01)
        opts = IntegratorOptions(method='magnus4', step=0.05)
        numeric = extract_p0n(evolve_sweep(params, schedule, opts), params, schedule.g_end)
        bounds = channel_bounds(params, schedule)
        for n, p in numeric.items():
            assert p <= 1.05 * bounds[n]

    @pytest.mark.slow
    def test_sum_tracks_numeric_excitation(self):
        """Test pe_sum is within a factor 2 of the simulated p_E above the critical point."""
        params = IsingParams(51)
        opts = IntegratorOptions(method='magnus4', step=0.05)
        for g1 in (1.2, 1.5, 2.0, 3.0):
            schedule = FieldSchedule.from_rate(5.0, g1, -0.01)
            numeric = sweep_report(params, schedule, opts).p_total
            assert 0.5 <= pe_sum(params, schedule) / numeric <= 2.0

    @pytest.mark.slow
    def test_excitation_rises_across_critical_point(self):
        """Test p_E grows at least tenfold between g1 = 1.5 and g1 = 0.8."""
        params = IsingParams(51)
        opts = IntegratorOptions(method='magnus4', step=0.05)
        above = sweep_report(params, FieldSchedule.from_rate(5.0, 1.5, -0.01), opts).p_total
        below = sweep_report(params, FieldSchedule.from_rate(5.0, 0.8, -0.01), opts).p_total
        assert below >= 10 * above

    def test_sum_rises_across_critical_point(self):
        """Test the analytic sum increases sharply as g1 crosses 1."""
        params = IsingParams(51)
        values = [pe_sum(params, FieldSchedule.from_rate(5.0, g1, -0.01)) for g1 in (2.0, 1.5, 1.0, 0.8)]
        assert values == sorted(values)
        assert values[-1] > 10 * values[1]


class TestRegimes:
    """Test the closed-form regime estimates."""

    def test_fig6_coefficient(self):
        """Test the regime-3 inversion gives T = 0.2832 N^2."""
        for N in (11, 51, 101):
            T = duration_for_target(0.05, 'R3', IsingParams(N), 5.0, 0.0)
            assert T / N ** 2 == pytest.approx(FIG6_COEFFICIENT, rel=1e-12)
            assert T / N ** 2 == pytest.approx(0.2832, abs=5e-4)

    def test_quarter_target_doubles_duration(self):
        """Test T scales as 1/sqrt(p_target)."""
        params = IsingParams(21)
        T = duration_for_target(0.04, 'R3', params, 5.0, 0.0)
        assert duration_for_target(0.01, 'R3', params, 5.0, 0.0) == pytest.approx(2 * T)

    def test_regime1_duration_grows_as_sqrt_n(self):
        """Test the regime-1 duration scales with sqrt(N)."""
        t_small = duration_for_target(0.05, 'R1', IsingParams(101), 50.0, 2.0)
        t_large = duration_for_target(0.05, 'R1', IsingParams(404 + 1), 50.0, 2.0)
        assert t_large / t_small == pytest.approx(math.sqrt(405 / 101), rel=1e-12)

    def test_regime2_equals_regime3_at_critical_point(self):
        """Test R2 and R3 coincide at g1 = 1."""
        params = IsingParams(101)
        schedule = FieldSchedule(50.0, 1.0, 400.0)
        r2 = pe_regime2(params, schedule, override=True)
        r3 = pe_regime3(params, schedule)
        assert r2.p_e_bound == pytest.approx(r3.p_e_bound, rel=1e-14)
        assert r2.validity is Validity.INVALID
        assert r3.validity is Validity.VALID

    def test_scaling_exponents(self):
        """Test R3 grows as N^4, R1 as N, both as 1/T^2."""
        schedule = FieldSchedule(50.0, 0.0, 100.0)
        r3 = [pe_regime3(IsingParams(N), schedule).p_e_bound for N in (11, 101)]
        assert math.log(r3[1] / r3[0]) / math.log(101 / 11) == pytest.approx(4.0, rel=1e-12)
        schedule = FieldSchedule(50.0, 3.0, 100.0)
        r1 = [pe_regime1(IsingParams(N), schedule).p_e_bound for N in (11, 101)]
        assert math.log(r1[1] / r1[0]) / math.log(101 / 11) == pytest.approx(1.0, rel=1e-12)
        slower = pe_regime1(IsingParams(11), schedule.with_duration(300.0)).p_e_bound
        assert slower == pytest.approx(r1[0] / 9, rel=1e-12)

    def test_regime1_against_sum(self):
        """Test R1 agrees with pe_sum within a factor 2 far from the critical point."""
        params = IsingParams(501)
        schedule = FieldSchedule.from_rate(5.0, 1.08, -1e-4)
        estimate = pe_regime1(params, schedule)
        assert estimate.validity is not Validity.INVALID
        assert 0.5 <= estimate.p_e_bound / pe_sum(params, schedule) <= 2.0

    def test_invalid_regime_rejected(self):
        """Test evaluating R3 above the critical point fails without override."""
        schedule = FieldSchedule(50.0, 2.0, 100.0)
        with pytest.raises(RegimeValidityError):
            pe_regime3(IsingParams(11), schedule)
        with pytest.raises(RegimeValidityError):
            duration_for_target(0.05, 'R3', IsingParams(11), 50.0, 2.0)

    def test_marginal_start_field_is_flagged(self):
        """Test g0 = 5 is marginal for the much-greater-than-one condition."""
        estimate = pe_regime3(IsingParams(11), FieldSchedule(5.0, 0.0, 100.0))
        assert estimate.validity is Validity.MARGINAL
        assert estimate.conditions['g0_large'] is Validity.MARGINAL

    def test_all_regimes_reported(self):
        """Test regime_estimates returns the three regimes with flags."""
        estimates = regime_estimates(IsingParams(51), FieldSchedule(50.0, 3.0, 100.0))
        assert [e.regime for e in estimates] == ['R1', 'R2', 'R3']
        assert estimates[0].validity is Validity.VALID
        assert estimates[2].validity is Validity.INVALID

    def test_p_target_range(self):
        """Test p_target outside (0, 1) is rejected."""
        with pytest.raises(ValueError):
            duration_for_target(1.5, 'R3', IsingParams(11), 50.0, 0.0)
