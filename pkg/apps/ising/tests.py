import math

import numpy as np
import pytest

from apps.ising.models import FermionMode, IsingParams, Sector
from apps.ising.oracle import dense_sector_spectrum, dense_spectrum
from apps.ising.serializers import IsingParamsSerializer
from apps.ising.spectrum import (
    bogoliubov_angle,
    bogoliubov_angle_derivative,
    calibrate_offset,
    critical_gap,
    all_levels,
    enumerate_levels,
    first_gap,
    lambda_even,
    lambda_odd,
    min_two_fermion_gap,
    sector_modes,
    sector_spectrum,
)


class TestIsingParams:
    """Test parameter validation."""

    @pytest.mark.parametrize('n_sites', [1, 2, 4, 10])
    def test_even_or_small_rings_rejected(self, n_sites):
        """Test only odd N >= 3 is accepted."""
        with pytest.raises(ValueError):
            IsingParams(n_sites)

    def test_coupling_must_be_positive(self):
        """Test J > 0."""
        with pytest.raises(ValueError):
            IsingParams(5, coupling=0.0)

    def test_serializer_builds_params(self):
        """Test the serializer validates and builds parameters."""
        serializer = IsingParamsSerializer(data={'n_sites': 7, 'field': 1.5})
        assert serializer.is_valid(), serializer.errors
        params = serializer.save()
        assert params == IsingParams(7, 1.0, 1.5)

    def test_serializer_rejects_even_ring(self):
        """Test the serializer reports an even ring."""
        serializer = IsingParamsSerializer(data={'n_sites': 8})
        assert not serializer.is_valid()
        assert 'n_sites' in serializer.errors


class TestModes:
    """Test momentum modes."""

    def test_partner_is_involution(self):
        """Test k -> N-k is an involution without fixed points for k != 0."""
        for mode in sector_modes(IsingParams(9), Sector.EVEN):
            partner = FermionMode(mode.partner, 9, mode.sector)
            assert partner.partner == mode.index
            assert mode.is_paired == (mode.index != 0)

    def test_momentum(self):
        """Test the momentum grid is 2 pi k / N."""
        assert FermionMode(2, 7, Sector.ODD).momentum == pytest.approx(4 * math.pi / 7)


class TestSingleFermionEnergies:
    """Test the single-fermion energies."""

    def test_lambda_even_values(self):
        """Test closed-form values of Lambda_k."""
        assert lambda_even(0, 3.0, 7) == pytest.approx(8.0)
        assert lambda_even(250, 1.0, 501) == pytest.approx(4 * math.sin(math.pi / 1002), rel=1e-12)
        assert lambda_even(250, 1.0, 501) == pytest.approx(0.01254, abs=1e-5)

    def test_scalar_modes_give_floats(self):
        """Test a scalar k returns a plain float in both sectors."""
        assert type(lambda_even(1, 0.5, 5)) is float
        assert type(lambda_odd(1, 0.5, 5)) is float
        assert lambda_even(np.arange(3), 0.5, 5).shape == (3,)

    def test_lambda_even_without_field(self):
        """Test every mode costs 2 at g = 0."""
        assert np.allclose(lambda_even(np.arange(5), 0.0, 5), 2.0)

    def test_lambda_odd_zero_mode(self):
        """Test the signed zero-mode energy 2 (g - 1)."""
        assert lambda_odd(0, 2.0, 9) == 2.0
        assert lambda_odd(0, 1.0, 9) == 0.0
        assert lambda_odd(0, 0.25, 9) == -1.5

    def test_lambda_odd_one_mode(self):
        """Test a paired odd-sector energy."""
        expected = 2 * math.sqrt(2 - 2 * math.cos(2 * math.pi / 9))
        assert lambda_odd(1, 1.0, 9) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize('N', [5, 9, 51])
    @pytest.mark.parametrize('g', [0.0, 0.4, 1.0, 3.0])
    def test_momentum_symmetry_is_exact(self, N, g):
        """Test Lambda(k) == Lambda(N - k) bit for bit."""
        k = np.arange(1, N)
        assert np.array_equal(lambda_even(k, g, N), lambda_even(N - k, g, N))
        assert np.array_equal(lambda_odd(k, g, N), lambda_odd(N - k, g, N))

    def test_critical_softening(self):
        """Test the odd-sector minimum at g = 1 is zero at k = 0."""
        values = lambda_odd(np.arange(11), 1.0, 11)
        assert int(np.argmin(values)) == 0
        assert values[0] == 0.0


class TestBogoliubovAngle:
    """Test the Bogoliubov angle."""

    def test_field_dominated_limit(self):
        """Test theta vanishes for large g."""
        assert abs(bogoliubov_angle(1, 1e8, 4)) < 1e-7

    def test_interaction_dominated_limit(self):
        """Test theta at g = 0 is the angle of (cos q, sin q)."""
        assert bogoliubov_angle(2, 0.0, 9) == pytest.approx(4 * math.pi / 9)

    @pytest.mark.parametrize('g', [0.3, 0.99, 1.7, 6.0])
    def test_derivative_matches_finite_differences(self, g):
        """Test d theta / dg against central differences."""
        k, N, h = np.arange(1, 11), 21, 1e-6
        numeric = (bogoliubov_angle(k, g + h, N) - bogoliubov_angle(k, g - h, N)) / (2 * h)
        assert np.allclose(bogoliubov_angle_derivative(k, g, N), numeric, atol=1e-6)


class TestSectorSpectrum:
    """Test sector spectra against the dense oracle."""

    def test_offset_is_zero(self):
        """Test the calibrated additive constant vanishes for both sectors."""
        for sector in Sector:
            assert abs(calibrate_offset(sector)) < 1e-10

    def test_classical_ground_energy(self):
        """Test the g = 0 even-sector ground energy is -N J."""
        spectrum = sector_spectrum(IsingParams(5, field=0.0), Sector.EVEN)
        assert spectrum.ground_energy == pytest.approx(-5.0, abs=1e-12)

    def test_paramagnetic_limit(self):
        """Test the ground energy approaches -g N J for large g."""
        spectrum = sector_spectrum(IsingParams(5, field=200.0), Sector.EVEN)
        assert spectrum.ground_energy / (-200.0 * 5) == pytest.approx(1.0, rel=1e-2)

    @pytest.mark.parametrize('N', [3, 5, 7, 9, 11])
    @pytest.mark.parametrize('g', [0.0, 0.5, 1.0, 2.0, 5.0])
    def test_full_spectrum_matches_dense(self, N, g):
        """Test the parity-filtered free-fermion spectrum equals dense diagonalization."""
        free = all_levels(IsingParams(N, field=g))
        assert np.max(np.abs(free - dense_spectrum(N, g))) < 1e-8

    @pytest.mark.parametrize('sector', list(Sector))
    def test_sector_blocks_match_dense(self, sector):
        """Test each fermion-parity sector maps onto one Z2 block."""
        params = IsingParams(9, field=0.7)
        free = sorted(level.energy for level in enumerate_levels(params, 512) if level.sector is sector)
        assert np.allclose(free, dense_sector_spectrum(9, 0.7, sector), atol=1e-8)

    def test_coupling_scales_energies(self):
        """Test energies scale with J."""
        base = all_levels(IsingParams(5, coupling=1.0, field=0.8))
        scaled = all_levels(IsingParams(5, coupling=2.5, field=0.8))
        assert np.allclose(scaled, 2.5 * base, atol=1e-10)


class TestEnumerateLevels:
    """Test level enumeration."""

    def test_lowest_levels_sorted(self):
        """Test the lowest 32 levels at N=5, g=1 match the oracle."""
        levels = enumerate_levels(IsingParams(5, field=1.0), 32)
        energies = [level.energy for level in levels]
        assert energies == sorted(energies)
        assert np.allclose(energies, dense_spectrum(5, 1.0), atol=1e-8)

    def test_ferromagnetic_pair(self):
        """Test the two classical ground states at N=3, g=0."""
        levels = enumerate_levels(IsingParams(3, field=0.0), 8)
        assert [level.energy for level in levels[:2]] == pytest.approx([-3.0, -3.0])
        assert {level.sector for level in levels[:2]} == {Sector.EVEN, Sector.ODD}
        assert levels[2].energy == pytest.approx(1.0)

    def test_occupation_parity(self):
        """Test every level obeys the parity of its sector."""
        for level in enumerate_levels(IsingParams(7, field=0.6), 128):
            assert len(level.occupation) % 2 == level.sector.parity

    def test_too_many_levels_rejected(self):
        """Test asking for more than 2^N levels fails."""
        with pytest.raises(ValueError):
            enumerate_levels(IsingParams(5), 33)


class TestGaps:
    """Test the even/odd gap and the two-fermion gap."""

    def test_critical_gap(self):
        """Test the exact gap at g = 1 is 2 tan(pi / 4N)."""
        gap = first_gap(IsingParams(201, field=1.0))
        assert gap.exact == pytest.approx(critical_gap(201), rel=1e-9)
        assert gap.asymptotic == pytest.approx(math.pi / 201, rel=1e-12)

    @pytest.mark.parametrize('N', [101, 201])
    @pytest.mark.parametrize('g', [1.1, 1.15, 1.2])
    def test_asymptotic_form_above_critical(self, N, g):
        """Test the asymptotic form tracks the exact gap within 5%."""
        assert first_gap(IsingParams(N, field=g)).relative_deviation < 0.05

    def test_disordered_gap(self):
        """Test the gap approaches 2 (g - 1) deep in the disordered phase."""
        assert first_gap(IsingParams(201, field=2.0)).exact == pytest.approx(2.0, abs=1e-9)

    def test_asymptotic_degeneracy(self):
        """Test the gap closes in the ordered phase."""
        assert abs(first_gap(IsingParams(201, field=0.5)).exact) < 1e-8

    def test_min_two_fermion_gap_large_chain(self):
        """Test the minimum pair gap at N=501 is about 4 pi / N near g = 1."""
        g_min, gap = min_two_fermion_gap(501)
        assert gap == pytest.approx(4 * math.pi / 501, rel=0.02)
        assert gap == pytest.approx(4 * math.sin(math.pi / 501), rel=1e-8)
        assert abs(g_min - 1.0) < 0.01

    def test_min_two_fermion_gap_small_chain(self):
        """Test the minimum pair gap at N=51."""
        _, gap = min_two_fermion_gap(51)
        assert gap == pytest.approx(4 * math.pi / 51, rel=0.03)

    def test_range_must_contain_critical_point(self):
        """Test a range away from g = 1 is rejected."""
        with pytest.raises(ValueError):
            min_two_fermion_gap(51, g_range=(1.5, 3.0))
