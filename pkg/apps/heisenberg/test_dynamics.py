import numpy as np
import pytest

from apps.core.exceptions import SizeCapError
from apps.core.integrators import RampedOperator, evolve_state
from apps.core.models import FieldSchedule
from apps.ising.dynamics import sweep_report
from apps.ising.models import IsingParams

from .classification import diagonalize_sector
from .dynamics import extremal_energies, tdse_sweep
from .hamiltonian import hamiltonian_terms, sector_basis
from .models import HeisenbergParams
from .perturbative import pe_heisenberg


def log_slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


class TestTdseSweep:
    """Test sector-reduced sweeps of the Heisenberg chain."""

    def test_zero_ramp(self, fig2_anisotropy, tight_options):
        """Test a stationary schedule leaves the ground state unexcited."""
        params = HeisenbergParams(5, **fig2_anisotropy)
        report = tdse_sweep(params, FieldSchedule(10.0, 10.0, 5.0), tight_options)
        assert report.p_ground_loss < 1e-12
        assert report.mean_energy_above_ground == pytest.approx(0.0, abs=1e-6)

    def test_size_cap(self, tight_options):
        """Test N = 15 is refused before any work."""
        with pytest.raises(SizeCapError):
            tdse_sweep(HeisenbergParams(15), FieldSchedule(10.0, 5.0, 1.0), tight_options)

    def test_matches_free_fermion_sweep(self, tight_options):
        """Test the Ising specialization agrees with the mode-pair dynamics."""
        schedule = FieldSchedule.from_rate(5.0, 2.0, -0.1)
        heisenberg = tdse_sweep(HeisenbergParams(9, delta_x=0.0, delta_y=0.0, delta_z=1.0), schedule, tight_options)
        ising = sweep_report(IsingParams(9), schedule, tight_options)
        assert heisenberg.p_ground_loss == pytest.approx(ising.p_ground_loss, abs=1e-6)
        assert heisenberg.mean_energy_above_ground == pytest.approx(ising.mean_energy_above_ground, abs=1e-5)

    def test_within_factor_two_of_estimate(self, fig2_anisotropy, tight_options):
        """Test N=5, g 10 -> 5, rate -6 against the closed form."""
        params = HeisenbergParams(5, **fig2_anisotropy)
        schedule = FieldSchedule.from_rate(10.0, 5.0, -6.0)
        numeric = tdse_sweep(params, schedule, tight_options).p_ground_loss
        assert 0.5 <= numeric / pe_heisenberg(params, schedule).p_e_bound <= 2.0

    def test_two_flip_group_carries_the_excitation(self, fig2_anisotropy, tight_options):
        """Test the loss from the ground state goes into the n = 2 states."""
        params = HeisenbergParams(7, **fig2_anisotropy)
        report = tdse_sweep(params, FieldSchedule.from_rate(10.0, 5.0, -6.0), tight_options)
        assert len(report.channels) == 3
        assert report.p_total == pytest.approx(report.p_ground_loss, rel=1e-2)
        assert all(c.energy > 0 for c in report.channels)
        assert report.spectrum_width > report.channels[-1].energy

    def test_sector_is_conserved(self, fig2_anisotropy, tight_options):
        """Test a full-space sweep keeps all weight in k = 0, z2 = +1."""
        params = HeisenbergParams(5, **fig2_anisotropy)
        schedule = FieldSchedule.from_rate(6.0, 1.0, -1.0)
        start = diagonalize_sector(params.at_field(6.0), 0, 1)
        static, field = hamiltonian_terms(params)
        psi = evolve_state(RampedOperator(static, field), schedule, start.full_state(0), tight_options)
        basis = sector_basis(5, 0, 1)
        inside = basis @ (basis.conj().T @ psi)
        assert np.linalg.norm(psi - inside) ** 2 < 1e-10

    def test_extremal_energies(self, fig2_anisotropy, monkeypatch):
        """Test the dense and iterative extremal energies agree."""
        params = HeisenbergParams(9, field=2.0, **fig2_anisotropy)
        dense = extremal_energies(params)
        monkeypatch.setattr('apps.heisenberg.dynamics.DENSE_EXTREMES_MAX_SITES', 5)
        iterative = extremal_energies(params)
        assert iterative == pytest.approx(dense, abs=1e-8)

    @pytest.mark.slow
    def test_linear_in_chain_length(self, fig2_anisotropy, tight_options):
        """Test p_E grows linearly with N at rate -6 and stays within a factor 2 of the closed form."""
        schedule = FieldSchedule.from_rate(10.0, 5.0, -6.0)
        sizes = [5, 7, 9, 11]
        numeric = []
        for N in sizes:
            params = HeisenbergParams(N, **fig2_anisotropy)
            numeric.append(tdse_sweep(params, schedule, tight_options).p_ground_loss)
            assert 0.5 <= numeric[-1] / pe_heisenberg(params, schedule).p_e_bound <= 2.0
        assert log_slope(sizes, numeric) == pytest.approx(1.0, abs=0.3)

    @pytest.mark.slow
    def test_quadratic_in_rate(self, fig2_anisotropy, tight_options):
        """Test p_E grows quadratically with the rate at N = 9."""
        params = HeisenbergParams(9, **fig2_anisotropy)
        rates = [2.0, 4.0, 6.0, 10.0]
        numeric = []
        for rate in rates:
            schedule = FieldSchedule.from_rate(10.0, 5.0, -rate)
            numeric.append(tdse_sweep(params, schedule, tight_options).p_ground_loss)
            assert 0.5 <= numeric[-1] / pe_heisenberg(params, schedule).p_e_bound <= 2.0
        assert log_slope(rates, numeric) == pytest.approx(2.0, abs=0.2)
