import numpy as np
import pytest
from scipy import linalg

from apps.core.integrators import RampedOperator, evolve_state
from apps.core.models import FieldSchedule, IntegratorOptions
from apps.heisenberg.hamiltonian import parity_basis, project
from apps.ising.dynamics import (
    evolve_sweep,
    excitation_probabilities,
    extract_p0n,
    ground_amplitudes,
    instantaneous_states,
    mean_energy,
    pair_energies,
    pair_generator,
    round_trip_check,
    spectrum_width,
    sudden_quench,
    sweep_report,
)
from apps.ising.models import IsingParams, ModeAmplitudes
from apps.ising.oracle import dense_ground_state, dense_ising_hamiltonian, dense_spectrum, ising_terms
from apps.ising.spectrum import lambda_even

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
])


def dense_sweep(n_sites, schedule, opts):
    """Ground-state loss and mean energy from a dense even-block evolution."""
    basis = parity_basis(n_sites, 1)
    static, field = ising_terms(n_sites)
    S, F = project(static, basis).real, project(field, basis).real
    _, start = linalg.eigh(S + schedule.g_start * F)
    psi = evolve_state(RampedOperator(S, F), schedule, start[:, 0], opts)
    final = S + schedule.g_end * F
    energies, vectors = linalg.eigh(final)
    loss = 1.0 - abs(np.vdot(vectors[:, 0], psi)) ** 2
    mean = np.vdot(psi, final @ psi).real - energies[0]
    return loss, mean


class TestPairGenerator:
    """Test the instantaneous spectral contract of the two-level generators."""

    @pytest.mark.parametrize('g', [0.0, 0.3, 1.0, 2.5, 40.0])
    def test_gap_and_ground_state(self, g):
        """Test each generator's gap is 2 J Lambda_n and its ground state the theta rotation."""
        params = IsingParams(15, coupling=1.3)
        static, field = pair_generator(params)
        ground, _ = instantaneous_states(params, g)
        for n in range(params.pair_count):
            b = static[n] + g * field[n]
            matrix = np.einsum('i,ijk->jk', b, PAULI)
            values, vectors = np.linalg.eigh(matrix)
            assert values[1] - values[0] == pytest.approx(
                2 * 1.3 * lambda_even(n + 1, g, 15), abs=1e-12,
            )
            assert abs(np.vdot(vectors[:, 0], ground[n])) == pytest.approx(1.0, abs=1e-12)


class TestObservables:
    """Test probabilities and energies read off the amplitudes."""

    def test_ground_amplitudes_have_no_excitation(self):
        """Test instantaneous ground amplitudes give p0n = 0."""
        params = IsingParams(11)
        amps = ground_amplitudes(params, 1.7)
        assert max(extract_p0n(amps, params, 1.7).values()) < 1e-30

    def test_excited_amplitudes(self):
        """Test the excited eigenvectors give p0n = 1."""
        params = IsingParams(11)
        _, excited = instantaneous_states(params, 0.6)
        amps = ModeAmplitudes(np.arange(1, 6), excited)
        assert np.allclose(excitation_probabilities(amps, params, 0.6), 1.0)
        mean, variance, width = mean_energy(amps, params, 0.6)
        assert mean == pytest.approx(np.sum(pair_energies(params, 0.6)))
        assert variance == pytest.approx(0.0, abs=1e-12)
        assert width == pytest.approx(spectrum_width(params, 0.6))

    def test_sudden_quench_matches_dense(self):
        """Test the quench energy equals the dense static expectation value."""
        params = IsingParams(9)
        mean, _, _ = mean_energy(sudden_quench(params, 5.0), params, 2.0)
        _, psi = dense_ground_state(9, 5.0)
        expectation = psi @ dense_ising_hamiltonian(9, 2.0) @ psi
        assert mean == pytest.approx(expectation - dense_spectrum(9, 2.0)[0], abs=1e-6)


class TestEvolveSweep:
    """Test the mode-pair sweep dynamics."""

    def test_zero_ramp_stays_in_ground_state(self, tight_options):
        """Test a stationary schedule excites nothing."""
        params = IsingParams(11)
        report = sweep_report(params, FieldSchedule(2.0, 2.0, 50.0), tight_options)
        assert max(report.p0n.values()) < 1e-12
        assert report.mean_energy_above_ground == pytest.approx(0.0, abs=1e-12)
        assert report.spectrum_width > 0

    def test_norm_conservation(self):
        """Test every pair keeps unit norm through a fast sweep across g = 1."""
        params = IsingParams(51)
        opts = IntegratorOptions(method='magnus4', step=0.05)
        amps = evolve_sweep(params, FieldSchedule.from_rate(5.0, 0.0, -0.1), opts)
        assert amps.max_norm_drift() < 1e-9

    def test_slow_sweep_is_adiabatic(self):
        """Test a very slow sweep leaves the chain in its ground state."""
        params = IsingParams(11)
        opts = IntegratorOptions(method='magnus4', step=0.2)
        report = sweep_report(params, FieldSchedule.from_rate(5.0, 2.0, -1e-4), opts)
        assert report.p_total < 1e-6

    def test_channels_sorted_by_energy(self, magnus_options):
        """Test report channels are listed by ascending excitation energy."""
        params = IsingParams(21)
        report = sweep_report(params, FieldSchedule.from_rate(5.0, 0.5, -0.05), magnus_options)
        energies = [c.energy for c in report.channels]
        assert energies == sorted(energies)
        assert report.mean_energy_above_ground >= -1e-9
        assert 0.0 <= report.p_ground_loss <= min(report.p_total, 1.0) + 1e-12

    @pytest.mark.parametrize('rate', [-0.01, -0.1])
    def test_matches_dense_evolution(self, rate):
        """Test pair dynamics agree with a dense 2^9 evolution."""
        params = IsingParams(9)
        schedule = FieldSchedule.from_rate(5.0, 2.0, rate)
        opts = IntegratorOptions(method='adaptive', rtol=1e-10, atol=1e-12)
        report = sweep_report(params, schedule, opts)
        loss, mean = dense_sweep(9, schedule, opts)
        assert report.p_ground_loss == pytest.approx(loss, abs=1e-4)
        assert report.mean_energy_above_ground == pytest.approx(mean, abs=1e-4)

    def test_fourth_order_convergence(self):
        """Test halving the rk4 step cuts the error about 16 times."""
        params = IsingParams(11)
        schedule = FieldSchedule(5.0, 2.0, 5.0)
        reference = evolve_sweep(
            params, schedule, IntegratorOptions(method='adaptive', rtol=1e-12, atol=1e-14),
        ).amplitudes
        errors = []
        for step in (0.004, 0.002):
            amps = evolve_sweep(params, schedule, IntegratorOptions(method='rk4', step=step))
            errors.append(np.max(np.abs(amps.amplitudes - reference)))
        assert errors[0] / errors[1] == pytest.approx(16.0, abs=3.0)

    def test_methods_agree(self, magnus_options, tight_options):
        """Test Magnus and adaptive sweeps give the same probabilities."""
        params = IsingParams(15)
        schedule = FieldSchedule.from_rate(4.0, 0.5, -0.1)
        magnus = sweep_report(params, schedule, magnus_options)
        adaptive = sweep_report(params, schedule, tight_options)
        assert magnus.p_total == pytest.approx(adaptive.p_total, abs=1e-4)

    @pytest.mark.slow
    def test_lowest_channel_dominates_at_critical_point(self):
        """Test the lowest-energy channel is the most excited one for N=501 ending at g=1."""
        params = IsingParams(501)
        opts = IntegratorOptions(method='magnus4', step=0.1)
        report = sweep_report(params, FieldSchedule.from_rate(5.0, 1.0, -1e-4), opts)
        assert report.dominant_channel() == report.channels[0]


class TestRoundTrip:
    """Test the up-and-back survival probability."""

    def test_zero_ramp(self, tight_options):
        """Test a stationary round trip survives with certainty."""
        assert round_trip_check(IsingParams(11), FieldSchedule(3.0, 3.0, 10.0), tight_options) == 1.0

    def test_slow_round_trip(self):
        """Test a slow round trip keeps the ground state."""
        opts = IntegratorOptions(method='magnus4', step=0.1)
        survival = round_trip_check(IsingParams(11), FieldSchedule.from_rate(5.0, 2.0, -0.001), opts)
        assert survival >= 1 - 1e-4

    def test_survival_falls_with_rate(self, magnus_options):
        """Test survival decreases monotonically as the sweep gets faster."""
        params = IsingParams(11)
        survival = [
            round_trip_check(params, FieldSchedule.from_rate(5.0, 1.5, -rate), magnus_options)
            for rate in (0.002, 0.01, 0.05)
        ]
        assert survival[0] > survival[1] > survival[2]
        assert survival[2] < 1.0
