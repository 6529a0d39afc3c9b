import numpy as np
import pytest
from scipy import sparse

from apps.core.exceptions import IntegrationError, NormDriftError, SizeCapError
from apps.core.integrators import RampedOperator, evolve_pairs, evolve_state, pauli_apply
from apps.core.models import (
    Channel,
    ExcitationReport,
    FieldSchedule,
    IntegratorOptions,
    UnitsConvention,
    Validity,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class TestFieldSchedule:
    """Test the linear field ramp."""

    def test_endpoints_exact(self):
        """Test g(0) and g(1) reproduce the endpoints exactly."""
        schedule = FieldSchedule(5.0, 0.3, 17.0)
        assert schedule.field(0.0) == 5.0
        assert schedule.field(1.0) == 0.3

    def test_from_rate(self):
        """Test building a schedule from a change rate."""
        schedule = FieldSchedule.from_rate(5.0, 2.0, -0.01)
        assert schedule.duration == pytest.approx(300.0)
        assert schedule.rate == pytest.approx(-0.01)

    def test_rate_with_wrong_sign_rejected(self):
        """Test a rate pointing away from the end field fails."""
        with pytest.raises(ValueError):
            FieldSchedule.from_rate(5.0, 2.0, 0.01)

    def test_nonpositive_duration_rejected(self):
        """Test duration must be positive."""
        with pytest.raises(ValueError):
            FieldSchedule(1.0, 2.0, 0.0)

    def test_reversed(self):
        """Test the return leg swaps the endpoints."""
        back = FieldSchedule(5.0, 2.0, 10.0).reversed()
        assert (back.g_start, back.g_end, back.duration) == (2.0, 5.0, 10.0)


class TestOptions:
    """Test integrator options and units."""

    def test_unknown_method_rejected(self):
        """Test an unknown method name fails."""
        with pytest.raises(ValueError):
            IntegratorOptions(method='euler')

    def test_fixed_step_needs_step(self):
        """Test rk4 without a step fails."""
        with pytest.raises(ValueError):
            IntegratorOptions(method='rk4')

    def test_step_count_covers_duration(self):
        """Test step counts round up."""
        opts = IntegratorOptions(method='rk4', step=0.3)
        assert opts.step_count(1.0) == 4
        assert opts.step_count(0.9) == 3

    def test_from_settings(self, settings):
        """Test defaults come from the SIMULATION settings block."""
        settings.SIMULATION = {
            **settings.SIMULATION,
            'INTEGRATOR': {**settings.SIMULATION['INTEGRATOR'], 'RTOL': 1e-7},
        }
        opts = IntegratorOptions.from_settings(method='magnus4', step=0.1)
        assert opts.rtol == 1e-7
        assert opts.method == 'magnus4'

    def test_units(self):
        """Test the time unit is hbar/J."""
        assert UnitsConvention(hbar=2.0).time_unit(4.0) == 0.5
        with pytest.raises(ValueError):
            UnitsConvention(hbar=0.0)


class TestValidity:
    """Test validity bands."""

    @pytest.mark.parametrize('value,expected', [
        (10.0, Validity.VALID), (3.0, Validity.MARGINAL), (1.0, Validity.INVALID),
    ])
    def test_much_greater(self, value, expected):
        """Test the much-greater band edges."""
        assert Validity.much_greater(value) is expected

    @pytest.mark.parametrize('value,expected', [
        (0.1, Validity.VALID), (0.5, Validity.MARGINAL), (1.0, Validity.INVALID),
    ])
    def test_much_less(self, value, expected):
        """Test the much-less band edges."""
        assert Validity.much_less(value) is expected

    def test_combine(self):
        """Test the worst outcome wins."""
        assert Validity.combine(Validity.VALID, Validity.MARGINAL) is Validity.MARGINAL
        assert Validity.combine(Validity.MARGINAL, Validity.INVALID) is Validity.INVALID


class TestExcitationReport:
    """Test report bookkeeping."""

    def test_channels_sorted_and_flagged(self):
        """Test channels are ordered by energy and p_total > 1 is flagged."""
        report = ExcitationReport(
            model='ising', n_sites=5, schedule=FieldSchedule(5, 0, 1),
            channels=[Channel(1, 3.0, 0.7), Channel(2, 1.0, 0.6)],
            p_ground_loss=0.88, mean_energy_above_ground=2.7,
            energy_variance=0.0, spectrum_width=10.0,
        )
        assert [c.index for c in report.channels] == [2, 1]
        assert 'p_total_exceeds_one' in report.flags
        assert report.heating_ratio == pytest.approx(0.27)
        assert report.dominant_channel().index == 1


class TestIntegrators:
    """Test the Schroedinger integrators on two-level problems."""

    def test_pauli_apply(self):
        """Test the batched Pauli action against explicit matrices."""
        v = np.array([[0.3, -0.2, 0.7]])
        psi = np.array([[0.6, 0.8j]])
        matrix = 0.3 * SIGMA_X + (-0.2) * np.array([[0, -1j], [1j, 0]]) + 0.7 * SIGMA_Z
        assert np.allclose(pauli_apply(v, psi)[0], matrix @ psi[0])

    @pytest.mark.parametrize('opts', [
        IntegratorOptions(method='rk4', step=0.001),
        IntegratorOptions(method='magnus4', step=0.01),
        IntegratorOptions(method='adaptive', rtol=1e-10, atol=1e-12),
    ])
    def test_rabi_oscillation(self, opts):
        """Test a constant sigma_x generator rotates the state analytically."""
        schedule = FieldSchedule(0.0, 0.0, 1.3)
        amps = evolve_pairs([[1.0, 0.0, 0.0]], [[0.0, 0.0, 0.0]], schedule, [[1.0, 0.0]], opts)
        assert np.allclose(amps[0], [np.cos(1.3), -1j * np.sin(1.3)], atol=1e-8)

    @pytest.mark.parametrize('method,step', [('rk4', 0.002), ('magnus4', 0.005), ('adaptive', None)])
    def test_matrix_and_pair_paths_agree(self, method, step):
        """Test evolve_state and evolve_pairs give the same ramped evolution."""
        opts = IntegratorOptions(method=method, step=step, rtol=1e-10, atol=1e-12)
        schedule = FieldSchedule(-3.0, 3.0, 6.0)
        psi = evolve_state(RampedOperator(SIGMA_X, SIGMA_Z), schedule, [0.0, 1.0], opts)
        amps = evolve_pairs([[1.0, 0.0, 0.0]], [[0.0, 0.0, 1.0]], schedule, [[0.0, 1.0]], opts)
        assert np.allclose(psi, amps[0], atol=1e-7)

    def test_sparse_magnus_matches_dense(self):
        """Test the sparse Magnus path agrees with the dense one."""
        opts = IntegratorOptions(method='magnus4', step=0.05)
        schedule = FieldSchedule(2.0, -1.0, 3.0)
        dense = evolve_state(RampedOperator(SIGMA_X, SIGMA_Z), schedule, [1.0, 0.0], opts)
        sparse_psi = evolve_state(
            RampedOperator(sparse.csr_matrix(SIGMA_X), sparse.csr_matrix(SIGMA_Z)),
            schedule, [1.0, 0.0], opts,
        )
        assert np.allclose(dense, sparse_psi, atol=1e-10)

    def test_norm_drift_names_channel(self):
        """Test an unstable step raises NormDriftError with the channel label."""
        opts = IntegratorOptions(method='rk4', step=3.0)
        with pytest.raises(NormDriftError) as excinfo:
            evolve_pairs(
                [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], [[0.0, 0.0, 0.0]] * 2,
                FieldSchedule(0.0, 0.0, 3.0), [[1.0, 0.0], [1.0, 0.0]], opts, labels=[1, 2],
            )
        assert excinfo.value.channel == 2

    def test_step_budget(self):
        """Test exceeding max_steps raises IntegrationError."""
        opts = IntegratorOptions(method='rk4', step=0.01, max_steps=10)
        with pytest.raises(IntegrationError):
            evolve_state(RampedOperator(SIGMA_X, SIGMA_Z), FieldSchedule(0, 1, 1.0), [1.0, 0.0], opts)

    def test_observer_sees_steps(self):
        """Test the observer is called once per fixed step."""
        seen = []
        opts = IntegratorOptions(method='magnus4', step=0.25)
        evolve_state(
            RampedOperator(SIGMA_X, SIGMA_Z), FieldSchedule(0, 1, 1.0), [1.0, 0.0], opts,
            observer=lambda t, psi: seen.append(t),
        )
        assert seen == pytest.approx([0.25, 0.5, 0.75, 1.0])


class TestExceptions:
    """Test error messages."""

    def test_size_cap_message(self):
        """Test the size-cap error names the cap."""
        err = SizeCapError('dense_hamiltonian', 14, 15)
        assert 'N <= 14' in str(err)
        assert isinstance(err, ValueError)

    def test_integration_error_channel(self):
        """Test the channel is appended to the message."""
        assert '(channel 4)' in str(IntegrationError('failed', channel=4))
