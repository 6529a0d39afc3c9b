import math
from collections import Counter

import numpy as np
import pytest
from scipy import linalg, sparse

from apps.core.exceptions import SizeCapError
from apps.core.models import FieldSchedule, Validity
from apps.ising.adiabatic import pe_regime1
from apps.ising.models import IsingParams
from apps.ising.oracle import dense_ising_hamiltonian

from .classification import (
    classify_eigenstates,
    degeneracies,
    diagonalize_sector,
    full_spectrum,
    labeled_spectrum,
)
from .hamiltonian import dense_hamiltonian, sector_basis, sector_labels, symmetry_operators, x_basis_state
from .models import HeisenbergParams
from .perturbative import (
    compare_with_dense,
    dense_matrix_element,
    effective_chain,
    matrix_element_hd0,
    pe_heisenberg,
    perturbative_levels,
    standing_waves,
)
from .serializers import HeisenbergParamsSerializer


def random_params(rng, n_sites):
    dx, dy, dz = rng.uniform(-1.0, 1.0, size=3)
    return HeisenbergParams(n_sites, delta_x=dx, delta_y=dy, delta_z=dz, field=rng.uniform(0.0, 3.0))


def log_slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


class TestHeisenbergParams:
    """Test parameter validation."""

    @pytest.mark.parametrize('n_sites', [2, 4, 1])
    def test_even_or_small_rings_rejected(self, n_sites):
        """Test only odd N >= 3 is accepted."""
        with pytest.raises(ValueError):
            HeisenbergParams(n_sites)

    def test_negative_field_rejected(self):
        """Test g >= 0."""
        with pytest.raises(ValueError):
            HeisenbergParams(5, field=-1.0)

    def test_perturbative_validity(self, fig2_anisotropy):
        """Test the g / max|Delta| bands."""
        params = HeisenbergParams(5, **fig2_anisotropy)
        assert params.perturbative_validity(5.0) is Validity.VALID
        assert params.perturbative_validity(3.0) is Validity.MARGINAL
        assert params.perturbative_validity(0.5) is Validity.INVALID

    def test_serializer(self):
        """Test the serializer caps the dense size."""
        serializer = HeisenbergParamsSerializer(data={'n_sites': 15})
        assert not serializer.is_valid()
        serializer = HeisenbergParamsSerializer(data={'n_sites': 5, 'delta_x': 0.1, 'field': 2.0})
        assert serializer.is_valid(), serializer.errors
        assert serializer.save() == HeisenbergParams(5, delta_x=0.1, field=2.0)


class TestHamiltonian:
    """Test the dense Hamiltonian and its symmetries."""

    def test_ising_specialization(self):
        """Test (0, 0, 1) gives the Ising matrix exactly."""
        params = HeisenbergParams(5, delta_x=0.0, delta_y=0.0, delta_z=1.0, field=0.7)
        assert np.array_equal(dense_hamiltonian(params), dense_ising_hamiltonian(5, 0.7))

    def test_hermitian(self, fig2_anisotropy):
        """Test H equals its conjugate transpose."""
        H = dense_hamiltonian(HeisenbergParams(5, field=1.3, **fig2_anisotropy))
        assert np.max(np.abs(H - H.conj().T)) == 0.0

    def test_size_cap(self):
        """Test the dense cap names itself."""
        params = HeisenbergParams(15)
        with pytest.raises(SizeCapError, match='N <= 14'):
            dense_hamiltonian(params)

    def test_symmetry_operators_are_involution_and_cycle(self):
        """Test Z2^2 = 1 and T^N = 1."""
        z2, t = symmetry_operators(5)
        identity = sparse.identity(32)
        assert abs(z2 @ z2 - identity).max() == 0
        assert abs(t ** 5 - identity).max() == 0
        assert abs(t - identity).max() > 0

    @pytest.mark.parametrize('N', [3, 5, 7])
    def test_commutation(self, N):
        """Test [H, Z2] = [H, T] = 0 for random parameters."""
        rng = np.random.default_rng(N)
        H = dense_hamiltonian(random_params(rng, N))
        z2, t = (op.toarray() for op in symmetry_operators(N))
        assert np.max(np.abs(H @ z2 - z2 @ H)) < 1e-12
        assert np.max(np.abs(H @ t - t @ H)) < 1e-12


class TestSectors:
    """Test the symmetry-adapted basis."""

    @pytest.mark.parametrize('N', [3, 5, 7, 9])
    def test_dimensions_add_up(self, N):
        """Test the sector dimensions sum to 2^N."""
        assert sum(sector_basis(N, k, z2).shape[1] for k, z2 in sector_labels(N)) == 2 ** N

    def test_orthonormal_eigenvectors_of_symmetries(self):
        """Test each basis is orthonormal and carries the (k, z2) eigenvalues."""
        N = 7
        z2_op, t_op = symmetry_operators(N)
        for k, z2 in sector_labels(N):
            basis = sector_basis(N, k, z2)
            gram = (basis.conj().T @ basis).toarray()
            assert np.allclose(gram, np.eye(basis.shape[1]), atol=1e-10)
            assert abs(t_op @ basis - np.exp(-2j * np.pi * k / N) * basis).max() < 1e-12
            assert abs(z2_op @ basis - z2 * basis).max() < 1e-12

    def test_polarized_state_in_symmetric_sector(self):
        """Test the all-up-along-x state lies in k = 0, z2 = +1."""
        basis = sector_basis(7, 0, 1)
        coefficients = basis.conj().T @ x_basis_state(7, [])
        assert np.linalg.norm(coefficients) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize('N', [3, 5, 7])
    def test_sector_spectra_reproduce_dense(self, N):
        """Test the union of sector spectra equals the dense spectrum."""
        params = random_params(np.random.default_rng(10 + N), N)
        assert np.allclose(full_spectrum(params), linalg.eigvalsh(dense_hamiltonian(params)), atol=1e-9)

    def test_eigenpairs(self, fig2_anisotropy):
        """Test residuals and orthonormality of a sector decomposition."""
        params = HeisenbergParams(7, field=1.1, **fig2_anisotropy)
        decomposition = diagonalize_sector(params, 2, -1)
        H = dense_hamiltonian(params)
        norm = np.linalg.norm(H, 2)
        for i in range(decomposition.dim):
            v = decomposition.full_state(i)
            residual = np.linalg.norm(H @ v - decomposition.energies[i] * v)
            assert residual < 1e-9 * norm
        assert np.allclose(decomposition.states.conj().T @ decomposition.states, np.eye(decomposition.dim), atol=1e-10)


class TestClassification:
    """Test the (n, k, d) labelling."""

    def test_degeneracies(self):
        """Test cluster sizes of equal energies."""
        assert list(degeneracies([0.0, 2.0, 0.0, 1.0, 2.0, 2.0])) == [2, 3, 2, 1, 3, 3]

    def test_strong_field_ground_state(self, fig2_anisotropy):
        """Test the lowest state at large g is n = 0, k = 0, z2 = +1."""
        energy, label, D = labeled_spectrum(HeisenbergParams(5, field=60.0, **fig2_anisotropy))[0]
        assert (label.group_index, label.momentum_index, label.z2, label.degeneracy_index) == (0, 0, 1, 1)
        assert D == 1

    @pytest.mark.parametrize('g', [50.0, 2.0, 0.5])
    def test_group_populations(self, fig2_anisotropy, g):
        """Test group n holds C(N, n) states and every label obeys z2 = (-1)^n."""
        rows = labeled_spectrum(HeisenbergParams(5, field=g, **fig2_anisotropy), tracking_steps=100)
        counts = Counter(label.group_index for _, label, _ in rows)
        assert [counts[n] for n in range(6)] == [math.comb(5, n) for n in range(6)]
        assert all(label.obeys_parity_rule for _, label, _ in rows)

    def test_degeneracy_index_counts_within_group(self, fig2_anisotropy):
        """Test d runs from 1 within every (n, k) in ascending energy."""
        params = HeisenbergParams(7, field=3.0, **fig2_anisotropy)
        decomposition = diagonalize_sector(params, 0, 1)
        labels = classify_eigenstates(params, decomposition)
        groups = {}
        for energy, label in zip(decomposition.energies, labels):
            groups.setdefault(label.group_index, []).append((label.degeneracy_index, energy))
        for members in groups.values():
            members.sort()
            assert [d for d, _ in members] == list(range(1, len(members) + 1))
            energies = [e for _, e in members]
            assert energies == sorted(energies)
        assert decomposition.labels == labels


class TestPerturbative:
    """Test the large-field expansion."""

    def test_ground_energy_series(self, fig2_anisotropy):
        """Test E0/(JN) = -g - Dx and its agreement with dense ED at g = 20."""
        params = HeisenbergParams(5, field=20.0, **fig2_anisotropy)
        levels = perturbative_levels(params)
        assert levels.e0() / 5 == pytest.approx(-20.1)
        assert compare_with_dense(params).e0_residual < 0.05

    def test_closed_form_band(self, fig2_anisotropy):
        """Test the closed-form two-flip energies lie in a cosine band of width (8/N)|Dz + Dy|."""
        N = 9
        levels = perturbative_levels(HeisenbergParams(N, field=20.0, **fig2_anisotropy))
        constant = levels.e20d_series[:, 1] + 0.1 * (1 - 8 / N)
        assert np.all(np.abs(constant) <= 4 / N * 1.3 + 1e-12)
        assert np.allclose(levels.e20d_series[:, 0], -(1 - 4 / N))

    def test_standing_waves_orthonormal(self):
        """Test the closed-form zeroth-order two-flip states are orthonormal."""
        waves = standing_waves(11)
        assert np.allclose(waves @ waves.T, np.eye(5), atol=1e-12)

    def test_effective_chain_is_symmetric(self, fig2_anisotropy):
        """Test the effective problem is a real symmetric tridiagonal matrix."""
        chain = effective_chain(HeisenbergParams(9, **fig2_anisotropy))
        assert np.array_equal(chain, chain.T)
        assert np.count_nonzero(np.triu(chain, 2)) == 0

    def test_symmetric_anisotropy_switches_off_pair_creation(self):
        """Test Dy = Dz removes every first-order state correction."""
        params = HeisenbergParams(7, delta_x=0.2, delta_y=0.5, delta_z=0.5, field=30.0)
        levels = perturbative_levels(params)
        assert not levels.phi0_first.any()
        assert not levels.polarized_overlap_first.any()
        schedule = FieldSchedule(40.0, 20.0, 10.0)
        assert matrix_element_hd0(1, 0.5, params, schedule) == 0.0
        assert pe_heisenberg(params, schedule).p_e_bound == 0.0

    def test_first_order_ground_state(self, fig2_anisotropy):
        """Test the adjacent-pair amplitude of the ground state is (Dz - Dy) sqrt(N) / (4 g)."""
        N, g = 7, 40.0
        params = HeisenbergParams(N, field=g, **fig2_anisotropy)
        levels = perturbative_levels(params)
        decomposition = diagonalize_sector(params, 0, 1)
        ground = decomposition.full_state(0)
        polarized = x_basis_state(N, [])
        pairs = sum(x_basis_state(N, [i, i + 1]) for i in range(N)) / math.sqrt(N)
        amplitude = abs(np.vdot(pairs, ground) / np.vdot(polarized, ground))
        assert amplitude == pytest.approx(levels.phi0_first[0] / g, rel=0.05)

    def test_residuals_fall_as_inverse_field(self, fig2_anisotropy):
        """Test dense-vs-series residuals of E0 and E20d scale as 1/g."""
        fields = [10.0, 20.0, 40.0]
        comparisons = [compare_with_dense(HeisenbergParams(7, field=g, **fig2_anisotropy)) for g in fields]
        e0 = [c.e0_residual for c in comparisons]
        e20d = [c.e20d_residual('effective') for c in comparisons]
        assert log_slope(fields, e0) == pytest.approx(-1.0, abs=0.2)
        assert log_slope(fields, e20d) == pytest.approx(-1.0, abs=0.2)

    def test_matrix_element_against_dense(self, fig2_anisotropy):
        """Test the effective H_d0 matches the dense matrix element within 10%."""
        params = HeisenbergParams(7, **fig2_anisotropy)
        schedule = FieldSchedule(40.0, 20.0, 10.0)
        dense = dense_matrix_element(params.at_field(30.0), schedule.dg_ds)
        analytic = [abs(matrix_element_hd0(d, 0.5, params, schedule, 'effective')) for d in (1, 2, 3)]
        assert np.allclose(analytic, dense, rtol=0.1)

    def test_variants_share_the_total_weight(self, fig2_anisotropy):
        """Test sum over d of |H_d0|^2 is the same for both variants."""
        params = HeisenbergParams(9, **fig2_anisotropy)
        schedule = FieldSchedule(10.0, 5.0, 1.0)
        totals = [
            sum(matrix_element_hd0(d, 0.3, params, schedule, variant) ** 2 for d in range(1, 5))
            for variant in ('closed_form', 'effective')
        ]
        assert totals[0] == pytest.approx(totals[1], rel=1e-12)

    def test_unknown_variant_rejected(self, fig2_anisotropy):
        """Test an unknown variant name fails."""
        with pytest.raises(ValueError):
            matrix_element_hd0(1, 0.5, HeisenbergParams(7, **fig2_anisotropy), FieldSchedule(2.0, 1.0, 1.0), 'exact')


class TestExcitationEstimate:
    """Test the closed-form Heisenberg excitation probability."""

    def test_reference_value(self, fig2_anisotropy):
        """Test the N=9, g 10 -> 5, rate -6 value."""
        schedule = FieldSchedule.from_rate(10.0, 5.0, -6.0)
        estimate = pe_heisenberg(HeisenbergParams(9, **fig2_anisotropy), schedule)
        assert estimate.p_e_bound == pytest.approx(0.7 ** 2 * 36 * 9 / (256 * 5 ** 6), rel=1e-12)
        assert estimate.p_e_bound == pytest.approx(3.97e-5, rel=1e-3)
        assert estimate.validity is Validity.VALID

    def test_scaling(self, fig2_anisotropy):
        """Test p_E is linear in N and quadratic in the rate."""
        schedule = FieldSchedule.from_rate(10.0, 5.0, -2.0)
        values = [pe_heisenberg(HeisenbergParams(N, **fig2_anisotropy), schedule).p_e_bound for N in (5, 11)]
        assert values[1] / values[0] == pytest.approx(11 / 5, rel=1e-12)
        faster = pe_heisenberg(HeisenbergParams(5, **fig2_anisotropy), FieldSchedule.from_rate(10.0, 5.0, -6.0))
        assert faster.p_e_bound / values[0] == pytest.approx(9.0, rel=1e-12)

    def test_matches_ising_far_from_critical_point(self):
        """Test the Ising case tends to the regime-1 estimate as g1 grows."""
        schedule = FieldSchedule(200.0, 20.0, 100.0)
        heisenberg = pe_heisenberg(HeisenbergParams(101, delta_x=0.0, delta_y=0.0, delta_z=1.0), schedule)
        ising = pe_regime1(IsingParams(101), schedule)
        assert heisenberg.p_e_bound / ising.p_e_bound == pytest.approx(1.0, abs=0.02)

    def test_weak_field_flagged(self, fig2_anisotropy):
        """Test g1 close to the anisotropy scale is flagged."""
        estimate = pe_heisenberg(HeisenbergParams(9, **fig2_anisotropy), FieldSchedule(10.0, 2.0, 5.0))
        assert estimate.validity is Validity.MARGINAL
