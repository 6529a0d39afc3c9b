import numpy as np
import pytest

from apps.core.exceptions import SizeCapError
from apps.core.models import FieldSchedule, IntegratorOptions, Validity
from apps.heisenberg.dynamics import tdse_sweep
from apps.heisenberg.models import HeisenbergParams
from apps.ising.dynamics import sweep_report
from apps.ising.models import IsingParams

from .models import PerturbationSpec, PerturbedSweepResult
from .perturbations import (
    fit_heating_law,
    heating_law,
    heisenberg_perturbation_bound,
    heisenberg_perturbed_sweep,
    ising_perturbed_sweep,
    perturbation_operator,
)

PAULI = {
    'x': np.array([[0, 1], [1, 0]], dtype=complex),
    'y': np.array([[0, -1j], [1j, 0]]),
    'z': np.array([[1, 0], [0, -1]], dtype=complex),
}


def site_operator(pauli, site, n_sites):
    """Pauli matrix on ``site`` with bit i of the basis index as site i."""
    result = np.eye(1)
    for i in reversed(range(n_sites)):
        result = np.kron(result, pauli if i == site else np.eye(2))
    return result


def field_spec(n_sites, rng, epsilon):
    """Random spec rescaled to a given strength transverse to the field."""
    spec = PerturbationSpec.random(n_sites, rng)
    return spec.scaled(epsilon / spec.effective_strength('field'))


class TestPerturbationSpec:
    """Test the perturbation description."""

    def test_directions_must_be_unit(self):
        """Test non-unit directions are rejected."""
        with pytest.raises(ValueError):
            PerturbationSpec(np.ones(3), np.tile([1.0, 1.0, 0.0], (3, 1)))

    def test_shapes_must_match(self):
        """Test one direction per site."""
        with pytest.raises(ValueError):
            PerturbationSpec(np.ones(3), np.tile([1.0, 0.0, 0.0], (4, 1)))

    def test_pure_z_has_no_xy_strength(self):
        """Test n = z gives eps = 0 and a vanishing bound."""
        spec = PerturbationSpec.uniform(9, 0.3, (0.0, 0.0, 1.0))
        assert spec.effective_strength() == 0.0
        assert heisenberg_perturbation_bound(spec, 10.0).p_e_bound == 0.0

    def test_strength_depends_on_transverse_weight_only(self):
        """Test eps depends on n only through n_x^2 + n_y^2."""
        a = PerturbationSpec.uniform(5, 0.2, (0.6, 0.0, 0.8))
        b = PerturbationSpec.uniform(5, 0.2, (0.0, 0.6, 0.8))
        assert a.effective_strength() == pytest.approx(b.effective_strength(), rel=1e-14)
        assert a.effective_strength() == pytest.approx(0.2 * 0.6, rel=1e-14)

    def test_field_convention(self):
        """Test the field convention uses the y and z components."""
        spec = PerturbationSpec.uniform(5, 0.2, (0.0, 0.6, 0.8))
        assert spec.effective_strength('field') == pytest.approx(0.2, rel=1e-14)
        with pytest.raises(ValueError):
            spec.effective_strength('radial')

    def test_random_spec(self):
        """Test random specs are valid and reproducible."""
        a = PerturbationSpec.random(7, np.random.default_rng(3), strength=0.1)
        b = PerturbationSpec.random(7, np.random.default_rng(3), strength=0.1)
        assert np.array_equal(a.directions, b.directions)
        assert np.all((0 <= a.strengths) & (a.strengths <= 0.1))


class TestPerturbationBound:
    """Test the closed-form excitation bound."""

    def test_reference_value(self):
        """Test eps = 0.1, g0 = 10, N = 9 gives 2.25e-4."""
        spec = PerturbationSpec.uniform(9, 0.1, (0.0, 1.0, 0.0))
        estimate = heisenberg_perturbation_bound(spec, 10.0)
        assert estimate.p_e_bound == pytest.approx(2.25e-4, rel=1e-12)
        assert estimate.validity is Validity.VALID

    def test_scaling(self):
        """Test the bound is linear in N and quadratic in eps."""
        spec = PerturbationSpec.uniform(9, 0.1, (1.0, 0.0, 0.0))
        base = heisenberg_perturbation_bound(spec, 10.0).p_e_bound
        assert heisenberg_perturbation_bound(spec, 10.0, n_sites=18).p_e_bound == pytest.approx(2 * base)
        assert heisenberg_perturbation_bound(spec.scaled(3.0), 10.0).p_e_bound == pytest.approx(9 * base)

    def test_weak_field_flagged(self):
        """Test g0 comparable to the anisotropy is flagged."""
        spec = PerturbationSpec.uniform(5, 0.1)
        assert heisenberg_perturbation_bound(spec, 3.0).validity is Validity.MARGINAL


class TestPerturbationOperator:
    """Test the sparse perturbation operator."""

    def test_matches_kronecker_products(self):
        """Test V against explicit tensor products."""
        rng = np.random.default_rng(11)
        spec = PerturbationSpec.random(4, rng)
        expected = sum(
            eps * sum(n[a] * site_operator(PAULI[axis], j, 4) for a, axis in enumerate('xyz'))
            for j, (eps, n) in enumerate(zip(spec.strengths, spec.directions))
        )
        V = perturbation_operator(spec, coupling=1.5).toarray()
        assert np.allclose(V, 1.5 * expected, atol=1e-14)

    def test_size_cap(self):
        """Test the dense cap applies."""
        with pytest.raises(SizeCapError):
            perturbation_operator(PerturbationSpec.zero(15))


class TestPerturbedIsing:
    """Test Ising sweeps under a local longitudinal field."""

    def test_zero_perturbation_matches_free_fermions(self):
        """Test eps = 0 reproduces the mode-pair heating ratio."""
        params = IsingParams(7)
        schedule = FieldSchedule.from_rate(5.0, 0.5, -0.5)
        opts = IntegratorOptions(method='adaptive', rtol=1e-12, atol=1e-14)
        result = ising_perturbed_sweep(params, schedule, 0.0, opts)
        report = sweep_report(params, schedule, opts)
        assert result.heating_ratio == pytest.approx(report.heating_ratio, abs=1e-8)
        assert result.first_excited_weight < 1e-20
        assert result.ground_weight == pytest.approx(1.0 - report.p_ground_loss, abs=1e-8)

    def test_size_cap(self, tight_options):
        """Test N = 13 is refused."""
        with pytest.raises(SizeCapError):
            ising_perturbed_sweep(IsingParams(13), FieldSchedule(5.0, 0.5, 10.0), 0.1, tight_options)

    def test_heating_law_collects_every_strength(self, magnus_options):
        """Test the fit keeps one excess per strength and needs two positive strengths."""
        params, schedule = IsingParams(5), FieldSchedule.from_rate(5.0, 0.0, -0.1)
        law = heating_law(params, schedule, [0.05, 0.1, 0.2], magnus_options)
        assert law.epsilons == (0.05, 0.1, 0.2)
        assert len(law.excess) == 3
        with pytest.raises(ValueError):
            heating_law(params, schedule, [0.1], magnus_options)

    @pytest.mark.slow
    def test_heating_grows_as_epsilon_squared(self, magnus_options):
        """Test eps^2 heating over eps 0.05..0.2, g 5 -> 0 at rate -0.01, nearly independent of N."""
        schedule = FieldSchedule.from_rate(5.0, 0.0, -0.01)
        heating = []
        for N in (7, 9, 11):
            params = IsingParams(N)
            baseline = ising_perturbed_sweep(params, schedule, 0.0, magnus_options)
            results = [ising_perturbed_sweep(params, schedule, eps, magnus_options) for eps in (0.05, 0.1, 0.2)]
            law = fit_heating_law(baseline, results)
            assert law.flags == ()
            assert law.slope == pytest.approx(2.0, abs=0.3)
            heating.append(results[1].heating_ratio)
        assert max(heating) / min(heating) < 1.3

    def test_heating_law_leaves_out_non_positive_excess(self):
        """Test strengths that cool the chain are flagged and kept out of the fit."""
        baseline = PerturbedSweepResult(0.0, 1.0, 1.0, 0.0, 0.0)
        results = [
            PerturbedSweepResult(0.1, 1.01, 1.0, 0.0, 0.0),
            PerturbedSweepResult(0.2, 1.04, 1.0, 0.0, 0.0),
            PerturbedSweepResult(0.4, 0.9, 1.0, 0.0, 0.0),
        ]
        law = fit_heating_law(baseline, results)
        assert law.flags == ('non_positive_excess',)
        assert law.slope == pytest.approx(2.0)
        assert law.excess[2] == pytest.approx(-0.1)

    def test_heating_law_needs_two_positive_points(self):
        """Test a single heated strength leaves the law undetermined."""
        baseline = PerturbedSweepResult(0.0, 1.0, 1.0, 0.0, 0.0)
        results = [PerturbedSweepResult(0.1, 1.01, 1.0, 0.0, 0.0), PerturbedSweepResult(0.2, 0.99, 1.0, 0.0, 0.0)]
        law = fit_heating_law(baseline, results)
        assert np.isnan(law.slope)
        assert 'underdetermined' in law.flags

    def test_first_excited_state_dominates(self, tight_options):
        """Test crossing g = 1 populates the first excited state far more than the rest."""
        result = ising_perturbed_sweep(IsingParams(7), FieldSchedule.from_rate(5.0, 0.5, -0.01), 0.1, tight_options)
        assert result.first_excited_weight >= 10 * result.higher_weight
        assert result.flags == []


class TestPerturbedHeisenberg:
    """Test Heisenberg sweeps under random local fields."""

    def test_zero_perturbation_matches_sector_sweep(self, fig2_anisotropy, tight_options):
        """Test a zero spec reproduces the sector-reduced sweep."""
        params = HeisenbergParams(5, **fig2_anisotropy)
        schedule = FieldSchedule.from_rate(10.0, 5.0, -6.0)
        full = heisenberg_perturbed_sweep(params, schedule, PerturbationSpec.zero(5), tight_options)
        sector = tdse_sweep(params, schedule, tight_options).p_ground_loss
        assert full == pytest.approx(sector, abs=1e-8)

    def test_site_count_must_match(self, fig2_anisotropy, tight_options):
        """Test a spec for another ring length is rejected."""
        with pytest.raises(ValueError):
            heisenberg_perturbed_sweep(
                HeisenbergParams(5, **fig2_anisotropy), FieldSchedule(10.0, 5.0, 1.0),
                PerturbationSpec.zero(7), tight_options,
            )

    @pytest.mark.slow
    @pytest.mark.parametrize('N', [5, 7, 9])
    def test_numeric_within_twice_the_bound(self, N, fig2_anisotropy, tight_options):
        """Test random perturbations stay below twice (eps / 2 g0)^2 N."""
        params = HeisenbergParams(N, **fig2_anisotropy)
        schedule = FieldSchedule.from_rate(10.0, 5.0, -0.5)
        rng = np.random.default_rng(N)
        for _ in range(20):
            spec = field_spec(N, rng, 0.05)
            bound = heisenberg_perturbation_bound(spec, 10.0, convention='field').p_e_bound
            numeric = heisenberg_perturbed_sweep(params, schedule, spec, tight_options)
            assert 0.5 * bound <= numeric <= 2.0 * bound

    def test_doubling_epsilon_quadruples_excitation(self, fig2_anisotropy, tight_options):
        """Test p_V grows as eps^2."""
        params = HeisenbergParams(5, **fig2_anisotropy)
        schedule = FieldSchedule.from_rate(10.0, 5.0, -0.5)
        spec = field_spec(5, np.random.default_rng(1), 0.05)
        small = heisenberg_perturbed_sweep(params, schedule, spec, tight_options)
        large = heisenberg_perturbed_sweep(params, schedule, spec.scaled(2.0), tight_options)
        assert np.log(large / small) / np.log(2.0) == pytest.approx(2.0, abs=0.3)
