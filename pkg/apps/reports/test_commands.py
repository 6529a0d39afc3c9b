import csv
import json

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from apps.core.exceptions import IntegrationError

from . import figures


def read_csv(path):
    with path.open(newline='') as handle:
        return list(csv.reader(handle))


def read_json(path):
    return json.loads(path.read_text())


def command_error(*args):
    with pytest.raises(CommandError) as excinfo:
        call_command(*args)
    return excinfo.value


class TestSpectrumCommand:
    """Test the spectrum command."""

    def test_ising_levels(self, output_dir):
        """Test one row per (g, level) plus the header."""
        call_command('spectrum', 'ising', '--n', '5', '--g', '0:0.5:1', '--name', 'levels')
        rows = read_csv(output_dir / 'levels.csv')
        assert rows[0] == ['g', 'level', 'energy', 'sector', 'occupation', 'degeneracy']
        assert len(rows) == 1 + 3 * 32
        manifest = read_json(output_dir / 'levels.manifest.json')
        assert manifest['command'] == 'spectrum'
        assert manifest['outputs'] == ['levels.csv']
        assert manifest['parameters']['params']['n_sites'] == 5

    def test_empty_grid_is_usage_error(self, output_dir):
        """Test an empty g grid exits with code 2."""
        assert command_error('spectrum', 'ising', '--n', '5', '--g', '').returncode == 2

    def test_even_chain_rejected(self, output_dir):
        """Test even N fails validation."""
        error = command_error('spectrum', 'ising', '--n', '6', '--g', '0')
        assert error.returncode == 2
        assert 'odd' in str(error)

    def test_all_levels_size_cap(self, output_dir):
        """Test all 2^N levels are refused beyond the dense cap, the lowest few are not."""
        error = command_error('spectrum', 'ising', '--n', '15', '--g', '1')
        assert error.returncode == 2
        assert '14' in str(error)
        call_command('spectrum', 'ising', '--n', '101', '--g', '1', '--levels', '4', '--name', 'low')
        assert len(read_csv(output_dir / 'low.csv')) == 5

    def test_heisenberg_size_cap(self, output_dir):
        """Test the Heisenberg cap names its limit."""
        error = command_error('spectrum', 'heisenberg', '--n', '15', '--g', '1')
        assert error.returncode == 2
        assert '14' in str(error)

    def test_heisenberg_labels_and_table(self, output_dir):
        """Test labelled levels and the degeneracy table at the largest field."""
        call_command(
            'spectrum', 'heisenberg', '--n', '5', '--g', '20,40', '--tracking-steps', '20', '--name', 'h',
        )
        rows = read_csv(output_dir / 'h.csv')
        assert rows[0] == ['g', 'level', 'energy', 'z2', 'k', 'n', 'degeneracy', 'flagged']
        assert len(rows) == 1 + 2 * 32
        table = read_csv(output_dir / 'h_degeneracy.csv')
        assert sum(int(row[1]) for row in table[1:]) == 32
        assert read_json(output_dir / 'h.manifest.json')['outputs'] == ['h.csv', 'h_degeneracy.csv']


class TestSweepCommand:
    """Test the sweep command."""

    def test_ising_report_with_bounds(self, output_dir):
        """Test the report, channel CSV and closed-form estimates are written."""
        call_command(
            'sweep', 'ising', '--n', '9', '--g0', '5', '--g1', '1.5', '--rate', '-0.5',
            '--with-bounds', '--p0n', '--name', 'run',
        )
        report = read_json(output_dir / 'run.json')
        assert report['model'] == 'ising'
        assert len(report['channels']) == 4
        energies = [c['energy'] for c in report['channels']]
        assert energies == sorted(energies)
        bounds = read_json(output_dir / 'run_bounds.json')
        assert [e['regime'] for e in bounds['estimates']] == ['R1', 'R2', 'R3']
        assert bounds['pe_sum'] > 0
        assert len(read_csv(output_dir / 'run_p0n.csv')) == 5
        manifest = read_json(output_dir / 'run.manifest.json')
        assert manifest['outputs'] == ['run.json', 'run_p0n.csv', 'run_bounds.json']

    def test_heisenberg_report(self, output_dir):
        """Test the --alpha spelling and the Heisenberg path."""
        call_command(
            'sweep', 'heisenberg', '--n', '5', '--g0', '10', '--g1', '5', '--alpha', '-6', '--name', 'h',
        )
        report = read_json(output_dir / 'h.json')
        assert report['model'] == 'heisenberg'
        assert report['schedule']['rate'] == pytest.approx(-6.0)
        assert 0.0 < report['p_ground_loss'] < 0.01

    def test_rate_and_duration_conflict(self, output_dir):
        """Test --rate with --T exits with code 2."""
        error = command_error(
            'sweep', 'ising', '--n', '5', '--g0', '5', '--g1', '0', '--rate', '-0.1', '--T', '50',
        )
        assert error.returncode == 2

    def test_wrong_direction_rate(self, output_dir):
        """Test a rate leading away from g1 exits with code 2."""
        error = command_error('sweep', 'ising', '--n', '5', '--g0', '5', '--g1', '0', '--rate', '0.1')
        assert error.returncode == 2

    def test_integrator_failure_exit_code(self, output_dir):
        """Test an exhausted step budget exits with code 3."""
        error = command_error(
            'sweep', 'ising', '--n', '5', '--g0', '5', '--g1', '0', '--T', '1000',
            '--integrator', 'rk4', '--step', '1e-5',
        )
        assert error.returncode == 3

    def test_g1_scan_is_deterministic(self, output_dir):
        """Test two identical scans write identical CSV bodies."""
        for name in ('a', 'b'):
            call_command(
                'sweep', 'ising', '--n', '7', '--g0', '3', '--g1-scan', '0.5:0.5:2.5', '--rate', '-0.5',
                '--integrator', 'magnus4', '--step', '0.05', '--with-bounds', '--name', name,
            )
        first = (output_dir / 'a.csv').read_bytes()
        assert first == (output_dir / 'b.csv').read_bytes()
        rows = read_csv(output_dir / 'a.csv')
        assert [float(r[0]) for r in rows[1:]] == [0.5, 1.0, 1.5, 2.0, 2.5]


class TestScanCommand:
    """Test the scan command."""

    def test_epsilon_scan_writes_fit(self, output_dir):
        """Test the Ising epsilon scan writes rows and the heating exponent."""
        call_command(
            'scan', 'epsilon', '--model', 'ising', '--n', '5', '--integrator', 'magnus4', '--step', '0.05',
            '--name', 'eps',
        )
        rows = read_csv(output_dir / 'eps.csv')
        assert [float(r[0]) for r in rows[1:]] == [0.0, 0.05, 0.1, 0.2]
        summary = read_json(output_dir / 'eps_summary.json')
        assert 'heating_exponent' in summary

    def test_n_scan_heisenberg(self, output_dir):
        """Test the N axis runs one sweep per chain length."""
        call_command(
            'scan', 'N', '--model', 'heisenberg', '--n', '5:2:7', '--g0', '10', '--g1', '5',
            '--alpha', '-6', '--name', 'ns',
        )
        rows = read_csv(output_dir / 'ns.csv')
        assert [int(r[0]) for r in rows[1:]] == [5, 7]

    def test_n_axis_needs_integers(self, output_dir):
        """Test fractional chain lengths are refused."""
        assert command_error('scan', 'N', '--n', '5:0.5:7', '--rate', '-1').returncode == 2

    def test_target_pe_range(self, output_dir):
        """Test a target outside (0, 1) is refused."""
        assert command_error('scan', 'N', '--n', '11', '--target-pe', '1.5').returncode == 2


class TestFiguresCommand:
    """Test figure regeneration."""

    def test_fig1(self, output_dir):
        """Test fig1 writes its table, summary and manifest."""
        call_command('figures', 'fig1')
        manifest = read_json(output_dir / 'fig1.manifest.json')
        assert manifest['outputs'] == ['fig1.csv', 'fig1_summary.json']
        assert len(read_csv(output_dir / 'fig1.csv')) == 1 + 301 * 32

    def test_partial_failure_lists_completed(self, output_dir, monkeypatch):
        """Test a failing figure leaves the others and reports what completed."""
        def broken(recorder, opts, units, workers):
            raise IntegrationError('step budget exhausted', channel=3)

        monkeypatch.setitem(figures.FIGURES, 'fig2', broken)
        error = command_error('figures', 'fig1', 'fig2')
        assert error.returncode == 3
        assert 'completed figures: fig1' in str(error)
        assert (output_dir / 'fig1.manifest.json').exists()
        failed = read_json(output_dir / 'fig2.manifest.json')
        assert failed['flags'] == ['failed']
