import csv
import json
import math
from pathlib import Path

import pytest

from apps.core.models import Channel, ExcitationReport, FieldSchedule, IntegratorOptions
from apps.heisenberg.models import HeisenbergParams
from apps.ising.models import IsingParams

from .scans import duration_scan, fit_power_law, scan_epsilon, scan_g1, scan_n, scan_rate, tune_rate
from .serializers import ExcitationReportSerializer, ScheduleInputSerializer, parse_grid
from .workers import parallel_map
from .writers import RunRecorder, render_json, sanitize, write_csv

SCHEMAS = Path(__file__).resolve().parents[2] / 'docs' / 'schemas'


def load_schema(name):
    return json.loads((SCHEMAS / name).read_text())


def sample_report():
    return ExcitationReport(
        model='ising',
        n_sites=5,
        schedule=FieldSchedule(5.0, 0.0, 10.0),
        channels=[Channel(1, 2.0, 0.1), Channel(2, 1.0, 0.2)],
        p_ground_loss=0.28,
        mean_energy_above_ground=0.4,
        energy_variance=0.1,
        spectrum_width=8.0,
    )


class TestParseGrid:
    """Test the a:step:b and list grid formats."""

    def test_inclusive_range(self):
        """Test the end point is part of the grid."""
        assert parse_grid('0:0.5:2') == [0.0, 0.5, 1.0, 1.5, 2.0]

    def test_fine_range_has_clean_values(self):
        """Test 0:0.01:3 has 301 rounded points."""
        grid = parse_grid('0:0.01:3')
        assert len(grid) == 301
        assert grid[-1] == 3.0
        assert grid[7] == 0.07

    def test_descending_range(self):
        """Test negative steps walk downwards."""
        assert parse_grid('-0.01:-0.01:-0.03') == [-0.01, -0.02, -0.03]

    def test_comma_list(self):
        """Test explicit value lists keep their order."""
        assert parse_grid('-1,-0.1, -0.01') == [-1.0, -0.1, -0.01]

    @pytest.mark.parametrize('text', ['', '   ', '1:0.1:0', '0:0:1', 'a:b:c', '1,,x', 'nan,1'])
    def test_rejects_bad_grids(self, text):
        """Test empty, inverted and malformed grids are rejected."""
        with pytest.raises(ValueError):
            parse_grid(text)


class TestScheduleInputSerializer:
    """Test the rate/duration exclusivity."""

    def test_rate_and_duration_conflict(self):
        """Test giving both is a validation error."""
        serializer = ScheduleInputSerializer(data={'g0': 5, 'g1': 0, 'rate': -0.1, 'duration': 50})
        assert not serializer.is_valid()
        assert 'non_field_errors' in serializer.errors

    def test_one_of_them_is_required(self):
        """Test giving neither is a validation error."""
        assert not ScheduleInputSerializer(data={'g0': 5, 'g1': 0}).is_valid()

    def test_rate_builds_schedule(self):
        """Test a rate is turned into the matching duration."""
        serializer = ScheduleInputSerializer(data={'g0': 5, 'g1': 0, 'rate': -0.1})
        assert serializer.is_valid(), serializer.errors
        assert serializer.schedule().duration == pytest.approx(50.0)

    def test_duration_builds_schedule(self):
        """Test a duration is used as given."""
        serializer = ScheduleInputSerializer(data={'g0': 10, 'g1': 5, 'duration': 2.5})
        assert serializer.is_valid(), serializer.errors
        assert serializer.schedule().rate == pytest.approx(-2.0)

    @pytest.mark.parametrize('data', [
        {'g0': -1, 'g1': 0, 'rate': 0.1},
        {'g0': 5, 'g1': -0.5, 'rate': -0.1},
    ])
    def test_negative_fields_rejected(self, data):
        """Test fields below zero are refused at either end."""
        assert not ScheduleInputSerializer(data=data).is_valid()

    def test_zero_rate_rejected(self):
        """Test a zero rate is refused."""
        assert not ScheduleInputSerializer(data={'g0': 5, 'g1': 0, 'rate': 0}).is_valid()


class TestWriters:
    """Test the CSV and JSON writers and the run manifest."""

    def test_sanitize_replaces_non_finite(self):
        """Test NaN and infinities become None at any depth."""
        data = sanitize({'a': math.nan, 'b': [1.0, math.inf], 'c': {'d': -math.inf}})
        assert data == {'a': None, 'b': [1.0, None], 'c': {'d': None}}

    def test_render_json_is_strict(self):
        """Test rendered JSON parses and carries null for NaN."""
        assert json.loads(render_json({'x': math.nan, 'y': 0.5})) == {'x': None, 'y': 0.5}

    def test_csv_uses_repr_floats(self, tmp_path):
        """Test floats keep full precision and the header comes first."""
        path = write_csv(tmp_path / 'a.csv', ['x', 'label'], [[1 / 3, 'a,b'], [0.1, 'c']])
        with path.open(newline='') as handle:
            rows = list(csv.reader(handle))
        assert rows == [['x', 'label'], ['0.3333333333333333', 'a,b'], ['0.1', 'c']]

    def test_csv_row_must_match_header(self, tmp_path):
        """Test short rows are refused."""
        with pytest.raises(ValueError):
            write_csv(tmp_path / 'a.csv', ['x', 'y'], [[1.0]])

    def test_recorder_lists_every_output_once(self, tmp_path):
        """Test the manifest references each written file."""
        recorder = RunRecorder('sweep', 'run', {'n': 5, 'g': math.nan}, tmp_path)
        recorder.csv('.csv', ['x'], [[1.0]])
        recorder.json('.json', {'x': 1})
        with pytest.raises(ValueError):
            recorder.csv('.csv', ['x'], [[2.0]])
        recorder.flag('a', 'a', 'b')
        manifest = json.loads(recorder.finish().read_text())
        assert manifest['outputs'] == ['run.csv', 'run.json']
        assert manifest['flags'] == ['a', 'b']
        assert manifest['parameters'] == {'n': 5, 'g': None}
        assert manifest['runtime'] >= 0

    def test_manifest_matches_schema(self, tmp_path):
        """Test the manifest carries exactly the documented fields."""
        recorder = RunRecorder('scan', 'run', {}, tmp_path)
        manifest = json.loads(recorder.finish().read_text())
        schema = load_schema('run_manifest.schema.json')
        assert set(manifest) == set(schema['required']) == set(schema['properties'])


class TestExcitationReportSerializer:
    """Test the JSON form of sweep reports."""

    def test_fields_match_schema(self):
        """Test the serialized report has exactly the documented fields."""
        data = ExcitationReportSerializer(sample_report()).data
        schema = load_schema('excitation_report.schema.json')
        assert set(data) == set(schema['required']) == set(schema['properties'])

    def test_channels_ascending_in_energy(self):
        """Test channel order follows excitation energy."""
        data = ExcitationReportSerializer(sample_report()).data
        assert [c['index'] for c in data['channels']] == [2, 1]
        assert data['p_total'] == pytest.approx(0.3)
        assert data['heating_ratio'] == pytest.approx(0.05)
        assert data['schedule']['rate'] == pytest.approx(-0.5)


class TestParallelMap:
    """Test the process-pool map."""

    def test_order_preserved(self):
        """Test results follow the input order."""
        assert parallel_map(abs, [-3, 1, -2, 5], workers=2) == [3, 1, 2, 5]

    def test_serial_path(self):
        """Test one worker maps in process."""
        assert parallel_map(str, [1, 2], workers=1) == ['1', '2']
        assert parallel_map(str, [], workers=4) == []


class TestScans:
    """Test the parameter scans."""

    def test_g1_scan_skips_start_and_sorts(self, magnus_options):
        """Test g1 = g0 is skipped and rows ascend in g1."""
        rows = scan_g1('ising', IsingParams(5), 2.0, [1.0, 2.0, 0.5], -0.5, magnus_options, with_bounds=True)
        assert [r['g1'] for r in rows] == [0.5, 1.0]
        assert {'pe_sum', 'pe_r1', 'r1_validity', 'pe_r3'} <= set(rows[0])
        assert all(0.0 <= r['p_e'] <= 1.0 for r in rows)

    def test_rate_scan_independent_of_workers(self, magnus_options):
        """Test the worker count does not change the rows."""
        args = ('ising', IsingParams(7), 5.0, 0.0, [-0.5, -1.0, -0.2], magnus_options)
        serial = scan_rate(*args, workers=1)
        parallel = scan_rate(*args, workers=2)
        assert repr(serial) == repr(parallel)
        assert [r['rate'] for r in serial] == [-1.0, -0.5, -0.2]
        assert all(r['adiabatic_heating'] > 0 for r in serial)

    def test_faster_sweeps_heat_more(self, magnus_options):
        """Test the heating ratio grows from slow to sudden sweeps."""
        rows = scan_rate('ising', IsingParams(21), 5.0, 0.0, [-10.0, -0.01], magnus_options)
        fast, slow = rows
        assert fast['heating_ratio'] > 10 * slow['heating_ratio']

    def test_n_scan_heisenberg(self, fig2_anisotropy, tight_options):
        """Test the same schedule runs on each chain length."""
        schedule = FieldSchedule.from_rate(10.0, 5.0, -6.0)
        rows = scan_n('heisenberg', HeisenbergParams(5, **fig2_anisotropy), [7, 5], schedule, tight_options)
        assert [r['n'] for r in rows] == [5, 7]
        assert all(r['pe_heisenberg'] > 0 for r in rows)

    def test_epsilon_scan_heisenberg(self, fig2_anisotropy, tight_options):
        """Test the bound column grows as eps^2."""
        params = HeisenbergParams(5, **fig2_anisotropy)
        schedule = FieldSchedule.from_rate(10.0, 5.0, -0.5)
        rows, fit = scan_epsilon('heisenberg', params, schedule, [0.1, 0.05], tight_options)
        assert fit is None
        assert [r['epsilon'] for r in rows] == [0.05, 0.1]
        assert rows[1]['bound'] == pytest.approx(4 * rows[0]['bound'])
        assert all(r['p_v'] > 0 for r in rows)

    def test_epsilon_scan_needs_positive_strengths(self, fig2_anisotropy, tight_options):
        """Test a zero strength is refused for random patterns."""
        with pytest.raises(ValueError):
            scan_epsilon(
                'heisenberg', HeisenbergParams(5, **fig2_anisotropy),
                FieldSchedule(10.0, 5.0, 1.0), [0.0, 0.1], tight_options,
            )

    def test_tune_rate_hits_target(self, magnus_options):
        """Test the tuned rate reproduces p_E = 0.05."""
        solution = tune_rate(IsingParams(11), 5.0, 0.0, 0.05, magnus_options)
        assert solution.p_e == pytest.approx(0.05, rel=2e-3)
        assert solution.rate < 0
        assert solution.duration == pytest.approx(5.0 / abs(solution.rate))

    def test_fit_power_law(self):
        """Test an exact power law is recovered."""
        exponent, coefficient = fit_power_law([10, 20, 40], [0.3 * n ** 2 for n in (10, 20, 40)])
        assert exponent == pytest.approx(2.0)
        assert coefficient == pytest.approx(0.3)

    @pytest.mark.slow
    def test_duration_grows_quadratically(self):
        """Test T(N) at p_E = 0.05 fits an exponent near 2."""
        opts = IntegratorOptions(method='magnus4', step=0.05)
        rows, fit, failures = duration_scan(IsingParams(11), range(11, 102, 10), 5.0, 0.0, 0.05, opts)
        assert failures == {}
        assert 1.8 <= fit[0] <= 2.2
        assert all(abs(r['p_e'] / 0.05 - 1.0) < 2e-3 for r in rows)
