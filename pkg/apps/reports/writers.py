"""
CSV and JSON output plus the per-run manifest.

CSV bodies depend only on the computed values (floats are written with
``repr``), so identical invocations produce identical files; only the
manifest carries a timestamp and the runtime.
"""
import csv
import logging
import math
import time
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from django.utils import timezone
from rest_framework.renderers import JSONRenderer

from config import __version__

from .models import RunManifest
from .serializers import RunManifestSerializer

logger = logging.getLogger(__name__)


def sanitize(value):
    """Plain JSON-ready data; non-finite floats become None."""
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value) and not isinstance(value, type):
        return sanitize(asdict(value))
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [sanitize(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def _cell(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ''
    return str(value)


def render_json(data):
    """UTF-8 JSON with two-space indentation."""
    return JSONRenderer().render(sanitize(data), renderer_context={'indent': 2}) + b'\n'


def write_json(path, data):
    path = Path(path)
    path.write_bytes(render_json(data))
    return path


def write_csv(path, header, rows):
    """Header row first; every row is a sequence matching ``header``."""
    path = Path(path)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f'row {row!r} does not match header {header!r}')
            writer.writerow([_cell(v) for v in row])
    return path


def write_records(path, records):
    """Write dict rows; the header is the key order of the first row."""
    if not records:
        raise ValueError('no rows to write')
    header = list(records[0])
    return write_csv(path, header, [[record.get(k) for k in header] for record in records])


class RunRecorder:
    """
    Writes the files of one run into ``output_dir`` and the
    ``<name>.manifest.json`` that lists them.
    """

    def __init__(self, command, name, parameters, output_dir):
        self.name = name
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(
            command=command,
            parameters=sanitize(parameters),
            version=__version__,
        )
        self._started = time.perf_counter()

    def path(self, suffix):
        return self.output_dir / f'{self.name}{suffix}'

    def _register(self, path):
        if path.name in self.manifest.outputs:
            raise ValueError(f'{path.name} is already part of this run')
        self.manifest.outputs.append(path.name)
        logger.info('wrote %s', path)
        return path

    def csv(self, suffix, header, rows):
        return self._register(write_csv(self.path(suffix), header, rows))

    def records(self, suffix, records):
        return self._register(write_records(self.path(suffix), records))

    def json(self, suffix, data):
        return self._register(write_json(self.path(suffix), data))

    def flag(self, *flags):
        for flag in flags:
            if flag not in self.manifest.flags:
                self.manifest.flags.append(flag)

    def note(self, text):
        self.manifest.notes.append(text)

    def finish(self):
        """Write the manifest and return its path."""
        self.manifest.runtime = time.perf_counter() - self._started
        self.manifest.created_at = timezone.now().isoformat()
        path = self.path('.manifest.json')
        write_json(path, RunManifestSerializer(self.manifest).data)
        logger.info(
            '%s run %s finished in %.2fs with %d outputs',
            self.manifest.command, self.name, self.manifest.runtime, len(self.manifest.outputs),
        )
        return path
