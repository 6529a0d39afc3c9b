"""
Shared domain types: units, field schedules, integrator options and
excitation reports.

These are plain dataclasses; nothing here is persisted.
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class Validity(str, Enum):
    """Outcome of a regime or perturbative validity predicate."""

    VALID = 'valid'
    MARGINAL = 'marginal'
    INVALID = 'invalid'

    @classmethod
    def much_greater(cls, value, threshold=1.0):
        """Classify ``value >> threshold`` (>= 10x valid, <= 1x invalid)."""
        ratio = value / threshold
        if ratio >= 10.0:
            return cls.VALID
        if ratio <= 1.0:
            return cls.INVALID
        return cls.MARGINAL

    @classmethod
    def much_less(cls, value, threshold=1.0):
        """Classify ``value << threshold`` (<= 0.1x valid, >= 1x invalid)."""
        ratio = value / threshold
        if ratio <= 0.1:
            return cls.VALID
        if ratio >= 1.0:
            return cls.INVALID
        return cls.MARGINAL

    @classmethod
    def holds(cls, condition):
        return cls.VALID if condition else cls.INVALID

    @classmethod
    def combine(cls, *outcomes):
        """Worst outcome wins."""
        if cls.INVALID in outcomes:
            return cls.INVALID
        if cls.MARGINAL in outcomes:
            return cls.MARGINAL
        return cls.VALID


@dataclass(frozen=True)
class UnitsConvention:
    """Value of hbar; time is measured in hbar/J."""

    hbar: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError('hbar must be positive')

    def time_unit(self, coupling):
        """Return hbar/J for the given coupling."""
        return self.hbar / coupling

    @classmethod
    def from_settings(cls):
        from django.conf import settings
        return cls(hbar=settings.SIMULATION['HBAR'])


@dataclass(frozen=True)
class FieldSchedule:
    """Linear field ramp g(s) = g_start + s (g_end - g_start), s = t/T."""

    g_start: float
    g_end: float
    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError('duration must be a positive finite number')
        if not (math.isfinite(self.g_start) and math.isfinite(self.g_end)):
            raise ValueError('field endpoints must be finite')

    @classmethod
    def from_rate(cls, g_start, g_end, rate):
        """Build a schedule from its change rate dg/dt."""
        if rate == 0 or g_start == g_end:
            raise ValueError('a rate needs distinct endpoints and a nonzero value')
        duration = (g_end - g_start) / rate
        if duration <= 0:
            raise ValueError(
                f'rate {rate} does not lead from g={g_start} to g={g_end}'
            )
        return cls(g_start, g_end, duration)

    @property
    def rate(self):
        return (self.g_end - self.g_start) / self.duration

    @property
    def dg_ds(self):
        return self.g_end - self.g_start

    @property
    def is_stationary(self):
        return self.g_start == self.g_end

    def field(self, s):
        """Field at schedule position ``s`` (scalar or array); endpoints exact."""
        return (1.0 - s) * self.g_start + s * self.g_end

    def field_at_time(self, t):
        return self.field(t / self.duration)

    def reversed(self):
        """Mirror leg used for round trips."""
        return FieldSchedule(self.g_end, self.g_start, self.duration)

    def with_duration(self, duration):
        return replace(self, duration=duration)


INTEGRATOR_METHODS = ('rk4', 'adaptive', 'magnus4')
FIXED_STEP_METHODS = ('rk4', 'magnus4')


@dataclass(frozen=True)
class IntegratorOptions:
    """How to integrate the time-dependent Schroedinger equation."""

    method: str = 'adaptive'
    step: float | None = None
    rtol: float = 1e-9
    atol: float = 1e-12
    max_steps: int = 10_000_000
    norm_tolerance: float = 1e-6

    def __post_init__(self):
        if self.method not in INTEGRATOR_METHODS:
            raise ValueError(
                f'unknown integrator {self.method!r}; choose from {INTEGRATOR_METHODS}'
            )
        if self.method in FIXED_STEP_METHODS:
            if self.step is None or not self.step > 0:
                raise ValueError(f'{self.method} needs a positive step')
        elif not (self.rtol > 0 and self.atol > 0):
            raise ValueError('adaptive integration needs positive tolerances')
        if self.max_steps <= 0:
            raise ValueError('max_steps must be positive')
        if not self.norm_tolerance > 0:
            raise ValueError('norm_tolerance must be positive')

    @property
    def is_fixed_step(self):
        return self.method in FIXED_STEP_METHODS

    def step_count(self, duration):
        """Number of equal steps covering ``duration`` (at least one)."""
        return max(1, math.ceil(duration / self.step - 1e-12))

    @classmethod
    def from_settings(cls, **overrides):
        """Defaults from ``settings.SIMULATION['INTEGRATOR']``."""
        from django.conf import settings
        conf = settings.SIMULATION['INTEGRATOR']
        values = {
            'method': conf['METHOD'],
            'step': conf['STEP'],
            'rtol': conf['RTOL'],
            'atol': conf['ATOL'],
            'max_steps': conf['MAX_STEPS'],
            'norm_tolerance': conf['NORM_TOLERANCE'],
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class Channel:
    """One excitation channel of a report."""

    index: int
    energy: float
    probability: float


@dataclass
class ExcitationReport:
    """Outcome of a sweep: per-channel probabilities and energy statistics."""

    model: str
    n_sites: int
    schedule: FieldSchedule
    channels: list[Channel]
    p_ground_loss: float
    mean_energy_above_ground: float
    energy_variance: float
    spectrum_width: float
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        # Channels are reported by ascending excitation energy.
        self.channels = sorted(self.channels, key=lambda c: (c.energy, c.index))
        if self.p_total > 1.0 and 'p_total_exceeds_one' not in self.flags:
            self.flags.append('p_total_exceeds_one')

    @property
    def p0n(self):
        return {c.index: c.probability for c in self.channels}

    @property
    def p_total(self):
        return float(sum(c.probability for c in self.channels))

    @property
    def heating_ratio(self):
        return self.mean_energy_above_ground / self.spectrum_width

    def channel(self, index):
        for c in self.channels:
            if c.index == index:
                return c
        raise KeyError(index)

    def dominant_channel(self):
        """Channel with the largest probability."""
        return max(self.channels, key=lambda c: c.probability)


def clip_probability(value):
    """Clamp round-off excursions of a probability into [0, 1]."""
    return float(np.clip(value, 0.0, 1.0))
