"""
Error types raised by the simulation apps.

Validation problems are ``ValueError`` subclasses so callers can treat them
like any bad argument; numerical failures derive from ``SimulationError``.
"""


class SimulationError(Exception):
    """Base class for numerical failures during a run."""


class IntegrationError(SimulationError):
    """Time integration failed; ``channel`` names the mode or channel if known."""

    def __init__(self, message, channel=None):
        self.channel = channel
        if channel is not None:
            message = f'{message} (channel {channel})'
        super().__init__(message)


class NormDriftError(IntegrationError):
    """State norm drifted beyond the configured tolerance."""


class SectorProjectionError(SimulationError):
    """A state expected inside a symmetry sector has weight outside it."""


class RootBracketError(SimulationError):
    """Root finding could not bracket the target value."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(message)


class SizeCapError(ValueError):
    """Requested system size exceeds a dense-feasibility cap."""

    def __init__(self, name, limit, requested):
        self.name = name
        self.limit = limit
        self.requested = requested
        super().__init__(f'{name}: N={requested} exceeds the cap N <= {limit}')


class RegimeValidityError(ValueError):
    """A closed-form estimate was requested outside its validity window."""
