"""
Run bookkeeping for the command line: manifests and figure results.
"""
from dataclasses import dataclass, field


@dataclass
class RunManifest:
    """What one invocation did and which files it wrote."""

    command: str
    parameters: dict
    version: str
    runtime: float = 0.0
    created_at: str = ''
    flags: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    outputs: list = field(default_factory=list)


@dataclass
class FigureResult:
    """Files and summary values of one reproduced figure."""

    figure: str
    manifest: str
    outputs: list
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RateSolution:
    """Rate tuned so that one sweep hits a target excitation probability."""

    n_sites: int
    rate: float
    duration: float
    p_e: float
    evaluations: int

    @property
    def duration_per_n_squared(self):
        return self.duration / self.n_sites ** 2
