import pytest

from apps.core.models import IntegratorOptions


@pytest.fixture
def tight_options():
    """Return adaptive integrator options with tight tolerances."""
    return IntegratorOptions(method='adaptive', rtol=1e-10, atol=1e-12)


@pytest.fixture
def magnus_options():
    """Return fixed-step Magnus integrator options."""
    return IntegratorOptions(method='magnus4', step=0.05)


@pytest.fixture
def fig2_anisotropy():
    """Return the anisotropies (0.1, 0.3, 1) used for the Heisenberg spectra."""
    return {'delta_x': 0.1, 'delta_y': 0.3, 'delta_z': 1.0}


@pytest.fixture
def output_dir(tmp_path, settings):
    """Point the run output directory at a temporary path."""
    settings.SIMULATION = {**settings.SIMULATION, 'OUTPUT_DIR': str(tmp_path)}
    return tmp_path
