import pytest

from backend.calculus.grid import make_grid
from backend.utils.config import load_settings

MEMSLAB_KEYS = (
    "MEMSLAB_GRID_SIZE",
    "MEMSLAB_R_MIN",
    "MEMSLAB_CERT_GRID_SIZE",
    "MEMSLAB_CERT_R_MIN",
    "MEMSLAB_RAYLEIGH_GRID_SIZE",
    "MEMSLAB_RAYLEIGH_R_MIN",
    "MEMSLAB_N_JOBS",
    "MEMSLAB_LOG_LEVEL",
)


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Every test starts from the built-in defaults"""
    for key in MEMSLAB_KEYS:
        monkeypatch.delenv(key, raising=False)
    load_settings.cache_clear()
    yield
    load_settings.cache_clear()


@pytest.fixture
def solver_grid():
    return make_grid(800, 1e-5)


@pytest.fixture
def rayleigh_grid():
    return make_grid(4000, 1e-8)
