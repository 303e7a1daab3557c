import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bvlab.geometry import spherical_band, surface_of_revolution, weighted_interval
from bvlab.grid import build_grid

settings.register_profile("bvlab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("bvlab")

ACCEPTANCE_LINES = []


def all_geometries():
    return {"interval": weighted_interval(),
            "weighted": weighted_interval(0.0, 1.0, "linear", 1.0),
            "band": spherical_band(),
            "cylinder": surface_of_revolution(),
            "revolution": surface_of_revolution(0.0, 4.0, "sine", 0.3, 4.0)}


def small_grid(geom, n0=24, n1=8):
    return build_grid(geom, (n0,) if geom.dim == 1 else (n0, n1))


@pytest.fixture(params=sorted(all_geometries()))
def geometry(request):
    return all_geometries()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("BVLAB_OUTPUT", str(tmp_path / "out"))
    return tmp_path / "out"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
