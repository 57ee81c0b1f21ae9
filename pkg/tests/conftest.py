import json
import math
from pathlib import Path

import numpy as np
import pytest

from balance_flux.exact import OracleSampler, planar_solution
from balance_flux.geometry import Box
from balance_flux.settings import get_settings
from balance_flux.solver import Mesh, RiemannData, SolverConfig, run
from balance_flux.systems import Advection, Burgers, ShallowWater

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
DIAGONAL = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))


def load_config_data(name: str) -> dict:
    """Decoded JSON of a shipped run config"""
    return json.loads((CONFIG_DIR / name).read_text(encoding="utf-8"))


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Settings are cached per process; keep tests independent of the caller's env"""
    for key in ("LOG_LEVEL", "BALANCE_FLUX_TOL", "BALANCE_FLUX_CFL", "BALANCE_FLUX_OUT_DIR"):
        monkeypatch.delenv(key, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def config_data():
    return load_config_data


@pytest.fixture
def burgers1d():
    return Burgers(1)


@pytest.fixture
def burgers2d():
    return Burgers(2)


@pytest.fixture
def advection1d():
    return Advection((1.0,))


@pytest.fixture
def shallow_water():
    return ShallowWater()


@pytest.fixture
def burgers_shock(burgers1d):
    """u_l = 1 | u_r = 0 at x = 0; shock speed 1/2"""
    return planar_solution(burgers1d, [1.0], [0.0])


@pytest.fixture
def burgers_rarefaction(burgers1d):
    """u_l = 0 | u_r = 1 at x = 0; fan u = x/t on 0 < x < t"""
    return planar_solution(burgers1d, [0.0], [1.0])


@pytest.fixture
def oblique_shock(burgers2d):
    return planar_solution(burgers2d, [1.0], [0.0], normal=DIAGONAL)


@pytest.fixture
def dam_break(shallow_water):
    return planar_solution(shallow_water, [2.0, 0.0], [1.0, 0.0])


@pytest.fixture
def shock_oracle(burgers_shock):
    return OracleSampler(burgers_shock)


@pytest.fixture
def unit_interval():
    return Box((0.0,), (1.0,))


@pytest.fixture
def unit_square():
    return Box((0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def shock_solver_config(burgers1d):
    """Burgers shock on [-0.5, 1.5] with 128 cells; mesh lines every 1/64"""
    mesh = Mesh(Box((-0.5,), (1.5,)), (128,))
    return SolverConfig(burgers1d, mesh, 0.45, 1.0, "outflow", RiemannData((1.0,), (0.0,)))


@pytest.fixture
def shock_trajectory(shock_solver_config):
    return run(shock_solver_config, [0.25, 0.5, 0.75])


@pytest.fixture
def oblique_trajectory(burgers2d):
    """2-D Burgers shock across x·(0.6, 0.8) = 0.5 on a 32 x 32 mesh of the unit square"""
    mesh = Mesh(Box((0.0, 0.0), (1.0, 1.0)), (32, 32))
    data = RiemannData((1.0,), (0.0,), (0.6, 0.8), 0.5)
    config = SolverConfig(burgers2d, mesh, 0.45, 0.3, "outflow", data)
    return run(config, [0.1, 0.2])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
