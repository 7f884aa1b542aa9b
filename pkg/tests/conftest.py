import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np

from src.models.cell import RVEGrid, CoupledEffectiveTensor
from src.models.material import MaterialTable
from src.models.microstructure import MicrostructureRealization
from src.services.cell_solver import CellSolverService
from src.services.microstructure import MicrostructureService
from src.core.config import settings

import utils
import constants

@pytest.fixture(autouse=True)
def serial_settings():
    saved = settings.THREADS, settings.THREADS_OVERRIDE, settings.DETERMINISTIC, settings.RESAMPLE_EMPTY_POISSON
    yield
    settings.THREADS, settings.THREADS_OVERRIDE, settings.DETERMINISTIC, settings.RESAMPLE_EMPTY_POISSON = saved

@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)

@pytest.fixture(scope="module")
def single_phase() -> MaterialTable:
    return utils.materials((1, 1.0, 1.0))

@pytest.fixture(scope="module")
def two_phase() -> MaterialTable:
    return utils.materials((1, 1.0, 1.0), (2, 5.0, 5.0))

@pytest.fixture(scope="module")
def homogeneous() -> MicrostructureRealization:
    return MicrostructureService.sample_realization(utils.texture({1: 1.0}), seed=0, box_side=1.0)

@pytest.fixture(scope="module")
def checkerboard() -> MicrostructureRealization:
    return MicrostructureService.sample_realization(utils.checkerboard(0.5), seed=0, box_side=1.0)

@pytest.fixture(scope="module")
def homogeneous_tensor(single_phase, homogeneous) -> CoupledEffectiveTensor:
    grid = RVEGrid(box_side=1.0, n1=4, n2=4, n3=8, gamma=1.0)
    phases = MicrostructureService.rasterize(homogeneous, grid.n1, grid.n2)
    return CellSolverService.coupled_tensor(grid, phases, single_phase, constants.CG_TOL, seed=0)

@pytest.fixture(scope="module")
def checkerboard_tensor(two_phase, checkerboard) -> CoupledEffectiveTensor:
    grid = RVEGrid(box_side=1.0, n1=8, n2=8, n3=4, gamma=1.0)
    phases = MicrostructureService.rasterize(checkerboard, grid.n1, grid.n2)
    return CellSolverService.coupled_tensor(grid, phases, two_phase, constants.CG_TOL, seed=0)
