import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from pydantic import ValidationError

import utils
import constants
from src.schemas.recovery import RecoveryConfig, IsometryKind
from src.models.cell import CoupledEffectiveTensor
from src.models.recovery import Quadrature
from src.services.cell_solver import CellSolverService
from src.services.recovery import RecoveryService
from src.core.exceptions import ConfigError
from src.core.traceback import traceBack

SMALL = (0.0, 0.0, 0.25, 0.25)

def config(**update) -> RecoveryConfig:
    document = {"isometry": "cylinder", "radius": 1.0, "domain": SMALL, "h_schedule": (0.08,), "gamma": 1.0,
                "eta": 0.25, "delta": 0.02}
    return RecoveryConfig.model_validate({**document, **update})

@pytest.mark.order(6)
class TestIsometry:
    def test_cylinder_frame(self, rng):
        print()

        iso = RecoveryService.cylinder_isometry(2.0, (0.0, 0.0, 1.0, 1.0))
        x = rng.uniform(0.0, 1.0, size=(50, 2))
        R = iso.frame(x)

        assert np.allclose(np.swapaxes(R, -1, -2) @ R, np.eye(3), atol=1e-14), "Frame is not orthonormal"
        assert np.allclose(np.linalg.det(R), 1.0), "Frame is not right-handed"
        assert np.allclose(iso.normal(x), np.stack([np.sin(x[:, 0] / 2), 0 * x[:, 0], np.cos(x[:, 0] / 2)], axis=-1)), \
            "Normal is not (sin, 0, cos)"
        II = iso.second_fundamental(x)
        assert np.allclose(II[:, 0, 0], 0.5) and np.allclose(II[:, 1], 0.0), "Cylinder II is not diag(1/r, 0)"

    def test_frame_derivatives(self, rng):
        print()

        iso = RecoveryService.cylinder_isometry(0.7, (0.0, 0.0, 1.0, 1.0))
        x = rng.uniform(0.0, 1.0, size=(20, 2))
        dR = iso.frame_derivatives(x)
        step = 1e-6
        for a in range(2):
            shift = np.zeros(2)
            shift[a] = step
            fd = (iso.frame(x + shift) - iso.frame(x - shift)) / (2 * step)
            assert np.allclose(dR[:, a], fd, atol=1e-8), f"d_{a + 1} R disagrees with finite differences"

    def test_isometry_validation(self):
        print()

        with pytest.raises(ConfigError):
            RecoveryService.cylinder_isometry(0.0, SMALL)
        assert RecoveryService.isometry_from_config(config(isometry="flat")).kind is IsometryKind.FLAT

    def test_patch_partition(self):
        print()

        iso = RecoveryService.cylinder_isometry(1.0, (0.0, 0.0, 1.0, 1.0))
        patches = RecoveryService.patch_partition(iso, 0.5)

        assert len(patches) == 4, f"Expected 4 patches, got {len(patches)}"
        assert [p.index for p in patches] == [0, 1, 2, 3], "Patch indices are not consecutive"
        for patch in patches:
            assert np.allclose(patch.load, np.diag([1.0, 0.0])), f"Patch load {patch.load} is not the average II"
        with pytest.raises(ConfigError):
            RecoveryService.patch_partition(iso, 0.0)

    def test_cutoff_support(self, rng):
        print()

        patch = RecoveryService.patch_partition(RecoveryService.flat_isometry((0.0, 0.0, 1.0, 1.0)), 1.0)[0]
        delta = 0.05
        x = rng.uniform(-0.2, 1.2, size=(500, 2))
        chi, grad = RecoveryService.cutoff(x, patch, delta)
        boundary_distance = np.minimum.reduce([x[:, 0], 1 - x[:, 0], x[:, 1], 1 - x[:, 1]])

        assert np.all((chi >= 0) & (chi <= 1)), "Cutoff leaves [0, 1]"
        assert np.all(chi[boundary_distance <= delta] == 0), "Cutoff is not zero within delta of the boundary"
        assert np.all(chi[boundary_distance >= 2 * delta] == 1), "Cutoff is not one in the patch interior"
        assert np.all(grad[boundary_distance >= 2 * delta] == 0), "Cutoff gradient leaks into the interior"

@pytest.mark.order(6)
class TestRecovery:
    def test_flat_plate_has_no_energy(self, single_phase, homogeneous, homogeneous_tensor):
        print()

        iso = RecoveryService.flat_isometry(SMALL)
        sampler = RecoveryService.build_recovery(iso, config(isometry="flat"), homogeneous, single_phase,
                                                 homogeneous_tensor, 0.08)
        x = np.array([[0.1, 0.2], [0.125, 0.125]])
        F = sampler.gradient(x, np.array([0.1, -0.3]))

        assert np.allclose(F, np.eye(3), atol=1e-14), "Flat recovery gradient is not the identity"
        assert RecoveryService.evaluate_Ih(sampler, single_phase, homogeneous, 0.08, 0.08) == pytest.approx(0.0, abs=1e-20)

    def test_gradient_matches_deformation(self, rng, single_phase, homogeneous, homogeneous_tensor):
        print()

        iso = RecoveryService.cylinder_isometry(1.0, SMALL)
        h = 0.04
        sampler = RecoveryService.build_recovery(iso, config(), homogeneous, single_phase, homogeneous_tensor, h)
        x = rng.uniform(0.06, 0.19, size=(10, 2))
        layer = rng.integers(0, sampler.layers, size=10)
        x3 = -0.5 + (layer + rng.uniform(0.2, 0.8, size=10)) / sampler.layers
        F = sampler.gradient(x, x3)

        step = 1e-5
        for a in range(2):
            shift = np.zeros(2)
            shift[a] = step
            fd = (sampler.deformation(x + shift, x3) - sampler.deformation(x - shift, x3)) / (2 * step)
            assert np.allclose(F[..., a], fd, atol=1e-6), f"Column {a + 1} of the gradient disagrees"
        fd3 = (sampler.deformation(x, x3 + step) - sampler.deformation(x, x3 - step)) / (2 * step * h)
        assert np.allclose(F[..., 2], fd3, atol=1e-6), "Scaled thickness column disagrees"

    def test_rotated_energy(self, rng, single_phase, homogeneous, homogeneous_tensor):
        print()

        iso = RecoveryService.cylinder_isometry(1.0, SMALL)
        sampler = RecoveryService.build_recovery(iso, config(), homogeneous, single_phase, homogeneous_tensor, 0.08)
        base = RecoveryService.evaluate_Ih(sampler, single_phase, homogeneous, 0.08, 0.08)
        rotated = RecoveryService.evaluate_Ih(RecoveryService.rotated(sampler, utils.random_rotation(rng)),
                                              single_phase, homogeneous, 0.08, 0.08)
        traceBack(f"I^h = {base:.10e}, rotated {rotated:.10e}")

        assert base > 0, "Curved plate recovered with zero energy"
        assert rotated == pytest.approx(base, rel=constants.OBJECTIVITY_RTOL), "Energy is not frame indifferent"
        with pytest.raises(ConfigError):
            RecoveryService.rotated(sampler, np.diag([1.0, 1.0, -1.0]))

    def test_limit_energy(self, homogeneous_tensor):
        print()

        q = CellSolverService.effective_bending(homogeneous_tensor)
        unit = RecoveryService.limit_energy(q, RecoveryService.cylinder_isometry(1.0, (0.0, 0.0, 1.0, 1.0)))
        wide = RecoveryService.limit_energy(q, RecoveryService.cylinder_isometry(2.0, (0.0, 0.0, 1.0, 1.0)))
        flat = RecoveryService.limit_energy(q, RecoveryService.flat_isometry((0.0, 0.0, 1.0, 1.0)))

        assert unit == pytest.approx(q.voigt3[0, 0]), "Unit cylinder energy is not Q(e1 x e1)"
        assert wide == pytest.approx(unit / 4), "Energy does not scale with curvature squared"
        assert flat == 0.0, "Flat plate has limit energy"

    def test_invalid_setups(self, single_phase, homogeneous, homogeneous_tensor):
        print()

        iso = RecoveryService.cylinder_isometry(1.0, SMALL)
        with pytest.raises(ValidationError):
            config(delta=0.2)
        with pytest.raises(ConfigError):
            RecoveryService.build_recovery(iso, config(gamma=2.0), homogeneous, single_phase, homogeneous_tensor, 0.08)
        with pytest.raises(ConfigError):
            RecoveryService.build_recovery(iso, config(), homogeneous, single_phase, homogeneous_tensor, 0.0)

        bare = CoupledEffectiveTensor(matrix=homogeneous_tensor.matrix, grid=homogeneous_tensor.grid)
        with pytest.raises(ConfigError) as error:
            RecoveryService.build_recovery(iso, config(), homogeneous, single_phase, bare, 0.08)
        traceBack(error.value.detail)

        sampler = RecoveryService.build_recovery(iso, config(), homogeneous, single_phase, homogeneous_tensor, 0.08)
        with pytest.raises(ConfigError):
            RecoveryService.evaluate_Ih(sampler, single_phase, homogeneous, 0.08, 0.08, Quadrature(cell=0.05))
        with pytest.raises(ConfigError):
            RecoveryService.evaluate_Ih(sampler, single_phase, homogeneous, 0.04, 0.04)

    @pytest.mark.slow
    def test_gap_trend(self, single_phase, homogeneous, homogeneous_tensor):
        print()

        cfg = RecoveryConfig(isometry="cylinder", radius=1.0, h_schedule=constants.RECOVERY_SCHEDULE, eta=1.0,
                             delta=0.02)
        iso = RecoveryService.isometry_from_config(cfg)
        reports = RecoveryService.gap_trend(iso, cfg, homogeneous, single_phase, homogeneous_tensor)
        gaps = [report.relative_gap for report in reports]
        traceBack(f"Recovery gaps {gaps}")

        assert all(a > b for a, b in zip(gaps, gaps[1:])), f"Gap is not decreasing: {gaps}"
        assert gaps[-1] <= constants.RECOVERY_GAP_BOUND, f"Gap {gaps[-1]} at the finest h"
        for report in reports:
            assert report.Ih >= (1 - constants.RECOVERY_LOWER_SLACK) * report.I0, \
                f"I^h = {report.Ih} fell below the limit energy {report.I0}"
