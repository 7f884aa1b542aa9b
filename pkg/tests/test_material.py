import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np

import utils
import constants
from src.services.material import MaterialService, dist_to_so3
from src.utils.voigt import from_voigt6
from src.core.exceptions import ConfigError
from src.core.traceback import traceBack

@pytest.mark.order(2)
class TestMaterial:
    def test_isotropic_form(self):
        print()

        q = MaterialService.isotropic_form(1.0, 1.0)
        assert MaterialService.q0_apply(q, np.eye(3)) == pytest.approx(15.0), "Q0(I) should be 6 mu + 9 lambda"
        skew = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        assert MaterialService.q0_apply(q, skew) == pytest.approx(0.0, abs=1e-14), "Q0 must ignore skew parts"

    @pytest.mark.parametrize("mu, lam", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)])
    def test_invalid_moduli(self, mu, lam):
        print()

        with pytest.raises(ConfigError) as error:
            MaterialService.isotropic_form(mu, lam)
        traceBack(error.value.detail)

    def test_coercivity_constants(self):
        print()

        c1, c2 = MaterialService.coercivity_constants(MaterialService.isotropic_form(2.0, 3.0))
        assert c1 == pytest.approx(4.0) and c2 == pytest.approx(13.0), f"Got c1={c1}, c2={c2}"

    @pytest.mark.parametrize("mu, lam", [(1.0, 1.0), (2.0, 0.0), (0.5, 3.0)])
    def test_hessian_at_identity(self, mu, lam):
        print()

        phase = utils.materials((1, mu, lam))[1]
        step = constants.HESSIAN_STEP

        def W(v: np.ndarray) -> float:
            return float(MaterialService.svk_energy(phase, np.eye(3) + from_voigt6(v)))

        basis = np.eye(6) * step
        hessian = np.array([[(W(a + b) - W(a - b) - W(b - a) + W(-a - b)) / (4 * step ** 2) for b in basis]
                            for a in basis])
        expected = 2.0 * phase.q0.voigt
        upper = np.triu_indices(6)
        traceBack(f"Largest Hessian deviation {np.max(np.abs(hessian - expected)):.2e}")

        assert np.allclose(hessian[upper], expected[upper], rtol=constants.HESSIAN_RTOL,
                           atol=constants.HESSIAN_RTOL * np.max(np.abs(expected))), \
            f"Hessian of W at I is not twice the Voigt form:\n{hessian}"

    def test_quadratic_form_bounds(self, rng, two_phase):
        print()

        for phase in two_phase:
            c1, c2 = MaterialService.coercivity_constants(phase.q0)
            M = rng.standard_normal((200, 3, 3))
            S = 0.5 * (M + np.swapaxes(M, -1, -2))
            norm = np.sum(S * S, axis=(-2, -1))
            values = MaterialService.q0_apply(phase.q0, M)

            assert np.all(values >= c1 * norm * (1 - 1e-12)), f"Phase {phase.phase_id}: Q0 below c1 |sym M|^2"
            assert np.all(values <= c2 * norm * (1 + 1e-12)), f"Phase {phase.phase_id}: Q0 above c2 |sym M|^2"

    def test_frame_indifference(self, rng, single_phase):
        print()

        phase = single_phase[1]
        for _ in range(10):
            F = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
            R = utils.random_rotation(rng)
            assert MaterialService.svk_energy(phase, R @ F) == pytest.approx(MaterialService.svk_energy(phase, F),
                                                                             rel=1e-12), "W(RF) != W(F)"
            assert MaterialService.svk_energy(phase, R) == pytest.approx(0.0, abs=1e-24), "W must vanish on SO(3)"

    def test_taylor_expansion(self, rng, single_phase):
        print()

        phase = single_phase[1]
        residuals = np.array([MaterialService.taylor_check(phase, rng.standard_normal((3, 3)), constants.TAYLOR_STEPS)
                              for _ in range(constants.TAYLOR_SAMPLES)])
        means = residuals.mean(axis=0)
        traceBack(f"Mean Taylor residuals {means}")

        assert np.all(np.diff(means) < 0), f"Residuals do not decrease with t: {means}"
        assert 5.0 < means[-2] / means[-1] < 20.0, f"Residual is not linear in t: {means}"
        assert np.all(residuals[:, -1] < 1e-2), "Second-order residual too large at t = 1e-4"

    def test_growth_near_rotations(self, rng, single_phase):
        print()

        phase = single_phase[1]
        c1, _ = MaterialService.coercivity_constants(phase.q0)
        for _ in range(20):
            S = utils.random_symmetric(rng, 3)
            S *= 1e-3 / np.linalg.norm(S)
            F = utils.random_rotation(rng) @ (np.eye(3) + S)
            ratio = float(MaterialService.growth_ratio(phase, F))
            assert ratio >= (1 - constants.COERCIVITY_ALLOWANCE) * c1, f"W/dist^2 = {ratio} below c1 = {c1}"

    def test_distance_to_rotations(self, rng):
        print()

        R = utils.random_rotation(rng)
        assert float(dist_to_so3(R)) == pytest.approx(0.0, abs=1e-12), "Rotation is not at distance 0"
        assert float(dist_to_so3(2.0 * np.eye(3))) == pytest.approx(np.sqrt(3.0)), "dist(2I, SO(3)) should be sqrt 3"
        reflection = np.diag([1.0, 1.0, -1.0])
        assert float(dist_to_so3(reflection)) == pytest.approx(2.0), "dist(reflection, SO(3)) should be 2"

    def test_material_table_document(self):
        print()

        table = MaterialService.material_table_from_json([{"phase_id": 2, "mu": 3.0, "lambda": 1.0},
                                                          {"phase_id": 1, "mu": 1.0, "lambda": 0.0}])
        assert [phase.phase_id for phase in table] == [1, 2], "Phases are not iterated in id order"
        assert table.json()[1] == {"phase_id": 2, "mu": 3.0, "lambda": 1.0}, f"Unexpected document {table.json()}"

        with pytest.raises(ConfigError):
            MaterialService.material_table_from_json([{"phase_id": 1, "mu": 1.0, "lambda": 0.0},
                                                      {"phase_id": 1, "mu": 2.0, "lambda": 0.0}])

    def test_coercivity_bounds(self, two_phase):
        print()

        c1, c2 = MaterialService.coercivity_bounds(two_phase)
        assert c1 == pytest.approx(2.0) and c2 == pytest.approx(25.0), f"Got ({c1}, {c2})"
