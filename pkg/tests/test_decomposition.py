import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
from scipy import fft

import constants
from src.models.cell import RVEGrid
from src.models.decomposition import MixedField, SymField2D
from src.services.decomposition import (DecompositionService, band_limited_mixed_field, band_limited_sym_field,
                                        discrete_gradient, inner, node_weights)
from src.storage.fields import dump_mixed, load_mixed
from src.utils.fem import node_x3
from src.core.exceptions import ConfigError
from src.core.traceback import traceBack

GRID = RVEGrid(box_side=1.0, n1=16, n2=16, n3=8)

def smooth_potential(grid: RVEGrid) -> np.ndarray:
    h1, h2, _ = grid.spacing
    X1, X2, X3 = np.meshgrid(np.arange(grid.n1) * h1, np.arange(grid.n2) * h2, node_x3(grid.n3), indexing="ij")
    wave = 2 * np.pi / grid.box_side
    return np.sin(wave * X1) * np.cos(wave * X2) * (1.0 + X3 ** 2) + X3 ** 2

def periodic_b(box_side: float = 1.0):
    wave = 2 * np.pi / box_side

    def b(x: np.ndarray) -> np.ndarray:
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([np.sin(wave * (x1 + 2 * x2)), np.cos(wave * (2 * x1 + x2))], axis=-1)
    return b

def sampled_b_hat(n: int, box_side: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    axis = np.arange(n) * box_side / n
    X1, X2 = np.meshgrid(axis, axis, indexing="ij")
    wave = 2 * np.pi / box_side
    b = np.zeros((n, n, 2))
    for m1 in range(-2, 3):
        for m2 in range(-2, 3):
            amplitude, shift = rng.standard_normal(2), rng.uniform(0.0, 2 * np.pi, size=2)
            b += amplitude * np.cos(wave * (m1 * X1 + m2 * X2)[..., None] + shift)
    return fft.fftn(b, axes=(0, 1))

@pytest.mark.order(4)
class TestMixedDecomposition:
    @pytest.mark.parametrize("seed", range(10))
    def test_orthogonal_split(self, seed):
        print()

        f = band_limited_mixed_field(GRID, seed)
        d = DecompositionService.decompose_mixed(f, constants.CG_TOL)
        report = DecompositionService.orthogonality_report(d)
        traceBack(f"seed {seed}: orthogonality {report}, {d.history.iterations} CG iterations")

        assert max(report) <= constants.ORTHOGONALITY_BOUND, f"Parts are not orthogonal: {report}"

        total = d.potential.values + d.solenoidal.values + d.mean
        assert np.allclose(total, f.values, atol=1e-12), "Parts do not add up to the source"

        volume = float(node_weights(GRID).sum())
        norm = inner(f, f)
        pythagoras = inner(d.potential, d.potential) + inner(d.solenoidal, d.solenoidal) + volume * float(d.mean @ d.mean)
        assert abs(norm - pythagoras) <= constants.ORTHOGONALITY_BOUND * norm, \
            f"Pythagoras fails: {norm} vs {pythagoras}"

    def test_solenoidal_part_is_divergence_free(self):
        print()

        d = DecompositionService.decompose_mixed(band_limited_mixed_field(GRID, 3), constants.CG_TOL)
        norm = np.sqrt(inner(d.source, d.source))
        h1, h2, _ = GRID.spacing
        X1, X2, X3 = np.meshgrid(np.arange(GRID.n1) * h1, np.arange(GRID.n2) * h2, node_x3(GRID.n3), indexing="ij")
        for m in range(1, 4):
            chi = np.cos(2 * np.pi * m * X1 + 1.0) * np.sin(2 * np.pi * X2) * X3 ** m + X3 ** (m + 1)
            test = discrete_gradient(chi, GRID)
            pairing = abs(inner(d.solenoidal, test)) / (norm * np.sqrt(inner(test, test)))
            assert pairing < 1e-8, f"Solenoidal part pairs with a gradient: {pairing:.2e}"

    def test_idempotent_on_gradients(self):
        print()

        f = discrete_gradient(smooth_potential(GRID), GRID)
        d = DecompositionService.decompose_mixed(f, constants.CG_TOL)
        scale = np.linalg.norm(f.values)

        assert np.linalg.norm(d.solenoidal.values) <= 1e-6 * scale, "A gradient left a solenoidal remainder"
        assert np.linalg.norm(d.mean) <= 1e-12 * scale, f"A mean-free gradient produced a mean {d.mean}"
        assert np.allclose(d.potential.values, f.values, atol=1e-6 * scale), "Potential part is not the input"

    def test_curl_field_is_solenoidal(self):
        print()

        h1, h2, _ = GRID.spacing
        X1, X2 = np.meshgrid(np.arange(GRID.n1) * h1, np.arange(GRID.n2) * h2, indexing="ij")
        psi = np.sin(2 * np.pi * X1) * np.cos(4 * np.pi * X2)
        f = DecompositionService.curl_field(psi, GRID)
        d = DecompositionService.decompose_mixed(f, constants.CG_TOL)

        assert np.linalg.norm(d.potential.values) <= 1e-8 * np.linalg.norm(f.values), \
            "A curl field has a potential part"
        assert np.allclose(d.solenoidal.values, f.values, atol=1e-8), "Curl field is not its own solenoidal part"

        with pytest.raises(ConfigError):
            DecompositionService.curl_field(psi[:-1], GRID)

    def test_constant_field(self):
        print()

        f = MixedField.constant(GRID, np.array([1.0, -2.0, 0.5]))
        d = DecompositionService.decompose_mixed(f)

        assert np.allclose(d.mean, [1.0, -2.0, 0.5]), f"Mean {d.mean} is not the constant"
        assert not np.any(d.potential.values) and np.allclose(d.solenoidal.values, 0.0), "Constant left a remainder"

    def test_rejects_bad_tolerance(self):
        print()

        with pytest.raises(ConfigError):
            DecompositionService.decompose_mixed(MixedField.zeros(GRID), tol=0.0)

    def test_mixed_dump(self, tmp_path):
        print()

        f = band_limited_mixed_field(RVEGrid(box_side=1.0, n1=4, n2=4, n3=2), 1)
        restored = load_mixed(dump_mixed(tmp_path / "mixed.bin", f))
        assert np.array_equal(restored.values, f.values), "Mixed field did not survive the dump"

@pytest.mark.order(4)
class TestSecondOrderDecomposition:
    def test_pure_hessian(self):
        print()

        n = 32
        x1 = np.arange(n) / n
        X1 = np.meshgrid(x1, x1, indexing="ij")[0]
        values = np.zeros((n, n, 2, 2))
        values[..., 0, 0] = -(2 * np.pi) ** 2 * np.cos(2 * np.pi * X1)
        d = DecompositionService.decompose_second_order_2d(SymField2D(box_side=1.0, values=values))

        assert np.allclose(d.remainder.values, 0.0, atol=1e-9), "A pure Hessian left a remainder"
        assert np.allclose(d.hessian.values, values, atol=1e-9), "Hessian part was not recovered"

    def test_random_field_split(self):
        print()

        A = band_limited_sym_field(32, 32, 1.0, seed=4)
        d = DecompositionService.decompose_second_order_2d(A)
        traceBack(f"Second-order orthogonality {d.orthogonality:.2e}")

        assert d.orthogonality <= constants.ORTHOGONALITY_BOUND, "Hessian and remainder are not orthogonal"
        assert np.allclose(d.hessian.values + d.remainder.values + d.mean, A.values, atol=1e-12), \
            "Parts do not add up to the source"

    def test_cofactor_fields_have_no_hessian(self):
        print()

        for seed in range(3):
            b_hat = sampled_b_hat(32, 1.0, seed)
            A = DecompositionService.cof_sym_gradient(b_hat, 1.0)
            d = DecompositionService.decompose_second_order_2d(A)
            scale = np.linalg.norm(A.values)
            assert np.linalg.norm(d.hessian.values) <= 1e-10 * scale, "cof sym grad b has a Hessian part"

    def test_cross_orthogonality(self):
        print()

        hessian = DecompositionService.decompose_second_order_2d(band_limited_sym_field(32, 32, 1.0, seed=9)).hessian
        for seed in range(3):
            cof = DecompositionService.cof_sym_gradient(sampled_b_hat(32, 1.0, 100 + seed), 1.0)
            pairing = abs(float(np.sum(hessian.values * cof.values)))
            normalized = pairing / (np.linalg.norm(hessian.values) * np.linalg.norm(cof.values))
            assert normalized <= constants.ORTHOGONALITY_BOUND, f"<hess psi, cof sym grad b> = {normalized:.2e}"

    def test_div_cof_vanishes_for_trivial_fields(self):
        print()

        A = np.array([[0.3, -1.2], [0.7, 2.0]])

        def affine(x: np.ndarray) -> np.ndarray:
            return x @ A.T + np.array([0.1, -0.4])

        def shear(x: np.ndarray) -> np.ndarray:
            return np.stack([np.sin(2 * np.pi * x[..., 1]), np.zeros(x.shape[:-1])], axis=-1)

        assert DecompositionService.div_cof_residual(affine, 16) < 1e-12, "Affine field has a div cof residual"
        assert DecompositionService.div_cof_residual(shear, 16) < 1e-12, "One-directional field has a residual"

    def test_div_cof_converges(self):
        print()

        b = periodic_b()
        coarse, fine = (DecompositionService.div_cof_residual(b, n) for n in (32, 64))
        accurate = DecompositionService.div_cof_residual(b, 64, method="fd4")
        traceBack(f"div cof residual fd2 {coarse:.3e} -> {fine:.3e}, fd4 {accurate:.3e}")

        assert 3.5 < coarse / fine < 4.5, f"fd2 residual is not second order: {coarse} -> {fine}"
        assert accurate < fine, "fd4 is not more accurate than fd2"

        with pytest.raises(ConfigError):
            DecompositionService.div_cof_residual(b, 1)
