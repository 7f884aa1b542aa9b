import math
from concurrent.futures import ThreadPoolExecutor
import numpy as np

from src.schemas.recovery import RecoveryConfig, IsometryKind
from src.models.cell import CellLoad, CoupledEffectiveTensor, EffectiveBendingForm
from src.models.material import MaterialTable
from src.models.microstructure import MicrostructureRealization
from src.models.recovery import (IsometrySpec, LinearDisplacement, Patch, DeformationSampler, RotatedSampler,
                                 RecoveryReport, Quadrature, cutoff as patch_cutoff)
from src.services.cell_solver import CellSolverService
from src.services.material import MaterialService
from src.services.microstructure import MicrostructureService
from src.core.config import settings
from src.core.exceptions import bad_config, missing_corrector, missing_phase, under_resolved
from src.core.traceback import traceBack

CHUNK_POINTS: int = 200_000

def gauss_legendre(order: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return lo + 0.5 * (hi - lo) * (nodes + 1.0), 0.5 * (hi - lo) * weights

def tensor_rule(bounds: tuple[float, float, float, float], order: int) -> tuple[np.ndarray, np.ndarray]:
    x0, y0, x1, y1 = bounds
    p1, w1 = gauss_legendre(order, x0, x1)
    p2, w2 = gauss_legendre(order, y0, y1)
    points = np.stack(np.meshgrid(p1, p2, indexing="ij"), axis=-1).reshape(-1, 2)
    return points, np.outer(w1, w2).ravel()

def composite_axis(lo: float, hi: float, cells: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(lo, hi, cells + 1)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    points = (edges[:-1, None] + half[:, None] * (nodes + 1.0)).ravel()
    return points, np.repeat(half, order) * np.tile(weights, cells)

class RecoveryService:
    @staticmethod
    def cylinder_isometry(r: float, S: tuple[float, float, float, float]) -> IsometrySpec:
        if r <= 0:
            raise bad_config(f"cylinder radius must be positive, got {r}")
        return IsometrySpec(kind=IsometryKind.CYLINDER, domain=tuple(S), radius=float(r))

    @staticmethod
    def flat_isometry(S: tuple[float, float, float, float]) -> IsometrySpec:
        return IsometrySpec(kind=IsometryKind.FLAT, domain=tuple(S))

    @staticmethod
    def isometry_from_config(cfg: RecoveryConfig) -> IsometrySpec:
        if cfg.isometry is IsometryKind.FLAT:
            return RecoveryService.flat_isometry(cfg.domain)
        return RecoveryService.cylinder_isometry(cfg.radius, cfg.domain)

    @staticmethod
    def patch_partition(iso: IsometrySpec, eta: float, order: int = 4) -> list[Patch]:
        """Squares of side eta covering S, each carrying the average of II over it."""
        if eta <= 0:
            raise bad_config(f"eta must be positive, got {eta}")

        x0, y0, x1, y1 = iso.domain
        m1 = max(1, math.ceil((x1 - x0) / eta - 1e-9))
        m2 = max(1, math.ceil((y1 - y0) / eta - 1e-9))
        patches = []
        for i in range(m1):
            for j in range(m2):
                bounds = (x0 + i * eta, y0 + j * eta, min(x0 + (i + 1) * eta, x1), min(y0 + (j + 1) * eta, y1))
                points, weights = tensor_rule(bounds, order)
                area = (bounds[2] - bounds[0]) * (bounds[3] - bounds[1])
                load = np.einsum("q,qab->ab", weights, iso.second_fundamental(points)) / area
                patches.append(Patch(index=len(patches), bounds=bounds, load=load))
        return patches

    @staticmethod
    def cutoff(x: np.ndarray, patch: Patch, delta: float) -> tuple[np.ndarray, np.ndarray]:
        return patch_cutoff(np.asarray(x, dtype=float), patch, delta)

    @staticmethod
    def build_recovery(iso: IsometrySpec, cfg: RecoveryConfig, realization: MicrostructureRealization,
                       materials: MaterialTable, tensor: CoupledEffectiveTensor, h: float,
                       V: LinearDisplacement | None = None) -> DeformationSampler:
        if cfg.delta >= cfg.eta / 2:
            raise bad_config(f"cutoff margin delta={cfg.delta} must be smaller than eta/2={cfg.eta / 2}")
        if h <= 0:
            raise bad_config(f"thickness must be positive, got {h}")
        if abs(tensor.grid.gamma - cfg.gamma) > 1e-12 * cfg.gamma:
            raise bad_config(f"correctors were computed for gamma={tensor.grid.gamma}, recovery uses {cfg.gamma}")
        if abs(tensor.grid.box_side - realization.box_side) > 1e-12 * realization.box_side:
            raise bad_config("correctors and realization have different box sides")
        for phase_id in realization.model.phase_ids:
            if phase_id not in materials:
                raise missing_phase(phase_id)

        partition = RecoveryService.patch_partition(iso, cfg.eta)
        if len(tensor.correctors) != 6:
            raise missing_corrector(partition[0].index)

        patches = []
        for patch in partition:
            # B = 0: only the bending load of the patch is matched
            corrector = CellSolverService.corrector_basis(tensor, CellLoad.bending(patch.load))
            patches.append(Patch(index=patch.index, bounds=patch.bounds, load=patch.load, corrector=corrector.nodal))

        return DeformationSampler(iso=iso, h=float(h), epsilon=cfg.epsilon(h), delta=cfg.delta,
                                  patches=tuple(patches), box_side=tensor.grid.box_side,
                                  displacement=V or LinearDisplacement())

    @staticmethod
    def rotated(sampler: DeformationSampler, Q: np.ndarray) -> RotatedSampler:
        Q = np.asarray(Q, dtype=float)
        if not np.allclose(Q.T @ Q, np.eye(3), atol=1e-12) or np.linalg.det(Q) <= 0:
            raise bad_config("rotation must be a proper orthogonal 3x3 matrix")
        return sampler.rotated(Q)

    @staticmethod
    def evaluate_Ih(sampler: DeformationSampler | RotatedSampler, materials: MaterialTable,
                    realization: MicrostructureRealization, h: float, epsilon: float,
                    quadrature: Quadrature = Quadrature()) -> float:
        """(1 / h^2) int_{S x I} W(phase(x' / eps), grad_h u) by composite Gauss quadrature."""
        if abs(h - sampler.h) > 1e-12 * h or abs(epsilon - sampler.epsilon) > 1e-12 * epsilon:
            raise bad_config("h and epsilon must match the sampler")

        cell = quadrature.cell or min(epsilon / quadrature.cells_per_epsilon, sampler.delta / 2)
        if cell > epsilon / 2:
            raise under_resolved(f"quadrature cell {cell:.3e} exceeds epsilon/2 = {epsilon / 2:.3e}")

        x0, y0, x1, y1 = sampler.iso.domain
        p1, w1 = composite_axis(x0, x1, math.ceil((x1 - x0) / cell), quadrature.in_plane_gauss)
        p2, w2 = composite_axis(y0, y1, math.ceil((y1 - y0) / cell), quadrature.in_plane_gauss)
        p3, w3 = composite_axis(-0.5, 0.5, sampler.layers, quadrature.thickness_gauss)

        rows = max(1, CHUNK_POINTS // (len(p2) * len(p3)))
        chunks = [slice(start, start + rows) for start in range(0, len(p1), rows)]

        def partial(chunk: slice) -> float:
            x = np.stack(np.meshgrid(p1[chunk], p2, indexing="ij"), axis=-1)
            phases = MicrostructureService.phase_at(realization, x / epsilon)
            mu, lam = materials.lame_arrays(phases)

            xs = np.broadcast_to(x[:, :, None, :], x.shape[:2] + (len(p3), 2))
            x3 = np.broadcast_to(p3, x.shape[:2] + (len(p3),))
            F = sampler.gradient(xs, x3)
            density = MaterialService.svk_density(mu[..., None], lam[..., None], F)
            return float(np.einsum("i,j,k,ijk->", w1[chunk], w2, w3, density))

        with ThreadPoolExecutor(max_workers=settings.WORKERS) as executor:
            parts = list(executor.map(partial, chunks))

        # chunk order is fixed, so the sum does not depend on the thread count
        return math.fsum(parts) / (h * h)

    @staticmethod
    def limit_energy(q: EffectiveBendingForm, iso: IsometrySpec, order: int = 4) -> float:
        points, weights = tensor_rule(iso.domain, order)
        return float(weights @ CellSolverService.qgamma_eval(q, iso.second_fundamental(points)))

    @staticmethod
    def gap_trend(iso: IsometrySpec, cfg: RecoveryConfig, realization: MicrostructureRealization,
                  materials: MaterialTable, tensor: CoupledEffectiveTensor,
                  V: LinearDisplacement | None = None) -> list[RecoveryReport]:
        q = CellSolverService.effective_bending(tensor)
        I0 = RecoveryService.limit_energy(q, iso)
        quadrature = Quadrature(in_plane_gauss=cfg.in_plane_gauss, thickness_gauss=cfg.thickness_gauss,
                                cells_per_epsilon=cfg.cells_per_epsilon)

        reports = []
        for h in cfg.h_schedule:
            epsilon = cfg.epsilon(h)
            sampler = RecoveryService.build_recovery(iso, cfg, realization, materials, tensor, h, V)
            Ih = RecoveryService.evaluate_Ih(sampler, materials, realization, h, epsilon, quadrature)
            gap = abs(Ih - I0) / I0 if I0 > 0 else abs(Ih)
            traceBack(f"h={h}: I^h={Ih:.6e}, I0={I0:.6e}, relative gap {gap:.3%}")
            reports.append(RecoveryReport(h=h, epsilon=epsilon, eta=cfg.eta, delta=cfg.delta, Ih=Ih, I0=I0,
                                          relative_gap=gap, quadrature=quadrature.json(), seed=realization.seed))
        return reports
