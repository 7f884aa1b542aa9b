import math
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from src.models.cell import RVEGrid, CellLoad, CorrectorField, SolveHistory, CoupledEffectiveTensor, EffectiveBendingForm
from src.models.material import MaterialTable
from src.models.microstructure import MicrostructureRealization, PhaseGrid
from src.services.microstructure import MicrostructureService
from src.utils.fem import gauss_points_3d, shape_functions, connectivity, edof, element_x3
from src.utils.voigt import SQRT2, to_voigt3, in_plane_voigt3_of_voigt6
from src.core.config import settings
from src.core.exceptions import (dimension_mismatch, missing_phase, cg_not_converged, non_spd, singular_assembly,
                                 bad_config)
from src.core.traceback import traceBack, TrackType

def strain_matrix(d: np.ndarray) -> np.ndarray:
    """Voigt strain of nodal displacements from physical shape derivatives d (..., 8, 3) -> (..., 6, 24)."""
    S = np.zeros(d.shape[:-2] + (6, 8, 3))
    S[..., 0, :, 0] = d[..., 0]
    S[..., 1, :, 1] = d[..., 1]
    S[..., 2, :, 2] = d[..., 2]
    S[..., 3, :, 1], S[..., 3, :, 2] = d[..., 2] / SQRT2, d[..., 1] / SQRT2
    S[..., 4, :, 0], S[..., 4, :, 2] = d[..., 2] / SQRT2, d[..., 0] / SQRT2
    S[..., 5, :, 0], S[..., 5, :, 1] = d[..., 1] / SQRT2, d[..., 0] / SQRT2
    return S.reshape(d.shape[:-2] + (6, 24))

class CellOperator:
    """Matrix-free stiffness of the cell energy on one grid and phase layout.

    The energy of a corrector phi under a load is c + 2 f.phi + phi.K phi, all
    terms being volume averages over the cell.
    """

    def __init__(self, grid: RVEGrid, phases: PhaseGrid, materials: MaterialTable):
        if (phases.n1, phases.n2) != (grid.n1, grid.n2):
            raise dimension_mismatch((grid.n1, grid.n2), (phases.n1, phases.n2))
        for phase_id in phases.phases:
            if phase_id not in materials:
                raise missing_phase(phase_id)

        self.grid = grid
        h1, h2, h3 = grid.spacing
        self.weight: float = h1 * h2 * h3 / 8.0 / grid.box_side ** 2

        gauss = gauss_points_3d()
        _, dN = shape_functions(gauss)
        self.strain = strain_matrix(dN * np.array([2.0 / h1, 2.0 / h2, 2.0 / (h3 * grid.gamma)]))
        self.gauss_x3 = element_x3(grid.n3)[:, None] + 0.5 * h3 * gauss[None, :, 2]

        self.edof = edof(connectivity(grid.n1, grid.n2, grid.n3))
        self.dof_count = 3 * grid.node_count

        self.phase_ids = np.asarray(phases.phases, dtype=np.int64)
        self.forms = np.stack([materials[p].q0.voigt for p in self.phase_ids])
        self.element_phase = np.repeat(np.searchsorted(self.phase_ids, phases.cell_phase.ravel()), grid.n3)
        self.element_layer = np.tile(np.arange(grid.n3), grid.n1 * grid.n2)
        self.masks = [np.flatnonzero(self.element_phase == p) for p in range(len(self.phase_ids))]
        self.stiffness = self.weight * np.einsum("gai,pab,gbj->pij", self.strain, self.forms, self.strain)

    @cached_property
    def diagonal(self) -> np.ndarray:
        element_diagonal = np.diagonal(self.stiffness, axis1=1, axis2=2)[self.element_phase]
        diagonal = np.bincount(self.edof.ravel(), weights=element_diagonal.ravel(), minlength=self.dof_count)
        if np.any(diagonal <= 0):
            raise singular_assembly
        return diagonal

    def apply(self, u: np.ndarray) -> np.ndarray:
        ue = u[self.edof]
        out = np.empty_like(ue)
        for p, mask in enumerate(self.masks):
            if settings.DETERMINISTIC:
                out[mask] = np.einsum("ej,ij->ei", ue[mask], self.stiffness[p])
            else:
                out[mask] = ue[mask] @ self.stiffness[p]
        return np.bincount(self.edof.ravel(), weights=out.ravel(), minlength=self.dof_count)

    def load_strain(self, load: CellLoad) -> np.ndarray:
        """(n3, 8, 6) Voigt strain of iota(B + x3 G) at the Gauss points of each layer."""
        strain = np.zeros(self.gauss_x3.shape + (6,))
        strain[..., in_plane_voigt3_of_voigt6()] = to_voigt3(load.B) + self.gauss_x3[..., None] * to_voigt3(load.G)
        return strain

    def load_vector(self, load: CellLoad) -> np.ndarray:
        table = self.weight * np.einsum("gai,pab,kgb->pki", self.strain, self.forms, self.load_strain(load))
        element_load = table[self.element_phase, self.element_layer]
        return np.bincount(self.edof.ravel(), weights=element_load.ravel(), minlength=self.dof_count)

    def load_constant(self, load: CellLoad) -> float:
        strain = self.load_strain(load)
        table = self.weight * np.einsum("kga,pab,kgb->pk", strain, self.forms, strain)
        return float(table[self.element_phase, self.element_layer].sum())

    def energy(self, load: CellLoad, phi: np.ndarray) -> float:
        """Gauss quadrature of the volume-averaged energy density."""
        strain = self.load_strain(load)[self.element_layer] + np.einsum("gai,ei->ega", self.strain, phi[self.edof])
        total = 0.0
        for p, mask in enumerate(self.masks):
            total += float(np.einsum("ega,ab,egb->", strain[mask], self.forms[p], strain[mask]))
        return self.weight * total

def project(u: np.ndarray) -> np.ndarray:
    """Removes the nodal mean of every component."""
    nodal = u.reshape(-1, 3)
    return (nodal - nodal.mean(axis=0)).ravel()

def iteration_cap(dof_count: int) -> int:
    return int(math.ceil(settings.CG_CAP_FACTOR * math.sqrt(dof_count)))

def solve_on(operator: CellOperator, load: CellLoad, tol: float, maxiter: int | None = None) -> CorrectorField:
    if tol <= 0:
        raise bad_config(f"solver tolerance must be positive, got {tol}")

    grid = operator.grid
    f = operator.load_vector(load)
    rhs = -project(f)
    rhs_norm = float(np.linalg.norm(rhs))
    if load.is_zero or rhs_norm == 0.0:
        return CorrectorField(grid=grid, values=np.zeros(operator.dof_count), history=SolveHistory())

    constant = operator.load_constant(load)
    inverse_diagonal = 1.0 / operator.diagonal
    n = operator.dof_count
    A = LinearOperator((n, n), matvec=lambda u: project(operator.apply(project(u))), dtype=float)
    M = LinearOperator((n, n), matvec=lambda r: project(inverse_diagonal * project(r)), dtype=float)

    residuals: list[float] = []
    energies: list[float] = []

    def record(x: np.ndarray) -> None:
        Kx = operator.apply(x)
        residuals.append(float(np.linalg.norm(rhs - project(Kx)) / rhs_norm))
        energies.append(float(constant + 2.0 * f @ x + x @ Kx))

    cap = maxiter or iteration_cap(n)
    solution, info = cg(A, rhs, rtol=tol, atol=0.0, maxiter=cap, M=M, callback=record)
    if info != 0:
        raise cg_not_converged(residuals, cap)

    history = SolveHistory(residuals=tuple(residuals), energies=tuple(energies), iterations=len(residuals))
    return CorrectorField(grid=grid, values=project(solution), history=history)

def schur(A: np.ndarray, B: np.ndarray, C: np.ndarray, what: str) -> np.ndarray:
    """A - B C^-1 B^T, rejecting a non-SPD C."""
    try:
        np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise non_spd(f"{what} block is not positive definite; the solve is under-resolved or the material invalid")
    complement = A - B @ np.linalg.solve(C, B.T)
    return 0.5 * (complement + complement.T)

class CellSolverService:
    @staticmethod
    def cell_energy(grid: RVEGrid, phases: PhaseGrid, materials: MaterialTable, load: CellLoad,
                    phi: CorrectorField) -> float:
        if phi.grid != grid:
            raise dimension_mismatch(grid.field_shape, phi.grid.field_shape)
        return CellOperator(grid, phases, materials).energy(load, np.asarray(phi.values))

    @staticmethod
    def solve_corrector(grid: RVEGrid, phases: PhaseGrid, materials: MaterialTable, load: CellLoad,
                        tol: float = settings.CG_TOL, maxiter: int | None = None) -> CorrectorField:
        return solve_on(CellOperator(grid, phases, materials), load, tol, maxiter)

    @staticmethod
    def coupled_tensor(grid: RVEGrid, phases: PhaseGrid, materials: MaterialTable, tol: float = settings.CG_TOL,
                       maxiter: int | None = None, seed: int | None = None) -> CoupledEffectiveTensor:
        operator = CellOperator(grid, phases, materials)
        loads = [CellLoad.unit(a) for a in range(6)]
        operator.diagonal  # assembled once before the workers share the operator

        with ThreadPoolExecutor(max_workers=settings.WORKERS) as executor:
            correctors = list(executor.map(lambda load: solve_on(operator, load, tol, maxiter), loads))

        matrix = np.zeros((6, 6))
        for a in range(6):
            matrix[a, a] = operator.energy(loads[a], np.asarray(correctors[a].values))
        for a in range(6):
            for b in range(a + 1, 6):
                pair = CellLoad.from_voigt6(loads[a].voigt6() + loads[b].voigt6())
                combined = np.asarray(correctors[a].values) + np.asarray(correctors[b].values)
                matrix[a, b] = matrix[b, a] = 0.5 * (operator.energy(pair, combined) - matrix[a, a] - matrix[b, b])

        if np.linalg.eigvalsh(matrix)[0] <= 0:
            raise non_spd("coupled membrane-bending tensor")

        iterations = [c.history.iterations for c in correctors]
        traceBack(f"Cell tensor on {grid.n1}x{grid.n2}x{grid.n3} (gamma={grid.gamma}) "
                  f"converged, CG iterations {iterations}")

        return CoupledEffectiveTensor(matrix=matrix, grid=grid, histories=tuple(c.history for c in correctors),
                                      correctors=tuple(correctors), seed=seed)

    @staticmethod
    def corrector_basis(ct: CoupledEffectiveTensor, load: CellLoad) -> CorrectorField:
        """Corrector of an arbitrary load as the combination of the unit-load correctors."""
        if len(ct.correctors) != 6:
            raise bad_config("coupled tensor carries no unit correctors")
        coefficients = load.voigt6()
        values = sum(c * np.asarray(field.values) for c, field in zip(coefficients, ct.correctors))
        return CorrectorField(grid=ct.grid, values=values)

    @staticmethod
    def effective_bending(ct: CoupledEffectiveTensor) -> EffectiveBendingForm:
        Q = ct.matrix
        return EffectiveBendingForm(voigt3=schur(Q[3:, 3:], Q[3:, :3], Q[:3, :3], "membrane"), parent=ct)

    @staticmethod
    def effective_membrane(ct: CoupledEffectiveTensor) -> np.ndarray:
        Q = ct.matrix
        return schur(Q[:3, :3], Q[:3, 3:], Q[3:, 3:], "bending")

    @staticmethod
    def qgamma_eval(q: EffectiveBendingForm, G: np.ndarray) -> np.ndarray:
        v = to_voigt3(G)
        return np.einsum("...i,ij,...j->...", v, q.voigt3, v)

    @staticmethod
    def effective_form(grid: RVEGrid, phases: PhaseGrid, materials: MaterialTable, tol: float = settings.CG_TOL,
                       maxiter: int | None = None, seed: int | None = None) -> EffectiveBendingForm:
        ct = CellSolverService.coupled_tensor(grid, phases, materials, tol, maxiter, seed)
        return CellSolverService.effective_bending(ct)

    @staticmethod
    def rescaled_grid(grid: RVEGrid) -> RVEGrid:
        """Same cell with unscaled thickness derivative: in-plane period L/gamma, n/gamma divisions."""
        divisions = []
        for n in (grid.n1, grid.n2):
            rescaled = n / grid.gamma
            if abs(rescaled - round(rescaled)) > 1e-9 or round(rescaled) < 2 or round(rescaled) % 2:
                raise bad_config(f"gamma={grid.gamma} does not map {n} divisions onto an even integer count")
            divisions.append(int(round(rescaled)))

        return RVEGrid(box_side=grid.box_side / grid.gamma, n1=divisions[0], n2=divisions[1], n3=grid.n3, gamma=1.0)

    @staticmethod
    def gamma_rescale_check(grid: RVEGrid, realization: MicrostructureRealization, materials: MaterialTable,
                            tol: float = settings.CG_TOL, maxiter: int | None = None) -> float:
        """Frobenius distance between Q^gamma from the scaled and from the rescaled cell."""
        if abs(realization.box_side - grid.box_side) > 1e-12 * grid.box_side:
            raise dimension_mismatch((grid.box_side,), (realization.box_side,))

        scaled = CellSolverService.effective_form(
            grid, MicrostructureService.rasterize(realization, grid.n1, grid.n2), materials, tol, maxiter)

        rescaled_grid = CellSolverService.rescaled_grid(grid)
        # the rescaled cell sees omega(gamma z); sampling the realization at n/gamma centres over L gives exactly that
        coarse = MicrostructureService.rasterize(realization, rescaled_grid.n1, rescaled_grid.n2)
        rescaled_phases = PhaseGrid(n1=coarse.n1, n2=coarse.n2, box_side=rescaled_grid.box_side,
                                    cell_phase=coarse.cell_phase)
        rescaled = CellSolverService.effective_form(rescaled_grid, rescaled_phases, materials, tol, maxiter)

        discrepancy = float(np.linalg.norm(scaled.voigt3 - rescaled.voigt3))
        if discrepancy > 0.1 * float(np.linalg.norm(scaled.voigt3)):
            traceBack(f"gamma rescaling discrepancy {discrepancy:.3e} is large; refine the mesh",
                      type=TrackType.WARNING)
        return discrepancy
