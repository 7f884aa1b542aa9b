import math
from concurrent.futures import ThreadPoolExecutor
from typing import Mapping, Sequence
import numpy as np

from src.schemas.microstructure import MicrostructureModel
from src.models.cell import RVEGrid, EffectiveBendingForm
from src.models.ergodic import BirkhoffSeries, EnsembleResult, IsotropyReport
from src.models.material import MaterialTable
from src.models.microstructure import MicrostructureRealization
from src.services.microstructure import MicrostructureService
from src.services.cell_solver import CellSolverService
from src.core.config import settings
from src.core.exceptions import PlateError, bad_config, missing_phase, under_resolved, with_seed
from src.core.traceback import traceBack

MAX_POINTS_PER_AXIS: int = 4096
RATE_SLACK: float = 1e-9

def isotropy_loads() -> np.ndarray:
    s = 1.0 / math.sqrt(2.0)
    return np.array([[[1.0, 0.0], [0.0, 0.0]],
                     [[0.0, 0.0], [0.0, 1.0]],
                     [[0.0, s], [s, 0.0]],
                     [[1.0, 0.0], [0.0, 1.0]]])

def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])

class ErgodicStatsService:
    @staticmethod
    def birkhoff_average(r: MicrostructureRealization, f: Mapping[int, float],
                         window: tuple[float, float, float, float], epsilons: Sequence[float],
                         points_per_epsilon: int = 8, max_points_per_axis: int = MAX_POINTS_PER_AXIS) -> BirkhoffSeries:
        x0, y0, x1, y1 = window
        if x1 <= x0 or y1 <= y0:
            raise bad_config(f"window {window} is empty")
        if not epsilons or any(e <= 0 for e in epsilons) or any(a <= b for a, b in zip(epsilons, epsilons[1:])):
            raise bad_config("epsilons must be positive and strictly decreasing")
        for phase_id in r.model.phase_ids:
            if phase_id not in f:
                raise missing_phase(phase_id)

        reference = sum(f[phase_id] * p for phase_id, p in zip(r.model.phase_ids, r.model.probabilities))
        ids = np.array(sorted(f))
        table = np.array([f[i] for i in ids])

        averages = []
        for eps in epsilons:
            m1 = math.ceil((x1 - x0) * points_per_epsilon / eps)
            m2 = math.ceil((y1 - y0) * points_per_epsilon / eps)
            if max(m1, m2) > max_points_per_axis:
                m1, m2 = min(m1, max_points_per_axis), min(m2, max_points_per_axis)
            if (x1 - x0) / m1 > eps or (y1 - y0) / m2 > eps:
                raise under_resolved(f"midpoint grid {m1}x{m2} is coarser than epsilon={eps}")

            a1 = x0 + (np.arange(m1) + 0.5) * (x1 - x0) / m1
            a2 = y0 + (np.arange(m2) + 0.5) * (y1 - y0) / m2
            points = np.stack(np.meshgrid(a1, a2, indexing="ij"), axis=-1) / eps
            phases = MicrostructureService.phase_at(r, points)
            averages.append(float(table[np.searchsorted(ids, phases)].mean()))

        return BirkhoffSeries(epsilons=tuple(float(e) for e in epsilons), averages=tuple(averages),
                              reference=float(reference), window=tuple(window), seed=r.seed)

    @staticmethod
    def rate_constant(series: BirkhoffSeries) -> float:
        """C of |average - reference| <= C eps, fitted on the two coarsest scales."""
        errors = series.errors[:2]
        return float(np.max(errors / np.asarray(series.epsilons[:2])))

    @staticmethod
    def rate_bound_holds(series: BirkhoffSeries, C: float) -> bool:
        bound = C * np.asarray(series.epsilons) * (1.0 + RATE_SLACK) + RATE_SLACK * max(abs(series.reference), 1.0)
        return bool(np.all(series.errors <= bound))

    @staticmethod
    def isotropy_defect(q: EffectiveBendingForm, rotation_count: int = 16) -> float:
        if rotation_count < 8:
            raise bad_config(f"rotation_count must be at least 8, got {rotation_count}")

        G = isotropy_loads()
        base = CellSolverService.qgamma_eval(q, G)
        scale = np.maximum(base, settings.REFERENCE_FLOOR)
        defect = 0.0
        for j in range(rotation_count):
            R = rotation(j * math.pi / rotation_count)
            rotated = CellSolverService.qgamma_eval(q, R.T @ G @ R)
            defect = max(defect, float(np.max(np.abs(rotated - base) / scale)))
        return defect

    @staticmethod
    def isotropy_report(forms: Sequence[EffectiveBendingForm], rotation_count: int = 16) -> IsotropyReport:
        mean = EffectiveBendingForm(voigt3=np.mean([form.voigt3 for form in forms], axis=0))
        return IsotropyReport(form=mean, defect=ErgodicStatsService.isotropy_defect(mean, rotation_count),
                              rotations_sampled=rotation_count,
                              ensemble=tuple(ErgodicStatsService.isotropy_defect(form, rotation_count) for form in forms))

    @staticmethod
    def ensemble_effective(model: MicrostructureModel, materials: MaterialTable, grid: RVEGrid,
                           seeds: Sequence[int], tol: float = settings.CG_TOL,
                           maxiter: int | None = None) -> EnsembleResult:
        if len(seeds) < 2:
            raise bad_config(f"an ensemble needs at least 2 seeds, got {len(seeds)}")

        def member(seed: int) -> EffectiveBendingForm:
            try:
                realization = MicrostructureService.sample_realization(model, seed, grid.box_side)
                phases = MicrostructureService.rasterize(realization, grid.n1, grid.n2)
                form = CellSolverService.effective_form(grid, phases, materials, tol, maxiter, seed)
            except PlateError as error:
                raise with_seed(error, seed) from error

            traceBack(f"Seed {seed} done")
            return form

        with ThreadPoolExecutor(max_workers=settings.WORKERS) as executor:
            forms = list(executor.map(member, seeds))

        stack = np.stack([form.voigt3 for form in forms])
        return EnsembleResult(seeds=tuple(int(s) for s in seeds), forms=tuple(forms),
                              mean=EffectiveBendingForm(voigt3=stack.mean(axis=0)),
                              variance=stack.var(axis=0, ddof=1))
