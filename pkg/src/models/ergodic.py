from dataclasses import dataclass
from typing import Any
import numpy as np

from src.models.cell import EffectiveBendingForm

@dataclass(frozen=True, eq=False)
class BirkhoffSeries:
    epsilons: tuple[float, ...]
    averages: tuple[float, ...]
    reference: float
    window: tuple[float, float, float, float]
    seed: int | None = None

    @property
    def errors(self) -> np.ndarray:
        return np.abs(np.asarray(self.averages) - self.reference)

    def rows(self) -> list[tuple[float, float, float, float]]:
        return [(eps, avg, self.reference, err) for eps, avg, err in zip(self.epsilons, self.averages, self.errors)]

    def json(self) -> dict[str, Any]:
        return {
            "window": list(self.window),
            "epsilons": list(self.epsilons),
            "averages": list(self.averages),
            "reference": self.reference,
            "seed": self.seed,
        }

@dataclass(frozen=True, eq=False)
class IsotropyReport:
    form: EffectiveBendingForm
    defect: float
    rotations_sampled: int
    ensemble: tuple[float, ...] = ()

    def json(self) -> dict[str, Any]:
        return {
            "voigt3": self.form.voigt3.ravel().tolist(),
            "defect": self.defect,
            "rotations_sampled": self.rotations_sampled,
            "ensemble_defects": list(self.ensemble),
        }

@dataclass(frozen=True, eq=False)
class EnsembleResult:
    seeds: tuple[int, ...]
    forms: tuple[EffectiveBendingForm, ...]
    mean: EffectiveBendingForm
    variance: np.ndarray

    def rows(self, defects: list[float] | None = None) -> list[list[float]]:
        defects = defects or [float("nan")] * len(self.seeds)
        return [[seed, *form.voigt3.ravel().tolist(), defect]
                for seed, form, defect in zip(self.seeds, self.forms, defects)]

    def json(self) -> dict[str, Any]:
        return {
            "seeds": list(self.seeds),
            "mean_voigt3": self.mean.voigt3.ravel().tolist(),
            "variance_voigt3": self.variance.ravel().tolist(),
            "per_seed_voigt3": [form.voigt3.ravel().tolist() for form in self.forms],
        }
