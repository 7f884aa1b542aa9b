from dataclasses import dataclass
from typing import Any, Iterator
import numpy as np

@dataclass(frozen=True, eq=False)
class QuadraticFormQ0:
    """Quadratic form on 3x3 matrices acting through the symmetric part, in orthonormal Voigt coordinates."""
    voigt: np.ndarray

    def __post_init__(self):
        voigt = np.array(self.voigt, dtype=float).reshape(6, 6)
        voigt.setflags(write=False)
        object.__setattr__(self, "voigt", voigt)

    def json(self) -> dict[str, Any]:
        return {"voigt": self.voigt.tolist()}

@dataclass(frozen=True, eq=False)
class PhaseMaterial:
    phase_id: int
    lame_mu: float
    lame_lambda: float
    q0: QuadraticFormQ0

    def json(self) -> dict[str, Any]:
        return {"phase_id": self.phase_id, "mu": self.lame_mu, "lambda": self.lame_lambda}

class MaterialTable:
    """Per-phase materials; doubles as the per-phase St. Venant-Kirchhoff energy density W."""

    def __init__(self, phases: list[PhaseMaterial]):
        self._phases: dict[int, PhaseMaterial] = {phase.phase_id: phase for phase in phases}

    def __getitem__(self, phase_id: int) -> PhaseMaterial:
        return self._phases[int(phase_id)]

    def __contains__(self, phase_id: int) -> bool:
        return int(phase_id) in self._phases

    def __iter__(self) -> Iterator[PhaseMaterial]:
        return iter(self._phases[key] for key in sorted(self._phases))

    def __len__(self) -> int:
        return len(self._phases)

    def lame_arrays(self, phase_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ids = np.asarray(phase_ids)
        mu = np.empty(ids.shape)
        lam = np.empty(ids.shape)
        for phase in self:
            mask = ids == phase.phase_id
            mu[mask] = phase.lame_mu
            lam[mask] = phase.lame_lambda
        return mu, lam

    def json(self) -> list[dict[str, Any]]:
        return [phase.json() for phase in self]
