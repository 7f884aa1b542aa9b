from dataclasses import dataclass, field
from functools import cached_property
from typing import Any
import numpy as np
from scipy.spatial import cKDTree

from src.schemas.microstructure import MicrostructureModel, MicrostructureKind

def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array

@dataclass(frozen=True, eq=False)
class MicrostructureRealization:
    """One sample of the medium, periodized on [0, L)^2.

    Voronoi points are stored in lexicographic order of their coordinates, so
    ties on cell boundaries resolve to the lowest index.
    """
    model: MicrostructureModel
    seed: int
    box_side: float
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    marks: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    attempt: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(np.asarray(self.points, dtype=float).reshape(-1, 2)))
        object.__setattr__(self, "marks", _frozen(np.asarray(self.marks, dtype=np.int64).ravel()))
        object.__setattr__(self, "offset", _frozen(np.asarray(self.offset, dtype=float).reshape(2)))

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points, boxsize=self.box_side)

    @property
    def is_voronoi(self) -> bool:
        return self.model.kind is MicrostructureKind.POISSON_VORONOI

    def json(self) -> dict[str, Any]:
        return {
            "model": self.model.model_dump(mode="json"),
            "seed": self.seed,
            "box_side": self.box_side,
            "attempt": self.attempt,
            "offset": self.offset.tolist(),
            "points": [[float(x), float(y), int(m)] for (x, y), m in zip(self.points, self.marks)],
        }

@dataclass(frozen=True, eq=False)
class PhaseGrid:
    n1: int
    n2: int
    box_side: float
    cell_phase: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cell_phase", _frozen(np.asarray(self.cell_phase, dtype=np.int64)))

    @property
    def phases(self) -> tuple[int, ...]:
        return tuple(int(p) for p in np.unique(self.cell_phase))

    def json(self) -> dict[str, Any]:
        return {
            "n1": self.n1,
            "n2": self.n2,
            "box_side": self.box_side,
            "cell_phase": self.cell_phase.ravel(order="C").tolist(),
        }
