from dataclasses import dataclass, field
from typing import Any
import numpy as np

from src.models.cell import RVEGrid, SolveHistory
from src.core.exceptions import bad_config, dimension_mismatch

SYMMETRY_TOLERANCE: float = 1e-14

@dataclass(frozen=True, eq=False)
class MixedField:
    grid: RVEGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.field_shape + (3,):
            raise dimension_mismatch(self.grid.field_shape + (3,), values.shape)
        if not np.all(np.isfinite(values)):
            raise bad_config("mixed field has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: RVEGrid) -> "MixedField":
        return cls(grid=grid, values=np.zeros(grid.field_shape + (3,)))

    @classmethod
    def constant(cls, grid: RVEGrid, vector: np.ndarray) -> "MixedField":
        return cls(grid=grid, values=np.broadcast_to(np.asarray(vector, dtype=float), grid.field_shape + (3,)))

    def components(self) -> np.ndarray:
        """(3, nodes) with nodes in the grid's node order."""
        return self.values.reshape(-1, 3).T

@dataclass(frozen=True, eq=False)
class MixedDecomposition:
    source: MixedField
    potential: MixedField
    solenoidal: MixedField
    mean: np.ndarray
    psi: np.ndarray
    history: SolveHistory = field(default_factory=SolveHistory)

    def json(self) -> dict[str, Any]:
        return {"grid": self.source.grid.json(), "mean": self.mean.tolist(), "solver": self.history.json()}

@dataclass(frozen=True, eq=False)
class SymField2D:
    box_side: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 4 or values.shape[2:] != (2, 2):
            raise dimension_mismatch(("n1", "n2", 2, 2), values.shape)
        if np.max(np.abs(values[..., 0, 1] - values[..., 1, 0]), initial=0.0) > SYMMETRY_TOLERANCE * max(1.0, np.max(np.abs(values), initial=0.0)):
            raise bad_config("second-order field is not symmetric")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]

@dataclass(frozen=True, eq=False)
class SecondOrderDecomposition:
    hessian: SymField2D
    remainder: SymField2D
    mean: np.ndarray
    psi: np.ndarray
    orthogonality: float = 0.0
