from dataclasses import dataclass, field
from typing import Any
import numpy as np

from src.utils.voigt import from_voigt3, to_voigt3
from src.core.exceptions import bad_config

LOAD_SYMMETRY_TOLERANCE: float = 1e-14

@dataclass(frozen=True)
class RVEGrid:
    box_side: float
    n1: int
    n2: int
    n3: int
    gamma: float = 1.0

    def __post_init__(self):
        if self.box_side <= 0:
            raise bad_config(f"box_side must be positive, got {self.box_side}")
        if self.n1 < 2 or self.n2 < 2 or self.n1 % 2 or self.n2 % 2:
            raise bad_config(f"in-plane divisions must be even and at least 2, got ({self.n1}, {self.n2})")
        if self.n3 < 2:
            raise bad_config(f"thickness divisions must be at least 2, got {self.n3}")
        if self.gamma <= 0:
            raise bad_config(f"gamma must be positive, got {self.gamma}")

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self.box_side / self.n1, self.box_side / self.n2, 1.0 / self.n3

    @property
    def node_count(self) -> int:
        return self.n1 * self.n2 * (self.n3 + 1)

    @property
    def field_shape(self) -> tuple[int, int, int]:
        return self.n1, self.n2, self.n3 + 1

    def json(self) -> dict[str, Any]:
        return {"L": self.box_side, "n1": self.n1, "n2": self.n2, "n3": self.n3, "gamma": self.gamma}

@dataclass(frozen=True, eq=False)
class CellLoad:
    B: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        for name in ("B", "G"):
            matrix = np.array(getattr(self, name), dtype=float).reshape(2, 2)
            if abs(matrix[0, 1] - matrix[1, 0]) > LOAD_SYMMETRY_TOLERANCE * max(1.0, np.max(np.abs(matrix))):
                raise bad_config(f"load block {name} is not symmetric")
            matrix.setflags(write=False)
            object.__setattr__(self, name, matrix)

    @classmethod
    def from_voigt6(cls, v: np.ndarray) -> "CellLoad":
        """Load from (B11, B22, sqrt2 B12, G11, G22, sqrt2 G12)."""
        v = np.asarray(v, dtype=float)
        return cls(B=from_voigt3(v[:3]), G=from_voigt3(v[3:]))

    @classmethod
    def unit(cls, index: int) -> "CellLoad":
        return cls.from_voigt6(np.eye(6)[index])

    @classmethod
    def bending(cls, G: np.ndarray) -> "CellLoad":
        return cls(B=np.zeros((2, 2)), G=G)

    def voigt6(self) -> np.ndarray:
        return np.concatenate([to_voigt3(self.B), to_voigt3(self.G)])

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.B) or np.any(self.G))

@dataclass(frozen=True)
class SolveHistory:
    residuals: tuple[float, ...] = ()
    energies: tuple[float, ...] = ()
    iterations: int = 0

    def json(self) -> dict[str, Any]:
        return {"iterations": self.iterations, "residuals": list(self.residuals), "energies": list(self.energies)}

@dataclass(frozen=True, eq=False)
class CorrectorField:
    """Nodal 3-vectors, flat in node-major, component-minor order."""
    grid: RVEGrid
    values: np.ndarray
    history: SolveHistory | None = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(self.grid.node_count * 3)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: RVEGrid) -> "CorrectorField":
        return cls(grid=grid, values=np.zeros(grid.node_count * 3))

    @property
    def nodal(self) -> np.ndarray:
        return self.values.reshape(self.grid.field_shape + (3,))

    def mean(self) -> np.ndarray:
        return self.values.reshape(-1, 3).mean(axis=0)

    def __add__(self, other: "CorrectorField") -> "CorrectorField":
        return CorrectorField(grid=self.grid, values=self.values + other.values)

    def scaled(self, factor: float) -> "CorrectorField":
        return CorrectorField(grid=self.grid, values=factor * self.values)

@dataclass(frozen=True, eq=False)
class CoupledEffectiveTensor:
    """Closure of the minimized cell energy over (B11, B22, sqrt2 B12, G11, G22, sqrt2 G12)."""
    matrix: np.ndarray
    grid: RVEGrid
    histories: tuple[SolveHistory, ...] = ()
    correctors: tuple[CorrectorField, ...] = field(default=(), repr=False)
    seed: int | None = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float).reshape(6, 6)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def membrane(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def bending(self) -> np.ndarray:
        return self.matrix[3:, 3:]

    @property
    def coupling(self) -> np.ndarray:
        return self.matrix[:3, 3:]

    def json(self) -> dict[str, Any]:
        return {
            "grid": self.grid.json(),
            "voigt6": self.matrix.ravel().tolist(),
            "cg_residuals": [history.residuals[-1] if history.residuals else 0.0 for history in self.histories],
            "cg_iterations": [history.iterations for history in self.histories],
        }

@dataclass(frozen=True, eq=False)
class EffectiveBendingForm:
    voigt3: np.ndarray
    parent: CoupledEffectiveTensor | None = None

    def __post_init__(self):
        voigt3 = np.array(self.voigt3, dtype=float).reshape(3, 3)
        voigt3.setflags(write=False)
        object.__setattr__(self, "voigt3", voigt3)

    def json(self) -> dict[str, Any]:
        document: dict[str, Any] = {"voigt3": self.voigt3.ravel().tolist()}
        if self.parent is not None:
            document.update(self.parent.json())
        return document
