try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.schemas.microstructure import MicrostructureModel
from src.schemas.material import PhaseMaterialEntry
from src.schemas.recovery import RecoveryConfig

class Command(StrEnum):
    GENERATE = "generate"
    SOLVE_CELL = "solve-cell"
    EFFECTIVE = "effective"
    SWEEP_GAMMA = "sweep-gamma"
    ISOTROPY = "isotropy"
    ERGODIC = "ergodic"
    DECOMPOSE = "decompose"
    RECOVERY = "recovery"

class GridBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    box_side: float = Field(..., gt=0)
    n1: int = Field(..., ge=2)
    n2: int = Field(..., ge=2)
    n3: int = Field(..., ge=2)
    gamma: float = Field(default=1.0, gt=0)

    @field_validator("n1", "n2")
    @classmethod
    def even_in_plane(cls, value: int) -> int:
        if value % 2:
            raise ValueError("in-plane divisions must be even")
        return value

class ToleranceBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    cg: float = Field(default=1e-8, gt=0)
    decomposition: float = Field(default=1e-10, gt=0)

class SweepBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    gammas: tuple[float, ...] = Field(..., min_length=1)

    @field_validator("gammas")
    @classmethod
    def positive(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if any(g <= 0 for g in value):
            raise ValueError("gamma values must be positive")
        return value

class IsotropyBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    rotation_count: int = Field(default=16, ge=8)

class ErgodicBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    observable: dict[int, float]
    window: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    epsilons: tuple[float, ...] = (1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32)
    points_per_epsilon: int = Field(default=8, ge=1)

class DecomposeKind(StrEnum):
    MIXED = "mixed"
    SECOND_ORDER = "second_order"

class DecomposeBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: DecomposeKind = DecomposeKind.MIXED
    field_seed: int = Field(default=0, ge=0)
    modes: int = Field(default=3, ge=1)

REQUIRED_BLOCKS: dict[Command, tuple[str, ...]] = {
    Command.GENERATE: ("model", "grid"),
    Command.SOLVE_CELL: ("model", "materials", "grid"),
    Command.EFFECTIVE: ("model", "materials", "grid"),
    Command.SWEEP_GAMMA: ("model", "materials", "grid", "sweep"),
    Command.ISOTROPY: ("model", "materials", "grid"),
    Command.ERGODIC: ("model", "grid", "ergodic"),
    Command.DECOMPOSE: ("grid",),
    Command.RECOVERY: ("model", "materials", "grid", "recovery"),
}

class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: Command
    model: MicrostructureModel | None = None
    materials: tuple[PhaseMaterialEntry, ...] | None = None
    grid: GridBlock | None = None
    seeds: tuple[int, ...] = (0,)
    tolerances: ToleranceBlock = ToleranceBlock()
    output_dir: str | None = None
    threads: int | None = Field(default=None, ge=1)
    sweep: SweepBlock | None = None
    isotropy: IsotropyBlock = IsotropyBlock()
    ergodic: ErgodicBlock | None = None
    decompose: DecomposeBlock = DecomposeBlock()
    recovery: RecoveryConfig | None = None

    @field_validator("seeds")
    @classmethod
    def non_negative_seeds(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value:
            raise ValueError("at least one seed is required")
        if any(seed < 0 or seed >= 2 ** 64 for seed in value):
            raise ValueError("seeds must be 64-bit unsigned integers")
        return value

    @field_validator("materials")
    @classmethod
    def distinct_phases(cls, value: tuple[PhaseMaterialEntry, ...] | None) -> tuple[PhaseMaterialEntry, ...] | None:
        if value is not None and len({entry.phase_id for entry in value}) != len(value):
            raise ValueError("material table lists a phase twice")
        return value

    @model_validator(mode="after")
    def check_blocks(self) -> "RunConfig":
        missing = [name for name in REQUIRED_BLOCKS[self.command] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"missing block(s) {', '.join(repr(name) for name in missing)} "
                             f"required by command '{self.command}'")
        return self
