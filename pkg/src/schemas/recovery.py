try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from pydantic import BaseModel, ConfigDict, Field, model_validator

class IsometryKind(StrEnum):
    FLAT = "flat"
    CYLINDER = "cylinder"

class RecoveryConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    isometry: IsometryKind = IsometryKind.CYLINDER
    radius: float = Field(default=1.0, gt=0)
    domain: tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0)
    h_schedule: tuple[float, ...] = Field(default=(0.08, 0.04, 0.02), min_length=1)
    gamma: float = Field(default=1.0, gt=0)
    eta: float = Field(default=1.0, gt=0)
    delta: float = Field(default=0.02, gt=0)
    in_plane_gauss: int = Field(default=2, ge=1, le=5)
    thickness_gauss: int = Field(default=3, ge=1, le=5)
    cells_per_epsilon: int = Field(default=4, ge=2)

    @model_validator(mode="after")
    def check_schedule(self) -> "RecoveryConfig":
        if self.delta >= self.eta / 2:
            raise ValueError(f"delta {self.delta} must be smaller than eta/2 = {self.eta / 2}")
        if any(a <= b for a, b in zip(self.h_schedule, self.h_schedule[1:])):
            raise ValueError("h_schedule must be strictly decreasing")
        if any(h <= 0 for h in self.h_schedule):
            raise ValueError("thicknesses must be positive")
        x0, y0, x1, y1 = self.domain
        if x1 <= x0 or y1 <= y0:
            raise ValueError("domain must be a non-empty rectangle (x0, y0, x1, y1)")
        return self

    def epsilon(self, h: float) -> float:
        return h / self.gamma
