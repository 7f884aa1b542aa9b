try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from pydantic import BaseModel, ConfigDict, Field, model_validator

PROBABILITY_TOLERANCE: float = 1e-12

class MicrostructureKind(StrEnum):
    PERIODIC_TEXTURE = "periodic_texture"
    CHECKERBOARD = "checkerboard"
    POISSON_VORONOI = "poisson_voronoi"

class MarkProbability(BaseModel):
    model_config = ConfigDict(frozen=True)

    phase_id: int = Field(..., ge=0)
    probability: float = Field(..., ge=0.0, le=1.0)

class MicrostructureModel(BaseModel):
    """Law of the random medium.

    For the periodic kinds the mark probabilities are the area fractions of the
    texture: stripes of widths proportional to them for periodic_texture, two
    equal phases for checkerboard (checks of side period_hint).
    """
    model_config = ConfigDict(frozen=True)

    kind: MicrostructureKind
    period_hint: float | None = Field(default=None, gt=0)
    intensity: float | None = Field(default=None, gt=0)
    mark_distribution: tuple[MarkProbability, ...] = Field(..., min_length=1)
    phase_count: int = Field(..., gt=0)
    stripe_axis: int = Field(default=0, ge=0, le=1)

    @model_validator(mode="after")
    def check_law(self) -> "MicrostructureModel":
        total = sum(mark.probability for mark in self.mark_distribution)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"mark probabilities sum to {total!r}, expected 1")

        ids = [mark.phase_id for mark in self.mark_distribution]
        if len(set(ids)) != len(ids):
            raise ValueError("phase ids in mark_distribution must be distinct")
        if len(ids) != self.phase_count:
            raise ValueError(f"phase_count is {self.phase_count} but {len(ids)} phases are listed")

        if self.kind is MicrostructureKind.POISSON_VORONOI and self.intensity is None:
            raise ValueError("poisson_voronoi requires intensity > 0")
        if self.kind is not MicrostructureKind.POISSON_VORONOI and self.period_hint is None:
            raise ValueError(f"{self.kind} requires period_hint > 0")
        if self.kind is MicrostructureKind.CHECKERBOARD:
            if len(ids) != 2 or any(abs(m.probability - 0.5) > PROBABILITY_TOLERANCE for m in self.mark_distribution):
                raise ValueError("checkerboard needs exactly two phases with probability 0.5")

        return self

    @property
    def phase_ids(self) -> tuple[int, ...]:
        return tuple(mark.phase_id for mark in self.mark_distribution)

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(mark.probability for mark in self.mark_distribution)

    @property
    def texture_period(self) -> float | None:
        """Smallest translation that maps the periodic texture onto itself."""
        if self.kind is MicrostructureKind.CHECKERBOARD:
            return 2.0 * self.period_hint
        return self.period_hint
