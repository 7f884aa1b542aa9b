from pydantic import BaseModel, ConfigDict, Field

class PhaseMaterialEntry(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    phase_id: int = Field(..., ge=0)
    mu: float = Field(..., gt=0)
    lame_lambda: float = Field(..., ge=0, alias="lambda")
