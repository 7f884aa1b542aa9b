from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from src.schemas.run import RunConfig
from src.models.cell import RVEGrid
from src.models.material import MaterialTable
from src.services.material import MaterialService
from src.storage.artifacts import ArtifactWriter
from src.core.exceptions import missing_block

@dataclass(eq=False)
class RunContext:
    """What a command handler depends on: the validated config and where results go."""
    config: RunConfig
    writer: ArtifactWriter
    realization_path: Path | None = None

    def require(self, name: str):
        block = getattr(self.config, name)
        if block is None:
            raise missing_block(name, str(self.config.command))
        return block

    @cached_property
    def grid(self) -> RVEGrid:
        block = self.require("grid")
        return RVEGrid(box_side=block.box_side, n1=block.n1, n2=block.n2, n3=block.n3, gamma=block.gamma)

    @cached_property
    def materials(self) -> MaterialTable:
        return MaterialService.material_table(self.require("materials"))

    @property
    def cg_tol(self) -> float:
        return self.config.tolerances.cg
