import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Any

from src.schemas.run import Command
from src.commands.context import RunContext
from src.commands.router import CommandRouter
from src.models.cell import CoupledEffectiveTensor, RVEGrid
from src.models.microstructure import MicrostructureRealization
from src.services.cell_solver import CellSolverService
from src.services.material import MaterialService
from src.services.microstructure import MicrostructureService
from src.storage.fields import dump_corrector
from src.core.config import settings
from src.core.exceptions import PlateError, bad_config, with_seed
from src.core.traceback import traceBack

router: CommandRouter = CommandRouter()

def tensor_document(ct: CoupledEffectiveTensor) -> dict[str, Any]:
    q = CellSolverService.effective_bending(ct)
    return {
        **ct.json(),
        "gamma": ct.grid.gamma,
        "seed": ct.seed,
        "voigt3": q.voigt3.ravel().tolist(),
        "membrane_voigt3": CellSolverService.effective_membrane(ct).ravel().tolist(),
    }

def realizations(ctx: RunContext, grid: RVEGrid) -> list[MicrostructureRealization]:
    if ctx.realization_path is not None:
        try:
            document = json.loads(ctx.realization_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as error:
            raise bad_config(f"cannot read realization {ctx.realization_path}: {error}")
        return [MicrostructureService.realization_from_json(document.get("result", document))]

    model = ctx.require("model")
    return [MicrostructureService.sample_realization(model, seed, grid.box_side) for seed in ctx.config.seeds]

def solve_seeds(ctx: RunContext, grid: RVEGrid) -> list[CoupledEffectiveTensor]:
    materials = ctx.materials

    def solve(realization: MicrostructureRealization) -> CoupledEffectiveTensor:
        try:
            phases = MicrostructureService.rasterize(realization, grid.n1, grid.n2)
            return CellSolverService.coupled_tensor(grid, phases, materials, ctx.cg_tol, seed=realization.seed)
        except PlateError as error:
            raise with_seed(error, realization.seed) from error

    with ThreadPoolExecutor(max_workers=settings.WORKERS) as executor:
        return list(executor.map(solve, realizations(ctx, grid)))

@router.command(
    Command.SOLVE_CELL,
    summary="Solve the cell problems",
    description="Solves the six unit-load corrector problems per seed, writes the coupled 6x6 tensor and "
                "dumps the unit correctors as binary fields.",
)
def solve_cell(ctx: RunContext) -> None:
    for ct in solve_seeds(ctx, ctx.grid):
        ctx.writer.write_json(f"tensor_seed{ct.seed}.json", tensor_document(ct), seeds=[ct.seed])
        for index, corrector in enumerate(ct.correctors):
            ctx.writer.track(dump_corrector(ctx.writer.path(f"corrector_seed{ct.seed}_{index}.bin"), corrector,
                                            ctx.writer.provenance([ct.seed])))

@router.command(
    Command.EFFECTIVE,
    summary="Effective bending form",
    description="Computes Q^gamma per seed together with the coercivity constants of the material table.",
)
def effective(ctx: RunContext) -> None:
    c1, c2 = MaterialService.coercivity_bounds(ctx.materials)
    documents = [tensor_document(ct) for ct in solve_seeds(ctx, ctx.grid)]
    ctx.writer.write_json("effective.json", {"coercivity": {"c1": c1, "c2": c2}, "seeds": documents})

@router.command(
    Command.SWEEP_GAMMA,
    summary="Sweep the thickness ratio",
    description="Recomputes Q^gamma on the configured grid for every gamma of the sweep block.",
)
def sweep_gamma(ctx: RunContext) -> None:
    sweep = ctx.require("sweep")
    documents = []
    for gamma in sweep.gammas:
        traceBack(f"Sweep: gamma={gamma}")
        grid = replace(ctx.grid, gamma=gamma)
        documents.extend(tensor_document(ct) for ct in solve_seeds(ctx, grid))
    ctx.writer.write_json("sweep_gamma.json", documents)
