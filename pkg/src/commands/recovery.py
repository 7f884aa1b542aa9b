from src.schemas.run import Command
from src.commands.context import RunContext
from src.commands.router import CommandRouter
from src.services.cell_solver import CellSolverService
from src.services.microstructure import MicrostructureService
from src.services.recovery import RecoveryService

router: CommandRouter = CommandRouter()

@router.command(
    Command.RECOVERY,
    summary="Recovery sequence energies",
    description="Builds the oscillating recovery deformation of the configured isometry from the first "
                "seed's correctors and compares I^h over the thickness schedule with the limit energy.",
)
def recovery(ctx: RunContext) -> None:
    cfg, grid = ctx.require("recovery"), ctx.grid
    seed = ctx.config.seeds[0]

    realization = MicrostructureService.sample_realization(ctx.require("model"), seed, grid.box_side)
    phases = MicrostructureService.rasterize(realization, grid.n1, grid.n2)
    tensor = CellSolverService.coupled_tensor(grid, phases, ctx.materials, ctx.cg_tol, seed=seed)

    iso = RecoveryService.isometry_from_config(cfg)
    reports = RecoveryService.gap_trend(iso, cfg, realization, ctx.materials, tensor)
    gaps = [report.relative_gap for report in reports]

    ctx.writer.write_json("recovery.json", {
        "isometry": iso.json(),
        "voigt3": CellSolverService.effective_bending(tensor).voigt3.ravel().tolist(),
        "reports": [report.json() for report in reports],
        "gap_decreasing": all(a > b for a, b in zip(gaps, gaps[1:])),
    }, seeds=[seed])
