from src.schemas.run import Command
from src.commands.context import RunContext
from src.commands.router import CommandRouter
from src.services.microstructure import MicrostructureService
from src.storage.fields import dump_phase_grid

router: CommandRouter = CommandRouter()

@router.command(
    Command.GENERATE,
    summary="Sample realizations of the medium",
    description="Draws one realization per seed, dumps it as JSON together with its rasterized phase grid "
                "and reports the phase fractions of the grid.",
)
def generate(ctx: RunContext) -> None:
    model, grid = ctx.require("model"), ctx.grid
    summary = []
    for seed in ctx.config.seeds:
        realization = MicrostructureService.sample_realization(model, seed, grid.box_side)
        phases = MicrostructureService.rasterize(realization, grid.n1, grid.n2)

        ctx.writer.write_json(f"realization_seed{seed}.json", realization.json(), seeds=[seed])
        ctx.writer.track(dump_phase_grid(ctx.writer.path(f"phases_seed{seed}.bin"), phases,
                                         ctx.writer.provenance([seed])))

        fractions = MicrostructureService.phase_fractions(phases)
        summary.append({
            "seed": seed,
            "attempt": realization.attempt,
            "point_count": int(len(realization.points)),
            "phase_fractions": {str(phase_id): fraction for phase_id, fraction in fractions.items()},
        })

    ctx.writer.write_json("generate.json", summary)
