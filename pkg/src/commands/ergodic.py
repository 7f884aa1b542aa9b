import math
import numpy as np

from src.schemas.run import Command
from src.commands.context import RunContext
from src.commands.router import CommandRouter
from src.services.ergodic_stats import ErgodicStatsService
from src.services.microstructure import MicrostructureService
from src.storage.artifacts import write_birkhoff_csv, write_ensemble_csv

router: CommandRouter = CommandRouter()

@router.command(
    Command.ISOTROPY,
    summary="Ensemble isotropy study",
    description="Solves Q^gamma for every seed, then reports the ensemble mean, its variance and the "
                "rotational defect of the mean and of each member.",
)
def isotropy(ctx: RunContext) -> None:
    ensemble = ErgodicStatsService.ensemble_effective(ctx.require("model"), ctx.materials, ctx.grid,
                                                      ctx.config.seeds, ctx.cg_tol)
    report = ErgodicStatsService.isotropy_report(ensemble.forms, ctx.config.isotropy.rotation_count)

    write_ensemble_csv(ctx.writer, "ensemble.csv", ensemble.rows(list(report.ensemble)))
    ctx.writer.write_json("isotropy.json", {**ensemble.json(), "isotropy": report.json()})

@router.command(
    Command.ERGODIC,
    summary="Birkhoff averages",
    description="Spatial averages of a per-phase observable over shrinking scales, per seed, with the "
                "fitted rate constant and the ensemble spread of the finest average.",
)
def ergodic(ctx: RunContext) -> None:
    block, model, grid = ctx.require("ergodic"), ctx.require("model"), ctx.grid
    documents, finest = [], []
    for seed in ctx.config.seeds:
        realization = MicrostructureService.sample_realization(model, seed, grid.box_side)
        series = ErgodicStatsService.birkhoff_average(realization, block.observable, block.window, block.epsilons,
                                                      block.points_per_epsilon)
        C = ErgodicStatsService.rate_constant(series)
        write_birkhoff_csv(ctx.writer, f"birkhoff_seed{seed}.csv", series.rows(), seeds=[seed])
        documents.append({**series.json(), "rate_constant": C,
                          "rate_bound_holds": ErgodicStatsService.rate_bound_holds(series, C)})
        finest.append(series.averages[-1])

    spread = float(np.std(finest, ddof=1)) / math.sqrt(len(finest)) if len(finest) > 1 else None
    ctx.writer.write_json("ergodic.json", {"series": documents, "finest_mean": float(np.mean(finest)),
                                           "finest_standard_error": spread})
