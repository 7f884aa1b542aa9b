import numpy as np

from src.schemas.run import Command, DecomposeKind
from src.commands.context import RunContext
from src.commands.router import CommandRouter
from src.models.decomposition import MixedField
from src.services.decomposition import (DecompositionService, band_limited_mixed_field, band_limited_sym_field,
                                        inner)
from src.storage.fields import dump_mixed

router: CommandRouter = CommandRouter()

@router.command(
    Command.DECOMPOSE,
    summary="Helmholtz-type decompositions",
    description="Splits a seeded band-limited field, either the mixed 3-vector field on the corrector grid "
                "or the symmetric 2D field, and reports the orthogonality of the parts.",
)
def decompose(ctx: RunContext) -> None:
    block, grid = ctx.config.decompose, ctx.grid
    tol = ctx.config.tolerances.decomposition

    if block.kind is DecomposeKind.SECOND_ORDER:
        A = band_limited_sym_field(grid.n1, grid.n2, grid.box_side, block.field_seed, block.modes)
        split = DecompositionService.decompose_second_order_2d(A, tol)
        ctx.writer.write_json("decompose.json", {
            "kind": str(block.kind),
            "field_seed": block.field_seed,
            "mean": np.asarray(split.mean).tolist(),
            "orthogonality": split.orthogonality,
        }, seeds=[block.field_seed])
        return

    f = band_limited_mixed_field(grid, block.field_seed, block.modes)
    d = DecompositionService.decompose_mixed(f, tol)
    centred = MixedField(grid=grid, values=f.values - d.mean)
    norm = inner(centred, centred)
    pythagoras = abs(norm - inner(d.potential, d.potential) - inner(d.solenoidal, d.solenoidal)) / norm
    ctx.writer.write_json("decompose.json", {
        **d.json(),
        "kind": str(block.kind),
        "field_seed": block.field_seed,
        "orthogonality": list(DecompositionService.orthogonality_report(d)),
        "pythagoras": pythagoras,
    }, seeds=[block.field_seed])

    for part, field in (("source", f), ("potential", d.potential), ("solenoidal", d.solenoidal)):
        ctx.writer.track(dump_mixed(ctx.writer.path(f"mixed_{part}.bin"), field, part,
                                    ctx.writer.provenance([block.field_seed])))
