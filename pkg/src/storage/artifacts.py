import csv
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

from src.schemas.run import RunConfig
from src.core.config import settings
from src.core.exceptions import PlateError
from src.core.traceback import traceBack

SEED_LINEAGE: dict[str, str] = {
    "bit_generator": "Philox",
    "seed_sequence": "SeedSequence([seed, stream])",
    "voronoi_streams": "3a: count, 3a+1: positions, 3a+2: marks (a = resample attempt)",
}

def dumps(document: Any) -> str:
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=True) + "\n"

def config_echo(config: RunConfig) -> dict[str, Any]:
    """Resolved config without the knobs that cannot change a result."""
    return config.model_dump(mode="json", exclude={"threads", "output_dir"})

class ArtifactWriter:
    def __init__(self, out_dir: Path, config: RunConfig):
        self.out_dir: Path = Path(out_dir)
        self.config: RunConfig = config
        self.written: list[Path] = []
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def provenance(self, seeds: Sequence[int] | None = None) -> dict[str, Any]:
        """What every artifact records about the run that produced it."""
        return {
            "tool_version": settings.TOOL_VERSION,
            "command": str(self.config.command),
            "config": config_echo(self.config),
            "seed_lineage": {**SEED_LINEAGE, "seeds": [int(s) for s in (seeds if seeds is not None else self.config.seeds)]},
            "deterministic": settings.DETERMINISTIC,
        }

    def envelope(self, result: Any, seeds: Sequence[int] | None = None) -> dict[str, Any]:
        return {**self.provenance(seeds), "result": result}

    def write_json(self, name: str, result: Any, seeds: Sequence[int] | None = None) -> Path:
        target = self.path(name)
        target.write_text(dumps(self.envelope(result, seeds)), encoding="utf-8")
        return self.track(target)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]],
                  seeds: Sequence[int] | None = None) -> Path:
        target = self.path(name)
        with target.open("w", newline="", encoding="utf-8") as handle:
            handle.write("# " + json.dumps(self.provenance(seeds), sort_keys=True, ensure_ascii=True) + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([repr(float(value)) if isinstance(value, float) else value for value in row] for row in rows)
        return self.track(target)

    def write_timing(self, wall_time: float) -> Path:
        target = self.path("timing.json")
        target.write_text(dumps({"wall_time": wall_time, "threads": settings.WORKERS}), encoding="utf-8")
        return self.track(target)

    def write_residual_history(self, error: PlateError) -> Path:
        target = self.path("residual_history.json")
        target.write_text(dumps(self.envelope({"detail": error.detail, "residuals": error.history or []})),
                          encoding="utf-8")
        return self.track(target)

    def track(self, target: Path) -> Path:
        self.written.append(target)
        traceBack(f"Wrote {target}")
        return target

def write_birkhoff_csv(writer: ArtifactWriter, name: str, rows: Iterable[Sequence[float]],
                       seeds: Sequence[int] | None = None) -> Path:
    return writer.write_csv(name, ("epsilon", "average", "reference", "error"), rows, seeds)

def write_ensemble_csv(writer: ArtifactWriter, name: str, rows: Iterable[Sequence[float]]) -> Path:
    header = ("seed", *(f"q{i}{j}" for i in range(1, 4) for j in range(1, 4)), "defect")
    return writer.write_csv(name, header, rows)
