import argparse
import json
import time
from pathlib import Path
from typing import Sequence
from pydantic import ValidationError

from src.schemas.run import RunConfig, Command
from src.commands.context import RunContext
from src.commands.router import CommandRouter
from src.commands import microstructure as microstructure_commands
from src.commands import cell as cell_commands
from src.commands import ergodic as ergodic_commands
from src.commands import decompose as decompose_commands
from src.commands import recovery as recovery_commands
from src.storage.artifacts import ArtifactWriter
from src.core.config import settings
from src.core.exceptions import PlateError, ConfigError
from src.core.traceback import traceBack, TrackType

def validation_diagnostics(error: ValidationError) -> list[str]:
    lines = []
    for entry in error.errors():
        path = ".".join(str(part) for part in entry["loc"]) or "<root>"
        lines.append(f"{path}: {entry['msg']}")
    return lines

class PlateApp:
    def __init__(self):
        self.router: CommandRouter = CommandRouter()
        self.__initializeRoutes(self.router)
        self.parser: argparse.ArgumentParser = self.__buildParser()

    def __initializeRoutes(self, router: CommandRouter) -> None:
        router.include(microstructure_commands.router)
        router.include(cell_commands.router)
        router.include(ergodic_commands.router)
        router.include(decompose_commands.router)
        router.include(recovery_commands.router)

    def __buildParser(self) -> argparse.ArgumentParser:
        commands = "\n".join(f"  {route.command:<12} {route.summary}" for route in self.router.routes.values())
        parser = argparse.ArgumentParser(
            prog="platehom",
            description="Stochastic homogenization of the plate bending energy. The command is chosen by the "
                        "'command' field of the JSON config.",
            epilog=f"commands:\n{commands}",
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        parser.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        parser.add_argument("--deterministic", action="store_true",
                            help="fixed-order reductions; identical configs give byte-identical results")
        parser.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
        parser.add_argument("--threads", type=int, default=None, help="worker threads (PLATEHOM_THREADS wins)")
        parser.add_argument("--realization", type=Path, default=None,
                            help="solve-cell only: realization JSON written by generate")
        return parser

    def load_config(self, path: Path) -> RunConfig:
        try:
            document = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as error:
            raise ConfigError(f"cannot read config {path}: {error.strerror}")
        except json.JSONDecodeError as error:
            raise ConfigError(f"config {path} is not valid JSON: {error}")
        return RunConfig.model_validate(document)

    def configure(self, args: argparse.Namespace, config: RunConfig) -> None:
        if args.threads is not None and args.threads < 1:
            raise ConfigError(f"--threads must be at least 1, got {args.threads}")

        settings.THREADS = args.threads or config.threads or 1
        settings.DETERMINISTIC = settings.DETERMINISTIC or args.deterministic
        if settings.THREADS_OVERRIDE is not None and settings.THREADS_OVERRIDE != settings.THREADS:
            traceBack(f"PLATEHOM_THREADS={settings.THREADS_OVERRIDE} overrides the requested {settings.THREADS} threads",
                      type=TrackType.WARNING)

    def run(self, argv: Sequence[str] | None = None) -> int:
        args = self.parser.parse_args(argv)

        try:
            config = self.load_config(args.config)
        except ValidationError as error:
            for line in validation_diagnostics(error):
                traceBack(line, type=TrackType.ERROR)
            return ConfigError.exit_code
        except PlateError as error:
            traceBack(error.detail, type=TrackType.ERROR)
            return error.exit_code

        writer: ArtifactWriter | None = None
        try:
            self.configure(args, config)
            out_dir = args.out or (Path(config.output_dir) if config.output_dir else settings.OUTPUT_DIR)
            writer = ArtifactWriter(out_dir, config)
            if args.realization is not None and config.command is not Command.SOLVE_CELL:
                traceBack("--realization only applies to solve-cell, ignoring it", type=TrackType.WARNING)

            route = self.router.routes[config.command]
            traceBack(f"Running '{route.command}' with {settings.WORKERS} thread(s)")
            started = time.perf_counter()
            route.handler(RunContext(config=config, writer=writer, realization_path=args.realization))
            writer.write_timing(time.perf_counter() - started)
        except PlateError as error:
            traceBack(error.detail, type=TrackType.ERROR)
            if error.history and writer is not None:
                writer.write_residual_history(error)
            return error.exit_code

        traceBack(f"Done, {len(writer.written)} artifact(s) in {writer.out_dir}")
        return 0
