import os
from pathlib import Path
from dotenv import load_dotenv

from src.core.traceback import traceBack, TrackType

class Settings:
    def __init__(self):
        env_path: Path = Path(__file__).resolve().parents[2] / ".env" / "var.env"

        if env_path.exists():
            load_dotenv(dotenv_path=env_path)
            traceBack(".env loaded")

        self.TOOL_VERSION: str = "0.3.0"
        self.THREADS: int = 1
        self.THREADS_OVERRIDE: int | None = self._get_threads_override()
        self.DETERMINISTIC: bool = os.getenv("PLATEHOM_DETERMINISTIC") is not None
        self.CG_TOL: float = float(os.getenv("PLATEHOM_CG_TOL", "1e-8"))
        self.CG_CAP_FACTOR: float = 20.0
        self.DECOMPOSITION_TOL: float = 1e-10
        self.OUTPUT_DIR: Path = Path(os.getenv("PLATEHOM_OUTPUT_DIR", "results"))
        self.RESAMPLE_EMPTY_POISSON: bool = os.getenv("PLATEHOM_RESAMPLE_EMPTY") is not None
        self.MAX_RESAMPLE_ATTEMPTS: int = 16
        self.QUADRATURE_CELLS_PER_EPSILON: int = 4
        self.REFERENCE_FLOOR: float = 1e-12
        self.COERCIVITY_ALLOWANCE: float = 0.05

    def _get_threads_override(self) -> int | None:
        raw = os.getenv("PLATEHOM_THREADS")
        if raw is None:
            return None

        try:
            threads = int(raw)
        except ValueError:
            traceBack(f"Ignoring PLATEHOM_THREADS={raw!r}, not an integer", type=TrackType.WARNING)
            return None

        return max(threads, 1)

    @property
    def WORKERS(self) -> int:
        return self.THREADS_OVERRIDE or self.THREADS

settings = Settings()
