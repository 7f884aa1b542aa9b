from typing import Any
import numpy as np

from src.schemas.microstructure import MicrostructureModel, MicrostructureKind
from src.models.microstructure import MicrostructureRealization, PhaseGrid
from src.core.config import settings
from src.core.exceptions import bad_config, non_commensurate_box, empty_poisson_draw
from src.core.traceback import traceBack, TrackType

COMMENSURABILITY_TOLERANCE: float = 1e-9
TIE_TOLERANCE: float = 1e-12
NEIGHBOURS: int = 4

def stream_generator(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream id)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))

def wrap(points: np.ndarray, box_side: float) -> np.ndarray:
    wrapped = np.mod(points, box_side)
    # np.mod rounds tiny negatives up to box_side
    return np.where(wrapped >= box_side, 0.0, wrapped)

def check_commensurate(model: MicrostructureModel, box_side: float) -> None:
    period = model.texture_period
    ratio = box_side / period
    if ratio < 1.0 - COMMENSURABILITY_TOLERANCE or abs(ratio - round(ratio)) > COMMENSURABILITY_TOLERANCE * max(ratio, 1.0):
        raise non_commensurate_box(box_side, period)

def draw_voronoi_points(model: MicrostructureModel, seed: int, box_side: float,
                        attempt: int) -> tuple[np.ndarray, np.ndarray]:
    count_stream, position_stream, mark_stream = 3 * attempt, 3 * attempt + 1, 3 * attempt + 2

    count = int(stream_generator(seed, count_stream).poisson(model.intensity * box_side ** 2))
    if count == 0:
        return np.empty((0, 2)), np.empty(0, dtype=np.int64)

    points = wrap(stream_generator(seed, position_stream).uniform(0.0, box_side, size=(count, 2)), box_side)
    marks = stream_generator(seed, mark_stream).choice(
        np.asarray(model.phase_ids, dtype=np.int64), size=count, p=np.asarray(model.probabilities)
    )

    order = np.lexsort((points[:, 1], points[:, 0]))
    return points[order], marks[order]

def texture_phase(model: MicrostructureModel, q: np.ndarray) -> np.ndarray:
    ids = np.asarray(model.phase_ids, dtype=np.int64)
    period = model.period_hint

    if model.kind is MicrostructureKind.CHECKERBOARD:
        parity = (np.floor(q[..., 0] / period).astype(np.int64) + np.floor(q[..., 1] / period).astype(np.int64)) % 2
        return ids[parity]

    t = np.mod(q[..., model.stripe_axis], period) / period
    bounds = np.cumsum(model.probabilities)[:-1]
    return ids[np.searchsorted(bounds, t, side="right")]

class MicrostructureService:
    @staticmethod
    def sample_realization(model: MicrostructureModel, seed: int, box_side: float) -> MicrostructureRealization:
        if box_side <= 0:
            raise bad_config(f"box_side must be positive, got {box_side}")

        if model.kind is not MicrostructureKind.POISSON_VORONOI:
            check_commensurate(model, box_side)
            return MicrostructureRealization(model=model, seed=int(seed), box_side=float(box_side))

        attempts = settings.MAX_RESAMPLE_ATTEMPTS if settings.RESAMPLE_EMPTY_POISSON else 1
        for attempt in range(attempts):
            points, marks = draw_voronoi_points(model, seed, box_side, attempt)
            if len(points):
                return MicrostructureRealization(model=model, seed=int(seed), box_side=float(box_side),
                                                 points=points, marks=marks, attempt=attempt)

            if settings.RESAMPLE_EMPTY_POISSON:
                traceBack(f"Empty Poisson draw for seed {seed} (stream {3 * attempt}), resampling",
                          type=TrackType.WARNING)

        raise empty_poisson_draw(seed, 3 * (attempts - 1))

    @staticmethod
    def phase_at(r: MicrostructureRealization, point: np.ndarray) -> np.ndarray:
        """Phase id at one point (2,) or a batch (..., 2), wrapped by periodicity."""
        point = np.asarray(point, dtype=float)
        q = wrap(point + r.offset, r.box_side)

        if not r.is_voronoi:
            return texture_phase(r.model, q)

        flat = q.reshape(-1, 2)
        k = min(NEIGHBOURS, len(r.points))
        distances, indices = r.tree.query(flat, k=k)
        distances = distances.reshape(len(flat), k)
        indices = indices.reshape(len(flat), k)

        # indices follow lexicographic point order, so the smallest tied index wins
        tied = distances <= distances[:, :1] + TIE_TOLERANCE * r.box_side
        nearest = np.where(tied, indices, np.iinfo(np.int64).max).min(axis=1)
        return r.marks[nearest].reshape(point.shape[:-1])

    @staticmethod
    def shift(r: MicrostructureRealization, x: np.ndarray) -> MicrostructureRealization:
        return MicrostructureRealization(model=r.model, seed=r.seed, box_side=r.box_side,
                                         points=r.points, marks=r.marks,
                                         offset=r.offset + np.asarray(x, dtype=float), attempt=r.attempt)

    @staticmethod
    def rasterize(r: MicrostructureRealization, n1: int, n2: int) -> PhaseGrid:
        if n1 < 1 or n2 < 1:
            raise bad_config(f"grid divisions must be positive, got ({n1}, {n2})")

        c1 = (np.arange(n1) + 0.5) * r.box_side / n1
        c2 = (np.arange(n2) + 0.5) * r.box_side / n2
        centers = np.stack(np.meshgrid(c1, c2, indexing="ij"), axis=-1)
        return PhaseGrid(n1=n1, n2=n2, box_side=r.box_side, cell_phase=MicrostructureService.phase_at(r, centers))

    @staticmethod
    def realization_from_json(document: dict[str, Any]) -> MicrostructureRealization:
        model = MicrostructureModel.model_validate(document["model"])
        box_side = float(document["box_side"])
        rows = np.asarray(document.get("points", []), dtype=float).reshape(-1, 3)

        if model.kind is MicrostructureKind.POISSON_VORONOI and not len(rows):
            raise bad_config("Voronoi realization document lists no points")
        if len(rows) and not np.isin(rows[:, 2].astype(np.int64), model.phase_ids).all():
            raise bad_config("realization carries marks outside the model's phase set")

        # phase_at breaks ties by index, which must follow lexicographic point order
        rows = rows[np.lexsort((rows[:, 1], rows[:, 0]))]
        return MicrostructureRealization(model=model, seed=int(document["seed"]), box_side=box_side,
                                         points=rows[:, :2], marks=rows[:, 2].astype(np.int64),
                                         offset=np.asarray(document.get("offset", (0.0, 0.0)), dtype=float),
                                         attempt=int(document.get("attempt", 0)))

    @staticmethod
    def phase_fractions(grid: PhaseGrid) -> dict[int, float]:
        ids, counts = np.unique(grid.cell_phase, return_counts=True)
        return {int(i): float(c) / grid.cell_phase.size for i, c in zip(ids, counts)}

    @staticmethod
    def dilate(model: MicrostructureModel, factor: float) -> MicrostructureModel:
        """Law of x' -> omega(x' / factor)."""
        if factor <= 0:
            raise bad_config(f"dilation factor must be positive, got {factor}")

        if model.kind is MicrostructureKind.POISSON_VORONOI:
            return model.model_copy(update={"intensity": model.intensity / factor ** 2})
        return model.model_copy(update={"period_hint": model.period_hint * factor})
