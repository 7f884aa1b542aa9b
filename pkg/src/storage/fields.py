"""Binary field files: one line of JSON header, then a little-endian payload.

Nodal fields are node-major and component-minor, nodes ordered (i1, i2, i3)
with i3 fastest.
"""
import json
from pathlib import Path
from typing import Any
import numpy as np

from src.models.cell import RVEGrid, CorrectorField
from src.models.decomposition import MixedField
from src.models.microstructure import PhaseGrid
from src.core.exceptions import bad_config, dimension_mismatch

FLOAT: str = "<f8"
INTEGER: str = "<i8"

def write_blob(path: Path, header: dict[str, Any], payload: np.ndarray, dtype: str = FLOAT,
               provenance: dict[str, Any] | None = None) -> Path:
    path = Path(path)
    header = {**header, "dtype": dtype, "count": int(payload.size)}
    if provenance is not None:
        header["provenance"] = provenance
    with path.open("wb") as handle:
        handle.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        handle.write(np.ascontiguousarray(payload, dtype=dtype).tobytes(order="C"))
    return path

def read_blob(path: Path) -> tuple[dict[str, Any], np.ndarray]:
    raw = Path(path).read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise bad_config(f"{path} has no header line")

    try:
        header = json.loads(raw[:newline].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as error:
        raise bad_config(f"{path} has a malformed header: {error}")

    payload = np.frombuffer(raw[newline + 1:], dtype=header.get("dtype", FLOAT))
    if payload.size != header.get("count", payload.size):
        raise dimension_mismatch((header["count"],), (payload.size,))
    return header, payload

def grid_header(grid: RVEGrid) -> dict[str, Any]:
    return {"n1": grid.n1, "n2": grid.n2, "n3": grid.n3, "L": grid.box_side, "gamma": grid.gamma}

def grid_from_header(header: dict[str, Any]) -> RVEGrid:
    try:
        return RVEGrid(box_side=float(header["L"]), n1=int(header["n1"]), n2=int(header["n2"]),
                       n3=int(header["n3"]), gamma=float(header["gamma"]))
    except KeyError as error:
        raise bad_config(f"field header misses {error}")

def dump_corrector(path: Path, field: CorrectorField, provenance: dict[str, Any] | None = None) -> Path:
    return write_blob(path, {**grid_header(field.grid), "kind": "corrector"}, field.values, provenance=provenance)

def load_corrector(path: Path) -> CorrectorField:
    header, payload = read_blob(path)
    grid = grid_from_header(header)
    if payload.size != 3 * grid.node_count:
        raise dimension_mismatch((3 * grid.node_count,), (payload.size,))
    return CorrectorField(grid=grid, values=payload.astype(float))

def dump_mixed(path: Path, field: MixedField, part: str = "source", provenance: dict[str, Any] | None = None) -> Path:
    return write_blob(path, {**grid_header(field.grid), "kind": "mixed", "part": part}, field.values,
                      provenance=provenance)

def load_mixed(path: Path) -> MixedField:
    header, payload = read_blob(path)
    grid = grid_from_header(header)
    return MixedField(grid=grid, values=payload.astype(float).reshape(grid.field_shape + (3,)))

def dump_phase_grid(path: Path, grid: PhaseGrid, provenance: dict[str, Any] | None = None) -> Path:
    header = {"n1": grid.n1, "n2": grid.n2, "box_side": grid.box_side, "kind": "phase_grid"}
    return write_blob(path, header, grid.cell_phase, dtype=INTEGER, provenance=provenance)

def load_phase_grid(path: Path) -> PhaseGrid:
    header, payload = read_blob(path)
    return PhaseGrid(n1=int(header["n1"]), n2=int(header["n2"]), box_side=float(header["box_side"]),
                     cell_phase=payload.reshape(int(header["n1"]), int(header["n2"])))
