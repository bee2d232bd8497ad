"""File codecs for the two on-disk formats every module shares.

FKF1 (fields): one UTF-8 JSON header line
    {"format": "FKF1", "dim", "resolution", "extent", "boundary",
     "components", "count"}
followed by ``count`` frames of raw little-endian float64 in row-major
order (vector frames store one component slab after another).

FKW1 (sparse propagation operator): one UTF-8 JSON header line
    {"format": "FKW1", "rows", "cols", "nnz", "dt", "pde"}
followed by nnz packed (row: u32, col: u32, weight: f64) little-endian
triples, then ``rows`` float64 forcing values.
"""

from __future__ import annotations

import json

import numpy as np

from .grid import BoundaryKind, Field, Grid, make_grid

_FIELD_MAGIC = "FKF1"
_OP_MAGIC = "FKW1"
_TRIPLE = np.dtype([("row", "<u4"), ("col", "<u4"), ("weight", "<f8")])


class FormatError(ValueError):
    """Raised when an on-disk record does not match its declared schema."""


def grid_header(grid: Grid) -> dict:
    return {
        "dim": grid.dim,
        "resolution": list(grid.resolution),
        "extent": list(grid.extent),
        "boundary": grid.boundary.value,
    }


def grid_from_header(h: dict) -> Grid:
    return make_grid(h["dim"], h["resolution"], h["extent"], BoundaryKind(h["boundary"]))


def write_fields(path, fields: list[Field]) -> None:
    if not fields:
        raise ValueError("nothing to write")
    grid = fields[0].grid
    comp = fields[0].components
    for f in fields:
        if f.grid != grid or f.components != comp:
            raise ValueError("all frames must share one grid and component count")
    header = {"format": _FIELD_MAGIC, **grid_header(grid), "components": comp, "count": len(fields)}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        for f in fields:
            fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_fields(path) -> list[Field]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != _FIELD_MAGIC:
            raise FormatError(f"not an {_FIELD_MAGIC} file: {path}")
        grid = grid_from_header(header)
        comp = int(header["components"])
        count = int(header["count"])
        per = comp * grid.npoints
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != per * count:
        raise FormatError(f"payload holds {raw.size} values, header promises {per * count}")
    shape = grid.resolution if comp == 1 else (comp, *grid.resolution)
    return [Field(grid, raw[i * per:(i + 1) * per].reshape(shape).copy()) for i in range(count)]


def write_operator(path, rows, cols, row_idx, col_idx, weights, forcing, dt, pde_header) -> None:
    nnz = len(weights)
    header = {
        "format": _OP_MAGIC, "rows": int(rows), "cols": int(cols), "nnz": int(nnz),
        "dt": float(dt), "pde": pde_header,
    }
    triples = np.empty(nnz, dtype=_TRIPLE)
    triples["row"] = row_idx
    triples["col"] = col_idx
    triples["weight"] = weights
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        fh.write(triples.tobytes())
        fh.write(np.ascontiguousarray(forcing, dtype="<f8").tobytes())


def read_operator(path) -> dict:
    """Load an FKW1 file into {header, row, col, weight, forcing} arrays."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != _OP_MAGIC:
            raise FormatError(f"not an {_OP_MAGIC} file: {path}")
        nnz = int(header["nnz"])
        rows = int(header["rows"])
        triples = np.frombuffer(fh.read(nnz * _TRIPLE.itemsize), dtype=_TRIPLE)
        forcing = np.frombuffer(fh.read(rows * 8), dtype="<f8")
        trailing = fh.read()
    if len(triples) != nnz or forcing.size != rows or trailing:
        raise FormatError("operator payload does not match header counts")
    return {
        "header": header,
        "row": triples["row"].astype(np.int64),
        "col": triples["col"].astype(np.int64),
        "weight": triples["weight"].astype(np.float64),
        "forcing": forcing.astype(np.float64),
    }
