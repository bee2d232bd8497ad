"""Readers for the engine's on-disk formats (FKF1 fields, FKW1 operators).

The trainer talks to the propagation engine only through these files and
the FKP1 wire protocol, so the codecs are implemented here independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

_TRIPLE = np.dtype([("row", "<u4"), ("col", "<u4"), ("weight", "<f8")])


class FormatError(ValueError):
    pass


@dataclass
class FieldFile:
    header: dict
    frames: np.ndarray  # (count, npoints) float64

    @property
    def npoints(self) -> int:
        return int(np.prod(self.header["resolution"])) * int(self.header["components"])


def read_fields(path) -> FieldFile:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != "FKF1":
            raise FormatError(f"not an FKF1 file: {path}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    per = int(np.prod(header["resolution"])) * int(header["components"])
    count = int(header["count"])
    if raw.size != per * count:
        raise FormatError("FKF1 payload does not match its header")
    return FieldFile(header, raw.reshape(count, per).astype(np.float64))


def write_fields(path, header_like: dict, frames: np.ndarray) -> None:
    frames = np.asarray(frames, dtype=np.float64)
    header = dict(header_like)
    header["format"] = "FKF1"
    header["count"] = frames.shape[0]
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(frames, dtype="<f8").tobytes())


@dataclass
class Operator:
    """Sparse propagation operator W plus forcing g: step(u) = W u + g.

    ``apply`` accumulates each row with the same dot product the engine
    uses, so results are bit-identical to in-process propagation.
    """

    rows: int
    cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    weights: np.ndarray
    forcing: np.ndarray
    dt: float
    factor: int
    pde: dict

    def apply(self, u: np.ndarray) -> np.ndarray:
        if self.factor != 1:
            raise FormatError("operators with spectral refinement need the service path")
        u = np.asarray(u, dtype=np.float64).ravel()
        out = np.empty(self.rows)
        add_g = bool(np.any(self.forcing))
        for p in range(self.rows):
            s, e = self.row_ptr[p], self.row_ptr[p + 1]
            val = float(np.dot(self.weights[s:e], u[self.col_idx[s:e]]))
            if add_g:
                val += self.forcing[p]
            out[p] = val
        return out

    def dense(self) -> np.ndarray:
        W = np.zeros((self.rows, self.cols))
        for p in range(self.rows):
            s, e = self.row_ptr[p], self.row_ptr[p + 1]
            W[p, self.col_idx[s:e]] = self.weights[s:e]
        return W


def read_operator(path) -> Operator:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != "FKW1":
            raise FormatError(f"not an FKW1 file: {path}")
        nnz = int(header["nnz"])
        rows = int(header["rows"])
        triples = np.frombuffer(fh.read(nnz * _TRIPLE.itemsize), dtype=_TRIPLE)
        forcing = np.frombuffer(fh.read(rows * 8), dtype="<f8")
        if fh.read():
            raise FormatError("trailing bytes after the forcing vector")
    if len(triples) != nnz or forcing.size != rows:
        raise FormatError("FKW1 payload does not match its header")
    row = triples["row"].astype(np.int64)
    counts = np.bincount(row, minlength=rows)
    if not np.all(row == np.repeat(np.arange(rows), counts)):
        raise FormatError("operator triples are not row-major")
    row_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    pde = header.get("pde", {})
    return Operator(rows=rows, cols=int(header["cols"]), row_ptr=row_ptr,
                    col_idx=triples["col"].astype(np.int64),
                    weights=triples["weight"].astype(np.float64),
                    forcing=forcing.astype(np.float64), dt=float(header["dt"]),
                    factor=int(pde.get("factor", 1)), pde=pde)


def check_operator(op: Operator, npoints: int, dt: float) -> None:
    if op.rows != npoints:
        raise FormatError(f"operator has {op.rows} rows, the grid has {npoints} points")
    if op.dt != dt:
        raise FormatError(f"operator dt {op.dt} does not match requested {dt}")
