"""Propagation service: the one-step propagator behind a wire protocol,
plus export/load of the linear operator file.

Frame layout (both directions):
    4-byte magic "FKP1"
    u32 little-endian header length
    UTF-8 JSON header
    raw little-endian float64 payload, 8 * header["count"] bytes

Request headers: {"op": "PING"|"PROPAGATE"|"DRIFT", "count": int,
"t": float (PROPAGATE, default 0)}; optional ablation overrides
"drift_scheme" and "interpolation". Responses echo {"op": "RESULT",
"count": n} with the result payload, or {"op": "ERROR", "code", "message"}
with an empty payload; the connection stays open after an error frame.
Requests are served strictly in order, one worker per connection, and
responses are bit-identical to in-process library calls (same code path).
"""

from __future__ import annotations

import dataclasses
import json
import socket
import socketserver
import sys

import numpy as np

from . import fileio
from .grid import Field, Grid
from .kernel import (NormalizationFailure, PropagatorConfig, SparseOperator,
                     assemble_linear_operator, propagate)
from .pdes import PdeSpec, drift

MAGIC = b"FKP1"
MAX_POINTS_DEFAULT = 1 << 22


class FrameError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


def write_frame(stream, header: dict, payload: bytes = b"") -> None:
    blob = json.dumps(header).encode("utf-8")
    stream.write(MAGIC + len(blob).to_bytes(4, "little") + blob + payload)
    stream.flush()


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        piece = stream.read(n - got)
        if not piece:
            raise EOFError("stream closed mid-frame")
        chunks.append(piece)
        got += len(piece)
    return b"".join(chunks)


def read_frame(stream, max_points: int = MAX_POINTS_DEFAULT):
    """Read one frame -> (header, payload ndarray). Raises FrameError on a
    malformed but recoverable frame, EOFError at end of stream."""
    magic = _read_exact(stream, 4)
    if magic != MAGIC:
        raise FrameError("BAD_MAGIC", f"expected {MAGIC!r}, got {magic!r}")
    hlen = int.from_bytes(_read_exact(stream, 4), "little")
    if hlen > 1 << 20:
        raise FrameError("BAD_HEADER", "header implausibly large")
    try:
        header = json.loads(_read_exact(stream, hlen).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FrameError("BAD_HEADER", str(e))
    count = header.get("count", 0)
    if not isinstance(count, int) or count < 0:
        raise FrameError("BAD_HEADER", "count must be a nonnegative integer")
    if count > max_points:
        raise FrameError("TOO_LARGE", f"count {count} exceeds cap {max_points}")
    payload = np.frombuffer(_read_exact(stream, 8 * count), dtype="<f8")
    return header, payload


def field_payload(field: Field) -> bytes:
    return np.ascontiguousarray(field.values, dtype="<f8").tobytes()


class PropagationService:
    """Serves PROPAGATE/DRIFT/PING for one pre-registered PdeSpec."""

    def __init__(self, pde: PdeSpec, config: PropagatorConfig,
                 max_points: int = MAX_POINTS_DEFAULT):
        self.pde = pde
        self.config = config
        self.max_points = max_points

    def _config_for(self, header: dict) -> PropagatorConfig:
        overrides = {k: header[k] for k in ("drift_scheme", "interpolation") if k in header}
        if "dt" in header and header["dt"] != self.config.dt:
            raise FrameError("BAD_DT", f"service is registered with dt={self.config.dt}")
        if overrides:
            try:
                return dataclasses.replace(self.config, **overrides)
            except ValueError as e:
                raise FrameError("BAD_HEADER", str(e))
        return self.config

    def handle(self, header: dict, payload: np.ndarray) -> tuple[dict, bytes]:
        op = header.get("op")
        if op == "PING":
            return {"op": "RESULT", "count": payload.size}, payload.tobytes()
        if op not in ("PROPAGATE", "DRIFT"):
            raise FrameError("BAD_OP", f"unknown op {op!r}")
        npts = self.pde.grid.npoints
        if payload.size != npts:
            raise FrameError("BAD_LENGTH",
                             f"payload holds {payload.size} values, grid needs {npts}")
        field = Field(self.pde.grid, payload.reshape(self.pde.grid.resolution).copy())
        if op == "PROPAGATE":
            config = self._config_for(header)
            try:
                out = propagate(field, self.pde, float(header.get("t", 0.0)), config)
            except (NormalizationFailure, FloatingPointError) as e:
                raise FrameError("PROPAGATION", str(e))
            return {"op": "RESULT", "count": out.values.size}, field_payload(out)
        out = drift(self.pde, field)
        return {"op": "RESULT", "count": out.values.size}, field_payload(out)

    def serve_stream(self, rin, rout) -> None:
        """Process frames from rin until EOF, answering on rout."""
        while True:
            try:
                header, payload = read_frame(rin, self.max_points)
            except EOFError:
                return
            except FrameError as e:
                write_frame(rout, {"op": "ERROR", "code": e.code, "message": e.message,
                                   "count": 0})
                if e.code in ("BAD_MAGIC", "BAD_HEADER"):
                    return  # stream framing is lost; stop rather than misparse
                continue
            try:
                rheader, rpayload = self.handle(header, payload)
            except FrameError as e:
                write_frame(rout, {"op": "ERROR", "code": e.code, "message": e.message,
                                   "count": 0})
                continue
            write_frame(rout, rheader, rpayload)

    def serve_stdio(self) -> None:
        self.serve_stream(sys.stdin.buffer, sys.stdout.buffer)

    def serve_tcp(self, port: int, ready_callback=None):
        service = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                rfile = self.request.makefile("rb")
                wfile = self.request.makefile("wb")
                service.serve_stream(rfile, wfile)

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        server = Server(("127.0.0.1", port), Handler)
        if ready_callback is not None:
            ready_callback(server.server_address[1])
        server.serve_forever()


def request_once(host: str, port: int, header: dict, payload: bytes = b""):
    """One synchronous round trip over TCP (client helper for tests/tools)."""
    with socket.create_connection((host, port)) as sock:
        wfile = sock.makefile("wb")
        rfile = sock.makefile("rb")
        write_frame(wfile, header, payload)
        return read_frame(rfile)


# ---------------------------------------------------------------------------
# operator export / load


def export_operator(pde: PdeSpec, config: PropagatorConfig, path) -> SparseOperator:
    """Assemble the linear propagation operator and write it as FKW1."""
    op = assemble_linear_operator(pde, config)
    n = op.rows
    row_idx = np.repeat(np.arange(n), op.nnz_per_row())
    header_pde = dict(op.pde_header)
    header_pde["grid"] = fileio.grid_header(op.grid)
    header_pde["factor"] = op.factor
    fileio.write_operator(path, op.rows, op.cols, row_idx, op.col_idx, op.weights,
                          op.forcing, op.dt, header_pde)
    return op


def load_operator(path, expect_grid: Grid = None, expect_dt: float = None) -> SparseOperator:
    """Load an FKW1 file back into an applicable operator.

    Raises fileio.FormatError when the header disagrees with the caller's
    expected grid or time step.
    """
    raw = fileio.read_operator(path)
    header = raw["header"]
    pde_h = header["pde"]
    grid = fileio.grid_from_header(pde_h["grid"])
    dt = float(header["dt"])
    if expect_grid is not None and grid != expect_grid:
        raise fileio.FormatError(f"operator grid {grid.resolution} does not match "
                                 f"expected {expect_grid.resolution}")
    if expect_dt is not None and dt != expect_dt:
        raise fileio.FormatError(f"operator dt {dt} does not match expected {expect_dt}")
    rows = int(header["rows"])
    counts = np.bincount(raw["row"], minlength=rows)
    row_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    if not np.all(raw["row"] == np.repeat(np.arange(rows), counts)):
        raise fileio.FormatError("operator triples are not stored row-major")
    return SparseOperator(
        rows=rows, cols=int(header["cols"]), row_ptr=row_ptr,
        col_idx=raw["col"], weights=raw["weight"], forcing=raw["forcing"],
        dt=dt, factor=int(pde_h.get("factor", 1)),
        pde_header={k: v for k, v in pde_h.items() if k not in ("grid", "factor")},
        grid=grid,
    )
