"""FKP1 protocol client: length-prefixed binary frames over a pipe or TCP.

Frame: b"FKP1" | u32 header length (LE) | UTF-8 JSON header | float64 LE
payload of 8 * header["count"] bytes.
"""

from __future__ import annotations

import json
import socket
import subprocess

import numpy as np

MAGIC = b"FKP1"


class ProtocolError(RuntimeError):
    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


def encode_frame(header: dict, payload: bytes = b"") -> bytes:
    blob = json.dumps(header).encode("utf-8")
    return MAGIC + len(blob).to_bytes(4, "little") + blob + payload


def _read_exact(stream, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        piece = stream.read(n - got)
        if not piece:
            raise EOFError("service closed the stream")
        chunks.append(piece)
        got += len(piece)
    return b"".join(chunks)


def decode_frame(stream):
    magic = _read_exact(stream, 4)
    if magic != MAGIC:
        raise ProtocolError("BAD_MAGIC", f"unexpected bytes {magic!r}")
    hlen = int.from_bytes(_read_exact(stream, 4), "little")
    header = json.loads(_read_exact(stream, hlen).decode("utf-8"))
    payload = _read_exact(stream, 8 * int(header.get("count", 0)))
    return header, payload


class ServiceClient:
    """Synchronous one-request-in-flight client."""

    def __init__(self, rin, rout):
        self._rin = rin
        self._rout = rout

    def call(self, op: str, payload: np.ndarray = None, **extra) -> np.ndarray:
        data = b"" if payload is None else np.ascontiguousarray(payload, "<f8").tobytes()
        header = {"op": op, "count": len(data) // 8, **extra}
        self._rout.write(encode_frame(header, data))
        self._rout.flush()
        rheader, rpayload = decode_frame(self._rin)
        if rheader.get("op") == "ERROR":
            raise ProtocolError(rheader.get("code", "?"), rheader.get("message", ""))
        return np.frombuffer(rpayload, dtype="<f8")

    def propagate(self, u: np.ndarray, t: float = 0.0, **extra) -> np.ndarray:
        return self.call("PROPAGATE", u, t=t, **extra)

    def ping(self) -> None:
        self.call("PING")

    @classmethod
    def spawn_stdio(cls, argv: list) -> tuple["ServiceClient", subprocess.Popen]:
        proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        return cls(proc.stdout, proc.stdin), proc

    @classmethod
    def connect_tcp(cls, host: str, port: int) -> tuple["ServiceClient", socket.socket]:
        sock = socket.create_connection((host, port))
        return cls(sock.makefile("rb"), sock.makefile("wb")), sock
