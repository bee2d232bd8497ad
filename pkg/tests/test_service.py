import io
import threading

import numpy as np
import pytest

from fkpde import fileio
from fkpde.grid import Field, make_grid
from fkpde.kernel import PropagatorConfig, propagate
from fkpde.pdes import convdiff_case
from fkpde.service import (FrameError, PropagationService, export_operator,
                           field_payload, load_operator, read_frame, request_once,
                           write_frame)

CFG = PropagatorConfig(dt=0.2)


@pytest.fixture(scope="module")
def pde():
    return convdiff_case("E1")[0]


@pytest.fixture(scope="module")
def service(pde):
    return PropagationService(pde, CFG)


def roundtrip(service, requests):
    """Feed a scripted byte stream through serve_stream, collect responses."""
    buf = io.BytesIO()
    for header, payload in requests:
        write_frame(buf, header, payload)
    buf.seek(0)
    out = io.BytesIO()
    service.serve_stream(buf, out)
    out.seek(0)
    responses = []
    while True:
        try:
            responses.append(read_frame(out))
        except EOFError:
            return responses


class TestFrameCodec:
    def test_roundtrip(self):
        buf = io.BytesIO()
        payload = np.arange(4.0).tobytes()
        write_frame(buf, {"op": "PING", "count": 4}, payload)
        buf.seek(0)
        header, data = read_frame(buf)
        assert header == {"op": "PING", "count": 4}
        assert np.array_equal(data, np.arange(4.0))

    def test_bad_magic(self):
        buf = io.BytesIO(b"XXXX" + b"\x00" * 16)
        with pytest.raises(FrameError) as e:
            read_frame(buf)
        assert e.value.code == "BAD_MAGIC"

    def test_count_cap(self):
        buf = io.BytesIO()
        write_frame(buf, {"op": "PING", "count": 100})
        buf.seek(0)
        with pytest.raises(FrameError) as e:
            read_frame(buf, max_points=10)
        assert e.value.code == "TOO_LARGE"


class TestService:
    def test_ping_echoes(self, service):
        payload = np.array([1.0, 2.0, 3.0]).tobytes()
        (h, p), = roundtrip(service, [({"op": "PING", "count": 3}, payload)])
        assert h["op"] == "RESULT"
        assert p.tobytes() == payload

    def test_propagate_matches_library_bytes(self, service, pde):
        rng = np.random.default_rng(0)
        u = Field(pde.grid, rng.standard_normal(64))
        (h, p), = roundtrip(service, [({"op": "PROPAGATE", "count": 64, "t": 0.0},
                                       field_payload(u))])
        assert h["op"] == "RESULT"
        lib = propagate(u, pde, 0.0, CFG)
        assert p.tobytes() == field_payload(lib)

    def test_drift_op(self, service, pde):
        u = Field(pde.grid, np.zeros(64))
        (h, p), = roundtrip(service, [({"op": "DRIFT", "count": 64}, field_payload(u))])
        assert h["op"] == "RESULT"
        assert np.all(p == 0.1)

    def test_bad_length_keeps_connection_alive(self, service):
        reqs = [({"op": "PROPAGATE", "count": 10}, np.zeros(10).tobytes()),
                ({"op": "PING", "count": 0}, b"")]
        (h1, _), (h2, _) = roundtrip(service, reqs)
        assert h1["op"] == "ERROR" and h1["code"] == "BAD_LENGTH"
        assert h2["op"] == "RESULT"

    def test_unknown_op_rejected(self, service):
        (h, _), = roundtrip(service, [({"op": "WAT", "count": 0}, b"")])
        assert h["op"] == "ERROR" and h["code"] == "BAD_OP"

    def test_dt_mismatch_rejected(self, service):
        (h, _), = roundtrip(service, [({"op": "PROPAGATE", "count": 64, "dt": 0.5},
                                       np.zeros(64).tobytes())])
        assert h["op"] == "ERROR" and h["code"] == "BAD_DT"

    def test_ablation_override(self, service, pde):
        rng = np.random.default_rng(1)
        u = Field(pde.grid, rng.standard_normal(64))
        (h, p), = roundtrip(service, [({"op": "PROPAGATE", "count": 64,
                                        "drift_scheme": "euler"}, field_payload(u))])
        lib = propagate(u, pde, 0.0, PropagatorConfig(dt=0.2, drift_scheme="euler"))
        assert p.tobytes() == field_payload(lib)

    def test_tcp_transport(self, pde):
        service = PropagationService(pde, CFG)
        ready = threading.Event()
        port_box = {}

        def run():
            service.serve_tcp(0, ready_callback=lambda p: (port_box.update(port=p),
                                                           ready.set()))

        t = threading.Thread(target=run, daemon=True)
        t.start()
        assert ready.wait(5.0)
        rng = np.random.default_rng(2)
        u = Field(pde.grid, rng.standard_normal(64))
        h, p = request_once("127.0.0.1", port_box["port"],
                            {"op": "PROPAGATE", "count": 64}, field_payload(u))
        assert h["op"] == "RESULT"
        assert p.tobytes() == field_payload(propagate(u, pde, 0.0, CFG))

    def test_sequential_requests_independent(self, service, pde):
        rng = np.random.default_rng(3)
        fields = [Field(pde.grid, rng.standard_normal(64)) for _ in range(20)]
        reqs = [({"op": "PROPAGATE", "count": 64}, field_payload(u)) for u in fields]
        responses = roundtrip(service, reqs)
        assert len(responses) == 20
        for u, (h, p) in zip(fields, responses):
            assert p.tobytes() == field_payload(propagate(u, pde, 0.0, CFG))


class TestOperatorFile:
    def test_export_reload_apply_identical(self, pde, tmp_path):
        path = tmp_path / "op.fkw"
        export_operator(pde, CFG, path)
        op = load_operator(path, expect_grid=pde.grid, expect_dt=0.2)
        rng = np.random.default_rng(4)
        for _ in range(100):
            u = Field(pde.grid, rng.standard_normal(64))
            assert np.array_equal(op.apply(u).values, propagate(u, pde, 0.0, CFG).values)

    def test_row_count_matches_grid(self, pde, tmp_path):
        path = tmp_path / "op.fkw"
        export_operator(pde, CFG, path)
        assert load_operator(path).rows == 64

    def test_dt_mismatch_raises(self, pde, tmp_path):
        path = tmp_path / "op.fkw"
        export_operator(pde, CFG, path)
        with pytest.raises(fileio.FormatError):
            load_operator(path, expect_dt=0.1)

    def test_grid_mismatch_raises(self, pde, tmp_path):
        path = tmp_path / "op.fkw"
        export_operator(pde, CFG, path)
        with pytest.raises(fileio.FormatError):
            load_operator(path, expect_grid=make_grid(1, 128))

    def test_nonlinear_pde_rejected(self, tmp_path):
        from fkpde.pdes import navierstokes_case
        with pytest.raises(ValueError, match="service"):
            export_operator(navierstokes_case("E1"), PropagatorConfig(dt=0.5),
                            tmp_path / "x.fkw")
