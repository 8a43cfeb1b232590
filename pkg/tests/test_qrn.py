import http.server
import struct
import threading

import pytest

from qrechacha import (
    DecodeError,
    DeterministicProvider,
    IoFailure,
    MalformedMaterial,
    NetworkFailure,
    ParamError,
    PoolExhausted,
    QrnPool,
    QrnSessionMaterial,
    RemoteProvider,
    ShortResponse,
    derive_session,
    fetch_remote,
    material_bytes_needed,
    session_parse,
    session_serialize,
)


class TestPool:
    def test_create_roundtrip(self, tmp_path):
        data = bytes(range(256)) * 4
        pool = QrnPool.create(tmp_path / "p.qrnp", data)
        assert pool.total_bytes == 1024
        assert pool.cursor_bytes == 0
        reopened = QrnPool(tmp_path / "p.qrnp")
        assert reopened.total_bytes == 1024
        assert reopened.remaining == 1024

    def test_empty_payload_rejected(self, tmp_path):
        with pytest.raises(ParamError):
            QrnPool.create(tmp_path / "p.qrnp", b"")

    def test_file_format_bit_exact(self, tmp_path):
        payload = b"\xaa\xbb\xcc\xdd"
        QrnPool.create(tmp_path / "p.qrnp", payload)
        raw = (tmp_path / "p.qrnp").read_bytes()
        assert raw[0:4] == b"QRNP"
        assert raw[4:6] == (1).to_bytes(2, "little")
        assert raw[6:14] == (4).to_bytes(8, "little")
        assert raw[14:22] == (0).to_bytes(8, "little")
        assert raw[22:] == payload

    def test_handcrafted_file_parses(self, tmp_path):
        raw = b"QRNP" + struct.pack("<HQQ", 1, 10, 3) + bytes(range(10))
        (tmp_path / "h.qrnp").write_bytes(raw)
        pool = QrnPool(tmp_path / "h.qrnp")
        assert pool.total_bytes == 10
        assert pool.cursor_bytes == 3
        assert pool.take(2) == bytes([3, 4])

    def test_take_zero(self, tmp_path):
        pool = QrnPool.create(tmp_path / "p.qrnp", bytes(64))
        assert pool.take(0) == b""
        assert pool.cursor_bytes == 0

    def test_takes_are_adjacent_and_disjoint(self, tmp_path):
        data = bytes(range(64))
        pool = QrnPool.create(tmp_path / "p.qrnp", data)
        a = pool.take(16)
        b = pool.take(16)
        assert a == data[:16]
        assert b == data[16:32]
        assert pool.cursor_bytes == 32

    def test_cursor_persisted_before_release(self, tmp_path):
        pool = QrnPool.create(tmp_path / "p.qrnp", bytes(range(48)))
        pool.take(10)
        # a fresh handle sees the advanced cursor: consumed bytes never reissue
        again = QrnPool(tmp_path / "p.qrnp")
        assert again.cursor_bytes == 10
        assert again.take(10) == bytes(range(10, 20))

    def test_exhaustion_leaves_cursor(self, tmp_path):
        pool = QrnPool.create(tmp_path / "p.qrnp", bytes(32))
        pool.take(30)
        with pytest.raises(PoolExhausted):
            pool.take(3)
        assert pool.cursor_bytes == 30
        assert pool.take(2) == bytes(2)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "bad").write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(IoFailure):
            QrnPool(tmp_path / "bad")

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoFailure):
            QrnPool(tmp_path / "absent")


class TestDeterministicProvider:
    def test_reproducible_stream(self):
        a = DeterministicProvider(b"seed")
        b = DeterministicProvider(b"seed")
        assert a.take(10) + a.take(22) == b.take(32)

    def test_flags(self):
        p = DeterministicProvider(b"seed")
        assert p.is_quantum is False
        assert p.identity.startswith("deterministic:")

    def test_distinct_seeds_differ(self):
        assert DeterministicProvider(b"a").take(32) != DeterministicProvider(b"b").take(32)


class _StubHandler(http.server.BaseHTTPRequestHandler):
    body = b""

    def do_GET(self):
        self.send_response(200)
        self.end_headers()
        self.wfile.write(self.body)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = http.server.HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/qrn"
    server.shutdown()


class TestFetchRemote:
    def test_hex_decode(self, stub_server):
        _StubHandler.body = (b"00112233445566778899aabbccddeeff")  # 32 hex chars
        assert fetch_remote(stub_server, 16, mode="hex") == bytes.fromhex(
            "00112233445566778899aabbccddeeff")

    def test_raw_truncates_long_response(self, stub_server):
        _StubHandler.body = bytes(range(64))
        assert fetch_remote(stub_server, 16, mode="raw") == bytes(range(16))

    def test_short_response(self, stub_server):
        _StubHandler.body = bytes(8)
        with pytest.raises(ShortResponse):
            fetch_remote(stub_server, 16, mode="raw")

    def test_bad_hex(self, stub_server):
        _StubHandler.body = b"not-hex-at-all!!"
        with pytest.raises(DecodeError):
            fetch_remote(stub_server, 4, mode="hex")

    def test_unreachable(self):
        with pytest.raises(NetworkFailure):
            fetch_remote("http://127.0.0.1:9/qrn", 4, timeout=0.5)

    def test_nbytes_substitution(self, stub_server):
        _StubHandler.body = bytes(32)
        assert len(fetch_remote(stub_server + "?n={nbytes}", 32)) == 32

    def test_remote_provider_flags(self, stub_server):
        _StubHandler.body = bytes(8)
        provider = RemoteProvider(stub_server)
        assert provider.is_quantum is True
        assert provider.take(8) == bytes(8)


class TestDeriveSession:
    def test_byte_budget(self):
        assert material_bytes_needed(8) == 80
        assert material_bytes_needed(20) == 176

    def test_consumption_order(self, tmp_path):
        data = bytes(range(80)) + bytes(176)
        pool = QrnPool.create(tmp_path / "p.qrnp", data)
        mat = derive_session(pool, 8)
        assert pool.cursor_bytes == 80
        assert mat.const_mask == struct.unpack("<4I", bytes(range(16)))
        for i, mask in enumerate(mat.round_masks):
            off = 16 * (i + 1)
            assert mask == struct.unpack("<4I", data[off : off + 16])

    def test_two_derivations_disjoint(self, tmp_path):
        pool = QrnPool.create(tmp_path / "p.qrnp", bytes(range(160)))
        a = derive_session(pool, 8)
        b = derive_session(pool, 8)
        assert a != b
        assert pool.cursor_bytes == 160

    def test_exhausted_pool(self, tmp_path):
        pool = QrnPool.create(tmp_path / "p.qrnp", bytes(79))
        with pytest.raises(PoolExhausted):
            derive_session(pool, 8)

    def test_odd_rounds_rejected(self):
        with pytest.raises(ParamError):
            derive_session(DeterministicProvider(b"s"), 7)


class TestSessionSerialization:
    def test_roundtrip_presets(self):
        provider = DeterministicProvider(b"mat")
        for rounds in (8, 12, 20):
            mat = derive_session(provider, rounds)
            assert session_parse(session_serialize(mat)) == mat

    def test_layout(self):
        mat = QrnSessionMaterial((1, 2, 3, 4), ((5, 6, 7, 8),))
        data = session_serialize(mat)
        assert data[:2] == (1).to_bytes(2, "little")
        assert data[2:4] == (2).to_bytes(2, "little")
        assert data[4:] == struct.pack("<8I", 1, 2, 3, 4, 5, 6, 7, 8)

    def test_truncated(self):
        mat = derive_session(DeterministicProvider(b"m"), 8)
        data = session_serialize(mat)
        with pytest.raises(MalformedMaterial):
            session_parse(data[:-1])
        with pytest.raises(MalformedMaterial):
            session_parse(data + b"\x00")
        with pytest.raises(MalformedMaterial):
            session_parse(b"\x01")

    def test_odd_rounds_field(self):
        bad = struct.pack("<HH", 1, 7) + bytes(16 * 4)
        with pytest.raises(MalformedMaterial):
            session_parse(bad)

    def test_bad_version(self):
        bad = struct.pack("<HH", 9, 8) + bytes(80)
        with pytest.raises(MalformedMaterial):
            session_parse(bad)
